"""Training loop: Adam, single-tile batches, flip augmentation, early stopping."""
from __future__ import annotations

import copy
import logging
from dataclasses import dataclass, field

import numpy as np
import torch

from .data import Tile, apply_flip, flip_choice
from .network import HeightNet, NetworkConfig, build_network, masked_mse

log = logging.getLogger("heightnet")


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    max_epochs: int = 40
    validation_fraction: float = 0.15
    patience: int = 10          # validation checks without improvement
    seed: int = 0
    augment: bool = True
    stop_below_initial_fraction: float | None = None  # optional loss target
    network: NetworkConfig = field(default_factory=NetworkConfig)


@dataclass
class TrainResult:
    model: HeightNet
    best_validation: float
    train_losses: list[float]
    validation_losses: list[float]


def _to_tensor(array: np.ndarray) -> torch.Tensor:
    return torch.from_numpy(np.ascontiguousarray(array, dtype=np.float32))[None, None]


def _tile_loss(model, tile, flip=0):
    x = _to_tensor(apply_flip(tile.intensity, flip))
    y = _to_tensor(apply_flip(tile.height, flip))
    return masked_mse(model(x), y)


def train(tiles: list[Tile], config: TrainConfig | None = None,
          model: HeightNet | None = None) -> TrainResult:
    """Train on single-tile batches with per-draw flips and early stopping.

    15% of the tiles (seeded) are held out as a validation set; the best
    validation checkpoint is restored at the end.  Diverging (non-finite)
    losses abort with a diagnostic.
    """
    config = config or TrainConfig()
    if len(tiles) < 2:
        raise ValueError("training needs at least 2 tiles")
    usable = [t for t in tiles if np.isfinite(t.height).any()]
    if len(usable) < 2:
        raise ValueError("fewer than 2 tiles carry any valid height supervision")

    rng = np.random.default_rng(config.seed)
    torch.manual_seed(config.seed)
    order = rng.permutation(len(usable))
    n_val = max(1, int(round(config.validation_fraction * len(usable))))
    if len(usable) - n_val < 1:
        n_val = len(usable) - 1
    val_tiles = [usable[i] for i in order[:n_val]]
    train_tiles = [usable[i] for i in order[n_val:]]

    model = model if model is not None else build_network(config.network)
    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate)

    best_val = float("inf")
    best_state = copy.deepcopy(model.state_dict())
    checks_since_best = 0
    draw_index = 0
    train_losses: list[float] = []
    val_losses: list[float] = []

    for epoch in range(config.max_epochs):
        model.train()
        epoch_losses = []
        for idx in rng.permutation(len(train_tiles)):
            tile = train_tiles[idx]
            flip = flip_choice(config.seed, draw_index) if config.augment else 0
            draw_index += 1
            optimizer.zero_grad()
            loss = _tile_loss(model, tile, flip)
            if not torch.isfinite(loss):
                raise RuntimeError(
                    f"training diverged: non-finite loss at epoch {epoch}, "
                    f"draw {draw_index}")
            loss.backward()
            optimizer.step()
            epoch_losses.append(float(loss.detach()))
        train_losses.append(float(np.mean(epoch_losses)))

        model.eval()
        with torch.no_grad():
            val = float(np.mean([float(_tile_loss(model, t)) for t in val_tiles]))
        val_losses.append(val)
        log.info("epoch %d: train %.4f validation %.4f", epoch, train_losses[-1], val)

        if val < best_val - 1e-12:
            best_val = val
            best_state = copy.deepcopy(model.state_dict())
            checks_since_best = 0
        else:
            checks_since_best += 1
            if checks_since_best >= config.patience:
                log.info("early stop at epoch %d (no improvement in %d checks)",
                         epoch, config.patience)
                break
        if (config.stop_below_initial_fraction is not None
                and train_losses[-1] < config.stop_below_initial_fraction * train_losses[0]):
            log.info("loss target reached at epoch %d", epoch)
            break

    model.load_state_dict(best_state)
    model.eval()
    return TrainResult(model=model, best_validation=best_val,
                       train_losses=train_losses, validation_losses=val_losses)


def save_checkpoint(path, model: HeightNet) -> None:
    torch.save({"config": model.config.__dict__,
                "state_dict": model.state_dict()}, path)


def load_checkpoint(path) -> HeightNet:
    try:
        payload = torch.load(path, map_location="cpu", weights_only=True)
    except Exception as exc:
        raise ValueError(f"unreadable checkpoint {path}: {exc}") from exc
    model = build_network(NetworkConfig(**payload["config"]))
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model
