"""Command line for training on pipeline manifests and predicting rasters."""
from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from . import srh
from .data import load_manifest
from .network import NetworkConfig
from .predict import predict_array
from .training import TrainConfig, load_checkpoint, save_checkpoint, train


def cmd_train(args) -> int:
    tiles = [t for t in load_manifest(args.manifest) if t.role == "train"]
    if not tiles:
        print("heightnet-error: manifest has no train tiles", file=sys.stderr)
        return 1
    config = TrainConfig(max_epochs=args.epochs, seed=args.seed,
                         patience=args.patience,
                         network=NetworkConfig(base_channels=args.base_channels))
    result = train(tiles, config)
    save_checkpoint(args.out, result.model)
    print(f"best validation mse: {result.best_validation:.4f}")
    return 0


def cmd_predict(args) -> int:
    model = load_checkpoint(args.checkpoint)
    intensity = np.asarray(srh.read(args.intensity), dtype=np.float32)
    heights = predict_array(model, intensity, tile_size=args.tile_size)
    srh.write(args.out, heights)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="heightnet")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train on a tile manifest")
    p.add_argument("manifest")
    p.add_argument("out", help="checkpoint path")
    p.add_argument("--epochs", type=int, default=40)
    p.add_argument("--patience", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--base-channels", type=int, default=64)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict heights for an intensity raster")
    p.add_argument("checkpoint")
    p.add_argument("intensity")
    p.add_argument("out")
    p.add_argument("--tile-size", type=int, default=256)
    p.set_defaults(func=cmd_predict)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("HEIGHTNET_LOG", "WARNING").upper())
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"heightnet-error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
