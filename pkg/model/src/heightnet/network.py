"""Fully convolutional encoder-decoder for single-image height estimation.

The encoder stacks pre-activated residual blocks, halving resolution with
index-retaining max pooling after each; the decoder mirrors it with max
unpooling to the retained indices.  A skip connection carries the first
encoder block's features across the bottleneck by element-wise summation,
keeping edges crisp through the upsampling path.

Block layout: batch norm -> ReLU -> conv, twice; the shortcut path stays
free of normalization and activation, with a 1x1 convolution only where the
channel count changes.  Convolutions directly followed by a batch norm
carry no bias.
"""
from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn


@dataclass(frozen=True)
class NetworkConfig:
    in_channels: int = 1
    base_channels: int = 64
    stages: int = 4
    use_bottleneck_skip: bool = True

    def __post_init__(self) -> None:
        if self.stages < 1 or self.base_channels < 1 or self.in_channels < 1:
            raise ValueError(f"invalid network shape arithmetic: {self}")

    def stage_channels(self) -> list[int]:
        return [self.base_channels * (1 << k) for k in range(self.stages)]


class PreActResidualBlock(nn.Module):
    """Fully pre-activated residual block with a clean shortcut path."""

    def __init__(self, c_in: int, c_out: int):
        super().__init__()
        self.bn1 = nn.BatchNorm2d(c_in)
        self.conv1 = nn.Conv2d(c_in, c_out, kernel_size=3, stride=1, padding=1, bias=False)
        self.bn2 = nn.BatchNorm2d(c_out)
        self.conv2 = nn.Conv2d(c_out, c_out, kernel_size=3, stride=1, padding=1, bias=False)
        self.relu = nn.ReLU(inplace=False)
        if c_in != c_out:
            self.shortcut = nn.Conv2d(c_in, c_out, kernel_size=1, stride=1, bias=True)
        else:
            self.shortcut = nn.Identity()

    def forward(self, x):
        out = self.conv1(self.relu(self.bn1(x)))
        out = self.conv2(self.relu(self.bn2(out)))
        return out + self.shortcut(x)


class HeightNet(nn.Module):
    def __init__(self, config: NetworkConfig | None = None):
        super().__init__()
        self.config = config or NetworkConfig()
        channels = self.config.stage_channels()

        enc_blocks = []
        c_prev = self.config.in_channels
        for c in channels:
            enc_blocks.append(PreActResidualBlock(c_prev, c))
            c_prev = c
        self.encoder = nn.ModuleList(enc_blocks)
        self.pool = nn.MaxPool2d(kernel_size=2, stride=2, return_indices=True)
        self.unpool = nn.MaxUnpool2d(kernel_size=2, stride=2)

        dec_blocks = []
        for c_in, c_out in zip(channels[::-1], channels[::-1][1:] + [channels[0]]):
            dec_blocks.append(PreActResidualBlock(c_in, c_out))
        self.decoder = nn.ModuleList(dec_blocks)
        self.head = nn.Conv2d(channels[0], self.config.in_channels,
                              kernel_size=3, stride=1, padding=1, bias=True)
        self.reset_parameters()

    def reset_parameters(self) -> None:
        """Kaiming-uniform initialization for all convolutions (ReLU gain)."""
        for module in self.modules():
            if isinstance(module, nn.Conv2d):
                nn.init.kaiming_uniform_(module.weight, nonlinearity="relu")
                if module.bias is not None:
                    nn.init.zeros_(module.bias)

    def forward(self, x):
        if x.shape[-1] % (1 << self.config.stages) or x.shape[-2] % (1 << self.config.stages):
            raise ValueError(
                f"input dims {tuple(x.shape[-2:])} must be divisible by "
                f"{1 << self.config.stages}")
        skip = None
        indices = []
        out = x
        for k, block in enumerate(self.encoder):
            out = block(out)
            if k == 0:
                skip = out
            out, idx = self.pool(out)
            indices.append(idx)
        for block, idx in zip(self.decoder, indices[::-1]):
            out = self.unpool(out, idx)
            out = block(out)
        if self.config.use_bottleneck_skip:
            out = out + skip
        return self.head(out)

    def trace_shapes(self, x):
        """Forward pass recording each stage's feature shape (for audits)."""
        shapes = {"input": tuple(x.shape)}
        skip = None
        indices = []
        out = x
        for k, block in enumerate(self.encoder):
            out = block(out)
            if k == 0:
                skip = out
            out, idx = self.pool(out)
            indices.append(idx)
            shapes[f"encoder_stage_{k + 1}"] = tuple(out.shape)
        shapes["bottleneck"] = tuple(out.shape)
        for k, (block, idx) in enumerate(zip(self.decoder, indices[::-1])):
            out = self.unpool(out, idx)
            out = block(out)
            shapes[f"decoder_stage_{k + 1}"] = tuple(out.shape)
        if self.config.use_bottleneck_skip:
            out = out + skip
        out = self.head(out)
        shapes["output"] = tuple(out.shape)
        return out, shapes


def build_network(config: NetworkConfig | None = None) -> HeightNet:
    return HeightNet(config)


def masked_mse(pred: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    """Mean squared error over pixels with a finite target.

    Nodata (NaN) target pixels carry no supervision signal and are excluded
    from the average.
    """
    mask = torch.isfinite(target)
    if not bool(mask.any()):
        raise ValueError("target has no valid pixels")
    diff = (pred - torch.where(mask, target, torch.zeros_like(target))) * mask
    return (diff * diff).sum() / mask.sum()
