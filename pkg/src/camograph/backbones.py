"""Stub encoders standing in for the pretrained RGB / SAM / depth branches.

Each stub is a short stack of strided convolutions: cheap, fully
trainable, and producing the exact multi-scale shapes the graph stages
expect (pyramid levels at strides 4/8/16/32, depth feature at stride 32).
"""

from dataclasses import dataclass, field

import torch
from torch import Tensor, nn

from .errors import ConfigurationError, InputError


@dataclass
class StubConfig:
    """Desk-scale encoder configuration.

    embed_dim   node embedding width d
    input_size  nominal square input resolution, divisible by 32
    widths      channel width per pyramid level; level 4 must equal
                embed_dim so the anchor residual is well-typed
    """

    embed_dim: int = 64
    input_size: int = 128
    widths: tuple = field(default=None)

    def __post_init__(self):
        if self.input_size % 32 != 0:
            raise ConfigurationError(
                f"input_size {self.input_size} not divisible by 32")
        if self.embed_dim < 1:
            raise ConfigurationError("embed_dim must be positive")
        if self.widths is None:
            d = self.embed_dim
            self.widths = (max(d // 2, 8), max(d // 2, 8), d, d)
        if len(self.widths) != 4:
            raise ConfigurationError("widths must list 4 pyramid levels")


def _check_image(x: Tensor):
    if x.dim() != 4:
        raise InputError(f"expected [B, C, H, W] input, got {tuple(x.shape)}")
    h, w = x.shape[-2:]
    if h != w or h % 32 != 0:
        raise ConfigurationError(
            f"input size {h}x{w} must be square and divisible by 32")


class PyramidEncoder(nn.Module):
    """Four-level feature hierarchy at strides 4/8/16/32.

    One stride-4 stem plus three stride-2 stages, each conv followed by
    a GELU. Plays the role of either parallel image encoder.
    """

    def __init__(self, cfg: StubConfig, in_channels: int = 3):
        super().__init__()
        w = cfg.widths
        self.cfg = cfg
        self.stem = nn.Conv2d(in_channels, w[0], kernel_size=7, stride=4, padding=3)
        self.stages = nn.ModuleList([
            nn.Conv2d(w[0], w[1], kernel_size=3, stride=2, padding=1),
            nn.Conv2d(w[1], w[2], kernel_size=3, stride=2, padding=1),
            nn.Conv2d(w[2], w[3], kernel_size=3, stride=2, padding=1),
        ])
        self.act = nn.GELU()
        self.refine = nn.ModuleList([
            nn.Conv2d(c, c, kernel_size=3, padding=1) for c in w
        ])

    def forward(self, image: Tensor):
        """image [B, 3, H, W] in [0, 1] -> list of 4 level maps."""
        _check_image(image)
        x = self.act(self.stem(image))
        levels = [self.act(self.refine[0](x)) + x]
        for i, stage in enumerate(self.stages):
            x = self.act(stage(levels[-1]))
            levels.append(self.act(self.refine[i + 1](x)) + x)
        return levels


class RgbEncoder(PyramidEncoder):
    """Texture-sensitive branch (PVT stand-in)."""


class SamEncoder(PyramidEncoder):
    """Stand-in for the frozen promptable-segmentation encoder.

    `frozen=True` detaches it from optimization: parameters get
    requires_grad=False and the trainer leaves them out of the optimizer.
    """

    def __init__(self, cfg: StubConfig, in_channels: int = 3, frozen: bool = False):
        super().__init__(cfg, in_channels)
        self.frozen = frozen
        if frozen:
            for p in self.parameters():
                p.requires_grad_(False)


class DepthEncoder(nn.Module):
    """Dense prompt branch: depth map -> single stride-32 feature map."""

    def __init__(self, cfg: StubConfig):
        super().__init__()
        d = cfg.embed_dim
        self.cfg = cfg
        self.stem = nn.Conv2d(1, d // 2, kernel_size=7, stride=4, padding=3)
        self.down = nn.Sequential(
            nn.GELU(),
            nn.Conv2d(d // 2, d // 2, kernel_size=3, stride=2, padding=1),
            nn.GELU(),
            nn.Conv2d(d // 2, d, kernel_size=3, stride=2, padding=1),
            nn.GELU(),
            nn.Conv2d(d, d, kernel_size=3, stride=2, padding=1),
            nn.GELU(),
        )
        self.refine = nn.Conv2d(d, d, kernel_size=3, padding=1)

    def forward(self, depth: Tensor) -> Tensor:
        """depth [B, 1, H, W] in [0, 1] -> [B, d, H/32, W/32]."""
        if depth.dim() != 4 or depth.shape[1] != 1:
            raise InputError(f"expected [B, 1, H, W] depth, got {tuple(depth.shape)}")
        h, w = depth.shape[-2:]
        if h != w or h % 32 != 0:
            raise InputError(f"depth size {h}x{w} must be square and divisible by 32")
        x = self.down(self.stem(depth))
        return x + torch.tanh(self.refine(x))
