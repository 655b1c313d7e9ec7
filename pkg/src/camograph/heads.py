"""Mask decoder stub and auxiliary side heads."""

from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import Tensor, nn

from .errors import ContractError


@dataclass
class MaskPrediction:
    """logits [B, 1, H, W] and probs = sigmoid(logits)."""

    logits: Tensor

    @property
    def probs(self) -> Tensor:
        return torch.sigmoid(self.logits)


class MaskDecoder(nn.Module):
    """Fuse the finest refined feature with the depth cue into one mask.

    The depth cue is bilinearly upsampled to the fine feature's size and
    channel-concatenated, two 3x3 conv blocks mix them, and a 1x1 conv
    emits logits which are upsampled to the requested output resolution.
    """

    def __init__(self, dim, use_depth=True):
        super().__init__()
        self.use_depth = use_depth
        in_ch = 2 * dim if use_depth else dim
        self.fuse = nn.Sequential(
            nn.Conv2d(in_ch, dim, kernel_size=3, padding=1),
            nn.ReLU(inplace=True),
            nn.Conv2d(dim, dim, kernel_size=3, padding=1),
            nn.ReLU(inplace=True),
        )
        self.head = nn.Conv2d(dim, 1, kernel_size=1)

    def forward(self, f1: Tensor, e_d, out_size) -> MaskPrediction:
        if self.use_depth:
            if e_d is None:
                raise ContractError("decoder was built with a depth input")
            if f1.shape[0] != e_d.shape[0]:
                raise ContractError("batch mismatch between fine feature and depth cue")
            e = F.interpolate(e_d, size=f1.shape[-2:], mode="bilinear",
                              align_corners=False)
            x = torch.cat([f1, e], dim=1)
        else:
            x = f1
        logits = self.head(self.fuse(x))
        logits = F.interpolate(logits, size=out_size, mode="bilinear",
                               align_corners=False)
        return MaskPrediction(logits)


class SideHeads(nn.Module):
    """Independent 1x1 heads over the three deeper refined levels.

    Logits are upsampled to ground-truth resolution before the sigmoid,
    keeping the prediction invariant (probs == sigmoid(logits)) intact.
    The finest level deliberately has no head: it is supervised only
    through the decoder.
    """

    def __init__(self, dim):
        super().__init__()
        self.heads = nn.ModuleList(
            [nn.Conv2d(dim, 1, kernel_size=1) for _ in range(3)])

    def forward(self, f2, f3, f4, out_size):
        preds = []
        for head, feat in zip(self.heads, (f2, f3, f4)):
            logits = F.interpolate(head(feat), size=out_size, mode="bilinear",
                                   align_corners=False)
            preds.append(MaskPrediction(logits))
        return preds
