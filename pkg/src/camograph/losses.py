"""Boundary-weighted BCE + IoU objective over all supervised outputs."""

import torch
import torch.nn.functional as F
from torch import Tensor

from .errors import InputError

EPS = 1e-7


def _check_binary(gt: Tensor):
    if not torch.all((gt == 0) | (gt == 1)):
        raise InputError("ground truth mask must contain only 0 and 1")


def boundary_weights(gt: Tensor, kernel=31) -> Tensor:
    """1 + 5 * |avgpool(gt) - gt| with a stride-1 same-size pool.

    Pixels near mask boundaries get weights approaching 6, flat regions
    stay at 1. gt is [B, 1, H, W] binary.
    """
    pooled = F.avg_pool2d(gt, kernel_size=kernel, stride=1,
                          padding=kernel // 2)
    return 1.0 + 5.0 * (pooled - gt).abs()


def weighted_bce(pred: Tensor, gt: Tensor, weights: Tensor) -> Tensor:
    _check_binary(gt)
    p = pred.clamp(EPS, 1.0 - EPS)
    bce = -(gt * torch.log(p) + (1.0 - gt) * torch.log(1.0 - p))
    return (weights * bce).sum() / weights.sum()


def weighted_iou(pred: Tensor, gt: Tensor, weights: Tensor) -> Tensor:
    _check_binary(gt)
    inter = (weights * pred * gt).sum()
    union = (weights * (pred + gt)).sum() - inter
    return 1.0 - (inter + 1.0) / (union + 1.0)


def structure_loss(pred: Tensor, gt: Tensor, weighted=True):
    """Returns (bce_term, iou_term) for one prediction map."""
    if weighted:
        w = boundary_weights(gt)
    else:
        w = torch.ones_like(gt)
    return weighted_bce(pred, gt, w), weighted_iou(pred, gt, w)


def total_loss(main_pred: Tensor, side_preds, gt: Tensor, weighted=True):
    """Sum of bce + iou over the main map and every side map.

    Returns (total, terms) where terms maps names like "bce_main" or
    "iou_p3" to scalar tensors, so a diverging run can report which
    term went non-finite first.
    """
    terms = {}
    bce, iou = structure_loss(main_pred, gt, weighted)
    terms["bce_main"] = bce
    terms["iou_main"] = iou
    for i, pred in enumerate(side_preds, start=2):
        bce, iou = structure_loss(pred, gt, weighted)
        terms["bce_p%d" % i] = bce
        terms["iou_p%d" % i] = iou
    total = sum(terms.values())
    return total, terms
