"""MAE, weighted F-measure, E-measure, and S-measure over mask pairs.

Predictions are real grids in [0, 1]; ground truths are binary grids.
Batch evaluation over prediction/ground-truth directories emits a JSON
report with per-image rows, aggregate means, and an error list.
"""

import json
import warnings
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

from .errors import InputError

_EPS = float(np.finfo(np.float64).eps)


def _check_pair(pred, gt):
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape:
        raise InputError("prediction and ground truth shapes differ: %s vs %s"
                         % (pred.shape, gt.shape))
    if pred.ndim != 2:
        raise InputError("masks must be 2-d grids")
    if pred.min() < 0.0 or pred.max() > 1.0:
        raise InputError("prediction values must lie in [0, 1]")
    if not np.all((gt == 0.0) | (gt == 1.0)):
        raise InputError("ground truth must be binary")
    return pred, gt


def mae(pred, gt) -> float:
    pred, gt = _check_pair(pred, gt)
    return float(np.abs(pred - gt).mean())


def _gauss_kernel(size=7, sigma=5.0):
    ax = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-(ax ** 2) / (2.0 * sigma ** 2))
    k = np.outer(g, g)
    return k / k.sum()


def _nearest_fg_stats(err, fg):
    """Distance to the nearest foreground pixel and the error diffused
    from it, for every background pixel.

    Equidistant foreground pixels are averaged, which keeps the result
    independent of pixel enumeration order (and hence symmetric under
    transposition). Squared distances are compared in integers, so ties
    are exact.
    """
    h, w = fg.shape
    flat_fg = np.flatnonzero(fg.ravel())
    flat_bg = np.flatnonzero(~fg.ravel())
    dist = np.zeros(h * w, dtype=np.float64)
    diffused = err.astype(np.float64).ravel()
    if flat_bg.size:
        fr, fc = np.divmod(flat_fg, w)
        err_fg = err.ravel()[flat_fg]
        chunk = max(1, (1 << 22) // flat_fg.size)
        for start in range(0, flat_bg.size, chunk):
            part = flat_bg[start:start + chunk]
            br, bc = np.divmod(part, w)
            d2 = (br[:, None] - fr[None, :]) ** 2 + (bc[:, None] - fc[None, :]) ** 2
            best = d2.min(axis=1)
            tied = d2 == best[:, None]
            diffused[part] = (tied * err_fg).sum(axis=1) / tied.sum(axis=1)
            dist[part] = np.sqrt(best)
    return dist.reshape(h, w), diffused.reshape(h, w)


def weighted_fmeasure(pred, gt) -> float:
    """Boundary-aware F-measure with error diffusion and distance decay,
    beta^2 = 1."""
    pred, gt = _check_pair(pred, gt)
    fg = gt.astype(bool)
    if not fg.any():
        warnings.warn("empty ground-truth foreground, weighted F defined as 0")
        return 0.0
    err = np.abs(pred - gt)
    dist, diffused = _nearest_fg_stats(err, fg)
    blurred = ndimage.correlate(diffused, _gauss_kernel(), mode="constant",
                                cval=0.0)
    min_err = np.where(fg & (blurred < err), blurred, err)
    decay = np.ones_like(gt)
    decay[~fg] = 2.0 - np.exp(np.log(0.5) / 5.0 * dist[~fg])
    ew = min_err * decay
    tpw = gt.sum() - ew[fg].sum()
    fpw = ew[~fg].sum()
    recall = 1.0 - ew[fg].mean()
    precision = tpw / (_EPS + tpw + fpw)
    return float(2.0 * recall * precision / (_EPS + recall + precision))


def e_measure(pred, gt) -> float:
    """Alignment between binarized prediction and ground truth, combining
    pixel-level matching with image-level statistics.

    The prediction is binarized at twice its mean (capped at 1); the
    enhanced alignment map is averaged over all pixels.
    """
    pred, gt = _check_pair(pred, gt)
    thr = min(2.0 * pred.mean(), 1.0)
    binary = (pred >= thr).astype(np.float64)
    if gt.sum() == 0.0:
        enhanced = 1.0 - binary
    elif gt.sum() == gt.size:
        enhanced = binary
    else:
        pa = binary - binary.mean()
        ga = gt - gt.mean()
        align = 2.0 * ga * pa / (ga ** 2 + pa ** 2 + _EPS)
        enhanced = (align + 1.0) ** 2 / 4.0
    return float(enhanced.sum() / enhanced.size)


def _object_score(values):
    mu = values.mean()
    sigma = np.sqrt(((values - mu) ** 2).sum() / (values.size - 1)) \
        if values.size > 1 else 0.0
    return 2.0 * mu / (mu * mu + 1.0 + sigma + _EPS)


def _s_object(pred, gt):
    fg = gt.astype(bool)
    u = gt.mean()
    return u * _object_score(pred[fg]) + (1.0 - u) * _object_score((1.0 - pred)[~fg])


def _centroid(gt):
    """1-indexed foreground centroid, rounded half up, clamped so every
    quadrant keeps at least one pixel."""
    h, w = gt.shape
    rows, cols = np.nonzero(gt)
    x = int(np.floor((cols + 1).mean() + 0.5))
    y = int(np.floor((rows + 1).mean() + 0.5))
    return min(max(x, 1), w - 1), min(max(y, 1), h - 1)


def _region_ssim(p, g):
    n = p.size
    x = p.mean()
    y = g.mean()
    norm = max(n - 1, 1)
    sx = ((p - x) ** 2).sum() / norm
    sy = ((g - y) ** 2).sum() / norm
    sxy = ((p - x) * (g - y)).sum() / norm
    a = 4.0 * x * y * sxy
    b = (x * x + y * y) * (sx + sy)
    if a != 0.0:
        return a / (b + _EPS)
    return 1.0 if b == 0.0 else 0.0


def _s_region(pred, gt):
    h, w = gt.shape
    x, y = _centroid(gt)
    area = h * w
    weights = ((x * y) / area, ((w - x) * y) / area, (x * (h - y)) / area)
    weights = weights + (1.0 - sum(weights),)
    quads = ((slice(0, y), slice(0, x)), (slice(0, y), slice(x, w)),
             (slice(y, h), slice(0, x)), (slice(y, h), slice(x, w)))
    return sum(wt * _region_ssim(pred[q], gt[q])
               for wt, q in zip(weights, quads))


def s_measure(pred, gt, alpha=0.5) -> float:
    """Structural agreement: object-aware and region-aware halves."""
    pred, gt = _check_pair(pred, gt)
    if pred.shape[0] < 2 or pred.shape[1] < 2:
        raise InputError("structural measure needs masks of at least 2x2")
    y = gt.mean()
    if y == 0.0:
        return float(1.0 - pred.mean())
    if y == 1.0:
        return float(pred.mean())
    score = alpha * _s_object(pred, gt) + (1.0 - alpha) * _s_region(pred, gt)
    return float(max(score, 0.0))


def evaluate_pair(pred, gt) -> dict:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return {
            "mae": mae(pred, gt),
            "wfm": weighted_fmeasure(pred, gt),
            "em": e_measure(pred, gt),
            "sm": s_measure(pred, gt),
        }


def load_prediction(path) -> np.ndarray:
    arr = np.asarray(Image.open(path).convert("L"), dtype=np.float64)
    return arr / 255.0


def load_ground_truth(path) -> np.ndarray:
    arr = np.asarray(Image.open(path).convert("L"), dtype=np.float64)
    return (arr >= 128).astype(np.float64)


def evaluate_pair_dir(pred_dir, gt_dir) -> dict:
    """Evaluate same-named mask files; rows ordered by filename."""
    pred_dir = Path(pred_dir)
    gt_dir = Path(gt_dir)
    per_image = []
    errors = []
    for pred_path in sorted(pred_dir.glob("*.png")):
        gt_path = gt_dir / pred_path.name
        if not gt_path.exists():
            errors.append("missing ground truth for %s" % pred_path.name)
            continue
        pred = load_prediction(pred_path)
        gt = load_ground_truth(gt_path)
        try:
            row = evaluate_pair(pred, gt)
        except InputError as exc:
            errors.append("%s: %s" % (pred_path.name, exc))
            continue
        per_image.append({"id": pred_path.stem, **row})
    aggregate = {}
    if per_image:
        for key in ("mae", "wfm", "em", "sm"):
            aggregate[key] = float(np.mean([row[key] for row in per_image]))
    return {"per_image": per_image, "aggregate": aggregate, "errors": errors}


def write_report(report, path):
    Path(path).write_text(json.dumps(report, indent=2) + "\n")
