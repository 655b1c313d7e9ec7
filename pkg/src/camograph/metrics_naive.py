"""Loop-based reference implementations of the four mask metrics.

Everything here is literal per-pixel arithmetic, kept deliberately free
of vectorized shortcuts so the fast implementations in metrics.py can be
cross-checked against it. Only suitable for small grids.
"""

import math

_EPS = 2.220446049250313e-16


def _dims(grid):
    return len(grid), len(grid[0])


def mae_naive(pred, gt) -> float:
    h, w = _dims(pred)
    total = 0.0
    for i in range(h):
        for j in range(w):
            total += abs(float(pred[i][j]) - float(gt[i][j]))
    return total / (h * w)


def _gauss_kernel_naive(size=7, sigma=5.0):
    half = (size - 1) / 2.0
    k = [[math.exp(-((a - half) ** 2 + (b - half) ** 2) / (2.0 * sigma ** 2))
          for b in range(size)] for a in range(size)]
    s = sum(sum(row) for row in k)
    return [[v / s for v in row] for row in k]


def wfm_naive(pred, gt) -> float:
    h, w = _dims(pred)
    fg = [(i, j) for i in range(h) for j in range(w) if gt[i][j] == 1]
    if not fg:
        return 0.0
    err = [[abs(float(pred[i][j]) - float(gt[i][j])) for j in range(w)]
           for i in range(h)]
    dist = [[0.0] * w for _ in range(h)]
    diffused = [row[:] for row in err]
    for i in range(h):
        for j in range(w):
            if gt[i][j] == 1:
                continue
            best = None
            vals = []
            for fi, fj in fg:
                d2 = (i - fi) * (i - fi) + (j - fj) * (j - fj)
                if best is None or d2 < best:
                    best = d2
                    vals = [err[fi][fj]]
                elif d2 == best:
                    vals.append(err[fi][fj])
            dist[i][j] = math.sqrt(best)
            diffused[i][j] = sum(vals) / len(vals)
    kernel = _gauss_kernel_naive()
    blurred = [[0.0] * w for _ in range(h)]
    for i in range(h):
        for j in range(w):
            acc = 0.0
            for a in range(7):
                for b in range(7):
                    ii = i + a - 3
                    jj = j + b - 3
                    if 0 <= ii < h and 0 <= jj < w:
                        acc += kernel[a][b] * diffused[ii][jj]
            blurred[i][j] = acc
    fg_count = len(fg)
    ew_fg = 0.0
    ew_bg = 0.0
    for i in range(h):
        for j in range(w):
            if gt[i][j] == 1:
                e = blurred[i][j] if blurred[i][j] < err[i][j] else err[i][j]
                ew_fg += e
            else:
                decay = 2.0 - math.exp(math.log(0.5) / 5.0 * dist[i][j])
                ew_bg += err[i][j] * decay
    tpw = fg_count - ew_fg
    fpw = ew_bg
    recall = 1.0 - ew_fg / fg_count
    precision = tpw / (_EPS + tpw + fpw)
    return 2.0 * recall * precision / (_EPS + recall + precision)


def em_naive(pred, gt) -> float:
    h, w = _dims(pred)
    n = h * w
    mean_pred = sum(float(pred[i][j]) for i in range(h) for j in range(w)) / n
    thr = min(2.0 * mean_pred, 1.0)
    binary = [[1.0 if float(pred[i][j]) >= thr else 0.0 for j in range(w)]
              for i in range(h)]
    gt_sum = sum(float(gt[i][j]) for i in range(h) for j in range(w))
    if gt_sum == 0.0:
        total = sum(1.0 - binary[i][j] for i in range(h) for j in range(w))
        return total / n
    if gt_sum == n:
        total = sum(binary[i][j] for i in range(h) for j in range(w))
        return total / n
    mean_bin = sum(binary[i][j] for i in range(h) for j in range(w)) / n
    mean_gt = gt_sum / n
    total = 0.0
    for i in range(h):
        for j in range(w):
            pa = binary[i][j] - mean_bin
            ga = float(gt[i][j]) - mean_gt
            align = 2.0 * ga * pa / (ga * ga + pa * pa + _EPS)
            total += (align + 1.0) ** 2 / 4.0
    return total / n


def _object_score_naive(values):
    n = len(values)
    mu = sum(values) / n
    if n > 1:
        sigma = math.sqrt(sum((v - mu) ** 2 for v in values) / (n - 1))
    else:
        sigma = 0.0
    return 2.0 * mu / (mu * mu + 1.0 + sigma + _EPS)


def _region_ssim_naive(pvals, gvals):
    n = len(pvals)
    x = sum(pvals) / n
    y = sum(gvals) / n
    norm = n - 1 if n > 1 else 1
    sx = sum((v - x) ** 2 for v in pvals) / norm
    sy = sum((v - y) ** 2 for v in gvals) / norm
    sxy = sum((p - x) * (g - y) for p, g in zip(pvals, gvals)) / norm
    a = 4.0 * x * y * sxy
    b = (x * x + y * y) * (sx + sy)
    if a != 0.0:
        return a / (b + _EPS)
    return 1.0 if b == 0.0 else 0.0


def sm_naive(pred, gt, alpha=0.5) -> float:
    h, w = _dims(pred)
    n = h * w
    gt_sum = sum(float(gt[i][j]) for i in range(h) for j in range(w))
    mean_pred = sum(float(pred[i][j]) for i in range(h) for j in range(w)) / n
    if gt_sum == 0.0:
        return 1.0 - mean_pred
    if gt_sum == n:
        return mean_pred

    fg_vals = [float(pred[i][j]) for i in range(h) for j in range(w)
               if gt[i][j] == 1]
    bg_vals = [1.0 - float(pred[i][j]) for i in range(h) for j in range(w)
               if gt[i][j] == 0]
    u = gt_sum / n
    s_object = (u * _object_score_naive(fg_vals)
                + (1.0 - u) * _object_score_naive(bg_vals))

    col_sum = 0.0
    row_sum = 0.0
    for i in range(h):
        for j in range(w):
            if gt[i][j] == 1:
                col_sum += j + 1
                row_sum += i + 1
    x = int(math.floor(col_sum / gt_sum + 0.5))
    y = int(math.floor(row_sum / gt_sum + 0.5))
    x = min(max(x, 1), w - 1)
    y = min(max(y, 1), h - 1)

    quads = ((0, y, 0, x), (0, y, x, w), (y, h, 0, x), (y, h, x, w))
    weights = [x * y / n, (w - x) * y / n, x * (h - y) / n]
    weights.append(1.0 - sum(weights))
    s_region = 0.0
    for wt, (r0, r1, c0, c1) in zip(weights, quads):
        pvals = [float(pred[i][j]) for i in range(r0, r1) for j in range(c0, c1)]
        gvals = [float(gt[i][j]) for i in range(r0, r1) for j in range(c0, c1)]
        s_region += wt * _region_ssim_naive(pvals, gvals)

    return max(alpha * s_object + (1.0 - alpha) * s_region, 0.0)
