"""
Slow reference implementations of the structural metrics.

Each function recomputes its metric pixel by pixel with plain Python loops,
straight from the definition, sharing no helper with `metrics`. They exist
to cross-check the vectorized versions on small maps and are far too slow
for real images.
"""

import math
from typing import List, Sequence

import numpy as np
from numpy.typing import ArrayLike

EPS = 1e-20


def _grid(values: ArrayLike) -> List[List[float]]:
    return [[float(v) for v in row] for row in np.asarray(values, dtype=np.float64)]


def _mean(values: Sequence[float]) -> float:
    return sum(values) / len(values)


def _sample_std(values: Sequence[float]) -> float:
    if len(values) < 2:
        return 0.0
    mean = _mean(values)
    return math.sqrt(sum((v - mean) ** 2 for v in values) / (len(values) - 1))


def weighted_f_oracle(pred: ArrayLike, gt: ArrayLike, beta2: float = 1.0) -> float:
    p, g = _grid(pred), _grid(gt)
    h, w = len(g), len(g[0])
    fg = [(i, j) for i in range(h) for j in range(w) if g[i][j] == 1.0]
    if not fg or len(fg) == h * w:
        return 0.0

    error = [[abs(p[i][j] - g[i][j]) for j in range(w)] for i in range(h)]

    # nearest foreground pixel, first in raster order on ties
    dist = [[0.0] * w for _ in range(h)]
    spread = [row[:] for row in error]
    for i in range(h):
        for j in range(w):
            if g[i][j] == 1.0:
                continue
            best, best_sq = None, None
            for fi, fj in fg:
                sq = (fi - i) ** 2 + (fj - j) ** 2
                if best_sq is None or sq < best_sq:
                    best, best_sq = (fi, fj), sq
            dist[i][j] = math.sqrt(best_sq)
            spread[i][j] = error[best[0]][best[1]]

    sigma = 5.0
    raw = [[math.exp(-(dy * dy + dx * dx) / (2 * sigma * sigma)) for dx in range(-3, 4)] for dy in range(-3, 4)]
    norm = sum(sum(row) for row in raw)
    kernel = [[v / norm for v in row] for row in raw]

    total_fg_error = 0.0
    total_bg_error = 0.0
    for i in range(h):
        for j in range(w):
            if g[i][j] == 1.0:
                smoothed = 0.0
                for dy in range(-3, 4):
                    for dx in range(-3, 4):
                        y, x = i + dy, j + dx
                        if 0 <= y < h and 0 <= x < w:
                            smoothed += kernel[dy + 3][dx + 3] * spread[y][x]
                total_fg_error += min(smoothed, error[i][j])
            else:
                importance = 2.0 - math.exp(math.log(0.5) / 5.0 * dist[i][j])
                total_bg_error += error[i][j] * importance

    tp = len(fg) - total_fg_error
    recall = 1.0 - total_fg_error / len(fg)
    precision = tp / (tp + total_bg_error + EPS)
    return (1.0 + beta2) * recall * precision / (recall + beta2 * precision + EPS)


def _object_similarity(values: Sequence[float], lam: float) -> float:
    mean = _mean(values)
    return 2.0 * mean / (mean * mean + 1.0 + 2.0 * lam * _sample_std(values) + EPS)


def _block_similarity(p: Sequence[float], g: Sequence[float]) -> float:
    n = len(p)
    mx, my = _mean(p), _mean(g)
    if n > 1:
        vx = sum((a - mx) ** 2 for a in p) / (n - 1)
        vy = sum((b - my) ** 2 for b in g) / (n - 1)
        cxy = sum((a - mx) * (b - my) for a, b in zip(p, g)) / (n - 1)
    else:
        vx = vy = cxy = 0.0
    num = 4.0 * mx * my * cxy
    den = (mx * mx + my * my) * (vx + vy)
    if num != 0:
        return num / (den + EPS)
    return 1.0 if den == 0 else 0.0


def s_measure_oracle(pred: ArrayLike, gt: ArrayLike, alpha: float = 0.5, lam: float = 1.0) -> float:
    p, g = _grid(pred), _grid(gt)
    h, w = len(g), len(g[0])
    cells = [(i, j) for i in range(h) for j in range(w)]
    fg = [(i, j) for i, j in cells if g[i][j] == 1.0]
    if not fg:
        return 1.0 - _mean([p[i][j] for i, j in cells])
    if len(fg) == len(cells):
        return _mean([p[i][j] for i, j in cells])

    u = len(fg) / len(cells)
    fg_score = _object_similarity([p[i][j] for i, j in fg], lam)
    bg_score = _object_similarity([1.0 - p[i][j] for i, j in cells if g[i][j] == 0.0], lam)
    object_score = u * fg_score + (1.0 - u) * bg_score

    col = round(sum(j for _, j in fg) / len(fg)) + 1
    row = round(sum(i for i, _ in fg) / len(fg)) + 1
    region_score = 0.0
    for rows in (range(0, row), range(row, h)):
        for cols in (range(0, col), range(col, w)):
            block = [(i, j) for i in rows for j in cols]
            if not block:
                continue
            similarity = _block_similarity([p[i][j] for i, j in block], [g[i][j] for i, j in block])
            region_score += len(block) / len(cells) * similarity

    return max(alpha * object_score + (1.0 - alpha) * region_score, 0.0)


def e_measure_oracle(pred: ArrayLike, gt: ArrayLike) -> float:
    p, g = _grid(pred), _grid(gt)
    flat_p = [v for row in p for v in row]
    flat_g = [v for row in g for v in row]
    n = len(flat_g)
    g_mean = _mean(flat_g)
    if g_mean == 0.0:
        return 1.0 - _mean(flat_p)
    if g_mean == 1.0:
        return _mean(flat_p)

    best = 0.0
    for k in range(256):
        t = k / 255.0
        binary = [1.0 if v > t else 0.0 for v in flat_p]
        b_mean = _mean(binary)
        total = 0.0
        for b, y in zip(binary, flat_g):
            phi_p, phi_g = b - b_mean, y - g_mean
            xi = 2.0 * phi_g * phi_p / (phi_g * phi_g + phi_p * phi_p + EPS)
            total += (xi + 1.0) ** 2 / 4.0
        best = max(best, total / n)
    return best
