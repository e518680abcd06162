"""
Saliency evaluation metrics.

Per-image scores:
    mae           mean absolute error
    max_f         max F-measure over 256 thresholds (beta^2 = 0.3) and the PR curve
    weighted_f    weighted F-measure (beta^2 = 1, 7x7 Gaussian with sigma 5,
                  background importance 2 - exp(alpha * dist), alpha = ln(0.5) / 5)
    s_measure     structure measure, alpha = 0.5, lambda = 1
    e_measure     max enhanced-alignment measure over 256 thresholds

Predictions are binarized with `pred > k / 255`, k = 0..255, so an all-zero
prediction has zero recall at every threshold. Degenerate ground truth
(all background or all foreground) never raises: S and E fall back to
1 - mean(pred) / mean(pred), max-F and weighted-F to 0 with a flag.

Dataset aggregation follows the benchmark protocol: max-F and max-E are the
maxima of the mean per-image curves; the other scores are per-image means.
Images are accumulated in sorted id order, so results do not depend on the
order in which images were scored.
"""

import math
from dataclasses import asdict, dataclass, field
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike, NDArray
from scipy import ndimage
from scipy.spatial import cKDTree

from pyrgbd.core.fields import MetricFields
from pyrgbd.utils.logger import get_logger

logger = get_logger(__name__)

EPS = 1e-20
THRESHOLDS = np.arange(256, dtype=np.float64) / 255.0
MAX_F_BETA2 = 0.3
WEIGHTED_F_BETA2 = 1.0
WEIGHTED_F_KERNEL = 7
WEIGHTED_F_SIGMA = 5.0
WEIGHTED_F_ALPHA = math.log(0.5) / 5.0
S_ALPHA = 0.5
S_LAMBDA = 1.0


class MetricInputError(ValueError):
    """Raised when a prediction/ground-truth pair cannot be scored."""

    pass


def check_pair(pred: ArrayLike, gt: ArrayLike) -> Tuple[NDArray[np.float64], NDArray[np.bool_]]:
    """
    Validate a prediction/ground-truth pair.

    Returns:
        (pred as float64, gt as bool)

    Raises:
        MetricInputError: On shape mismatch, non-2-D input, non-finite or
            out-of-range predictions, or non-binary ground truth
    """
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt)
    if pred.shape != gt.shape:
        raise MetricInputError(f"pred {pred.shape} and gt {gt.shape} differ in shape")
    if pred.ndim != 2 or pred.size == 0:
        raise MetricInputError(f"expected non-empty 2-D maps, got shape {pred.shape}")
    if not np.all(np.isfinite(pred)) or pred.min() < 0.0 or pred.max() > 1.0:
        raise MetricInputError("pred must be finite and lie in [0, 1]")
    if not np.all((gt == 0) | (gt == 1)):
        raise MetricInputError("gt must be binary (0/1)")
    return pred, gt.astype(bool)


def is_degenerate(gt: ArrayLike) -> bool:
    """True for ground truth without foreground or without background."""
    gt = np.asarray(gt).astype(bool)
    return bool(gt.all() or not gt.any())


@dataclass
class PRCurve:
    """Precision, recall and F-measure at the 256 binarization thresholds."""

    precision: NDArray[np.float64]
    recall: NDArray[np.float64]
    f_measure: NDArray[np.float64]
    degenerate: bool = False
    thresholds: NDArray[np.float64] = field(default_factory=lambda: THRESHOLDS.copy())

    def to_frame(self) -> pd.DataFrame:
        fields = MetricFields()
        return pd.DataFrame(
            {
                fields.THRESHOLD: self.thresholds,
                fields.PRECISION: self.precision,
                fields.RECALL: self.recall,
                fields.F_MEASURE: self.f_measure,
            }
        )


class MaxF(NamedTuple):
    value: float
    curve: PRCurve


def _threshold_counts(
    pred: NDArray[np.float64], gt: NDArray[np.bool_]
) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
    """(TP, FP) at every threshold for the rule pred > t."""
    fg = np.sort(pred[gt])
    bg = np.sort(pred[~gt])
    tp = fg.size - np.searchsorted(fg, THRESHOLDS, side="right")
    fp = bg.size - np.searchsorted(bg, THRESHOLDS, side="right")
    return tp.astype(np.float64), fp.astype(np.float64)


def _f_curve(precision: NDArray, recall: NDArray, beta2: float) -> NDArray:
    return (1.0 + beta2) * precision * recall / (beta2 * precision + recall + EPS)


def mae(pred: ArrayLike, gt: ArrayLike) -> float:
    pred, gt = check_pair(pred, gt)
    return float(np.mean(np.abs(pred - gt)))


def max_f(pred: ArrayLike, gt: ArrayLike, beta2: float = MAX_F_BETA2) -> MaxF:
    """
    Maximum F-measure over the 256 thresholds and the underlying PR curve.

    Empty ground truth yields 0 and a curve flagged as degenerate.
    """
    pred, gt = check_pair(pred, gt)
    n_fg = int(gt.sum())
    tp, fp = _threshold_counts(pred, gt)
    precision = tp / (tp + fp + EPS)
    recall = tp / (n_fg + EPS)
    f_measure = _f_curve(precision, recall, beta2)
    if n_fg == 0:
        zeros = np.zeros_like(THRESHOLDS)
        return MaxF(0.0, PRCurve(precision, zeros, zeros.copy(), degenerate=True))
    curve = PRCurve(precision, recall, f_measure)
    return MaxF(float(f_measure.max()), curve)


def gaussian_kernel(size: int = WEIGHTED_F_KERNEL, sigma: float = WEIGHTED_F_SIGMA) -> NDArray:
    """Normalized 2-D Gaussian; entries below eps * max are zeroed."""
    half = (size - 1) / 2.0
    y, x = np.ogrid[-half : half + 1, -half : half + 1]
    kernel = np.exp(-(x * x + y * y) / (2.0 * sigma * sigma))
    kernel[kernel < np.finfo(kernel.dtype).eps * kernel.max()] = 0
    total = kernel.sum()
    return kernel / total if total != 0 else kernel


def _nearest_foreground(gt: NDArray[np.bool_]) -> Tuple[NDArray, NDArray]:
    """
    Distance to and flat index of the nearest foreground pixel, per pixel.

    Equidistant candidates resolve to the first one in raster order.
    """
    distance = ndimage.distance_transform_edt(~gt)
    fg_coords = np.argwhere(gt)
    fg_flat = np.flatnonzero(gt)
    nearest = np.arange(gt.size)

    bg_coords = np.argwhere(~gt)
    if bg_coords.size:
        radius = distance[~gt] + 1e-6
        candidates = cKDTree(fg_coords).query_ball_point(
            bg_coords, r=radius, return_sorted=True
        )
        nearest[np.flatnonzero(~gt)] = fg_flat[[c[0] for c in candidates]]
    return distance, nearest


def weighted_f(pred: ArrayLike, gt: ArrayLike, beta2: float = WEIGHTED_F_BETA2) -> float:
    """Weighted F-measure; 0 for degenerate ground truth."""
    pred, gt = check_pair(pred, gt)
    if is_degenerate(gt):
        return 0.0

    error = np.abs(pred - gt)
    distance, nearest = _nearest_foreground(gt)
    # background pixels take the error of their nearest foreground pixel
    spread = error.ravel()[nearest].reshape(error.shape)
    smoothed = ndimage.convolve(spread, gaussian_kernel(), mode="constant", cval=0.0)
    min_error = np.where(gt & (smoothed < error), smoothed, error)
    importance = np.where(gt, 1.0, 2.0 - np.exp(WEIGHTED_F_ALPHA * distance))
    weighted = min_error * importance

    tp = gt.sum() - weighted[gt].sum()
    fp = weighted[~gt].sum()
    recall = 1.0 - weighted[gt].mean()
    precision = tp / (tp + fp + EPS)
    return float((1.0 + beta2) * recall * precision / (recall + beta2 * precision + EPS))


def _object_score(values: NDArray[np.float64], lam: float) -> float:
    mean = values.mean()
    std = values.std(ddof=1) if values.size > 1 else 0.0
    return 2.0 * mean / (mean * mean + 1.0 + 2.0 * lam * std + EPS)


def _s_object(pred: NDArray, gt: NDArray[np.bool_], lam: float) -> float:
    u = gt.mean()
    foreground = _object_score(pred[gt], lam)
    background = _object_score(1.0 - pred[~gt], lam)
    return u * foreground + (1.0 - u) * background


def _centroid_split(gt: NDArray[np.bool_]) -> Tuple[int, int]:
    """Split column and row: one past the rounded foreground centroid."""
    rows, cols = np.nonzero(gt)
    return int(np.round(cols.mean())) + 1, int(np.round(rows.mean())) + 1


def _region_similarity(pred: NDArray, gt: NDArray) -> float:
    n = pred.size
    x, y = pred.mean(), gt.mean()
    if n > 1:
        var_x = np.sum((pred - x) ** 2) / (n - 1)
        var_y = np.sum((gt - y) ** 2) / (n - 1)
        cov = np.sum((pred - x) * (gt - y)) / (n - 1)
    else:
        var_x = var_y = cov = 0.0
    alpha = 4.0 * x * y * cov
    beta = (x * x + y * y) * (var_x + var_y)
    if alpha != 0:
        return float(alpha / (beta + EPS))
    return 1.0 if beta == 0 else 0.0


def _s_region(pred: NDArray, gt: NDArray[np.bool_]) -> float:
    height, width = gt.shape
    x, y = _centroid_split(gt)
    gt_f = gt.astype(np.float64)
    score = 0.0
    for rows in (slice(0, y), slice(y, height)):
        for cols in (slice(0, x), slice(x, width)):
            block = pred[rows, cols]
            if block.size == 0:
                continue
            score += block.size / gt.size * _region_similarity(block, gt_f[rows, cols])
    return score


def s_measure(pred: ArrayLike, gt: ArrayLike, alpha: float = S_ALPHA, lam: float = S_LAMBDA) -> float:
    """Structure measure combining object- and region-aware similarity."""
    pred, gt = check_pair(pred, gt)
    if not gt.any():
        return float(1.0 - pred.mean())
    if gt.all():
        return float(pred.mean())
    score = alpha * _s_object(pred, gt, lam) + (1.0 - alpha) * _s_region(pred, gt)
    return float(max(score, 0.0))


def _alignment(phi_gt: NDArray, phi_pred: NDArray) -> NDArray:
    xi = 2.0 * phi_gt * phi_pred / (phi_gt * phi_gt + phi_pred * phi_pred + EPS)
    return (xi + 1.0) ** 2 / 4.0


def e_curve(pred: ArrayLike, gt: ArrayLike) -> NDArray[np.float64]:
    """Mean enhanced alignment at each of the 256 thresholds."""
    pred, gt = check_pair(pred, gt)
    if not gt.any():
        return np.full(THRESHOLDS.shape, 1.0 - pred.mean())
    if gt.all():
        return np.full(THRESHOLDS.shape, pred.mean())

    n = float(gt.size)
    n_fg = float(gt.sum())
    tp, fp = _threshold_counts(pred, gt)
    fn = n_fg - tp
    tn = n - n_fg - fp
    g = n_fg / n
    m = (tp + fp) / n
    total = (
        tp * _alignment(1.0 - g, 1.0 - m)
        + fn * _alignment(1.0 - g, -m)
        + fp * _alignment(-g, 1.0 - m)
        + tn * _alignment(-g, -m)
    )
    return total / n


def e_measure(pred: ArrayLike, gt: ArrayLike) -> float:
    """Max E-measure over the 256 thresholds."""
    return float(e_curve(pred, gt).max())


@dataclass
class MetricReport:
    """Scores of one dataset (or of the Ave-Metric aggregate)."""

    dataset: str
    count: int
    max_f: float
    weighted_f: float
    s_measure: float
    max_e: float
    mae: float
    degenerate: int = 0

    def __post_init__(self):
        if self.count < 1:
            raise MetricInputError(f"MetricReport needs count >= 1, got {self.count}")
        for name in ("max_f", "weighted_f", "s_measure", "max_e", "mae"):
            value = getattr(self, name)
            if not math.isfinite(value) or not -1e-12 <= value <= 1.0 + 1e-12:
                raise MetricInputError(f"{name}={value} outside [0, 1] for {self.dataset}")

    def to_dict(self) -> Dict[str, object]:
        return asdict(self)

    def __str__(self) -> str:
        return (
            f"{self.dataset} (n={self.count}): maxF={self.max_f:.4f} "
            f"wF={self.weighted_f:.4f} S={self.s_measure:.4f} "
            f"maxE={self.max_e:.4f} MAE={self.mae:.4f}"
        )


@dataclass
class ImageScores:
    mae: float
    weighted_f: float
    s_measure: float
    precision: NDArray[np.float64]
    recall: NDArray[np.float64]
    f_curve: NDArray[np.float64]
    e_curve: NDArray[np.float64]
    degenerate: bool


def score_image(pred: ArrayLike, gt: ArrayLike) -> ImageScores:
    """Every per-image score needed for dataset aggregation."""
    pred, gt = check_pair(pred, gt)
    f_result = max_f(pred, gt)
    return ImageScores(
        mae=float(np.mean(np.abs(pred - gt))),
        weighted_f=weighted_f(pred, gt),
        s_measure=s_measure(pred, gt),
        precision=f_result.curve.precision,
        recall=f_result.curve.recall,
        f_curve=f_result.curve.f_measure,
        e_curve=e_curve(pred, gt),
        degenerate=f_result.curve.degenerate,
    )


class DatasetScorer:
    """Accumulates per-image scores and aggregates them per the benchmark protocol."""

    def __init__(self, name: str):
        self.name = name
        self._scores: Dict[str, ImageScores] = {}

    def add(self, sample_id: str, pred: ArrayLike, gt: ArrayLike) -> ImageScores:
        if sample_id in self._scores:
            raise MetricInputError(f"Sample '{sample_id}' scored twice in {self.name}")
        scores = score_image(pred, gt)
        self._scores[sample_id] = scores
        return scores

    def __len__(self) -> int:
        return len(self._scores)

    def _ordered(self) -> List[ImageScores]:
        return [self._scores[key] for key in sorted(self._scores)]

    def pr_curve(self) -> PRCurve:
        scores = self._ordered()
        if not scores:
            raise MetricInputError(f"No images scored for {self.name}")
        return PRCurve(
            precision=np.mean([s.precision for s in scores], axis=0),
            recall=np.mean([s.recall for s in scores], axis=0),
            f_measure=np.mean([s.f_curve for s in scores], axis=0),
            degenerate=any(s.degenerate for s in scores),
        )

    def report(self) -> MetricReport:
        scores = self._ordered()
        if not scores:
            raise MetricInputError(f"No images scored for {self.name}")
        degenerate = sum(s.degenerate for s in scores)
        if degenerate:
            logger.warning(f"{self.name}: {degenerate} image(s) with degenerate ground truth")
        return MetricReport(
            dataset=self.name,
            count=len(scores),
            max_f=float(np.mean([s.f_curve for s in scores], axis=0).max()),
            weighted_f=float(np.mean([s.weighted_f for s in scores])),
            s_measure=float(np.mean([s.s_measure for s in scores])),
            max_e=float(np.mean([s.e_curve for s in scores], axis=0).max()),
            mae=float(np.mean([s.mae for s in scores])),
            degenerate=degenerate,
        )


def score_dataset(
    name: str, pairs: Dict[str, Tuple[ArrayLike, ArrayLike]]
) -> Tuple[MetricReport, PRCurve]:
    """Score a {sample id: (pred, gt)} mapping."""
    scorer = DatasetScorer(name)
    for sample_id in sorted(pairs):
        scorer.add(sample_id, *pairs[sample_id])
    return scorer.report(), scorer.pr_curve()


def ave_metric(reports: Sequence[MetricReport], name: Optional[str] = None) -> MetricReport:
    """
    Size-weighted aggregate of dataset reports.

    Raises:
        MetricInputError: If reports is empty
    """
    if not reports:
        raise MetricInputError("ave_metric needs at least one report")
    ordered = sorted(reports, key=lambda r: r.dataset)
    counts = np.array([r.count for r in ordered], dtype=np.float64)
    total = counts.sum()

    def weighted(attribute: str) -> float:
        values = np.array([getattr(r, attribute) for r in ordered], dtype=np.float64)
        return float(np.sum(counts * values) / total)

    return MetricReport(
        dataset=name or MetricFields.AVE_METRIC,
        count=int(total),
        max_f=weighted("max_f"),
        weighted_f=weighted("weighted_f"),
        s_measure=weighted("s_measure"),
        max_e=weighted("max_e"),
        mae=weighted("mae"),
        degenerate=sum(r.degenerate for r in ordered),
    )


def reports_frame(reports: Sequence[MetricReport]) -> pd.DataFrame:
    """Reports as a table with the evaluation CSV columns."""
    fields = MetricFields()
    columns = [
        fields.DATASET,
        fields.COUNT,
        fields.MAX_F,
        fields.WEIGHTED_F,
        fields.S_MEASURE,
        fields.E_MEASURE,
        fields.MAE,
    ]
    return pd.DataFrame([r.to_dict() for r in reports])[columns]
