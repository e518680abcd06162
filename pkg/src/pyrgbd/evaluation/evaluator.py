"""
Scoring of saliency predictions: model outputs held in memory, or directories
of 8-bit prediction maps paired with ground truth by filename stem.

Predictions whose resolution differs from the ground truth are bilinearly
resized to it before scoring.
"""

from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
import torch
import torch.nn.functional as F
from numpy.typing import NDArray
from torch import nn

from pyrgbd.core.fields import LayoutFields
from pyrgbd.core.sample import RgbdSample
from pyrgbd.evaluation.metrics import (
    DatasetScorer,
    MetricReport,
    PRCurve,
    ave_metric,
    reports_frame,
)
from pyrgbd.pipeline.loading import SplitLayout, read_gray, read_gt, write_gray8
from pyrgbd.utils.logger import get_logger

logger = get_logger(__name__)

PathLike = Union[str, Path]


class EvaluationError(Exception):
    """Raised when predictions and ground truth cannot be paired or scored."""

    pass


def resize_to(pred: NDArray, shape: Tuple[int, int]) -> NDArray[np.float64]:
    """Bilinear resize of an HxW map; maps already at `shape` are returned as is."""
    pred = np.asarray(pred, dtype=np.float64)
    if pred.shape == tuple(shape):
        return pred
    tensor = torch.from_numpy(pred)[None, None]
    resized = F.interpolate(tensor, size=tuple(shape), mode="bilinear", align_corners=False)
    return np.clip(resized[0, 0].numpy(), 0.0, 1.0)


@torch.no_grad()
def predict_samples(
    model: nn.Module,
    samples: Sequence[RgbdSample],
    device: Union[str, torch.device] = "cpu",
    batch_size: int = 4,
) -> Dict[str, NDArray[np.float32]]:
    """
    Final saliency maps of a SodModel at each sample's resolution.

    Samples of equal resolution are batched together.
    """
    was_training = model.training
    model.eval()
    groups: Dict[Tuple[int, int], List[RgbdSample]] = {}
    for sample in samples:
        groups.setdefault(sample.resolution, []).append(sample)

    predictions: Dict[str, NDArray[np.float32]] = {}
    for group in groups.values():
        for start in range(0, len(group), batch_size):
            chunk = group[start : start + batch_size]
            rgb = torch.stack(
                [torch.from_numpy(s.rgb.transpose(2, 0, 1).copy()) for s in chunk]
            ).to(device)
            depth = torch.stack([torch.from_numpy(s.depth[None].copy()) for s in chunk]).to(device)
            final = model(rgb, depth).final.cpu().numpy()
            for sample, values in zip(chunk, final):
                predictions[sample.id] = values[0].astype(np.float32)

    model.train(was_training)
    return predictions


def evaluate_predictions(
    name: str,
    predictions: Dict[str, NDArray],
    ground_truth: Dict[str, NDArray],
) -> Tuple[MetricReport, PRCurve]:
    """
    Score predictions against ground truth keyed by sample id.

    Raises:
        EvaluationError: If the key sets differ or a pair cannot be scored
    """
    missing_gt = sorted(set(predictions) - set(ground_truth))
    missing_pred = sorted(set(ground_truth) - set(predictions))
    if missing_gt or missing_pred:
        raise EvaluationError(
            f"Unpaired samples in {name}: without gt {missing_gt}, "
            f"without prediction {missing_pred}"
        )
    if not predictions:
        raise EvaluationError(f"Nothing to evaluate in {name}")

    scorer = DatasetScorer(name)
    try:
        for sample_id in sorted(predictions):
            gt = np.asarray(ground_truth[sample_id])
            scorer.add(sample_id, resize_to(predictions[sample_id], gt.shape), gt)
        report = scorer.report()
    except ValueError as e:
        error_msg = f"Cannot score {name}: {e}"
        logger.error(error_msg)
        raise EvaluationError(error_msg) from e

    logger.info(f"Evaluated {report}")
    return report, scorer.pr_curve()


def evaluate_model(
    model: nn.Module,
    samples: Sequence[RgbdSample],
    name: str = "validation",
    device: Union[str, torch.device] = "cpu",
    batch_size: int = 4,
) -> Tuple[MetricReport, PRCurve]:
    """Predict and score samples that carry ground truth."""
    predictions = predict_samples(model, samples, device, batch_size)
    ground_truth = {s.id: s.gt for s in samples if s.has_gt}
    return evaluate_predictions(name, predictions, ground_truth)


def save_predictions(predictions: Dict[str, NDArray], out_dir: PathLike) -> Path:
    """Write predictions as 8-bit grayscale PNGs named by sample id."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for sample_id, values in predictions.items():
        write_gray8(out_dir / f"{sample_id}.png", values)
    logger.info(f"Wrote {len(predictions)} prediction maps to {out_dir}")
    return out_dir


def _index(directory: Path) -> Dict[str, Path]:
    if not directory.is_dir():
        raise EvaluationError(f"Directory not found: {directory}")
    return SplitLayout.index(directory, LayoutFields.MAP_SUFFIXES)


def dataset_name(gt_dir: PathLike) -> str:
    """A gt directory named 'gt' takes its split directory's name."""
    gt_dir = Path(gt_dir)
    if gt_dir.name == LayoutFields.GT_DIR and gt_dir.parent.name:
        return gt_dir.parent.name
    return gt_dir.name


def evaluate_directory(
    pred_dir: PathLike, gt_dir: PathLike, name: Optional[str] = None
) -> Tuple[MetricReport, PRCurve]:
    """
    Score a directory of prediction maps against a directory of gt masks.

    Raises:
        EvaluationError: On unpaired stems (listed in the message) or
            unreadable directories
    """
    pred_files = _index(Path(pred_dir))
    gt_files = _index(Path(gt_dir))
    name = name or dataset_name(gt_dir)

    unpaired = sorted(set(pred_files) ^ set(gt_files))
    if unpaired:
        raise EvaluationError(f"Unpaired stems between {pred_dir} and {gt_dir}: {unpaired}")

    predictions = {stem: read_gray(path) for stem, path in pred_files.items()}
    ground_truth = {stem: read_gt(path) for stem, path in gt_files.items()}
    return evaluate_predictions(name, predictions, ground_truth)


def evaluate_directories(
    pairs: Sequence[Tuple[PathLike, PathLike]],
    names: Optional[Sequence[str]] = None,
    out_dir: Optional[PathLike] = None,
) -> pd.DataFrame:
    """
    Score several datasets and append the Ave-Metric row.

    Args:
        pairs: (prediction dir, gt dir) per dataset
        names: Dataset names; derived from the gt dirs when omitted
        out_dir: When set, writes metrics.csv and one pr_<dataset>.csv per dataset

    Returns:
        One row per dataset followed by the Ave-Metric row
    """
    if not pairs:
        raise EvaluationError("No (prediction, gt) directory pairs given")
    if names is not None and len(names) != len(pairs):
        raise EvaluationError(f"Got {len(names)} names for {len(pairs)} directory pairs")

    reports, curves = [], {}
    for index, (pred_dir, gt_dir) in enumerate(pairs):
        name = names[index] if names is not None else dataset_name(gt_dir)
        if name in curves:
            raise EvaluationError(f"Dataset name '{name}' used twice")
        report, curve = evaluate_directory(pred_dir, gt_dir, name)
        reports.append(report)
        curves[name] = curve

    table = reports_frame(reports + [ave_metric(reports)])

    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        table.to_csv(out_dir / "metrics.csv", index=False, float_format="%.6f")
        for name, curve in curves.items():
            curve.to_frame().to_csv(out_dir / f"pr_{name}.csv", index=False, float_format="%.6f")
        logger.info(f"Wrote metric tables to {out_dir}")

    return table
