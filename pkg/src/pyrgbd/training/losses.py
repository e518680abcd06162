"""
Supervision terms of the three training stages.

Saliency (downstream): weighted BCE plus weighted IoU at each of the five
side-outs, with pixel weights w = 1 + 5 * |avgpool31(gt) - gt| emphasising
pixels near object boundaries. Per-image sums are normalized per image and
then averaged over the batch.

Stage 1: L1 plus (1 - SSIM) between prediction and target modality.
Stage 2: L1 between sigmoid side-outs and the depth-contour pyramid.

Maps may be given as HxW, 1xHxW or NxCxHxW tensors.
"""

from typing import Optional, Sequence

import torch
import torch.nn.functional as F
from torchmetrics.functional.image import structural_similarity_index_measure

SIDE_OUTS = 5
WEIGHT_POOL = 31
WEIGHT_GAIN = 5.0
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5


class LossInputError(ValueError):
    """Raised when a loss receives mismatched, out-of-range or miscounted inputs."""

    pass


def _batched(x: torch.Tensor) -> torch.Tensor:
    if x.dim() == 2:
        return x[None, None]
    if x.dim() == 3:
        return x[None]
    if x.dim() == 4:
        return x
    raise LossInputError(f"expected a 2-D to 4-D map, got shape {tuple(x.shape)}")


def _check_same_shape(a: torch.Tensor, b: torch.Tensor, what: str) -> None:
    if a.shape != b.shape:
        raise LossInputError(f"{what}: shape {tuple(a.shape)} != {tuple(b.shape)}")


def _check_binary(gt: torch.Tensor) -> None:
    if not torch.all((gt == 0) | (gt == 1)):
        raise LossInputError("ground truth must be binary (values 0 or 1)")


def pixel_weight(gt: torch.Tensor) -> torch.Tensor:
    """
    Boundary-emphasising pixel weights in [1, 6].

    The 31x31 stride-1 mean is taken over the valid part of the window at the
    borders, so constant maps get weight 1 everywhere.

    Raises:
        LossInputError: If gt is not binary
    """
    _check_binary(gt)
    batched = _batched(gt)
    pooled = F.avg_pool2d(
        batched,
        kernel_size=WEIGHT_POOL,
        stride=1,
        padding=WEIGHT_POOL // 2,
        count_include_pad=False,
    )
    weight = 1.0 + WEIGHT_GAIN * torch.abs(pooled - batched)
    return weight.reshape(gt.shape)


def weighted_bce(
    logits: torch.Tensor, gt: torch.Tensor, weight: Optional[torch.Tensor] = None
) -> torch.Tensor:
    """Weighted BCE in the logit formulation: sum(w * bce) / sum(w) per image."""
    _check_same_shape(logits, gt, "weighted_bce logits vs gt")
    if weight is None:
        weight = pixel_weight(gt)
    _check_same_shape(weight, gt, "weighted_bce weight vs gt")
    logits, gt, weight = _batched(logits), _batched(gt), _batched(weight)

    bce = F.binary_cross_entropy_with_logits(logits, gt, reduction="none")
    per_image = (weight * bce).sum(dim=(2, 3)) / weight.sum(dim=(2, 3))
    return per_image.mean()


def weighted_iou(
    probabilities: torch.Tensor, gt: torch.Tensor, weight: Optional[torch.Tensor] = None
) -> torch.Tensor:
    """1 - (inter + 1) / (union + 1) with weighted intersection and union."""
    _check_same_shape(probabilities, gt, "weighted_iou probabilities vs gt")
    if probabilities.min() < 0 or probabilities.max() > 1:
        raise LossInputError("weighted_iou probabilities must lie in [0, 1]")
    if weight is None:
        weight = pixel_weight(gt)
    _check_same_shape(weight, gt, "weighted_iou weight vs gt")
    p, g, w = _batched(probabilities), _batched(gt), _batched(weight)

    inter = (w * p * g).sum(dim=(2, 3))
    union = (w * (p + g)).sum(dim=(2, 3)) - inter
    return (1.0 - (inter + 1.0) / (union + 1.0)).mean()


def sod_loss(side_outs: Sequence[torch.Tensor], gt_pyramid: Sequence[torch.Tensor]) -> torch.Tensor:
    """
    Deeply supervised saliency loss over exactly five side-outs.

    Args:
        side_outs: Logits per level
        gt_pyramid: Binary targets per level at matching resolutions

    Raises:
        LossInputError: On a level count other than five or a shape mismatch
    """
    if len(side_outs) != SIDE_OUTS or len(gt_pyramid) != SIDE_OUTS:
        raise LossInputError(
            f"sod_loss needs {SIDE_OUTS} side-outs and targets, "
            f"got {len(side_outs)} and {len(gt_pyramid)}"
        )
    total = side_outs[0].new_zeros(())
    for logits, gt in zip(side_outs, gt_pyramid):
        _check_same_shape(logits, gt, "sod_loss level")
        weight = pixel_weight(gt)
        total = total + weighted_bce(logits, gt, weight)
        total = total + weighted_iou(torch.sigmoid(logits), gt, weight)
    return total


def l1(pred: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    _check_same_shape(pred, target, "l1")
    return torch.mean(torch.abs(pred - target))


def ssim(pred: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    """
    Mean SSIM with an 11x11 Gaussian window (sigma 1.5) on dynamic range 1.

    Only positions where the window fits inside the image contribute.

    Raises:
        LossInputError: On a shape mismatch or an image smaller than the window
    """
    _check_same_shape(pred, target, "ssim")
    pred, target = _batched(pred), _batched(target)
    if min(pred.shape[-2:]) < SSIM_WINDOW:
        raise LossInputError(
            f"ssim needs images of at least {SSIM_WINDOW}x{SSIM_WINDOW}, "
            f"got {tuple(pred.shape[-2:])}"
        )
    return structural_similarity_index_measure(
        pred,
        target,
        gaussian_kernel=True,
        sigma=SSIM_SIGMA,
        kernel_size=SSIM_WINDOW,
        data_range=1.0,
        k1=0.01,
        k2=0.03,
    )


def recon_loss(pred: torch.Tensor, target: torch.Tensor, ssim_weight: float = 1.0) -> torch.Tensor:
    """Stage-1 reconstruction loss l1 + ssim_weight * (1 - ssim)."""
    return l1(pred, target) + ssim_weight * (1.0 - ssim(pred, target))


def contour_loss(predictions: Sequence[torch.Tensor], targets: Sequence[torch.Tensor]) -> torch.Tensor:
    """Sum over the five side-outs of l1 between contour probabilities and targets."""
    if len(predictions) != SIDE_OUTS or len(targets) != SIDE_OUTS:
        raise LossInputError(
            f"contour_loss needs {SIDE_OUTS} predictions and targets, "
            f"got {len(predictions)} and {len(targets)}"
        )
    total = predictions[0].new_zeros(())
    for prediction, target in zip(predictions, targets):
        total = total + l1(prediction, target)
    return total
