import math

import numpy as np
import pytest
import torch
import torch.nn.functional as F

from pyrgbd.pipeline.pyramid import contour_pyramid, gt_pyramid, side_out_sizes
from pyrgbd.training.losses import (
    LossInputError,
    contour_loss,
    l1,
    pixel_weight,
    recon_loss,
    sod_loss,
    ssim,
    weighted_bce,
    weighted_iou,
)

C1 = 0.01**2


def _random_gt(size=32, seed=0) -> torch.Tensor:
    generator = torch.Generator().manual_seed(seed)
    gt = torch.zeros(size, size)
    gt[size // 4 : 3 * size // 4, size // 4 : size // 2] = 1.0
    noise = torch.rand(size, size, generator=generator) > 0.95
    return torch.where(noise, 1.0 - gt, gt)


def _pyramid(gt: torch.Tensor):
    sizes = side_out_sizes(*gt.shape)
    return [torch.from_numpy(level)[None, None] for level in gt_pyramid(gt.numpy(), sizes)]


class TestPixelWeight:
    def test_constant_maps_have_unit_weight(self):
        for value in (0.0, 1.0):
            weight = pixel_weight(torch.full((20, 20), value))
            assert torch.allclose(weight, torch.ones(20, 20))

    def test_isolated_pixel(self):
        gt = torch.zeros(33, 33)
        gt[16, 16] = 1.0

        weight = pixel_weight(gt)

        assert weight[16, 16].item() == pytest.approx(1 + 5 * (1 - 1 / 961), rel=1e-6)

    def test_range(self):
        weight = pixel_weight(_random_gt())
        assert weight.min() >= 1.0 and weight.max() <= 6.0

    def test_rejects_non_binary_gt(self):
        with pytest.raises(LossInputError):
            pixel_weight(torch.full((4, 4), 0.5))


class TestWeightedBce:
    def test_perfect_prediction(self):
        gt = torch.ones(8, 8)
        assert weighted_bce(torch.full((8, 8), 50.0), gt) <= 1e-8

    def test_zero_logits_give_log_two(self):
        gt = torch.ones(8, 8)
        assert weighted_bce(torch.zeros(8, 8), gt).item() == pytest.approx(math.log(2))

    def test_unit_weight_equals_plain_bce(self):
        torch.manual_seed(0)
        logits, gt = torch.randn(8, 8), (torch.rand(8, 8) > 0.5).float()

        loss = weighted_bce(logits, gt, torch.ones(8, 8))

        assert loss.item() == pytest.approx(F.binary_cross_entropy_with_logits(logits, gt).item())

    def test_shape_mismatch(self):
        with pytest.raises(LossInputError):
            weighted_bce(torch.zeros(8, 8), torch.zeros(8, 9))


class TestWeightedIou:
    def test_perfect_binary_prediction_is_zero(self):
        gt = _random_gt()
        assert weighted_iou(gt.clone(), gt).item() == 0.0

    def test_empty_prediction(self):
        gt = torch.zeros(8, 8)
        gt[:3, :3] = 1.0

        loss = weighted_iou(torch.zeros(8, 8), gt, torch.ones(8, 8))

        assert loss.item() == pytest.approx(0.9)

    def test_both_empty_is_zero(self):
        assert weighted_iou(torch.zeros(8, 8), torch.zeros(8, 8)).item() == 0.0

    def test_rejects_out_of_range_probabilities(self):
        with pytest.raises(LossInputError):
            weighted_iou(torch.full((4, 4), 1.5), torch.zeros(4, 4))


class TestSodLoss:
    def test_perfect_prediction(self):
        targets = _pyramid(_random_gt())
        logits = [(t * 2 - 1) * 50.0 for t in targets]

        assert sod_loss(logits, targets).item() <= 1e-6

    def test_additivity(self):
        torch.manual_seed(1)
        targets = _pyramid(_random_gt())
        logits = [torch.randn_like(t) for t in targets]

        expected = sum(
            weighted_bce(x, t) + weighted_iou(torch.sigmoid(x), t) for x, t in zip(logits, targets)
        )

        assert sod_loss(logits, targets).item() == pytest.approx(expected.item(), rel=1e-6)

    def test_wrong_level_count(self):
        targets = _pyramid(_random_gt())
        with pytest.raises(LossInputError, match="5"):
            sod_loss(targets[:4], targets[:4])

    def test_decreases_toward_ground_truth(self):
        targets = _pyramid(_random_gt(seed=2))
        torch.manual_seed(2)
        starts = [torch.rand_like(t) for t in targets]
        values = []
        for t in np.linspace(0.0, 0.9, 10):
            probabilities = [(1 - t) * p0 + t * g for p0, g in zip(starts, targets)]
            logits = [torch.logit(p, eps=1e-6) for p in probabilities]
            values.append(sod_loss(logits, targets).item())

        assert all(a > b for a, b in zip(values, values[1:]))


class TestReconstruction:
    def test_l1_examples(self):
        a = torch.rand(8, 8)
        assert l1(a, a).item() == 0.0
        assert l1(torch.full((8, 8), 0.25), torch.zeros(8, 8)).item() == pytest.approx(0.25)
        b = torch.rand(8, 8)
        assert l1(a, b).item() == l1(b, a).item()

    def test_ssim_self_similarity_and_symmetry(self):
        torch.manual_seed(3)
        a, b = torch.rand(1, 1, 16, 16), torch.rand(1, 1, 16, 16)

        assert ssim(a, a).item() == pytest.approx(1.0, abs=1e-5)
        assert ssim(a, b).item() == pytest.approx(ssim(b, a).item(), abs=1e-6)

    def test_ssim_constant_images(self):
        value = ssim(torch.ones(1, 1, 16, 16), torch.zeros(1, 1, 16, 16)).item()
        assert value == pytest.approx(C1 / (1 + C1), rel=1e-3)

    def test_ssim_rejects_small_images(self):
        with pytest.raises(LossInputError):
            ssim(torch.rand(8, 8), torch.rand(8, 8))

    def test_recon_loss_examples(self):
        a = torch.rand(1, 3, 16, 16)
        assert recon_loss(a, a).item() == pytest.approx(0.0, abs=1e-5)
        constant = recon_loss(torch.ones(1, 1, 16, 16), torch.zeros(1, 1, 16, 16)).item()
        assert constant == pytest.approx(1 + (1 - C1 / (1 + C1)), rel=1e-4)

    def test_recon_loss_monotone_on_constants(self):
        target = torch.zeros(1, 1, 16, 16)
        values = [recon_loss(torch.full_like(target, e), target).item() for e in (0.1, 0.3, 0.6)]
        assert values[0] <= values[1] <= values[2]


class TestContourLoss:
    def test_perfect_and_zero_predictions(self):
        rng = np.random.default_rng(4)
        contour = rng.random((32, 32))
        targets = [
            torch.from_numpy(level)[None, None]
            for level in contour_pyramid(contour, side_out_sizes(32, 32))
        ]

        assert contour_loss(targets, targets).item() == 0.0
        zeros = [torch.zeros_like(t) for t in targets]
        expected = sum(t.mean().item() for t in targets)
        assert contour_loss(zeros, targets).item() == pytest.approx(expected, rel=1e-5)

    def test_decreases_toward_target(self):
        torch.manual_seed(5)
        targets = [torch.rand(1, 1, s, s) for s in (2, 4, 8, 16, 32)]
        starts = [torch.rand_like(t) for t in targets]
        values = [
            contour_loss([(1 - t) * p + t * c for p, c in zip(starts, targets)], targets).item()
            for t in np.linspace(0.0, 1.0, 6)
        ]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_wrong_level_count(self):
        with pytest.raises(LossInputError):
            contour_loss([torch.zeros(1, 1, 2, 2)] * 4, [torch.zeros(1, 1, 2, 2)] * 4)


@pytest.mark.parametrize("name", ["bce", "iou", "l1", "ssim", "recon"])
def test_gradients_match_finite_differences(name):
    """Loss gradients agree with central differences in float64 on 16x16 maps."""
    torch.manual_seed(6)
    gt = (torch.rand(1, 1, 16, 16, dtype=torch.float64) > 0.5).double()
    target = torch.rand(1, 1, 16, 16, dtype=torch.float64)
    x = (torch.rand(1, 1, 16, 16, dtype=torch.float64) * 0.8 + 0.1).requires_grad_(True)
    functions = {
        "bce": lambda p: weighted_bce(p, gt),
        "iou": lambda p: weighted_iou(p, gt),
        "l1": lambda p: l1(p, target),
        "ssim": lambda p: ssim(p, target),
        "recon": lambda p: recon_loss(p, target),
    }

    assert torch.autograd.gradcheck(functions[name], (x,), eps=1e-6, atol=1e-6, rtol=1e-4)
