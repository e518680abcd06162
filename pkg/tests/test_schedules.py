import pytest
import torch
from torch import nn

from pyrgbd.config.specs import OptimSpec, ScheduleSpec
from pyrgbd.training.schedules import (
    ScheduleError,
    build_optimizer,
    build_scheduler,
    poly_lr,
    warmup_linear_lr,
)


class TestPoly:
    def test_endpoints_and_midpoint(self):
        assert poly_lr(0.001, 0, 100) == 0.001
        assert poly_lr(0.001, 100, 100) == 0.0
        assert poly_lr(0.001, 50, 100) == pytest.approx(5.3589e-4, rel=1e-4)

    def test_monotone_non_increasing(self):
        rates = [poly_lr(0.01, i, 37) for i in range(38)]
        assert all(a >= b for a, b in zip(rates, rates[1:]))

    def test_rejects_iterations_past_the_end(self):
        with pytest.raises(ScheduleError):
            poly_lr(0.001, 101, 100)
        with pytest.raises(ScheduleError):
            poly_lr(0.001, -1, 100)


class TestWarmupLinear:
    def test_examples(self):
        assert warmup_linear_lr(0.05, 0, 1000) == 0.0
        assert warmup_linear_lr(0.05, 100, 1000) == pytest.approx(0.05)
        assert warmup_linear_lr(0.05, 550, 1000) == pytest.approx(0.025)
        assert warmup_linear_lr(0.05, 1000, 1000) == 0.0

    def test_unimodal_with_peak_at_boundary(self):
        rates = [warmup_linear_lr(1.0, i, 200, 0.25) for i in range(201)]
        peak = rates.index(max(rates))

        assert peak == 50
        assert all(a <= b for a, b in zip(rates[:peak], rates[1 : peak + 1]))
        assert all(a >= b for a, b in zip(rates[peak:], rates[peak + 1 :]))

    @pytest.mark.parametrize("fraction", [0.0, 1.0, -0.1, 1.5])
    def test_rejects_fraction_outside_open_interval(self, fraction):
        with pytest.raises(ScheduleError):
            warmup_linear_lr(0.05, 0, 100, fraction)


def _model():
    torch.manual_seed(0)
    return nn.Sequential(nn.Conv2d(1, 2, 3), nn.Conv2d(2, 1, 1))


def test_optimizer_groups_carry_names_and_rates():
    model = _model()
    spec = OptimSpec(decay_biases=False)

    optimizer = build_optimizer(
        [("backbone", model[0].parameters(), 0.005), ("other", model[1].parameters(), 0.05)], spec
    )

    groups = {group["name"]: group for group in optimizer.param_groups}
    assert set(groups) == {"backbone", "backbone_no_decay", "other", "other_no_decay"}
    assert groups["backbone"]["lr"] == 0.005
    assert groups["other"]["weight_decay"] == spec.weight_decay
    assert groups["other_no_decay"]["weight_decay"] == 0.0
    assert optimizer.defaults["momentum"] == 0.9


def test_frozen_parameters_are_skipped():
    model = _model()
    for parameter in model[0].parameters():
        parameter.requires_grad_(False)

    optimizer = build_optimizer([("all", model.parameters(), 0.01)], OptimSpec())

    assert sum(len(g["params"]) for g in optimizer.param_groups) == 2
    with pytest.raises(ValueError):
        build_optimizer([("none", model[0].parameters(), 0.01)], OptimSpec())


def test_scheduler_reaches_zero_per_group():
    model = _model()
    optimizer = build_optimizer(
        [("a", model[0].parameters(), 0.005), ("b", model[1].parameters(), 0.05)], OptimSpec()
    )
    scheduler = build_scheduler(optimizer, ScheduleSpec(kind="warmup_linear", total_iters=10))

    rates = []
    for _ in range(10):
        rates.append([group["lr"] for group in optimizer.param_groups])
        optimizer.step()
        scheduler.step()

    assert rates[0] == [0.0, 0.0]
    assert rates[1] == pytest.approx([0.005, 0.05])
    assert [group["lr"] for group in optimizer.param_groups] == [0.0, 0.0]


def test_zero_gradient_without_decay_changes_nothing():
    model = _model()
    before = [p.detach().clone() for p in model.parameters()]
    optimizer = build_optimizer([("all", model.parameters(), 0.1)], OptimSpec(weight_decay=0.0))

    for _ in range(3):
        for parameter in model.parameters():
            parameter.grad = torch.zeros_like(parameter)
        optimizer.step()

    for parameter, original in zip(model.parameters(), before):
        assert torch.equal(parameter, original)
