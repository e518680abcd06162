"""
Per-iteration learning-rate schedules and SGD optimizer construction.

Both schedules are multiplicative factors applied through LambdaLR, so each
parameter group decays from its own maximum rate.
"""

from typing import Callable, Iterable, List, Sequence, Tuple

import torch
from torch import nn
from torch.optim.lr_scheduler import LambdaLR

from pyrgbd.config.specs import OptimSpec, ScheduleSpec


class ScheduleError(ValueError):
    """Raised when a schedule is evaluated outside its domain."""

    pass


def poly_lr(base: float, iteration: int, max_iter: int, power: float = 0.9) -> float:
    """
    base * (1 - iteration / max_iter) ** power.

    Raises:
        ScheduleError: If iteration lies outside [0, max_iter]
    """
    if iteration < 0 or iteration > max_iter:
        raise ScheduleError(f"iteration {iteration} outside [0, {max_iter}]")
    if max_iter == 0:
        return base
    return base * (1.0 - iteration / max_iter) ** power


def warmup_linear_lr(
    max_rate: float, iteration: int, total: int, warmup_frac: float = 0.1
) -> float:
    """
    Linear warm-up from 0 to max_rate over warmup_frac * total iterations,
    then linear decay to 0 at total.

    Raises:
        ScheduleError: If warmup_frac is not in (0, 1) or iteration is outside [0, total]
    """
    if not 0.0 < warmup_frac < 1.0:
        raise ScheduleError(f"warmup_frac must lie in (0, 1), got {warmup_frac}")
    if iteration < 0 or iteration > total:
        raise ScheduleError(f"iteration {iteration} outside [0, {total}]")
    if total == 0:
        return max_rate
    boundary = warmup_frac * total
    if iteration <= boundary:
        return max_rate * iteration / boundary
    return max_rate * (total - iteration) / (total - boundary)


def schedule_factor(spec: ScheduleSpec) -> Callable[[int], float]:
    """Multiplier of the maximum rate as a function of the iteration."""
    total = spec.total_iters

    def factor(iteration: int) -> float:
        iteration = min(iteration, total)
        if spec.kind == "poly":
            return poly_lr(1.0, iteration, total, spec.power)
        return warmup_linear_lr(1.0, iteration, total, spec.warmup_frac)

    return factor


def _split_decay(
    parameters: Iterable[nn.Parameter], decay_biases: bool
) -> Tuple[List[nn.Parameter], List[nn.Parameter]]:
    decay, no_decay = [], []
    for parameter in parameters:
        if not parameter.requires_grad:
            continue
        if not decay_biases and parameter.dim() <= 1:
            no_decay.append(parameter)
        else:
            decay.append(parameter)
    return decay, no_decay


def build_optimizer(
    groups: Sequence[Tuple[str, Iterable[nn.Parameter], float]], spec: OptimSpec
) -> torch.optim.SGD:
    """
    SGD over named parameter groups.

    Args:
        groups: (name, parameters, max learning rate) triples; frozen
            parameters are skipped
        spec: Momentum, weight decay and bias handling

    Returns:
        SGD optimizer whose param groups carry a 'name' entry
    """
    param_groups = []
    for name, parameters, lr in groups:
        decay, no_decay = _split_decay(parameters, spec.decay_biases)
        if decay:
            param_groups.append(
                {"name": name, "params": decay, "lr": lr, "weight_decay": spec.weight_decay}
            )
        if no_decay:
            param_groups.append(
                {"name": f"{name}_no_decay", "params": no_decay, "lr": lr, "weight_decay": 0.0}
            )
    if not param_groups:
        raise ValueError("No trainable parameters to optimize")
    return torch.optim.SGD(param_groups, lr=param_groups[0]["lr"], momentum=spec.momentum)


def build_scheduler(optimizer: torch.optim.Optimizer, spec: ScheduleSpec) -> LambdaLR:
    """LambdaLR stepping once per iteration with the schedule factor for every group."""
    return LambdaLR(optimizer, lr_lambda=schedule_factor(spec))
