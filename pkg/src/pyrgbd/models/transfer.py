"""
Weight transfer between training stages and encoder freezing.

Policies:
    encoders  stage-1 auto-encoders -> SOD/contour model: the rgb2depth
              encoder initializes `rgb_encoder`, the depth2rgb encoder
              initializes `depth_encoder`
    all       stage-2 contour model -> downstream model: every entry whose
              name and shape match
    decoder   stage-2 contour model -> downstream model without the encoders

Every entry of the target is reported as loaded, shape-mismatched, or
reinitialized (kept at its current value); source entries with no target
counterpart are reported as unused.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Mapping, Protocol, Sequence, Tuple, Union

import torch
from torch import nn

from pyrgbd.models.sod import SodModel
from pyrgbd.utils import get_logger

logger = get_logger(__name__)

ENCODER_PREFIXES = ("rgb_encoder.", "depth_encoder.")
HEAD_PREFIX = "heads."


class TransferError(Exception):
    """Raised when weights cannot be transferred between the given stages or configs."""

    pass


class StageTag(str, Enum):
    STAGE1_RGB2DEPTH = "stage1_rgb2depth"
    STAGE1_DEPTH2RGB = "stage1_depth2rgb"
    STAGE2_CONTOUR = "stage2_contour"
    DOWNSTREAM_SOD = "downstream_sod"


class TransferPolicy(str, Enum):
    ENCODERS = "encoders"
    ALL = "all"
    DECODER = "decoder"


class StagedWeights(Protocol):
    """Anything carrying a stage tag and a parameter mapping (e.g. a Checkpoint)."""

    stage: StageTag
    parameters: Mapping[str, torch.Tensor]


COMPATIBLE_STAGES = {
    TransferPolicy.ENCODERS: {StageTag.STAGE1_RGB2DEPTH, StageTag.STAGE1_DEPTH2RGB},
    TransferPolicy.ALL: {StageTag.STAGE2_CONTOUR, StageTag.DOWNSTREAM_SOD},
    TransferPolicy.DECODER: {StageTag.STAGE2_CONTOUR, StageTag.DOWNSTREAM_SOD},
}

STAGE1_TARGETS = {
    StageTag.STAGE1_RGB2DEPTH: "rgb_encoder.",
    StageTag.STAGE1_DEPTH2RGB: "depth_encoder.",
}


@dataclass
class TransferReport:
    """Outcome of one transfer, entry names sorted."""

    policy: TransferPolicy
    loaded: List[str] = field(default_factory=list)
    reinitialized: List[str] = field(default_factory=list)
    mismatched: List[str] = field(default_factory=list)
    unused: List[str] = field(default_factory=list)
    loaded_parameters: int = 0

    def summary(self) -> str:
        return (
            f"{self.policy.value}: {len(self.loaded)} loaded, "
            f"{len(self.reinitialized)} reinitialized, {len(self.mismatched)} mismatched, "
            f"{len(self.unused)} unused"
        )

    def to_dict(self) -> Dict[str, object]:
        return {
            "policy": self.policy.value,
            "loaded": self.loaded,
            "reinitialized": self.reinitialized,
            "mismatched": self.mismatched,
            "unused": self.unused,
        }


def _candidates(
    sources: Sequence[StagedWeights], policy: TransferPolicy, reuse_heads: bool
) -> Dict[str, torch.Tensor]:
    """Source tensors renamed into the target's namespace and filtered by policy."""
    candidates: Dict[str, torch.Tensor] = {}
    for source in sources:
        stage = StageTag(source.stage)
        if stage not in COMPATIBLE_STAGES[policy]:
            raise TransferError(
                f"Policy '{policy.value}' cannot load a {stage.value} checkpoint; "
                f"expected one of {sorted(s.value for s in COMPATIBLE_STAGES[policy])}"
            )
        for name, tensor in source.parameters.items():
            if policy is TransferPolicy.ENCODERS:
                if not name.startswith("encoder."):
                    continue
                name = STAGE1_TARGETS[stage] + name[len("encoder."):]
            elif policy is TransferPolicy.DECODER and name.startswith(ENCODER_PREFIXES):
                continue
            if not reuse_heads and name.startswith(HEAD_PREFIX):
                continue
            candidates[name] = tensor
    return candidates


def transfer_weights(
    sources: Union[StagedWeights, Sequence[StagedWeights]],
    target: nn.Module,
    policy: Union[TransferPolicy, str],
    reuse_heads: bool = True,
) -> TransferReport:
    """
    Copy name- and shape-matching entries from source checkpoints into a model.

    Args:
        sources: One or more staged weight containers
        target: Model to initialize in place
        policy: Transfer policy
        reuse_heads: Transfer the side-out heads too

    Returns:
        TransferReport of the transfer

    Raises:
        TransferError: If a source stage does not fit the policy or no
            parameter (as opposed to buffer) matched
    """
    policy = TransferPolicy(policy)
    if not isinstance(sources, (list, tuple)):
        sources = [sources]

    candidates = _candidates(sources, policy, reuse_heads)
    state = target.state_dict()
    parameter_names = {name for name, _ in target.named_parameters()}

    report = TransferReport(policy=policy)
    merged = dict(state)
    for name, current in state.items():
        if name not in candidates:
            report.reinitialized.append(name)
        elif candidates[name].shape != current.shape:
            report.mismatched.append(name)
        else:
            merged[name] = candidates[name].detach().to(current.device, current.dtype).clone()
            report.loaded.append(name)
    report.unused = sorted(set(candidates) - set(state))
    report.loaded_parameters = sum(name in parameter_names for name in report.loaded)

    if report.loaded_parameters == 0:
        raise TransferError(
            f"No parameter of the target matched the source by name and shape "
            f"({len(report.mismatched)} shape mismatches); "
            f"the checkpoint was probably written with a different config"
        )

    target.load_state_dict(merged, strict=True)
    for names in (report.loaded, report.reinitialized, report.mismatched):
        names.sort()

    logger.info(f"Transferred weights ({report.summary()})")
    logger.debug(f"Reinitialized entries: {report.reinitialized}")
    if report.mismatched:
        logger.warning(f"Shape-mismatched entries left at initialization: {report.mismatched}")
    return report


def freeze_encoders(model: SodModel) -> SodModel:
    """
    Exclude both encoders from optimization.

    Encoder parameters stop requiring gradients and the encoders stay in eval
    mode, so their normalization statistics are fixed as well.
    """
    for parameter in model.encoder_parameters():
        parameter.requires_grad_(False)
    model.encoders_frozen = True
    model.train(model.training)
    frozen = sum(p.numel() for p in model.encoder_parameters())
    logger.info(f"Froze {frozen} encoder parameters")
    return model


def trainable_parameter_count(model: nn.Module) -> Tuple[int, int]:
    """(trainable, total) parameter counts."""
    total = sum(p.numel() for p in model.parameters())
    trainable = sum(p.numel() for p in model.parameters() if p.requires_grad)
    return trainable, total
