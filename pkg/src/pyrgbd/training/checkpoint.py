"""
Versioned checkpoint files.

A checkpoint is a torch-serialized mapping with the entries

    format_version  int, currently 1
    stage           stage tag (see StageTag)
    fingerprint     TrainConfig.fingerprint() of the run that wrote it
    iteration       iterations completed
    parameters      model state dict (parameters and buffers)
    optimizer       optimizer state dict, or None
    rng             {'torch': torch RNG state}, or None
    config          flat config echo, or None

Files are written to a temporary sibling and renamed into place, so a crash
never leaves a half-written checkpoint under the final name. Loading uses
`weights_only=True`.
"""

import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import torch
from torch import nn

from pyrgbd.models.transfer import StageTag
from pyrgbd.utils.logger import get_logger

logger = get_logger(__name__)

FORMAT_VERSION = 1
REQUIRED_FIELDS = ("format_version", "stage", "fingerprint", "iteration", "parameters")


class CheckpointError(Exception):
    """Raised when a checkpoint is corrupt, incompatible, or cannot be written."""

    pass


@dataclass
class Checkpoint:
    """In-memory checkpoint; `parameters` holds CPU copies of the state dict."""

    stage: StageTag
    fingerprint: str
    parameters: Dict[str, torch.Tensor]
    iteration: int = 0
    optimizer: Optional[Dict[str, Any]] = None
    rng: Optional[Dict[str, torch.Tensor]] = None
    config: Optional[Dict[str, Any]] = None
    format_version: int = FORMAT_VERSION

    @classmethod
    def from_model(
        cls,
        model: nn.Module,
        stage: Union[StageTag, str],
        fingerprint: str,
        iteration: int = 0,
        optimizer: Optional[torch.optim.Optimizer] = None,
        config: Optional[Dict[str, Any]] = None,
        include_rng: bool = True,
    ) -> "Checkpoint":
        """Snapshot a model (and optionally its optimizer) into a checkpoint."""
        return cls(
            stage=StageTag(stage),
            fingerprint=fingerprint,
            parameters={
                name: tensor.detach().cpu().clone()
                for name, tensor in model.state_dict().items()
            },
            iteration=int(iteration),
            optimizer=None if optimizer is None else optimizer.state_dict(),
            rng={"torch": torch.get_rng_state()} if include_rng else None,
            config=config,
        )

    def to_payload(self) -> Dict[str, Any]:
        return {
            "format_version": self.format_version,
            "stage": StageTag(self.stage).value,
            "fingerprint": self.fingerprint,
            "iteration": self.iteration,
            "parameters": self.parameters,
            "optimizer": self.optimizer,
            "rng": self.rng,
            "config": self.config,
        }

    @classmethod
    def from_payload(cls, payload: Any, source: str = "<memory>") -> "Checkpoint":
        """
        Rebuild a checkpoint from a loaded mapping.

        Raises:
            CheckpointError: Naming the first missing or malformed field
        """
        if not isinstance(payload, dict):
            raise CheckpointError(f"{source}: checkpoint is not a mapping")
        for name in REQUIRED_FIELDS:
            if name not in payload:
                raise CheckpointError(f"{source}: checkpoint field '{name}' is missing")

        if payload["format_version"] != FORMAT_VERSION:
            raise CheckpointError(
                f"{source}: field 'format_version' is {payload['format_version']!r}, "
                f"expected {FORMAT_VERSION}"
            )
        try:
            stage = StageTag(payload["stage"])
        except ValueError as e:
            raise CheckpointError(
                f"{source}: field 'stage' holds unknown tag {payload['stage']!r}"
            ) from e
        parameters = payload["parameters"]
        if not isinstance(parameters, dict) or not all(
            isinstance(t, torch.Tensor) for t in parameters.values()
        ):
            raise CheckpointError(f"{source}: field 'parameters' is not a tensor mapping")

        return cls(
            stage=stage,
            fingerprint=str(payload["fingerprint"]),
            parameters=parameters,
            iteration=int(payload["iteration"]),
            optimizer=payload.get("optimizer"),
            rng=payload.get("rng"),
            config=payload.get("config"),
        )

    def __repr__(self) -> str:
        return (
            f"Checkpoint(stage={StageTag(self.stage).value}, fingerprint={self.fingerprint}, "
            f"iteration={self.iteration}, entries={len(self.parameters)})"
        )


@dataclass
class LoadReport:
    """Entries restored by a forced load, and the ones left untouched."""

    loaded: List[str] = field(default_factory=list)
    mismatched: List[str] = field(default_factory=list)
    missing: List[str] = field(default_factory=list)
    unexpected: List[str] = field(default_factory=list)
    forced: bool = False

    @property
    def complete(self) -> bool:
        return not (self.mismatched or self.missing or self.unexpected)


def save_checkpoint(checkpoint: Checkpoint, path: Union[str, Path]) -> Path:
    """
    Atomically write a checkpoint file.

    Raises:
        CheckpointError: If the file cannot be written
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    handle, temp_name = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    os.close(handle)
    try:
        torch.save(checkpoint.to_payload(), temp_name)
        os.replace(temp_name, path)
    except (OSError, RuntimeError) as e:
        Path(temp_name).unlink(missing_ok=True)
        raise CheckpointError(f"Cannot write checkpoint {path}: {e}") from e

    logger.info(f"Saved {checkpoint} to {path}")
    return path


def read_checkpoint(path: Union[str, Path]) -> Checkpoint:
    """
    Read a checkpoint file without applying it to a model.

    Raises:
        CheckpointError: If the file is missing, truncated, or lacks a field
    """
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"Checkpoint file not found: {path}")
    try:
        payload = torch.load(path, map_location="cpu", weights_only=True)
    except Exception as e:
        raise CheckpointError(f"{path}: corrupt checkpoint container ({e})") from e
    return Checkpoint.from_payload(payload, source=str(path))


def _forced_load(model: nn.Module, checkpoint: Checkpoint) -> LoadReport:
    state = model.state_dict()
    report = LoadReport(forced=True)
    merged = dict(state)
    for name, current in state.items():
        source = checkpoint.parameters.get(name)
        if source is None:
            report.missing.append(name)
        elif source.shape != current.shape:
            report.mismatched.append(name)
        else:
            merged[name] = source.to(current.device, current.dtype)
            report.loaded.append(name)
    report.unexpected = sorted(set(checkpoint.parameters) - set(state))
    model.load_state_dict(merged, strict=True)
    return report


def load_checkpoint(
    path: Union[str, Path],
    model: Optional[nn.Module] = None,
    fingerprint: Optional[str] = None,
    stage: Optional[Union[StageTag, str]] = None,
    force: bool = False,
) -> Tuple[Checkpoint, Optional[LoadReport]]:
    """
    Read a checkpoint, verify it, and optionally restore it into a model.

    Args:
        path: Checkpoint file
        model: Model to restore into (None only reads and verifies)
        fingerprint: Expected config fingerprint (None skips the check)
        stage: Expected stage tag (None skips the check)
        force: On fingerprint mismatch, restore name- and shape-matching
            entries instead of failing

    Returns:
        (checkpoint, load report); the report is None when no model is given

    Raises:
        CheckpointError: On a corrupt file, a stage mismatch, a fingerprint
            mismatch without force, or state-dict keys that do not fit the model
    """
    checkpoint = read_checkpoint(path)

    if stage is not None and checkpoint.stage != StageTag(stage):
        raise CheckpointError(
            f"{path}: expected a {StageTag(stage).value} checkpoint, "
            f"found {checkpoint.stage.value}"
        )

    mismatch = fingerprint is not None and checkpoint.fingerprint != fingerprint
    if mismatch and not force:
        raise CheckpointError(
            f"{path}: config fingerprint {checkpoint.fingerprint} does not match "
            f"{fingerprint}; pass force to load matching entries only"
        )

    if model is None:
        return checkpoint, None

    if mismatch:
        report = _forced_load(model, checkpoint)
        logger.warning(
            f"Forced load of {path}: {len(report.loaded)} loaded, "
            f"{len(report.mismatched)} mismatched, {len(report.missing)} missing, "
            f"{len(report.unexpected)} unexpected"
        )
        return checkpoint, report

    try:
        model.load_state_dict(checkpoint.parameters, strict=True)
    except RuntimeError as e:
        raise CheckpointError(f"{path}: parameters do not fit the model ({e})") from e

    logger.info(f"Loaded {checkpoint} from {path}")
    return checkpoint, LoadReport(loaded=sorted(checkpoint.parameters))
