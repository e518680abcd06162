"""
Training procedures of the three stages.

    run_stage1      cross-modal auto-encoders (rgb2depth, depth2rgb), trained
                    side by side on the same batches with separate optimizers;
                    reconstruction loss, poly schedule
    run_stage2      depth-contour estimation through the full SOD topology with
                    both encoders loaded from stage 1 and frozen; contour loss,
                    poly schedule
    run_downstream  saliency training of the full model, optionally initialized
                    from stage 1 (encoders) and stage 2 (everything else);
                    deeply supervised saliency loss, warm-up/linear-decay
                    schedule with separate backbone/other learning rates

Every procedure steps its schedule once per iteration and records a
TrainReport. When an output directory is given, checkpoints go to
`<stage tag>.pt` and reports to `<stage>_report.csv` / `.yml`; reports are
written even when training stops early.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import pandas as pd
import torch
import yaml
from sklearn.model_selection import train_test_split
from torch import nn
from torch.utils.data import DataLoader
from tqdm import tqdm

from pyrgbd.config.training import TrainConfig
from pyrgbd.core.dataset import RgbdDataset
from pyrgbd.core.fields import BatchFields, ReportFields
from pyrgbd.core.sample import RgbdSample
from pyrgbd.evaluation.evaluator import evaluate_model
from pyrgbd.evaluation.metrics import MetricReport
from pyrgbd.models.autoencoder import Direction, build_autoencoders
from pyrgbd.models.sod import SodModel
from pyrgbd.models.transfer import (
    StageTag,
    TransferPolicy,
    TransferReport,
    freeze_encoders,
    transfer_weights,
)
from pyrgbd.training.checkpoint import Checkpoint, save_checkpoint
from pyrgbd.training.losses import contour_loss, recon_loss, sod_loss
from pyrgbd.training.schedules import build_optimizer, build_scheduler
from pyrgbd.utils.logger import get_logger
from pyrgbd.utils.seeding import seed_everything

logger = get_logger(__name__)

PathLike = Union[str, Path]
Stage1Checkpoints = Union[Mapping[StageTag, Checkpoint], Sequence[Checkpoint]]

DIRECTION_TAGS = {
    Direction.RGB2DEPTH: StageTag.STAGE1_RGB2DEPTH,
    Direction.DEPTH2RGB: StageTag.STAGE1_DEPTH2RGB,
}


class TrainingError(Exception):
    """Raised when a training procedure cannot start or fails while running."""

    pass


@dataclass
class TrainReport:
    """Per-iteration loss and learning rates of one training run."""

    stage: str
    total_iterations: int = 0
    rows: List[Dict[str, float]] = field(default_factory=list)
    validation: Dict[str, float] = field(default_factory=dict)
    status: str = "pending"

    def record(self, iteration: int, loss: float, learning_rates: Dict[str, float], **extra: float) -> None:
        fields = ReportFields()
        row = {fields.ITERATION: iteration, fields.LOSS: loss}
        row.update(extra)
        row.update({f"{fields.LR_PREFIX}{name}": lr for name, lr in learning_rates.items()})
        self.rows.append(row)

    @property
    def losses(self) -> List[float]:
        return [row[ReportFields.LOSS] for row in self.rows]

    @property
    def iterations_done(self) -> int:
        return len(self.rows)

    @property
    def initial_loss(self) -> Optional[float]:
        return self.rows[0][ReportFields.LOSS] if self.rows else None

    @property
    def final_loss(self) -> Optional[float]:
        return self.rows[-1][ReportFields.LOSS] if self.rows else None

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows)

    def summary(self) -> Dict[str, Any]:
        return {
            "stage": self.stage,
            "status": self.status,
            "iterations_done": self.iterations_done,
            "total_iterations": self.total_iterations,
            "initial_loss": self.initial_loss,
            "final_loss": self.final_loss,
            "validation": dict(self.validation),
        }

    def save(self, out_dir: PathLike) -> Tuple[Path, Path]:
        """Write `<stage>_report.csv` (per iteration) and `<stage>_report.yml` (summary)."""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        csv_path = out_dir / f"{self.stage}_report.csv"
        yml_path = out_dir / f"{self.stage}_report.yml"
        self.to_frame().to_csv(csv_path, index=False)
        with open(yml_path, "w") as f:
            yaml.safe_dump(self.summary(), f, sort_keys=False)
        logger.debug(f"Wrote {self.stage} report to {csv_path}")
        return csv_path, yml_path


@dataclass
class TrainResult:
    """Outputs of one training procedure."""

    report: TrainReport
    checkpoints: Dict[StageTag, Checkpoint]
    models: Dict[StageTag, nn.Module]
    transfer: Optional[TransferReport] = None
    validation: Optional[MetricReport] = None

    @property
    def checkpoint(self) -> Checkpoint:
        """The single checkpoint of a stage-2 or downstream run."""
        if len(self.checkpoints) != 1:
            raise TrainingError(f"Run produced {len(self.checkpoints)} checkpoints, not one")
        return next(iter(self.checkpoints.values()))

    @property
    def model(self) -> nn.Module:
        if len(self.models) != 1:
            raise TrainingError(f"Run produced {len(self.models)} models, not one")
        return next(iter(self.models.values()))


def checkpoint_path(out_dir: PathLike, stage: Union[StageTag, str]) -> Path:
    return Path(out_dir) / f"{StageTag(stage).value}.pt"


def pretext_subset(samples: Sequence[RgbdSample], fraction: float) -> List[RgbdSample]:
    """Deterministic prefix (by sample id) holding `fraction` of the pretext pool."""
    if not 0.0 < fraction <= 1.0:
        raise TrainingError(f"pretrain_fraction must lie in (0, 1], got {fraction}")
    ordered = sorted(samples, key=lambda s: s.id)
    count = max(1, int(round(fraction * len(ordered))))
    return ordered[:count]


# Loop plumbing


def _make_loader(dataset: RgbdDataset, config: TrainConfig, generator: torch.Generator) -> DataLoader:
    return DataLoader(
        dataset,
        batch_size=config.batch_size,
        shuffle=True,
        drop_last=False,
        num_workers=config.num_workers,
        generator=generator,
    )


def _batches(loader: DataLoader, dataset: RgbdDataset, total: int) -> Iterator[Tuple[int, Dict[str, Any]]]:
    """(iteration, batch) pairs over as many epochs as the budget needs."""
    iteration, epoch = 0, 0
    while iteration < total:
        dataset.set_epoch(epoch)
        for batch in loader:
            if iteration >= total:
                return
            yield iteration, batch
            iteration += 1
        epoch += 1


def _learning_rates(optimizer: torch.optim.Optimizer, prefix: str = "") -> Dict[str, float]:
    return {f"{prefix}{group['name']}": group["lr"] for group in optimizer.param_groups}


def _run_loop(
    report: TrainReport,
    loader: DataLoader,
    dataset: RgbdDataset,
    step: Callable[[Dict[str, Any]], Tuple[float, Dict[str, float], Dict[str, float]]],
    config: TrainConfig,
    out_dir: Optional[PathLike],
) -> None:
    """
    Drive `step` over the iteration budget.

    `step` returns (loss, learning rates used, extra columns). The report is
    saved in every case; failures are re-raised as TrainingError.
    """
    progress = tqdm(total=report.total_iterations, desc=report.stage, leave=False)
    report.status = "running"
    logger.info(f"Starting {report.stage}: {report.total_iterations} iterations on {len(dataset)} samples")
    try:
        for iteration, batch in _batches(loader, dataset, report.total_iterations):
            loss, learning_rates, extra = step(batch)
            report.record(iteration, loss, learning_rates, **extra)
            if iteration % config.log_every == 0 or iteration == report.total_iterations - 1:
                rates = ", ".join(f"{k}={v:.3g}" for k, v in learning_rates.items())
                logger.info(f"{report.stage} iter {iteration}: loss={loss:.4f} ({rates})")
            progress.update(1)
        report.status = "completed"
    except KeyboardInterrupt:
        report.status = "interrupted"
        logger.warning(f"{report.stage} interrupted after {report.iterations_done} iterations")
        raise
    except Exception as e:
        report.status = "failed"
        error_msg = f"{report.stage} failed at iteration {report.iterations_done}: {e}"
        logger.error(error_msg)
        raise TrainingError(error_msg) from e
    finally:
        progress.close()
        if out_dir is not None:
            report.save(out_dir)


def _to_device(batch: Dict[str, Any], key: str, device: torch.device):
    value = batch[key]
    if isinstance(value, list):
        return [v.to(device) for v in value]
    return value.to(device)


def _require_samples(samples: Sequence[RgbdSample], stage: str) -> None:
    if not samples:
        error_msg = f"{stage} needs a non-empty dataset"
        logger.error(error_msg)
        raise TrainingError(error_msg)


def _check_fingerprint(checkpoint: Checkpoint, expected: str) -> None:
    if checkpoint.fingerprint != expected:
        raise TrainingError(
            f"{checkpoint.stage.value} checkpoint has fingerprint {checkpoint.fingerprint}, "
            f"this config needs {expected}; it was written with a different architecture"
        )


def _stage1_by_tag(stage1: Optional[Stage1Checkpoints]) -> Dict[StageTag, Checkpoint]:
    if stage1 is None:
        return {}
    checkpoints = stage1.values() if isinstance(stage1, Mapping) else stage1
    by_tag = {StageTag(c.stage): c for c in checkpoints}
    for tag in DIRECTION_TAGS.values():
        if tag not in by_tag:
            raise TrainingError(f"Missing {tag.value} checkpoint")
    return by_tag


def _save(checkpoint: Checkpoint, out_dir: Optional[PathLike]) -> None:
    if out_dir is not None:
        save_checkpoint(checkpoint, checkpoint_path(out_dir, checkpoint.stage))


# Stage 1


def run_stage1(
    samples: Sequence[RgbdSample], config: TrainConfig, out_dir: Optional[PathLike] = None
) -> TrainResult:
    """
    Train both cross-modal auto-encoders from random initialization.

    The pretext pool is reduced to `config.pretrain_fraction` first. Both
    networks see the same batches but share no parameters or optimizer
    state. Report columns: loss (mean of both directions), loss_<direction>
    and lr_<direction>.

    Raises:
        TrainingError: On an empty dataset or a failure during training
    """
    _require_samples(samples, "stage1")
    samples = pretext_subset(samples, config.pretrain_fraction)
    generator = seed_everything(config.seed, config.deterministic)
    device = config.resolve_device()
    fields = BatchFields()

    backbone = config.backbone()
    networks = {d: m.to(device).train() for d, m in build_autoencoders(backbone).items()}
    schedule = config.schedule_spec("pretext", config.total_iterations(len(samples)))
    optim = config.optim_spec("pretext")
    runs = {}
    for direction, network in networks.items():
        optimizer = build_optimizer([(direction.value, network.parameters(), optim.lr_other)], optim)
        runs[direction] = (network, optimizer, build_scheduler(optimizer, schedule))

    dataset = RgbdDataset(samples, config.augment_spec(), targets=None)
    loader = _make_loader(dataset, config, generator)
    report = TrainReport(stage="stage1", total_iterations=schedule.total_iters)

    def step(batch):
        rgb = _to_device(batch, fields.RGB, device)
        depth = _to_device(batch, fields.DEPTH, device)
        losses, rates = {}, {}
        for direction, (network, optimizer, scheduler) in runs.items():
            source, target = (rgb, depth) if direction is Direction.RGB2DEPTH else (depth, rgb)
            rates.update(_learning_rates(optimizer))
            optimizer.zero_grad(set_to_none=True)
            loss = recon_loss(network(source), target, config.recon_ssim_weight)
            loss.backward()
            optimizer.step()
            scheduler.step()
            losses[f"loss_{direction.value}"] = loss.item()
        return sum(losses.values()) / len(losses), rates, losses

    _run_loop(report, loader, dataset, step, config, out_dir)

    checkpoints, models = {}, {}
    for direction, (network, optimizer, _) in runs.items():
        tag = DIRECTION_TAGS[direction]
        checkpoints[tag] = Checkpoint.from_model(
            network,
            tag,
            config.fingerprint(include_fusion=False),
            iteration=report.iterations_done,
            optimizer=optimizer,
            config=config.to_dict(),
        )
        models[tag] = network
        _save(checkpoints[tag], out_dir)

    logger.info(f"Finished stage1: loss {report.initial_loss} -> {report.final_loss}")
    return TrainResult(report=report, checkpoints=checkpoints, models=models)


# Stage 2


def run_stage2(
    samples: Sequence[RgbdSample],
    config: TrainConfig,
    stage1: Optional[Stage1Checkpoints] = None,
    out_dir: Optional[PathLike] = None,
    from_scratch: bool = False,
) -> TrainResult:
    """
    Train the depth-contour pretext task with frozen stage-1 encoders.

    Args:
        samples: Pretext pool (gt unused)
        config: Training configuration; its ablation flags shape the fusion sites
        stage1: Both stage-1 checkpoints
        out_dir: Output directory for checkpoint and report
        from_scratch: Allow training without stage-1 checkpoints (random,
            still frozen, encoders)

    Raises:
        TrainingError: On an empty dataset, missing or incompatible stage-1
            checkpoints, or a failure during training
    """
    _require_samples(samples, "stage2")
    if stage1 is None and not from_scratch:
        error_msg = (
            f"stage2 requires {StageTag.STAGE1_RGB2DEPTH.value} and "
            f"{StageTag.STAGE1_DEPTH2RGB.value} checkpoints (or from_scratch)"
        )
        logger.error(error_msg)
        raise TrainingError(error_msg)

    samples = pretext_subset(samples, config.pretrain_fraction)
    generator = seed_everything(config.seed, config.deterministic)
    device = config.resolve_device()
    fields = BatchFields()

    model = SodModel(config.backbone(), config.ablation_config())
    transfer = None
    by_tag = _stage1_by_tag(stage1)
    if by_tag:
        expected = config.fingerprint(include_fusion=False)
        for checkpoint in by_tag.values():
            _check_fingerprint(checkpoint, expected)
        transfer = transfer_weights(list(by_tag.values()), model, TransferPolicy.ENCODERS)
    freeze_encoders(model)
    model.to(device).train()

    schedule = config.schedule_spec("pretext", config.total_iterations(len(samples)))
    optim = config.optim_spec("pretext")
    optimizer = build_optimizer([("decoder", model.non_encoder_parameters(), optim.lr_other)], optim)
    scheduler = build_scheduler(optimizer, schedule)

    dataset = RgbdDataset(
        samples, config.augment_spec(), targets="contour", contour_m=config.contour_m
    )
    loader = _make_loader(dataset, config, generator)
    report = TrainReport(stage="stage2", total_iterations=schedule.total_iters)

    def step(batch):
        rgb = _to_device(batch, fields.RGB, device)
        depth = _to_device(batch, fields.DEPTH, device)
        targets = _to_device(batch, fields.CONTOUR_PYRAMID, device)
        rates = _learning_rates(optimizer)
        optimizer.zero_grad(set_to_none=True)
        loss = contour_loss(model.forward_contour(rgb, depth), targets)
        loss.backward()
        optimizer.step()
        scheduler.step()
        return loss.item(), rates, {}

    _run_loop(report, loader, dataset, step, config, out_dir)

    checkpoint = Checkpoint.from_model(
        model,
        StageTag.STAGE2_CONTOUR,
        config.fingerprint(),
        iteration=report.iterations_done,
        optimizer=optimizer,
        config=config.to_dict(),
    )
    _save(checkpoint, out_dir)
    logger.info(f"Finished stage2: loss {report.initial_loss} -> {report.final_loss}")
    return TrainResult(
        report=report,
        checkpoints={StageTag.STAGE2_CONTOUR: checkpoint},
        models={StageTag.STAGE2_CONTOUR: model},
        transfer=transfer,
    )


# Downstream


def initialize_downstream(
    model: SodModel,
    config: TrainConfig,
    stage1: Optional[Stage1Checkpoints] = None,
    stage2: Optional[Checkpoint] = None,
) -> Optional[TransferReport]:
    """
    Apply the configured pretext initialization to a downstream model.

    init_p2 loads the stage-2 checkpoint (policy 'all' when init_p1 is also
    set, since stage-2 encoders are the frozen stage-1 ones, else 'decoder');
    init_p1 alone loads both stage-1 encoders. Without either flag the model
    keeps its random initialization.

    Raises:
        TrainingError: If a required checkpoint is missing or was written for
            a different architecture
    """
    ablation = config.ablation_config()
    if ablation.init_p2:
        if stage2 is None:
            raise TrainingError(
                f"Ablation {ablation.name} initializes from a "
                f"{StageTag.STAGE2_CONTOUR.value} checkpoint, none given"
            )
        _check_fingerprint(stage2, config.fingerprint())
        policy = TransferPolicy.ALL if ablation.init_p1 else TransferPolicy.DECODER
        return transfer_weights(stage2, model, policy, reuse_heads=config.reuse_contour_heads)

    if ablation.init_p1:
        if stage1 is None:
            raise TrainingError(
                f"Ablation {ablation.name} initializes from "
                f"{StageTag.STAGE1_RGB2DEPTH.value}/{StageTag.STAGE1_DEPTH2RGB.value} "
                f"checkpoints, none given"
            )
        by_tag = _stage1_by_tag(stage1)
        for checkpoint in by_tag.values():
            _check_fingerprint(checkpoint, config.fingerprint(include_fusion=False))
        return transfer_weights(list(by_tag.values()), model, TransferPolicy.ENCODERS)

    if stage1 is not None or stage2 is not None:
        logger.warning(f"Ablation {ablation.name} uses random init; given checkpoints are ignored")
    return None


def split_validation(
    samples: Sequence[RgbdSample], config: TrainConfig
) -> Tuple[List[RgbdSample], List[RgbdSample]]:
    """Deterministic train/validation split by config.val_fraction and seed."""
    ordered = sorted(samples, key=lambda s: s.id)
    if config.val_fraction <= 0 or len(ordered) < 2:
        return ordered, []
    n_val = max(1, int(round(config.val_fraction * len(ordered))))
    if n_val >= len(ordered):
        n_val = len(ordered) - 1
    train, val = train_test_split(ordered, test_size=n_val, random_state=config.seed, shuffle=True)
    return list(train), list(val)


def run_downstream(
    samples: Sequence[RgbdSample],
    config: TrainConfig,
    stage1: Optional[Stage1Checkpoints] = None,
    stage2: Optional[Checkpoint] = None,
    out_dir: Optional[PathLike] = None,
    val_samples: Optional[Sequence[RgbdSample]] = None,
) -> TrainResult:
    """
    Train the saliency model, honoring the configured ablation flags.

    Args:
        samples: Training pool with ground truth
        config: Training configuration
        stage1: Stage-1 checkpoints (needed for init_p1 without init_p2)
        stage2: Stage-2 checkpoint (needed for init_p2)
        out_dir: Output directory for checkpoint and report
        val_samples: Held-out samples; when None, config.val_fraction of
            `samples` is held out

    Returns:
        TrainResult whose report carries validation scores (val_mae, ...)

    Raises:
        TrainingError: On missing gt, missing or incompatible initialization
            checkpoints, or a failure during training
    """
    _require_samples(samples, "downstream")
    missing = [s.id for s in samples if not s.has_gt]
    if missing:
        error_msg = f"downstream training needs gt; missing for {missing[:5]}"
        logger.error(error_msg)
        raise TrainingError(error_msg)

    if val_samples is None:
        train_samples, val_samples = split_validation(samples, config)
    else:
        train_samples, val_samples = list(samples), list(val_samples)

    generator = seed_everything(config.seed, config.deterministic)
    device = config.resolve_device()
    fields = BatchFields()

    model = SodModel(config.backbone(), config.ablation_config())
    transfer = initialize_downstream(model, config, stage1, stage2)
    model.to(device).train()

    schedule = config.schedule_spec("downstream", config.total_iterations(len(train_samples)))
    optim = config.optim_spec("downstream")
    optimizer = build_optimizer(
        [
            ("backbone", model.encoder_parameters(), optim.lr_backbone),
            ("other", model.non_encoder_parameters(), optim.lr_other),
        ],
        optim,
    )
    scheduler = build_scheduler(optimizer, schedule)

    dataset = RgbdDataset(train_samples, config.augment_spec(), targets="gt")
    loader = _make_loader(dataset, config, generator)
    report = TrainReport(stage="downstream", total_iterations=schedule.total_iters)

    def step(batch):
        rgb = _to_device(batch, fields.RGB, device)
        depth = _to_device(batch, fields.DEPTH, device)
        targets = _to_device(batch, fields.GT_PYRAMID, device)
        rates = _learning_rates(optimizer)
        optimizer.zero_grad(set_to_none=True)
        loss = sod_loss(model(rgb, depth).side_outs, targets)
        loss.backward()
        optimizer.step()
        scheduler.step()
        return loss.item(), rates, {}

    _run_loop(report, loader, dataset, step, config, out_dir)

    validation = None
    if val_samples:
        validation, _ = evaluate_model(
            model, val_samples, "validation", device, batch_size=config.batch_size
        )
        report.validation = {
            ReportFields.VAL_MAE: validation.mae,
            "val_max_f": validation.max_f,
            "val_s_measure": validation.s_measure,
        }
        if out_dir is not None:
            report.save(out_dir)

    checkpoint = Checkpoint.from_model(
        model,
        StageTag.DOWNSTREAM_SOD,
        config.fingerprint(),
        iteration=report.iterations_done,
        optimizer=optimizer,
        config=config.to_dict(),
    )
    _save(checkpoint, out_dir)
    logger.info(
        f"Finished downstream: loss {report.initial_loss} -> {report.final_loss}"
        + (f", val MAE {validation.mae:.4f}" if validation else "")
    )
    return TrainResult(
        report=report,
        checkpoints={StageTag.DOWNSTREAM_SOD: checkpoint},
        models={StageTag.DOWNSTREAM_SOD: model},
        transfer=transfer,
        validation=validation,
    )
