"""
Ablation harness: trains every row of an ablation table under one budget.

Pretext checkpoints are shared between rows. Stage 1 runs once per
pretraining fraction; stage 2 runs once per (fraction, fusion structure),
because its parameter layout follows the row's fusion flags.
"""

from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import pandas as pd
import torch

from pyrgbd.config.ablation import AblationTableConfig
from pyrgbd.config.specs import AblationConfig
from pyrgbd.config.training import TrainConfig
from pyrgbd.core.sample import RgbdSample
from pyrgbd.models.sod import SodModel
from pyrgbd.models.transfer import StageTag
from pyrgbd.training.checkpoint import Checkpoint
from pyrgbd.training.trainer import TrainingError, run_downstream, run_stage1, run_stage2
from pyrgbd.utils.logger import get_logger

logger = get_logger(__name__)

PathLike = Union[str, Path]


def row_config(base: TrainConfig, row: AblationConfig) -> TrainConfig:
    """The base config with a table row's flags applied."""
    values = base.to_dict()
    values[TrainConfig.Keys.ABLATION] = row.name
    return TrainConfig.from_dict(values)


@torch.no_grad()
def count_cda_invocations(model: SodModel, sample: RgbdSample, device: Union[str, torch.device] = "cpu") -> int:
    """CDA calls during one forward pass on a single sample."""
    was_training = model.training
    model.eval()
    model.reset_counters()
    rgb = torch.from_numpy(sample.rgb.transpose(2, 0, 1).copy())[None].to(device)
    depth = torch.from_numpy(sample.depth[None].copy())[None].to(device)
    model(rgb, depth)
    calls = model.cda_invocations
    model.reset_counters()
    model.train(was_training)
    return calls


class PretextCache:
    """Stage-1 and stage-2 checkpoints keyed by what determines them."""

    def __init__(self, pretext_samples: Sequence[RgbdSample], out_dir: Optional[PathLike] = None):
        self.pretext_samples = list(pretext_samples)
        self.out_dir = Path(out_dir) if out_dir is not None else None
        self._stage1: Dict[float, Dict[StageTag, Checkpoint]] = {}
        self._stage2: Dict[Tuple[float, str], Checkpoint] = {}

    def _dir(self, *parts: str) -> Optional[Path]:
        return None if self.out_dir is None else self.out_dir.joinpath("pretext", *parts)

    def stage1(self, config: TrainConfig) -> Dict[StageTag, Checkpoint]:
        fraction = config.pretrain_fraction
        if fraction not in self._stage1:
            logger.info(f"Pretraining stage1 on {fraction:.0%} of the pretext pool")
            result = run_stage1(self.pretext_samples, config, self._dir(f"f{fraction:.2f}"))
            self._stage1[fraction] = result.checkpoints
        return self._stage1[fraction]

    def stage2(self, config: TrainConfig) -> Checkpoint:
        key = (config.pretrain_fraction, config.fingerprint())
        if key not in self._stage2:
            logger.info(f"Pretraining stage2 for structure {key[1]} ({key[0]:.0%} of the pool)")
            result = run_stage2(
                self.pretext_samples,
                config,
                stage1=self.stage1(config),
                out_dir=self._dir(f"f{key[0]:.2f}", key[1]),
            )
            self._stage2[key] = result.checkpoint
        return self._stage2[key]


def run_ablation_matrix(
    table: str,
    pretext_samples: Sequence[RgbdSample],
    train_samples: Sequence[RgbdSample],
    config: TrainConfig,
    test_samples: Optional[Sequence[RgbdSample]] = None,
    models: Optional[Sequence[int]] = None,
    out_dir: Optional[PathLike] = None,
) -> pd.DataFrame:
    """
    Train and score the rows of an ablation table.

    Args:
        table: Table identifier ('t2', 'ssl-pretext', ...)
        pretext_samples: Pool for both pretext stages (gt unused)
        train_samples: Downstream training pool with gt
        config: Base configuration; each row overrides its ablation keys
        test_samples: Scoring set; when None, each row is scored on its
            held-out validation split
        models: Row numbers to run (default: all)
        out_dir: Output directory; rows write to `<out_dir>/<row name>/`
            and the summary to `<out_dir>/ablation_<table>.csv`

    Returns:
        One row per ablation row with structure columns and metric scores
    """
    table_config = AblationTableConfig(table)
    numbers = list(models) if models is not None else table_config.model_numbers()
    rows = [table_config.get_row(number) for number in numbers]
    cache = PretextCache(pretext_samples, out_dir)
    out_dir = Path(out_dir) if out_dir is not None else None
    logger.info(f"Running {table_config} rows {numbers}")

    records: List[Dict[str, object]] = []
    for row in rows:
        config_row = row_config(config, row)
        stage1 = cache.stage1(config_row) if row.init_p1 and not row.init_p2 else None
        stage2 = cache.stage2(config_row) if row.init_p2 else None

        result = run_downstream(
            train_samples,
            config_row,
            stage1=stage1,
            stage2=stage2,
            out_dir=None if out_dir is None else out_dir / row.name,
            val_samples=test_samples,
        )
        if result.validation is None:
            raise TrainingError(f"Row {row.name} has no samples to score on")
        model = result.model
        scoring = test_samples if test_samples is not None else train_samples
        report = result.validation
        records.append(
            {
                "row": row.name,
                "description": row.description,
                "cda_count": row.cda_count,
                "cda_invocations": count_cda_invocations(
                    model, scoring[0], config.resolve_device()
                ),
                "init_p1": row.init_p1,
                "init_p2": row.init_p2,
                "fusion_fallback": row.fusion_fallback,
                "pretrain_fraction": row.pretrain_fraction,
                "final_loss": result.report.final_loss,
                "count": report.count,
                "max_f": report.max_f,
                "weighted_f": report.weighted_f,
                "s_measure": report.s_measure,
                "max_e": report.max_e,
                "mae": report.mae,
            }
        )
        logger.info(f"Row {row.name}: {report}")

    frame = pd.DataFrame(records)
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        frame.to_csv(out_dir / f"ablation_{table_config.table_name}.csv", index=False)
    return frame
