from .ablation import run_ablation_matrix
from .checkpoint import Checkpoint, CheckpointError, load_checkpoint, read_checkpoint, save_checkpoint
from .losses import (
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
from .schedules import ScheduleError, build_optimizer, build_scheduler, poly_lr, warmup_linear_lr
from .trainer import (
    TrainingError,
    TrainReport,
    TrainResult,
    run_downstream,
    run_stage1,
    run_stage2,
)
