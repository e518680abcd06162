from pathlib import Path
from typing import List, Optional, Union

from pyrgbd.config.ablation import AblationTableConfig
from pyrgbd.config.preset import PresetConfig, available_presets
from pyrgbd.config.training import TrainConfig
from pyrgbd.core.sample import RgbdSample
from pyrgbd.pipeline.loading import load_dataset, read_manifest
from pyrgbd.pipeline.processing import process_samples
from pyrgbd.pipeline.synth import SYNTH_GENERATOR
from pyrgbd.pipeline.validating import validate_samples
from pyrgbd.utils.logger import get_logger
from pyrgbd.utils.resolver import TABLE_MAPPINGS

logger = get_logger(__name__)


def list_presets() -> None:
    """Print the available backbone presets."""
    print("\n" + "=" * 100)
    print(f"{'PRESET':<8} {'WIDTHS':<26} {'CONVS':<18} {'TRANSITION':<11} {'DESCRIPTION'}")
    print("-" * 100)
    for preset_id in available_presets():
        try:
            preset = PresetConfig(preset_id)
            backbone = preset.to_backbone()
            description = preset.metadata.get("description", "").split(".")[0]
            print(
                f"{preset_id:<8} {str(list(backbone.widths)):<26} {str(list(backbone.convs)):<18} "
                f"{backbone.transition_width:<11} {description[:60]}"
            )
        except Exception:
            print(f"{preset_id:<8} {'ERROR: Could not load configuration':<80}")
    print("=" * 100)


def list_ablations() -> None:
    """Print every ablation row of every table."""
    print("\n" + "=" * 100)
    print(f"{'ROW':<8} {'CDAs':<6} {'P1':<6} {'P2':<6} {'FALLBACK':<10} {'FRACTION':<10} {'DESCRIPTION'}")
    print("-" * 100)
    for short_name, _, _ in TABLE_MAPPINGS.values():
        try:
            table = AblationTableConfig(short_name)
        except Exception:
            print(f"{short_name:<8} {'ERROR: Could not load configuration':<80}")
            continue
        for row in table.rows():
            print(
                f"{row.name:<8} {row.cda_count:<6} {str(row.init_p1):<6} {str(row.init_p2):<6} "
                f"{row.fusion_fallback:<10} {row.pretrain_fraction:<10.2f} {row.description[:45]}"
            )
    print("=" * 100)


def get_data(
    root: Union[str, Path],
    split: str = "train",
    config: Optional[TrainConfig] = None,
    *,
    require_gt: bool = True,
    derive_contours: bool = False,
) -> List[RgbdSample]:
    """
    Load, prepare and validate one dataset split.

    Args:
        root: Dataset root directory
        split: Split name (sub-directory of root)
        config: Training configuration driving the preparation steps
            (resize, depth normalization, contour size); defaults apply when None
        require_gt: Fail when the split has no ground truth
        derive_contours: Attach depth-contour maps to every sample

    Returns:
        Prepared samples sorted by id
    """
    config = config or TrainConfig()
    logger.info(f"Starting data retrieval for {root}/{split}")

    try:
        # Step 1: Load samples from disk
        logger.debug("Loading samples")
        samples = load_dataset(root, split, require_gt=require_gt)
        manifest = read_manifest(root, split) or {}
        synthetic = manifest.get("generator") == SYNTH_GENERATOR

        # Step 2: Prepare them according to the config
        logger.debug("Preparing samples")
        samples = process_samples(samples, config, synthetic, derive_contours)

        # Step 3: Validate the prepared samples
        logger.debug("Validating samples")
        validate_samples(samples, require_gt=require_gt)

        return samples

    except Exception as e:
        logger.error(f"Error preparing {root}/{split}: {e}")
        raise
