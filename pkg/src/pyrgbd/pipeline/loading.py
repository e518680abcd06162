"""
Disk IO for RGB-D saliency datasets.

A dataset split lives in one directory with one sub-directory per modality:

    <root>/<split>/
    ├── rgb/        # colour images, *.png | *.jpg | *.jpeg (8-bit)
    ├── depth/      # depth maps, *.png (8- or 16-bit grayscale)
    ├── gt/         # saliency masks, *.png (8-bit grayscale, optional)
    └── manifest.yml  # written by the synthetic generator only

Files pair across modalities by filename stem. Images are returned as float
arrays in [0, 1]: 8-bit data is divided by 255 and 16-bit data by 65535.
Ground truth is binarized at 0.5.
"""

from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import yaml
from numpy.typing import NDArray
from PIL import Image, UnidentifiedImageError

from pyrgbd.core.fields import LayoutFields
from pyrgbd.core.sample import RgbdSample
from pyrgbd.utils.logger import get_logger

logger = get_logger(__name__)

PathLike = Union[str, Path]


class DatasetLayoutError(Exception):
    """Raised when a dataset split is missing, empty, or has unpaired files."""

    pass


class ImageReadError(Exception):
    """Raised when an image file cannot be opened or has an unsupported format."""

    pass


class SplitLayout:
    """
    Paths of one dataset split.

    Args:
        root: Dataset root directory
        split: Split name (sub-directory of root)
    """

    def __init__(self, root: PathLike, split: str):
        self.fields = LayoutFields()
        self.root = Path(root).expanduser()
        self.split = split
        self.path = self.root / split
        self.rgb_dir = self.path / self.fields.RGB_DIR
        self.depth_dir = self.path / self.fields.DEPTH_DIR
        self.gt_dir = self.path / self.fields.GT_DIR
        self.contour_dir = self.path / self.fields.CONTOUR_DIR
        self.manifest_path = self.path / self.fields.MANIFEST

    def has_gt(self) -> bool:
        return self.gt_dir.is_dir()

    @staticmethod
    def index(directory: Path, suffixes: Sequence[str]) -> Dict[str, Path]:
        """Map filename stems to files with an accepted suffix."""
        if not directory.is_dir():
            return {}
        files: Dict[str, Path] = {}
        for path in sorted(directory.iterdir()):
            if path.is_file() and path.suffix.lower() in suffixes:
                if path.stem in files:
                    raise DatasetLayoutError(
                        f"Duplicate stem '{path.stem}' in {directory}"
                    )
                files[path.stem] = path
        return files

    def __repr__(self) -> str:
        return f"SplitLayout(path={str(self.path)!r})"


def _open(path: Path) -> Image.Image:
    try:
        image = Image.open(path)
        image.load()
        return image
    except (OSError, UnidentifiedImageError) as e:
        raise ImageReadError(f"Cannot read image {path}: {e}") from e


def read_rgb(path: PathLike) -> NDArray[np.float32]:
    """Read a colour image as HxWx3 in [0, 1]."""
    image = _open(Path(path)).convert("RGB")
    return np.asarray(image, dtype=np.float32) / 255.0


def read_gray(path: PathLike) -> NDArray[np.float32]:
    """
    Read a grayscale map as HxW in [0, 1], rescaled by its format's max value.

    16-bit files (modes I;16 and I) are divided by 65535, everything else is
    converted to 8-bit luminance and divided by 255.
    """
    path = Path(path)
    image = _open(path)
    if image.mode.startswith("I;16") or image.mode == "I":
        values = np.asarray(image, dtype=np.float64) / 65535.0
        return np.clip(values, 0.0, 1.0).astype(np.float32)
    if image.mode == "F":
        raise ImageReadError(f"Floating-point images are not supported: {path}")
    return np.asarray(image.convert("L"), dtype=np.float32) / 255.0


def read_gt(path: PathLike) -> NDArray[np.float32]:
    """Read a ground-truth mask binarized at 0.5."""
    return (read_gray(path) >= 0.5).astype(np.float32)


def write_gray8(path: PathLike, values: NDArray) -> None:
    """Write an HxW map in [0, 1] as an 8-bit grayscale PNG."""
    data = np.round(np.clip(values, 0.0, 1.0) * 255.0).astype(np.uint8)
    Image.fromarray(data).save(path)


def write_gray16(path: PathLike, values: NDArray) -> None:
    """Write an HxW map in [0, 1] as a 16-bit grayscale PNG."""
    data = np.round(np.clip(values, 0.0, 1.0) * 65535.0).astype(np.uint16)
    Image.fromarray(data).save(path)


def write_rgb(path: PathLike, values: NDArray) -> None:
    data = np.round(np.clip(values, 0.0, 1.0) * 255.0).astype(np.uint8)
    Image.fromarray(data).save(path)


def read_manifest(root: PathLike, split: str) -> Optional[Dict[str, Any]]:
    """The split's manifest as a mapping, or None when there is none."""
    layout = SplitLayout(root, split)
    if not layout.manifest_path.exists():
        return None
    with open(layout.manifest_path, "r") as f:
        return yaml.safe_load(f)


def load_dataset(
    root: PathLike, split: str, require_gt: bool = True
) -> List[RgbdSample]:
    """
    Load every sample of a split, sorted by stem.

    Args:
        root: Dataset root directory
        split: Split name
        require_gt: Fail when the split has no gt directory; when False, gt is
            loaded if present and left as None otherwise

    Returns:
        Samples with rgb/depth in [0, 1] and binary gt

    Raises:
        DatasetLayoutError: Missing split or modality directory, unpaired stems,
            or an empty split
        ImageReadError: A file that cannot be decoded
    """
    layout = SplitLayout(root, split)
    fields = layout.fields

    if not layout.path.is_dir():
        raise DatasetLayoutError(f"Split directory not found: {layout.path}")
    for directory in (layout.rgb_dir, layout.depth_dir):
        if not directory.is_dir():
            raise DatasetLayoutError(f"Missing modality directory: {directory}")
    if require_gt and not layout.has_gt():
        raise DatasetLayoutError(f"Missing ground-truth directory: {layout.gt_dir}")

    rgb_files = layout.index(layout.rgb_dir, fields.RGB_SUFFIXES)
    depth_files = layout.index(layout.depth_dir, fields.MAP_SUFFIXES)
    gt_files = layout.index(layout.gt_dir, fields.MAP_SUFFIXES) if layout.has_gt() else None

    if not rgb_files and not depth_files:
        raise DatasetLayoutError(f"Split is empty: {layout.path}")

    stems = sorted(set(rgb_files) | set(depth_files))
    for stem in stems:
        if stem not in rgb_files:
            raise DatasetLayoutError(f"Sample '{stem}' has no rgb image in {layout.rgb_dir}")
        if stem not in depth_files:
            raise DatasetLayoutError(
                f"Sample '{stem}' has no depth map in {layout.depth_dir}"
            )
        if gt_files is not None and stem not in gt_files:
            raise DatasetLayoutError(f"Sample '{stem}' has no gt mask in {layout.gt_dir}")

    samples = []
    for stem in stems:
        rgb = read_rgb(rgb_files[stem])
        depth = read_gray(depth_files[stem])
        gt = read_gt(gt_files[stem]) if gt_files is not None else None
        try:
            samples.append(RgbdSample(id=stem, rgb=rgb, depth=depth, gt=gt))
        except ValueError as e:
            raise DatasetLayoutError(str(e)) from e

    logger.info(
        f"Loaded {len(samples)} samples from {layout.path} "
        f"(gt: {'yes' if gt_files is not None else 'no'})"
    )
    return samples


def save_dataset(
    samples: Sequence[RgbdSample],
    root: PathLike,
    split: str,
    manifest: Optional[Dict[str, Any]] = None,
) -> Path:
    """
    Write samples in the dataset layout.

    RGB is written as 8-bit PNG, depth as 16-bit PNG and gt as 0/255 8-bit
    PNG. Samples without gt write no gt file.

    Returns:
        Path of the split directory
    """
    layout = SplitLayout(root, split)
    layout.rgb_dir.mkdir(parents=True, exist_ok=True)
    layout.depth_dir.mkdir(parents=True, exist_ok=True)
    if any(sample.has_gt for sample in samples):
        layout.gt_dir.mkdir(parents=True, exist_ok=True)

    for sample in samples:
        write_rgb(layout.rgb_dir / f"{sample.id}.png", sample.rgb)
        write_gray16(layout.depth_dir / f"{sample.id}.png", sample.depth)
        if sample.has_gt:
            write_gray8(layout.gt_dir / f"{sample.id}.png", sample.gt)

    if manifest is not None:
        with open(layout.manifest_path, "w") as f:
            yaml.safe_dump(manifest, f, sort_keys=False)

    logger.info(f"Wrote {len(samples)} samples to {layout.path}")
    return layout.path
