"""
Field definitions for RGB-D saliency data.

This module contains dataclasses that define the names used throughout the
pyrgbd package:
1. Layout fields: Directory and file names of the on-disk dataset layout
2. Manifest fields: Keys of the synthetic dataset manifest
3. Batch fields: Keys of the sample dictionaries produced by RgbdDataset
4. Metric fields: Column names of the evaluation CSV tables
5. Report fields: Column names of the per-iteration training reports

These constants provide a centralized reference for reading and writing data
consistently between the loader, the trainers, the evaluator and the CLI.
"""

from dataclasses import dataclass


@dataclass
class LayoutFields:
    """
    Directory and file names of a dataset split on disk.

    A split lives at `<root>/<split>/` and holds one sub-directory per
    modality. Files pair across modalities by filename stem.

    Attributes:
        RGB_DIR: Colour images (PNG or JPEG, 8-bit)
        DEPTH_DIR: Depth maps (8- or 16-bit grayscale PNG)
        GT_DIR: Saliency ground truth (8-bit grayscale PNG)
        CONTOUR_DIR: Depth-contour maps written by the contour-gt command
        MANIFEST: Metadata file of generated datasets
    """

    RGB_DIR: str = "rgb"
    DEPTH_DIR: str = "depth"
    GT_DIR: str = "gt"
    CONTOUR_DIR: str = "contour"
    MANIFEST: str = "manifest.yml"

    RGB_SUFFIXES: tuple = (".png", ".jpg", ".jpeg")
    MAP_SUFFIXES: tuple = (".png",)


@dataclass
class ManifestFields:
    """Keys of the manifest written next to a generated dataset split."""

    GENERATOR: str = "generator"
    SPLIT: str = "split"
    COUNT: str = "count"
    SEED: str = "seed"
    SPEC: str = "spec"
    IDS: str = "ids"
    DEPTH_ENCODING: str = "depth_encoding"


@dataclass
class BatchFields:
    """
    Keys of the per-sample dictionaries yielded by RgbdDataset.

    Attributes:
        ID: Sample identifier (filename stem)
        RGB: 3xHxW float tensor in [0, 1]
        DEPTH: 1xHxW float tensor in [0, 1]
        GT: 1xHxW binary tensor (downstream targets)
        GT_PYRAMID: Binary targets at every side-out resolution, coarsest first
        CONTOUR: 1xHxW depth-contour tensor (stage-2 targets)
        CONTOUR_PYRAMID: Contour targets at every side-out resolution, coarsest first
    """

    ID: str = "id"
    RGB: str = "rgb"
    DEPTH: str = "depth"
    GT: str = "gt"
    GT_PYRAMID: str = "gt_pyramid"
    CONTOUR: str = "contour"
    CONTOUR_PYRAMID: str = "contour_pyramid"


@dataclass
class MetricFields:
    """Column names of the evaluation tables (one row per dataset)."""

    DATASET: str = "dataset"
    COUNT: str = "count"
    MAX_F: str = "max_f"
    WEIGHTED_F: str = "weighted_f"
    S_MEASURE: str = "s_measure"
    E_MEASURE: str = "max_e"
    MAE: str = "mae"
    AVE_METRIC: str = "ave-metric"

    # PR-curve dump
    THRESHOLD: str = "threshold"
    PRECISION: str = "precision"
    RECALL: str = "recall"
    F_MEASURE: str = "f_measure"


@dataclass
class ReportFields:
    """Column names of the per-iteration training report."""

    ITERATION: str = "iteration"
    LOSS: str = "loss"
    LR_PREFIX: str = "lr_"
    VAL_MAE: str = "val_mae"
