from .fields import BatchFields, LayoutFields, ManifestFields, MetricFields, ReportFields
from .sample import RgbdSample
from .dataset import RgbdDataset

__all__ = [
    "BatchFields",
    "LayoutFields",
    "ManifestFields",
    "MetricFields",
    "ReportFields",
    "RgbdSample",
    "RgbdDataset",
]
