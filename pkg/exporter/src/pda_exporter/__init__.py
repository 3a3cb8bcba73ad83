"""Feature-bundle exporter: pretrained backbone inference plus BN
recalibration over a target image folder."""

from .bn import recalibrate_full, recalibrate_momentum
from .errors import CheckpointError, DatasetError, ExporterError
from .export import ExportSpec, export
from .model import BACKBONES, ExportModel, load_export_model

__version__ = "0.1.0"

__all__ = [
    "ExportSpec",
    "export",
    "ExportModel",
    "load_export_model",
    "BACKBONES",
    "recalibrate_full",
    "recalibrate_momentum",
    "ExporterError",
    "CheckpointError",
    "DatasetError",
]
