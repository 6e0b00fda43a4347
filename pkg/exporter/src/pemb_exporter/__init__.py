"""pemb-exporter: image folders to .pemb embedding datasets."""

from .exporter import (
    ExporterError,
    ExportManifest,
    ExportResult,
    assign_splits,
    discover_classes,
    export,
    stub_embedding,
)

__version__ = "0.1.0"

__all__ = [
    "ExportManifest",
    "ExportResult",
    "ExporterError",
    "assign_splits",
    "discover_classes",
    "export",
    "stub_embedding",
]
