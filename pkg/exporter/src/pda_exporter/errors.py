class ExporterError(Exception):
    """Base class for exporter failures."""


class CheckpointError(ExporterError):
    """Checkpoint missing, unreadable, or incompatible with the backbone id."""


class DatasetError(ExporterError):
    """Image folder missing or not in the expected benchmark layout."""
