"""Export format handlers for result files."""

from .base import BaseExporter
from .csv_exporter import CsvExporter
from .json_exporter import JsonExporter

EXPORTERS = {"json": JsonExporter, "csv": CsvExporter}


def get_exporter(fmt: str) -> BaseExporter:
    """Exporter instance for a format name."""
    try:
        return EXPORTERS[fmt.lower()]()
    except KeyError:
        raise ValueError(f"Unknown output format '{fmt}'. Choose from: {', '.join(EXPORTERS)}")


__all__ = ["BaseExporter", "CsvExporter", "JsonExporter", "EXPORTERS", "get_exporter"]
