"""JSON format exporter."""

from typing import Any, Mapping

from .base import BaseExporter
from ..serialization import dumps


class JsonExporter(BaseExporter):
    """Export results as canonical JSON (sorted keys, 12 significant digits)."""

    def render(self, data: Mapping[str, Any]) -> str:
        return dumps(data)
