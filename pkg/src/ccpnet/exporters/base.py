"""Base exporter class for result formats."""

from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Mapping, Optional, Tuple


class BaseExporter(ABC):
    """Base class for format-specific exporters."""

    required_fields: Tuple[str, ...] = ()

    @abstractmethod
    def render(self, data: Mapping[str, Any]) -> str:
        """
        Render result data as text.

        Args:
            data: JSON-ready result mapping

        Returns:
            Rendered document
        """

    def export(self, data: Mapping[str, Any], output_path: Optional[Path] = None) -> str:
        """
        Render and, when a path is given, write the result.

        Args:
            data: JSON-ready result mapping
            output_path: Output file, or None to only render

        Returns:
            The rendered text
        """
        if not self.validate_input(data):
            raise ValueError(f"Result data lacks required fields {self.required_fields}")
        text = self.render(data)
        if output_path is not None:
            output_path = Path(output_path)
            output_path.parent.mkdir(parents=True, exist_ok=True)
            output_path.write_text(text, encoding="utf-8")
        return text

    def validate_input(self, data: Mapping[str, Any]) -> bool:
        """Validate input result data."""
        return isinstance(data, Mapping) and all(field in data for field in self.required_fields)
