"""CSV format exporter."""

import csv
import io
import json
from typing import Any, Mapping

from .base import BaseExporter
from ..serialization import to_jsonable


class CsvExporter(BaseExporter):
    """
    Export results as CSV.

    Results with a ``rows`` list (survey samples) become one line per row;
    anything else is flattened to ``field,value`` lines with nested values
    written as compact JSON.
    """

    def render(self, data: Mapping[str, Any]) -> str:
        data = to_jsonable(data)
        buffer = io.StringIO()
        rows = data.get("rows")
        if isinstance(rows, list) and rows and all(isinstance(r, Mapping) for r in rows):
            columns = list(rows[0].keys())
            writer = csv.DictWriter(buffer, fieldnames=columns, lineterminator="\n")
            writer.writeheader()
            for row in rows:
                writer.writerow(row)
            return buffer.getvalue()

        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["field", "value"])
        for key in sorted(data):
            value = data[key]
            if isinstance(value, (Mapping, list)):
                value = json.dumps(value, sort_keys=True, separators=(",", ":"))
            writer.writerow([key, value])
        return buffer.getvalue()
