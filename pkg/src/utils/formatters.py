"""
Report Formatting and Sweep Serialization.

This module wraps command results in a versioned envelope, renders them as
JSON, rich tables or CSV, and writes/reads sweep results with ``#``-prefixed
metadata header lines that are sufficient to regenerate them.
"""

import csv
import io
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel
from rich.console import Console
from rich.table import Table

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "1.0"
METADATA_PREFIX = "# "


class OutputFormat(str, Enum):
    """Available output formats."""
    TABLE = "table"
    JSON = "json"
    CSV = "csv"


@dataclass
class FormattedOutput:
    """Envelope shared by every command result."""
    success: bool
    data: Any
    message: Optional[str] = None
    timestamp: Optional[str] = None
    metadata: Dict[str, Any] = field(default_factory=dict)
    schema_version: str = SCHEMA_VERSION


def _json_default(value: Any) -> Any:
    if isinstance(value, BaseModel):
        return value.model_dump(mode="python")
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def _cell(value: Any) -> str:
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return f"{value:.10g}"
    if value is None:
        return "-"
    return str(value)


class ReportFormatter:
    """
    Formatter for toolkit reports.

    JSON output is canonical (sorted keys) so that identical results produce
    identical bytes apart from the timestamp.
    """

    def __init__(self, width: int = 160):
        """
        Initialize the report formatter.

        Args:
            width: Console width used when rendering tables to text
        """
        self.width = width
        self.logger = logging.getLogger(self.__class__.__name__)

    def create_success_response(
        self,
        data: Any,
        message: Optional[str] = None,
        metadata: Optional[Dict[str, Any]] = None,
    ) -> FormattedOutput:
        """
        Create a formatted success response.

        Args:
            data: Response data
            message: Optional success message
            metadata: Optional metadata dictionary

        Returns:
            FormattedOutput: Formatted success response
        """
        return FormattedOutput(
            success=True,
            data=data,
            message=message or "Operation completed successfully",
            timestamp=datetime.now(timezone.utc).isoformat(),
            metadata=metadata or {},
        )

    def create_error_response(
        self,
        error: Union[str, Exception],
        exit_code: Optional[int] = None,
        metadata: Optional[Dict[str, Any]] = None,
    ) -> FormattedOutput:
        """
        Create a formatted error response.

        Args:
            error: Error message or exception
            exit_code: Exit code the process terminates with
            metadata: Optional metadata dictionary

        Returns:
            FormattedOutput: Formatted error response
        """
        error_message = str(error) if isinstance(error, Exception) else error
        error_metadata = dict(metadata or {})
        if exit_code is not None:
            error_metadata["exit_code"] = exit_code
        if isinstance(error, Exception):
            error_metadata["error_type"] = type(error).__name__

        return FormattedOutput(
            success=False,
            data=None,
            message=f"Error: {error_message}",
            timestamp=datetime.now(timezone.utc).isoformat(),
            metadata=error_metadata,
        )

    def format_to_json(self, output: Union[FormattedOutput, Any]) -> str:
        """
        Convert an envelope (or any JSON-compatible value) to canonical JSON.

        Non-finite floats are written as null.
        """
        payload = asdict(output) if isinstance(output, FormattedOutput) else output
        return json.dumps(_finite(payload), indent=2, sort_keys=True, default=_json_default)

    def format_data_as_table(
        self,
        data: Sequence[Dict[str, Any]],
        headers: Optional[List[str]] = None,
        title: Optional[str] = None,
    ) -> Table:
        """
        Build a rich table from a list of row dictionaries.

        Args:
            data: Rows to display
            headers: Optional column order (defaults to the keys of the first row)
            title: Optional table title

        Returns:
            Table: Rich table ready to print
        """
        headers = headers or (list(data[0].keys()) if data else [])
        table = Table(title=title, show_lines=False)
        for header in headers:
            table.add_column(str(header), justify="right" if data and _is_number(data[0].get(header)) else "left")
        for row in data:
            table.add_row(*(_cell(row.get(header)) for header in headers))
        return table

    def format_record_as_table(self, record: Dict[str, Any], title: Optional[str] = None) -> Table:
        """Two-column quantity/value table for a flat record."""
        table = Table(title=title)
        table.add_column("quantity")
        table.add_column("value", justify="right")
        for key, value in record.items():
            table.add_row(str(key), _cell(value))
        return table

    def render(self, *renderables: Any) -> str:
        """Render rich objects to plain text."""
        console = Console(file=io.StringIO(), width=self.width, record=True, color_system=None)
        for renderable in renderables:
            console.print(renderable)
        return console.export_text()

    def format_rows_as_csv(
        self,
        data: Sequence[Dict[str, Any]],
        headers: Optional[List[str]] = None,
        metadata: Optional[Dict[str, Any]] = None,
    ) -> str:
        """CSV text with ``#``-prefixed JSON metadata lines ahead of the header row."""
        headers = headers or (list(data[0].keys()) if data else [])
        buffer = io.StringIO()
        buffer.write(f"{METADATA_PREFIX}schema_version: {json.dumps(SCHEMA_VERSION)}\n")
        for key, value in (metadata or {}).items():
            encoded = json.dumps(_finite(value), sort_keys=True, default=_json_default)
            buffer.write(f"{METADATA_PREFIX}{key}: {encoded}\n")
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(headers)
        for row in data:
            writer.writerow([_csv_value(row.get(header)) for header in headers])
        return buffer.getvalue()

    def sweep_rows(self, result: Any) -> List[Dict[str, Any]]:
        """One row per x value with a column per series."""
        rows = []
        for i, x in enumerate(result.x_values):
            row = {result.x_label: x}
            for name, values in result.series.items():
                row[name] = values[i]
            rows.append(row)
        return rows

    def sweep_to_csv(self, result: Any) -> str:
        headers = [result.x_label, *result.series.keys()]
        header_lines = {"x_label": result.x_label, "metadata": result.metadata}
        return self.format_rows_as_csv(self.sweep_rows(result), headers, header_lines)

    def sweep_to_json(self, result: Any) -> str:
        payload = {"schema_version": SCHEMA_VERSION, **result.model_dump(mode="python")}
        return self.format_to_json(payload)

    def write_sweep(self, result: Any, path: Union[str, Path], output_format: OutputFormat = OutputFormat.CSV) -> Path:
        """Write a sweep result as CSV or JSON and return the path written."""
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        text = self.sweep_to_json(result) if output_format is OutputFormat.JSON else self.sweep_to_csv(result)
        target.write_text(text, encoding="utf-8")
        self.logger.info(f"Wrote {result.metadata.get('kind', 'sweep')} sweep to {target}")
        return target

    def read_sweep(self, path: Union[str, Path]) -> Dict[str, Any]:
        """
        Read a sweep file written by ``write_sweep``.

        Returns:
            Dictionary with ``x_label``, ``x_values``, ``series`` and ``metadata``
        """
        text = Path(path).read_text(encoding="utf-8")
        if not text.lstrip().startswith(METADATA_PREFIX.strip()):
            payload = json.loads(text)
            payload.pop("schema_version", None)
            return payload

        header: Dict[str, Any] = {}
        body = []
        for line in text.splitlines():
            if line.startswith(METADATA_PREFIX):
                key, _, encoded = line[len(METADATA_PREFIX):].partition(": ")
                header[key] = json.loads(encoded)
            elif line:
                body.append(line)
        reader = csv.reader(body)
        columns = next(reader)
        rows = [[float(value) for value in row] for row in reader]
        return {
            "x_label": header.get("x_label", columns[0]),
            "x_values": [row[0] for row in rows],
            "series": {name: [row[i] for row in rows] for i, name in enumerate(columns[1:], start=1)},
            "metadata": header.get("metadata", {}),
        }


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _csv_value(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    return str(value)


def _finite(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {key: _finite(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite(item) for item in value]
    return value


# Global formatter instance
formatter = ReportFormatter()
