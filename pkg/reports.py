"""Rendering of command reports as a table view or JSON.

Both views are produced from the same ``Report``; the JSON view parses back
into an equal ``Report``.
"""
import json
from typing import Any, Dict, List, Optional

from pydantic_core import to_jsonable_python

from config import settings
from models import Report, Verdict, format_set

GREEN = "\033[0;32m"
RED = "\033[0;31m"
YELLOW = "\033[1;33m"
NC = "\033[0m"


def jsonable(value: Any) -> Any:
    """Convert models, tuples and enums into plain JSON values."""
    return to_jsonable_python(value)


def verdict(predicate: str, holds: bool, subject: str = "", witness: Any = None) -> Verdict:
    """Build a verdict; pydantic witnesses are dumped to plain JSON values."""
    if witness is not None and hasattr(witness, "model_dump"):
        witness = witness.model_dump(mode="json")
    return Verdict(predicate=predicate, subject=subject, holds=holds, witness=jsonable(witness))


def _cell(value: Any) -> str:
    if value is None:
        return "-"
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, list):
        if all(isinstance(v, str) for v in value):
            return format_set(value)
        return ", ".join(_cell(v) for v in value)
    if isinstance(value, dict):
        return ", ".join(f"{k}={_cell(v)}" for k, v in value.items())
    return str(value)


class ReportRenderer:
    """Formats reports for the terminal and for machines."""

    def __init__(self, color: bool = False):
        self.color = color

    def _paint(self, text: str, code: str) -> str:
        return f"{code}{text}{NC}" if self.color else text

    def _verdict_line(self, v: Verdict) -> str:
        mark = self._paint("✅", GREEN) if v.holds else self._paint("❌", RED)
        subject = f" [{v.subject}]" if v.subject else ""
        line = f"{mark} {v.predicate}{subject}: {'true' if v.holds else 'false'}"
        if v.witness:
            line += f"\n   witness: {_cell(v.witness)}"
        return line

    def _section(self, key: str, value: Any) -> List[str]:
        lines = [self._paint(f"{key}:", YELLOW)]
        if isinstance(value, list):
            if value and all(isinstance(row, dict) for row in value):
                columns = list(value[0].keys())
                widths = {c: max(len(c), *(len(_cell(row.get(c))) for row in value)) for c in columns}
                lines.append("   " + " | ".join(c.ljust(widths[c]) for c in columns))
                lines.append("   " + "-+-".join("-" * widths[c] for c in columns))
                for row in value:
                    lines.append("   " + " | ".join(_cell(row.get(c)).ljust(widths[c]) for c in columns))
            elif not value:
                lines.append("   (none)")
            else:
                for item in value:
                    lines.append(f"   • {_cell(item)}")
        elif isinstance(value, dict):
            for k, v in value.items():
                lines.append(f"   {k}: {_cell(v)}")
        else:
            lines.append(f"   {_cell(value)}")
        return lines

    def format_for_display(self, report: Report) -> str:
        """
        Human-readable view: banner, verdict lines, then one block per payload key.

        Args:
            report: Report to render

        Returns:
            Text ending with a newline
        """
        lines = ["=" * 60, f"{report.command}: {', '.join(report.inputs) or '-'}", "=" * 60]
        for v in report.verdicts:
            lines.append(self._verdict_line(v))
        for key, value in report.payload.items():
            lines.extend(self._section(key, value))
        return "\n".join(lines) + "\n"

    def to_json_response(self, report: Report) -> Dict[str, Any]:
        return report.model_dump(mode="json")

    def render(self, report: Report, output_format: str = "table") -> str:
        if output_format == "json":
            return json.dumps(self.to_json_response(report), indent=2, ensure_ascii=False) + "\n"
        return self.format_for_display(report)


def parse_report(text: str) -> Report:
    """Read back a JSON report."""
    return Report.model_validate_json(text)


def render_report(report: Report, output_format: str = "table", color: Optional[bool] = None) -> str:
    return ReportRenderer(settings.color if color is None else color).render(report, output_format)
