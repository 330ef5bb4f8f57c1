import csv
import io
import math
import shutil
import logging
import tempfile
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..models.weighted_sphere import SpherePoint

logger = logging.getLogger(__name__)

Series = Mapping[str, Tuple[Sequence[float], Sequence[float]]]


def format_value(value) -> str:
    """Floats with 17 significant digits; points as space-separated coordinates."""
    if isinstance(value, SpherePoint):
        return ' '.join(format_value(c) for c in value.z)
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (complex, np.complexfloating)):
        value = complex(value)
        if value.imag == 0:
            return format(value.real, '.17g')
        return f"{value.real:.17g}{value.imag:+.17g}j"
    if isinstance(value, (float, np.floating)):
        return format(float(value), '.17g')
    return str(value)


def render_csv(columns: Sequence[str], rows: Iterable[Mapping[str, object]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\r\n')
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(row.get(column, '')) for column in columns])
    return buffer.getvalue()


class ReportWriter:
    """Writes experiment tables and plots; every write goes through a temporary file."""

    def __init__(self, width: int = 720, height: int = 480):
        self.width = width
        self.height = height
        self.margin = 60

    def write_csv(self, path: Path, columns: Sequence[str],
                  rows: Iterable[Mapping[str, object]]) -> Tuple[bool, str]:
        rows = list(rows)
        success, message = self._write_atomic(Path(path), render_csv(columns, rows),
                                              lambda p: self._validate_csv(p, columns, len(rows)))
        if success:
            return True, f"Wrote {len(rows)} rows to {path}"
        return False, message

    def write_svg(self, path: Path, series: Series, title: str = '', x_label: str = 'm',
                  y_label: str = '|residual|') -> Tuple[bool, str]:
        try:
            text = self.render_svg(series, title, x_label, y_label)
        except ValueError as e:
            return False, f"Plot error: {e}"
        success, message = self._write_atomic(Path(path), text, lambda p: p.stat().st_size > 0)
        return (True, f"Wrote plot to {path}") if success else (False, message)

    def render_svg(self, series: Series, title: str = '', x_label: str = 'm', y_label: str = '') -> str:
        """Polylines on log-log axes; non-positive values are dropped."""
        # Keep only what a log scale can show
        cleaned = {}
        for name, (xs, ys) in series.items():
            points = [(float(x), float(y)) for x, y in zip(xs, ys) if x > 0 and y > 0 and math.isfinite(y)]
            if points:
                cleaned[name] = points
        if not cleaned:
            raise ValueError("no positive data to plot")
        all_x = [math.log10(x) for points in cleaned.values() for x, _ in points]
        all_y = [math.log10(y) for points in cleaned.values() for _, y in points]
        x_lo, x_hi = min(all_x), max(all_x) if max(all_x) > min(all_x) else min(all_x) + 1.0
        y_lo, y_hi = min(all_y), max(all_y) if max(all_y) > min(all_y) else min(all_y) + 1.0
        # Plot area inside the margins
        inner_w = self.width - 2 * self.margin
        inner_h = self.height - 2 * self.margin

        def project(x, y):
            px = self.margin + (math.log10(x) - x_lo) / (x_hi - x_lo) * inner_w
            py = self.height - self.margin - (math.log10(y) - y_lo) / (y_hi - y_lo) * inner_h
            return f"{px:.2f},{py:.2f}"

        colors = ('#1f77b4', '#d62728', '#2ca02c', '#9467bd', '#ff7f0e', '#8c564b')
        lines: List[str] = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" height="{self.height}">',
            f'<rect x="{self.margin}" y="{self.margin}" width="{inner_w}" height="{inner_h}" '
            'fill="none" stroke="black"/>',
            f'<text x="{self.width / 2:.0f}" y="{self.margin / 2:.0f}" text-anchor="middle">{title}</text>',
            f'<text x="{self.width / 2:.0f}" y="{self.height - 15}" text-anchor="middle">'
            f'log10 {x_label}: {x_lo:.3g} .. {x_hi:.3g}</text>',
            f'<text x="15" y="{self.height / 2:.0f}" transform="rotate(-90 15 {self.height / 2:.0f})" '
            f'text-anchor="middle">log10 {y_label}: {y_lo:.3g} .. {y_hi:.3g}</text>',
        ]
        # One polyline and one legend entry per series
        for i, (name, points) in enumerate(cleaned.items()):
            color = colors[i % len(colors)]
            coords = ' '.join(project(x, y) for x, y in points)
            lines.append(f'<polyline fill="none" stroke="{color}" points="{coords}"/>')
            lines.append(f'<text x="{self.width - self.margin + 5}" y="{self.margin + 15 * (i + 1)}" '
                         f'fill="{color}">{name}</text>')
        lines.append('</svg>')
        return '\n'.join(lines) + '\n'

    def _write_atomic(self, target: Path, text: str, validate) -> Tuple[bool, str]:
        # Create temp directory
        temp_dir = tempfile.mkdtemp()
        temp_path = Path(temp_dir) / target.name
        try:
            # Write, then validate before touching the target
            temp_path.write_text(text, encoding='utf-8', newline='')
            if not validate(temp_path):
                return False, f"Validation failed for {target.name}; nothing written."
            if target.parent and not target.parent.exists():
                target.parent.mkdir(parents=True, exist_ok=True)
            # Replace the target in one move
            shutil.move(str(temp_path), str(target))
            logger.debug("wrote %s (%d bytes)", target, len(text))
            return True, f"Wrote {target}"
        except OSError as e:
            logger.error("write of %s failed: %s", target, e)
            return False, f"Write error: {e}"
        finally:
            # Clean up temp directory
            shutil.rmtree(temp_dir, ignore_errors=True)

    def _validate_csv(self, path: Path, columns: Sequence[str], expected_rows: int) -> bool:
        with open(path, newline='', encoding='utf-8') as handle:
            rows = list(csv.reader(handle))
        return bool(rows) and rows[0] == list(columns) and len(rows) == expected_rows + 1


def residual_series(rows: Iterable, key: str = 'point') -> Dict[str, Tuple[List[float], List[float]]]:
    """|residual| against m, one series per point."""
    series: Dict[str, Tuple[List[float], List[float]]] = {}
    for row in rows:
        xs, ys = series.setdefault(getattr(row, key), ([], []))
        xs.append(row.m)
        ys.append(abs(row.residual))
    return series


def write_outputs(writer: ReportWriter, columns: Sequence[str], table: List[Mapping[str, object]],
                  out: Optional[str], svg: Optional[str] = None,
                  series: Optional[Series] = None, title: str = '') -> Tuple[bool, List[str]]:
    """CSV to ``out`` (or nothing) and an optional plot; returns (ok, messages)."""
    messages, ok = [], True
    if out:
        success, message = writer.write_csv(Path(out), columns, table)
        ok &= success
        messages.append(message)
    if svg and series is not None:
        success, message = writer.write_svg(Path(svg), series, title=title)
        ok &= success
        messages.append(message)
    return ok, messages
