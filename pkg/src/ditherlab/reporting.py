"""CSV, SVG and run-manifest output.

Plots are standalone SVG documents written by hand -- diff-able in review
and viewable in any browser, with no plotting dependency.  CSV output is
RFC-4180 style (header row, CRLF line endings).
"""

import json
import math
from pathlib import Path


class EmptyDataError(ValueError):
    pass


def format_value(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path, header, rows) -> None:
    rows = list(rows)
    if not rows:
        raise EmptyDataError(f"refusing to write empty CSV to {path}")
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_value(v) for v in row))
    Path(path).write_text("\r\n".join(lines) + "\r\n")


def write_manifest(path, config: dict, seeds: list, artifacts: list,
                   timings: dict, version: str) -> None:
    manifest = {
        "tool_version": version,
        "config": config,
        "seeds": seeds,
        "artifacts": [str(a) for a in artifacts],
        "timings_s": timings,
    }
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


# --- minimal SVG line plots --------------------------------------------------

_W, _H = 640, 400
_ML, _MR, _MT, _MB = 70, 20, 40, 50  # margins
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b")


def _ticks(lo, hi, n=6):
    if hi <= lo:
        hi = lo + 1.0
    span = hi - lo
    step = 10 ** math.floor(math.log10(span / n))
    for mult in (1, 2, 5, 10):
        if span / (step * mult) <= n:
            step *= mult
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-12 * span:
        ticks.append(round(t, 12))
        t += step
    return ticks


def _fmt_tick(v):
    if v == int(v):
        return str(int(v))
    return f"{v:g}"


class _Panel:
    """One set of axes with any number of (label, x, y) line series."""

    def __init__(self, title, xlabel, ylabel, log_x=False):
        self.title, self.xlabel, self.ylabel, self.log_x = title, xlabel, ylabel, log_x
        self.series = []

    def add(self, label, x, y):
        self.series.append((label, list(x), list(y)))
        return self


def svg_line_plot(panels) -> str:
    """Render panels stacked vertically into one SVG document."""
    if not panels or not any(p.series for p in panels):
        raise EmptyDataError("no data to plot")
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" '
             f'height="{_H * len(panels)}" font-family="sans-serif" font-size="12">',
             f'<rect width="{_W}" height="{_H * len(panels)}" fill="white"/>']
    for p_idx, panel in enumerate(panels):
        oy = p_idx * _H
        xs, ys = [], []
        for _, x, y in panel.series:
            xs.extend(x)
            ys.extend(y)
        if panel.log_x:
            xs = [math.log10(v) for v in xs if v > 0]
        x_lo, x_hi = min(xs), max(xs)
        y_lo, y_hi = min(ys), max(ys)
        if y_hi == y_lo:
            y_hi = y_lo + 1.0
        px = lambda v: _ML + (v - x_lo) / (x_hi - x_lo) * (_W - _ML - _MR)
        py = lambda v: oy + _H - _MB - (v - y_lo) / (y_hi - y_lo) * (_H - _MT - _MB)

        parts.append(f'<text x="{_W / 2}" y="{oy + 20}" text-anchor="middle" '
                     f'font-size="14">{panel.title}</text>')
        # axes
        parts.append(f'<line x1="{_ML}" y1="{oy + _H - _MB}" x2="{_W - _MR}" '
                     f'y2="{oy + _H - _MB}" stroke="black"/>')
        parts.append(f'<line x1="{_ML}" y1="{oy + _MT}" x2="{_ML}" '
                     f'y2="{oy + _H - _MB}" stroke="black"/>')
        for t in _ticks(x_lo, x_hi):
            label = f"1e{_fmt_tick(t)}" if panel.log_x else _fmt_tick(t)
            parts.append(f'<line x1="{px(t):.1f}" y1="{oy + _H - _MB}" '
                         f'x2="{px(t):.1f}" y2="{oy + _H - _MB + 4}" stroke="black"/>')
            parts.append(f'<text x="{px(t):.1f}" y="{oy + _H - _MB + 18}" '
                         f'text-anchor="middle">{label}</text>')
        for t in _ticks(y_lo, y_hi):
            parts.append(f'<line x1="{_ML - 4}" y1="{py(t):.1f}" x2="{_ML}" '
                         f'y2="{py(t):.1f}" stroke="black"/>')
            parts.append(f'<text x="{_ML - 8}" y="{py(t):.1f}" text-anchor="end" '
                         f'dominant-baseline="middle">{_fmt_tick(t)}</text>')
        parts.append(f'<text x="{_W / 2}" y="{oy + _H - 10}" '
                     f'text-anchor="middle">{panel.xlabel}</text>')
        parts.append(f'<text x="16" y="{oy + _H / 2}" text-anchor="middle" '
                     f'transform="rotate(-90 16 {oy + _H / 2})">{panel.ylabel}</text>')
        # series + legend
        for s_idx, (label, x, y) in enumerate(panel.series):
            color = _COLORS[s_idx % len(_COLORS)]
            pts = []
            for xv, yv in zip(x, y):
                if panel.log_x:
                    if xv <= 0:
                        continue
                    xv = math.log10(xv)
                pts.append(f"{px(xv):.1f},{py(yv):.1f}")
            parts.append(f'<polyline points="{" ".join(pts)}" fill="none" '
                         f'stroke="{color}" stroke-width="1"/>')
            if label:
                ly = oy + _MT + 14 * s_idx
                parts.append(f'<line x1="{_W - _MR - 130}" y1="{ly}" '
                             f'x2="{_W - _MR - 110}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
                parts.append(f'<text x="{_W - _MR - 105}" y="{ly + 4}">{label}</text>')
    parts.append("</svg>")
    return "\n".join(parts)


def write_svg(path, panels) -> None:
    Path(path).write_text(svg_line_plot(panels) + "\n")
