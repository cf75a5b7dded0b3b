"""Raster and vector rendering of analysis artifacts.

Heatmaps go to binary 8-bit PGM (P5) with the value range stated in the
comment line; curves go to a standalone SVG line chart.  Both writers are
deterministic and refuse to create a file when given nothing to draw.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import EmptyInputError, NonFiniteValueError, ShapeMismatchError
from .reports import format_float

_SVG_WIDTH = 640
_SVG_HEIGHT = 420
_MARGIN_LEFT = 64
_MARGIN_RIGHT = 24
_MARGIN_TOP = 24
_MARGIN_BOTTOM = 48
_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def render_heatmap(values, path, lo: float = 0.0, hi: float = 1.0) -> None:
    """Write a 2-D map as binary PGM, scaling [lo, hi] to [0, 255].

    Values outside the range clip; scaling rounds half up, so 0.5 in the unit
    range lands on 128.  The comment line records the range used.
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeMismatchError(f"heatmap must be 2-D, got shape {arr.shape}")
    if arr.size == 0:
        raise EmptyInputError("heatmap is empty")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValueError("heatmap contains NaN or Inf")
    if not hi > lo:
        raise ValueError(f"need hi > lo, got [{lo}, {hi}]")
    scaled = (arr - lo) / (hi - lo)
    np.clip(scaled, 0.0, 1.0, out=scaled)
    pixels = np.floor(scaled * 255.0 + 0.5).astype(np.uint8)
    height, width = pixels.shape
    header = (
        b"P5\n"
        + f"# min={format_float(lo)} max={format_float(hi)}\n".encode("ascii")
        + f"{width} {height}\n255\n".encode("ascii")
    )
    Path(path).write_bytes(header + pixels.tobytes())


def _axis_ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi == lo:
        return [lo]
    return [lo + (hi - lo) * i / (count - 1) for i in range(count)]


def _scale(value: float, lo: float, hi: float, out_lo: float, out_hi: float) -> float:
    if hi == lo:
        return (out_lo + out_hi) / 2.0
    return out_lo + (value - lo) / (hi - lo) * (out_hi - out_lo)


def render_curve(series, path, x_label: str = "x", y_label: str = "y") -> None:
    """Write named line series as a standalone SVG chart.

    ``series`` maps a legend name to a sequence of (x, y) points.  Raises
    :class:`EmptyInputError` before any file is created when there is nothing
    to plot.
    """
    named = [(str(name), [(float(x), float(y)) for x, y in pts]) for name, pts in series.items()]
    named = [(name, pts) for name, pts in named if pts]
    if not named:
        raise EmptyInputError("no points to plot")
    for name, pts in named:
        for x, y in pts:
            if not (np.isfinite(x) and np.isfinite(y)):
                raise NonFiniteValueError(f"series {name!r} contains NaN or Inf")
    xs = [x for _, pts in named for x, _ in pts]
    ys = [y for _, pts in named for _, y in pts]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)

    plot_left = _MARGIN_LEFT
    plot_right = _SVG_WIDTH - _MARGIN_RIGHT
    plot_top = _MARGIN_TOP
    plot_bottom = _SVG_HEIGHT - _MARGIN_BOTTOM

    def px(x: float) -> str:
        return format_float(_scale(x, x_lo, x_hi, plot_left, plot_right))

    def py(y: float) -> str:
        return format_float(_scale(y, y_lo, y_hi, plot_bottom, plot_top))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SVG_WIDTH}" '
        f'height="{_SVG_HEIGHT}" viewBox="0 0 {_SVG_WIDTH} {_SVG_HEIGHT}">',
        f'<rect x="0" y="0" width="{_SVG_WIDTH}" height="{_SVG_HEIGHT}" fill="white"/>',
        f'<line x1="{plot_left}" y1="{plot_bottom}" x2="{plot_right}" y2="{plot_bottom}" '
        'stroke="black" stroke-width="1"/>',
        f'<line x1="{plot_left}" y1="{plot_top}" x2="{plot_left}" y2="{plot_bottom}" '
        'stroke="black" stroke-width="1"/>',
    ]
    for tick in _axis_ticks(x_lo, x_hi):
        tx = px(tick)
        parts.append(
            f'<line x1="{tx}" y1="{plot_bottom}" x2="{tx}" y2="{plot_bottom + 5}" '
            'stroke="black" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{tx}" y="{plot_bottom + 18}" font-size="11" '
            f'text-anchor="middle" font-family="sans-serif">{format_float(tick)}</text>'
        )
    for tick in _axis_ticks(y_lo, y_hi):
        ty = py(tick)
        parts.append(
            f'<line x1="{plot_left - 5}" y1="{ty}" x2="{plot_left}" y2="{ty}" '
            'stroke="black" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{plot_left - 8}" y="{ty}" font-size="11" text-anchor="end" '
            f'dominant-baseline="middle" font-family="sans-serif">{format_float(tick)}</text>'
        )
    parts.append(
        f'<text x="{(plot_left + plot_right) // 2}" y="{_SVG_HEIGHT - 10}" font-size="13" '
        f'text-anchor="middle" font-family="sans-serif">{_escape(x_label)}</text>'
    )
    parts.append(
        f'<text x="14" y="{(plot_top + plot_bottom) // 2}" font-size="13" '
        f'text-anchor="middle" font-family="sans-serif" '
        f'transform="rotate(-90 14 {(plot_top + plot_bottom) // 2})">{_escape(y_label)}</text>'
    )
    for i, (name, pts) in enumerate(named):
        color = _PALETTE[i % len(_PALETTE)]
        points = " ".join(f"{px(x)},{py(y)}" for x, y in sorted(pts))
        parts.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{points}"/>'
        )
        legend_y = plot_top + 16 * i
        parts.append(
            f'<line x1="{plot_right - 110}" y1="{legend_y}" x2="{plot_right - 90}" '
            f'y2="{legend_y}" stroke="{color}" stroke-width="1.5"/>'
        )
        parts.append(
            f'<text x="{plot_right - 84}" y="{legend_y}" font-size="11" '
            f'dominant-baseline="middle" font-family="sans-serif">{_escape(name)}</text>'
        )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
