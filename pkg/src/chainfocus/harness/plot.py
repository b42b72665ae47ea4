"""Static SVG line charts from metrics CSVs.

The output is a pure function of the input bytes: coordinates are
printed with fixed precision and no timestamps or ids are embedded.
"""
from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence, Union
from xml.sax.saxutils import escape

from .runner import read_csv

WIDTH, HEIGHT = 640, 400
MARGIN = dict(left=64, right=16, top=24, bottom=48)
COLOURS = ("#1f4e79", "#b23a48", "#3c763d", "#8a6d3b", "#5b3f8c", "#31708f")
DASHES = ("", "6,4", "2,3", "8,3,2,3")


class PlotError(ValueError):
    pass


def _nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-9 * step:
        ticks.append(round(t, 10))
        t += step
    return ticks


def _num(v: float) -> str:
    return f"{v:.2f}"


def emit_plot(csv_paths: Union[str, Path, Sequence[Union[str, Path]]], columns: Sequence[str],
              out_path: Union[str, Path]) -> str:
    """Write one polyline per (file, column) over the first CSV column.

    Returns the SVG text.  With several input files, series are labelled
    ``file:column`` and drawn with different dash patterns.
    """
    if isinstance(csv_paths, (str, Path)):
        csv_paths = [csv_paths]
    series = []
    x_label = None
    for path in csv_paths:
        header, rows = read_csv(Path(path))
        if not header:
            raise PlotError(f"{path}: empty CSV")
        x_label = x_label or header[0]
        for col in columns:
            if col not in header:
                raise PlotError(f"{path}: unknown column {col!r}")
            pts = [(float(r[header[0]]), float(r[col])) for r in rows]
            label = col if len(csv_paths) == 1 else f"{Path(path).parent.name or Path(path).stem}:{col}"
            series.append((label, pts))

    xs = [p[0] for _, pts in series for p in pts]
    ys = [p[1] for _, pts in series for p in pts]
    x_lo, x_hi = (min(xs), max(xs)) if xs else (0.0, 1.0)
    y_lo, y_hi = (min(ys), max(ys)) if ys else (0.0, 1.0)
    if y_lo == y_hi:
        y_lo, y_hi = y_lo - 1.0, y_hi + 1.0
    if x_lo == x_hi:
        x_hi = x_lo + 1.0
    xt, yt = _nice_ticks(x_lo, x_hi), _nice_ticks(y_lo, y_hi)
    x_lo, x_hi = min(x_lo, xt[0]), max(x_hi, xt[-1])
    y_lo, y_hi = min(y_lo, yt[0]), max(y_hi, yt[-1])

    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def sx(x):
        return MARGIN["left"] + (x - x_lo) / (x_hi - x_lo) * pw

    def sy(y):
        return MARGIN["top"] + ph - (y - y_lo) / (y_hi - y_lo) * ph

    y_label = ", ".join(columns)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<g stroke="#000" stroke-width="1">'
        f'<line x1="{MARGIN["left"]}" y1="{_num(sy(y_lo))}" x2="{MARGIN["left"] + pw}" y2="{_num(sy(y_lo))}"/>'
        f'<line x1="{MARGIN["left"]}" y1="{MARGIN["top"]}" x2="{MARGIN["left"]}" y2="{_num(sy(y_lo))}"/></g>',
    ]
    for t in xt:
        out.append(f'<line x1="{_num(sx(t))}" y1="{_num(sy(y_lo))}" x2="{_num(sx(t))}" '
                   f'y2="{_num(sy(y_lo) + 4)}" stroke="#000"/>'
                   f'<text x="{_num(sx(t))}" y="{_num(sy(y_lo) + 16)}" text-anchor="middle">{t:g}</text>')
    for t in yt:
        out.append(f'<line x1="{MARGIN["left"] - 4}" y1="{_num(sy(t))}" x2="{MARGIN["left"]}" '
                   f'y2="{_num(sy(t))}" stroke="#000"/>'
                   f'<text x="{MARGIN["left"] - 6}" y="{_num(sy(t) + 4)}" text-anchor="end">{t:g}</text>')
    out.append(f'<text x="{_num(MARGIN["left"] + pw / 2)}" y="{HEIGHT - 10}" '
               f'text-anchor="middle">{escape(x_label or "")}</text>')
    out.append(f'<text x="14" y="{_num(MARGIN["top"] + ph / 2)}" text-anchor="middle" '
               f'transform="rotate(-90 14 {_num(MARGIN["top"] + ph / 2)})">{escape(y_label)}</text>')
    for i, (label, pts) in enumerate(series):
        colour = COLOURS[i % len(COLOURS)]
        dash = DASHES[i % len(DASHES)]
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        if pts:
            coords = " ".join(f"{_num(sx(x))},{_num(sy(y))}" for x, y in pts)
            out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5"{dash_attr} '
                       f'points="{coords}"/>')
        ly = MARGIN["top"] + 12 + 14 * i
        lx = MARGIN["left"] + 10
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 20}" y2="{ly - 4}" stroke="{colour}" '
                   f'stroke-width="1.5"{dash_attr}/><text x="{lx + 26}" y="{ly}">{escape(label)}</text>')
    out.append("</svg>")
    text = "\n".join(out) + "\n"
    Path(out_path).write_text(text, encoding="utf-8")
    return text
