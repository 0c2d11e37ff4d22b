"""Dependency-free SVG output: route maps and per-epoch bandit traces.

Output is a pure function of the input, so identical inputs give
byte-identical files.
"""
from __future__ import annotations

from typing import Sequence

from .instance import Instance
from .neighborhoods import HeuristicId, N_HEURISTICS
from .solution import Tour

PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b",
           "#e377c2", "#17becf", "#bcbd22", "#7f7f7f", "#d62728")


def _num(x: float) -> str:
    return f"{x:.2f}"


def route_svg(inst: Instance, tour: Tour, size: int = 600, margin: int = 20,
              title: str | None = None) -> str:
    """Route map: red depot, hollow gray customers, black stations, one polyline per route."""
    xy = inst.coords
    lo = xy.min(axis=0)
    span = max(float((xy.max(axis=0) - lo).max()), 1e-9)
    scale = (size - 2 * margin) / span

    def pt(v: int) -> tuple[str, str]:
        x = margin + (xy[v, 0] - lo[0]) * scale
        y = size - margin - (xy[v, 1] - lo[1]) * scale  # y axis points up
        return _num(x), _num(y)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
           f'viewBox="0 0 {size} {size}">',
           f'<rect width="{size}" height="{size}" fill="white"/>']
    if title:
        out.append(f'<text x="{margin}" y="14" font-size="12" font-family="sans-serif">{title}</text>')
    for i, nodes in enumerate(tour.routes()):
        pts = " ".join(",".join(pt(v)) for v in [0, *nodes, 0])
        out.append(f'<polyline class="route" points="{pts}" fill="none" '
                   f'stroke="{PALETTE[i % len(PALETTE)]}" stroke-width="1.2"/>')
    for c in inst.customers:
        x, y = pt(c)
        out.append(f'<circle class="customer" cx="{x}" cy="{y}" r="3.5" fill="none" '
                   f'stroke="gray" stroke-width="1"/>')
    for s in inst.stations:
        x, y = pt(s)
        out.append(f'<circle class="station" cx="{x}" cy="{y}" r="4" fill="black"/>')
    x, y = pt(0)
    out.append(f'<rect class="depot" x="{_num(float(x) - 5)}" y="{_num(float(y) - 5)}" '
               f'width="10" height="10" fill="red"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _panel(series: Sequence[Sequence[float]], x0: float, y0: float, w: float, h: float,
           label: str) -> list[str]:
    n = max((len(s) for s in series), default=0)
    top = max((max(s) for s in series if len(s)), default=0.0)
    top = top if top > 0 else 1.0
    out = [f'<rect x="{_num(x0)}" y="{_num(y0)}" width="{_num(w)}" height="{_num(h)}" '
           f'fill="none" stroke="black" stroke-width="0.5"/>',
           f'<text x="{_num(x0)}" y="{_num(y0 - 4)}" font-size="11" font-family="sans-serif">'
           f'{label} (max {top:g})</text>']
    for a, s in enumerate(series):
        if not len(s):
            continue
        dx = w / max(n - 1, 1)
        pts = " ".join(f"{_num(x0 + i * dx)},{_num(y0 + h - v / top * h)}" for i, v in enumerate(s))
        out.append(f'<polyline class="arm{a}" points="{pts}" fill="none" '
                   f'stroke="{PALETTE[a % len(PALETTE)]}" stroke-width="1"/>')
    return out


def trace_svg(bandit_trace: Sequence[dict], width: int = 800, height: int = 520,
              title: str | None = None) -> str:
    """Per-epoch selection counts (top) and reward totals (bottom) for every heuristic."""
    if not bandit_trace:
        raise ValueError("no bandit trace data")
    sel = [[float(e["selections"][a]) for e in bandit_trace] for a in range(N_HEURISTICS)]
    rew = [[float(e["rewards"][a]) for e in bandit_trace] for a in range(N_HEURISTICS)]
    m, legend_w = 40, 130
    pw = width - 2 * m - legend_w
    ph = (height - 3 * m) / 2
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           f'<rect width="{width}" height="{height}" fill="white"/>']
    if title:
        out.append(f'<text x="{m}" y="14" font-size="12" font-family="sans-serif">{title}</text>')
    out += _panel(sel, m, m, pw, ph, "selections per epoch")
    out += _panel(rew, m, 2 * m + ph, pw, ph, "rewards per epoch")
    lx = width - legend_w
    for a in range(N_HEURISTICS):
        y = m + 16 * a
        out.append(f'<line x1="{lx}" y1="{y}" x2="{lx + 16}" y2="{y}" '
                   f'stroke="{PALETTE[a % len(PALETTE)]}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 20}" y="{y + 4}" font-size="11" font-family="sans-serif">'
                   f'{HeuristicId(a).label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
