"""Dependency-free SVG charts with deterministic output bytes."""
from __future__ import annotations

import math
from xml.sax.saxutils import escape

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"]

W, H = 640, 300
LEFT, RIGHT, TOP, BOTTOM = 64, 150, 30, 40


def _num(x: float) -> str:
    return f"{x:.2f}"


def _finite(values):
    return [v for v in values if v is not None and math.isfinite(v)]


def _panel(title: str, series: list[tuple[str, list[float], list[float]]], y0: int) -> list[str]:
    out = [f'<text x="{LEFT}" y="{y0 + 18}" font-size="13">{escape(title)}</text>']
    xs = _finite([x for _, sx, _ in series for x in sx])
    ys = _finite([y for _, _, sy in series for y in sy])
    pw, ph = W - LEFT - RIGHT, H - TOP - BOTTOM
    top = y0 + TOP
    out.append(f'<rect x="{LEFT}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>')
    if not xs or not ys:
        return out
    xmin, xmax = min(xs), max(xs)
    ymin, ymax = min(ys), max(ys)
    if xmax == xmin:
        xmax = xmin + 1
    if ymax == ymin:
        ymax = ymin + 1
    sx = lambda x: LEFT + (x - xmin) / (xmax - xmin) * pw  # noqa: E731
    sy = lambda y: top + ph - (y - ymin) / (ymax - ymin) * ph  # noqa: E731
    for frac in (0.0, 0.5, 1.0):
        yv = ymin + frac * (ymax - ymin)
        out.append(f'<text x="{LEFT - 6}" y="{_num(sy(yv) + 4)}" font-size="10" text-anchor="end">{yv:.4g}</text>')
        xv = xmin + frac * (xmax - xmin)
        out.append(f'<text x="{_num(sx(xv))}" y="{top + ph + 14}" font-size="10" text-anchor="middle">{xv:.4g}</text>')
    for i, (label, px, py) in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{_num(sx(x))},{_num(sy(y))}" for x, y in zip(px, py)
                       if y is not None and math.isfinite(y))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = top + 12 + 14 * i
        out.append(f'<line x1="{LEFT + pw + 10}" y1="{ly}" x2="{LEFT + pw + 26}" y2="{ly}" stroke="{color}"/>')
        out.append(f'<text x="{LEFT + pw + 30}" y="{ly + 4}" font-size="10">{escape(label)}</text>')
    return out


def curves_svg(panels: list[tuple[str, list[tuple[str, list[float], list[float]]]]]) -> str:
    """Stacked line-chart panels; each panel is (title, [(label, xs, ys), ...])."""
    height = H * len(panels)
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{height}" '
             f'viewBox="0 0 {W} {height}" font-family="sans-serif">',
             f'<rect width="{W}" height="{height}" fill="white"/>']
    for i, (title, series) in enumerate(panels):
        parts.extend(_panel(title, series, i * H))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def bar_chart_svg(title: str, items: list[tuple[str, float]]) -> str:
    """Horizontal bars sorted by descending value (ties keep input order)."""
    items = sorted(items, key=lambda kv: -kv[1])
    row = 22
    height = TOP + row * max(len(items), 1) + 20
    vmax = max([v for _, v in items] + [1.0])
    width = W - LEFT - RIGHT
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{height}" '
             f'viewBox="0 0 {W} {height}" font-family="sans-serif">',
             f'<rect width="{W}" height="{height}" fill="white"/>',
             f'<text x="{LEFT}" y="18" font-size="13">{escape(title)}</text>']
    for i, (label, value) in enumerate(items):
        y = TOP + i * row
        bw = value / vmax * width
        parts.append(f'<text x="{LEFT - 6}" y="{y + 14}" font-size="10" text-anchor="end">{escape(label)}</text>')
        parts.append(f'<rect x="{LEFT}" y="{y + 3}" width="{_num(bw)}" height="{row - 6}" '
                     f'fill="{PALETTE[i % len(PALETTE)]}"/>')
        parts.append(f'<text x="{_num(LEFT + bw + 4)}" y="{y + 14}" font-size="10">{value:.6g}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
