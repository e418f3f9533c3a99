"""Minimal SVG line charts with a logarithmic y-axis."""

import math
from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 480
MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 70, 170, 40, 50
PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"]
DASHES = ["", "6,3", "2,2", "8,3,2,3"]


@dataclass(frozen=True)
class Curve:
    label: str
    x: np.ndarray
    y: np.ndarray
    dashed: bool = False


def _finite_positive(curve):
    x = np.asarray(curve.x, dtype=float)
    y = np.asarray(curve.y, dtype=float)
    keep = np.isfinite(x) & np.isfinite(y) & (y > 0)
    return x[keep], y[keep]


def _decades(curves):
    ys = [np.log10(_finite_positive(c)[1]) for c in curves]
    ys = np.concatenate([y for y in ys if y.size] or [np.zeros(1)])
    lo, hi = math.floor(ys.min()), math.ceil(ys.max())
    if hi == lo:
        hi += 1
    return lo, hi


def _x_range(curves):
    xs = [_finite_positive(c)[0] for c in curves]
    xs = np.concatenate([x for x in xs if x.size] or [np.zeros(1)])
    lo, hi = float(xs.min()), float(xs.max())
    if hi == lo:
        hi = lo + 1.0
    return lo, hi


def _x_ticks(lo, hi, count=5):
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 5, 10) if m * mag >= raw)
    start = math.ceil(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-9 * step:
        ticks.append(t)
        t += step
    return ticks


def line_chart(curves, title="", xlabel="iteration", ylabel=""):
    """SVG document (a string) with one polyline per curve."""
    curves = list(curves)
    x0, x1 = _x_range(curves)
    d0, d1 = _decades(curves)
    pw = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    ph = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

    def px(x):
        return MARGIN_LEFT + (x - x0) / (x1 - x0) * pw

    def py(y):
        return MARGIN_TOP + (d1 - math.log10(y)) / (d1 - d0) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="20" text-anchor="middle" font-size="13">{escape(title)}</text>',
    ]
    step = max(1, (d1 - d0) // 12)
    for d in range(d0, d1 + 1):
        y = MARGIN_TOP + (d1 - d) / (d1 - d0) * ph
        out.append(f'<line class="grid" x1="{MARGIN_LEFT}" y1="{y:.2f}" x2="{MARGIN_LEFT + pw}" '
                   f'y2="{y:.2f}" stroke="#dddddd" stroke-width="1"/>')
        if (d - d0) % step == 0:
            out.append(f'<text class="ytick" x="{MARGIN_LEFT - 6}" y="{y + 4:.2f}" '
                       f'text-anchor="end">1e{d}</text>')
    for t in _x_ticks(x0, x1):
        x = px(t)
        out.append(f'<line x1="{x:.2f}" y1="{MARGIN_TOP + ph}" x2="{x:.2f}" y2="{MARGIN_TOP + ph + 4}" '
                   f'stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{MARGIN_TOP + ph + 16}" text-anchor="middle">{t:g}</text>')
    out.append(f'<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{pw}" height="{ph}" '
               f'fill="none" stroke="black"/>')
    out.append(f'<text x="{MARGIN_LEFT + pw / 2:.1f}" y="{HEIGHT - 12}" '
               f'text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{MARGIN_TOP + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {MARGIN_TOP + ph / 2:.1f})">{escape(ylabel)}</text>')

    for i, c in enumerate(curves):
        color = PALETTE[i % len(PALETTE)]
        dash = "4,3" if c.dashed else DASHES[(i // len(PALETTE)) % len(DASHES)]
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        x, y = _finite_positive(c)
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, y))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash_attr} '
                   f'points="{pts}"><title>{escape(c.label)}</title></polyline>')
        ly = MARGIN_TOP + 14 + 16 * i
        lx = MARGIN_LEFT + pw + 10
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 20}" y2="{ly - 4}" stroke="{color}" '
                   f'stroke-width="1.5"{dash_attr}/>')
        out.append(f'<text x="{lx + 25}" y="{ly}">{escape(c.label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_chart(path, curves, **kwargs):
    with open(path, "w") as fh:
        fh.write(line_chart(curves, **kwargs))
