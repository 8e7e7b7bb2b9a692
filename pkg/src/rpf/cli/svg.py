"""Minimal deterministic SVG line plots (polyline based, 800x500 viewBox)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

WIDTH, HEIGHT = 800, 500
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


@dataclass
class Series:
    label: str
    x: Sequence[float]
    y: Sequence[float]  # NaN breaks the line


@dataclass
class Panel:
    series: list
    xlabel: str
    ylabel: str
    xlog: bool = False
    ylog: bool = False
    title: str = ""


def _f(v):
    return f"{v:.2f}"


def _esc(s):
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _ticks(lo, hi, log):
    if log:
        a, b = math.floor(lo), math.ceil(hi)
        step = max(1, (b - a) // 8)
        return [float(t) for t in range(a, b + 1, step) if lo - 1e-9 <= t <= hi + 1e-9]
    span = hi - lo
    raw = span / 6 if span > 0 else 1.0
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    out, t = [], start
    while t <= hi + 1e-9 * step:
        out.append(t)
        t += step
    return out


def _tick_label(t, log):
    return f"1e{int(t)}" if log else f"{t:.4g}"


def _panel(p: Panel, x0, y0, w, h):
    tx = (lambda v: math.log10(v)) if p.xlog else (lambda v: v)
    ty = (lambda v: math.log10(v)) if p.ylog else (lambda v: v)
    pts = []
    for s in p.series:
        for x, y in zip(s.x, s.y):
            if math.isfinite(y) and (not p.ylog or y > 0) and (not p.xlog or x > 0):
                pts.append((tx(x), ty(y)))
    if not pts:
        return [f'<text x="{_f(x0 + w / 2)}" y="{_f(y0 + h / 2)}">no data</text>']
    xlo, xhi = min(q[0] for q in pts), max(q[0] for q in pts)
    ylo, yhi = min(q[1] for q in pts), max(q[1] for q in pts)
    if xhi == xlo:
        xlo, xhi = xlo - 0.5, xhi + 0.5
    if yhi == ylo:
        ylo, yhi = ylo - 0.5, yhi + 0.5
    pad = 0.05 * (yhi - ylo)
    ylo, yhi = ylo - pad, yhi + pad

    def px(v):
        return x0 + (v - xlo) / (xhi - xlo) * w

    def py(v):
        return y0 + h - (v - ylo) / (yhi - ylo) * h

    out = [f'<rect x="{_f(x0)}" y="{_f(y0)}" width="{_f(w)}" height="{_f(h)}" fill="none" stroke="#000"/>']
    for t in _ticks(xlo, xhi, p.xlog):
        X = px(t)
        out.append(f'<line x1="{_f(X)}" y1="{_f(y0)}" x2="{_f(X)}" y2="{_f(y0 + h)}" stroke="#ddd"/>')
        out.append(f'<text x="{_f(X)}" y="{_f(y0 + h + 14)}" font-size="10" text-anchor="middle">{_tick_label(t, p.xlog)}</text>')
    for t in _ticks(ylo, yhi, p.ylog):
        Y = py(t)
        out.append(f'<line x1="{_f(x0)}" y1="{_f(Y)}" x2="{_f(x0 + w)}" y2="{_f(Y)}" stroke="#ddd"/>')
        out.append(f'<text x="{_f(x0 - 4)}" y="{_f(Y + 3)}" font-size="10" text-anchor="end">{_tick_label(t, p.ylog)}</text>')
    for k, s in enumerate(p.series):
        color = _COLORS[k % len(_COLORS)]
        seg = []
        segments = []
        for x, y in zip(s.x, s.y):
            ok = math.isfinite(y) and (not p.ylog or y > 0) and (not p.xlog or x > 0)
            if ok:
                seg.append(f"{_f(px(tx(x)))},{_f(py(ty(y)))}")
            elif seg:
                segments.append(seg)
                seg = []
        if seg:
            segments.append(seg)
        for seg in segments:
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{" ".join(seg)}"/>')
        out.append(
            f'<text x="{_f(x0 + w - 6)}" y="{_f(y0 + 14 + 14 * k)}" font-size="11" '
            f'text-anchor="end" fill="{color}">{_esc(s.label)}</text>'
        )
    out.append(f'<text x="{_f(x0 + w / 2)}" y="{_f(y0 + h + 30)}" font-size="12" text-anchor="middle">{_esc(p.xlabel)}</text>')
    out.append(
        f'<text x="{_f(x0 - 52)}" y="{_f(y0 + h / 2)}" font-size="12" text-anchor="middle" '
        f'transform="rotate(-90 {_f(x0 - 52)} {_f(y0 + h / 2)})">{_esc(p.ylabel)}</text>'
    )
    if p.title:
        out.append(f'<text x="{_f(x0 + w / 2)}" y="{_f(y0 - 6)}" font-size="13" text-anchor="middle">{_esc(p.title)}</text>')
    return out


def render(panels: list) -> str:
    """Stack ``panels`` vertically in one 800x500 SVG document."""
    left, right, top, bottom = 80, 20, 24, 40
    slot = HEIGHT / len(panels)
    body = []
    for i, p in enumerate(panels):
        y0 = i * slot + top
        body += _panel(p, left, y0, WIDTH - left - right, slot - top - bottom)
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" '
        f'width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif">'
    )
    return "\n".join([head, '<rect width="100%" height="100%" fill="#fff"/>', *body, "</svg>"]) + "\n"
