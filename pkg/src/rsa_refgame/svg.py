"""Minimal standalone SVG plots with byte-stable output."""

from __future__ import annotations

from typing import Sequence
from xml.sax.saxutils import escape

W, H = 480, 360
LEFT, RIGHT, TOP, BOTTOM = 60, 20, 40, 50

PROVENANCE_COLOURS = {"logic": "#d62728", "topk": "#1f77b4", "all": "#7f7f7f"}


def _f(x: float) -> str:
    return f"{x:.3f}"


def _scale(v, lo, hi, a, b):
    if hi == lo:
        return (a + b) / 2
    return a + (v - lo) * (b - a) / (hi - lo)


def _frame(title, xlabel, ylabel, manifest_hash, body, xr, yr) -> str:
    head = ['<?xml version="1.0" encoding="UTF-8"?>']
    if manifest_hash:
        head.append(f"<!-- manifest_sha256: {manifest_hash} -->")
    head.append(f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">')
    head.append(f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>')
    head.append(f'<text x="{W / 2}" y="20" text-anchor="middle" font-size="13">{escape(title)}</text>')
    x0, x1, y0, y1 = LEFT, W - RIGHT, H - BOTTOM, TOP
    head.append(f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>')
    head.append(f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>')
    head.append(f'<text x="{x0}" y="{y0 + 15}" font-size="10">{_f(xr[0])}</text>')
    head.append(f'<text x="{x1}" y="{y0 + 15}" font-size="10" text-anchor="end">{_f(xr[1])}</text>')
    head.append(f'<text x="{x0 - 4}" y="{y0}" font-size="10" text-anchor="end">{_f(yr[0])}</text>')
    head.append(f'<text x="{x0 - 4}" y="{y1 + 8}" font-size="10" text-anchor="end">{_f(yr[1])}</text>')
    head.append(f'<text x="{(x0 + x1) / 2}" y="{H - 12}" text-anchor="middle" font-size="11">{escape(xlabel)}</text>')
    head.append(f'<text x="14" y="{(y0 + y1) / 2}" text-anchor="middle" font-size="11" '
                f'transform="rotate(-90 14 {(y0 + y1) / 2})">{escape(ylabel)}</text>')
    return "\n".join(head + body + ["</svg>"]) + "\n"


def scatter(points: Sequence[tuple], title: str = "", xlabel: str = "", ylabel: str = "",
            manifest_hash: str | None = None) -> str:
    """One ``<circle class="pt">`` per (x, y, provenance) point."""
    xs = [p[0] for p in points] or [0.0]
    ys = [p[1] for p in points] or [0.0]
    xr, yr = (min(xs), max(xs)), (min(ys), max(ys))
    body = []
    for x, y, prov in points:
        cx = _scale(x, *xr, LEFT, W - RIGHT)
        cy = _scale(y, *yr, H - BOTTOM, TOP)
        colour = PROVENANCE_COLOURS.get(prov, "black")
        body.append(f'<circle class="pt" cx="{_f(cx)}" cy="{_f(cy)}" r="1.5" fill="{colour}" fill-opacity="0.5"/>')
    return _frame(title, xlabel, ylabel, manifest_hash, body, xr, yr)


def histogram(counts: Sequence[int], edges: Sequence[float], title: str = "", xlabel: str = "correlation",
              ylabel: str = "groups", manifest_hash: str | None = None) -> str:
    top = max(counts) if len(counts) else 0
    xr, yr = (edges[0], edges[-1]) if len(edges) else (0.0, 1.0), (0.0, float(max(top, 1)))
    body = []
    for c, lo, hi in zip(counts, edges[:-1], edges[1:]):
        if not c:
            continue
        x0 = _scale(lo, *xr, LEFT, W - RIGHT)
        x1 = _scale(hi, *xr, LEFT, W - RIGHT)
        y = _scale(c, *yr, H - BOTTOM, TOP)
        body.append(f'<rect class="bar" x="{_f(x0)}" y="{_f(y)}" width="{_f(x1 - x0)}" '
                    f'height="{_f(H - BOTTOM - y)}" fill="#7f7f7f" data-count="{c}"/>')
    return _frame(title, xlabel, ylabel, manifest_hash, body, xr, yr)
