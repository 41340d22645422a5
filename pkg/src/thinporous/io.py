"""Deterministic CSV/JSON writers and a minimal SVG plotter."""

from __future__ import annotations

import csv
import json
import math
from fractions import Fraction
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path, columns: dict) -> Path:
    """Write equal-length columns, floats at full precision."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = list(columns)
    cols = [np.ravel(np.asarray(columns[n], dtype=object)) for n in names]
    n = {c.size for c in cols}
    if len(n) > 1:
        raise ValueError(f"columns have different lengths: {sorted(n)}")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in zip(*cols):
            w.writerow([_fmt(v) for v in row])
    return path


def write_rows_csv(path, rows: list[dict], fields: list[str] | None = None) -> Path:
    fields = fields or (list(rows[0]) if rows else [])
    return write_csv(path, {f: [row.get(f, "") for row in rows] for f in fields})


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, Fraction):
        return str(obj) if obj.denominator != 1 else int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj


def dumps(obj) -> str:
    return json.dumps(to_jsonable(obj), indent=2, sort_keys=True) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj))
    return path


# ---------------------------------------------------------------------------
# SVG
# ---------------------------------------------------------------------------

_COLOURS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf")


def _ticks(lo, hi, n=5):
    if hi <= lo:
        return [lo]
    step = 10 ** math.floor(math.log10((hi - lo) / n))
    for mult in (1, 2, 5, 10):
        if (hi - lo) / (step * mult) <= n:
            step *= mult
            break
    start = math.ceil(lo / step) * step
    out, t = [], start
    while t <= hi + 1e-12 * step:
        out.append(round(t, 12))
        t += step
    return out


def svg_plot(path, series, xlabel: str = "", ylabel: str = "", title: str = "",
             loglog: bool = False, width: int = 640, height: int = 420) -> Path:
    """Line plot of ``series = [(label, x, y), ...]``; log-log when asked.

    Non-positive points are skipped on log axes.
    """
    tf = (lambda a: np.log10(a)) if loglog else (lambda a: a)
    pts = []
    for label, x, y in series:
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        ok = np.isfinite(x) & np.isfinite(y)
        if loglog:
            ok &= (x > 0) & (y > 0)
        pts.append((label, tf(x[ok]) if ok.any() else np.array([]), tf(y[ok]) if ok.any() else np.array([])))
    allx = np.concatenate([p[1] for p in pts] + [np.array([0.0, 1.0])] * (not any(p[1].size for p in pts)))
    ally = np.concatenate([p[2] for p in pts] + [np.array([0.0, 1.0])] * (not any(p[2].size for p in pts)))
    x0, x1 = float(allx.min()), float(allx.max())
    y0, y1 = float(ally.min()), float(ally.max())
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    ml, mr, mt, mb = 70, 20, 36, 50
    pw, ph = width - ml - mr, height - mt - mb

    def sx(v):
        return ml + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return mt + ph - (v - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
           f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
           f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for t in _ticks(x0, x1):
        lab = f"1e{t:g}" if loglog else f"{t:g}"
        out.append(f'<line x1="{sx(t):.2f}" y1="{mt + ph}" x2="{sx(t):.2f}" y2="{mt + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{sx(t):.2f}" y="{mt + ph + 16}" text-anchor="middle">{escape(lab)}</text>')
    for t in _ticks(y0, y1):
        lab = f"1e{t:g}" if loglog else f"{t:g}"
        out.append(f'<line x1="{ml - 4}" y1="{sy(t):.2f}" x2="{ml}" y2="{sy(t):.2f}" stroke="black"/>')
        out.append(f'<text x="{ml - 6}" y="{sy(t) + 4:.2f}" text-anchor="end">{escape(lab)}</text>')
    for k, (label, x, y) in enumerate(pts):
        colour = _COLOURS[k % len(_COLOURS)]
        if x.size:
            d = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, y))
            out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{d}"/>')
            if x.size <= 20:
                out.extend(f'<circle cx="{sx(a):.2f}" cy="{sy(b):.2f}" r="3" fill="{colour}"/>'
                           for a, b in zip(x, y))
        ly = mt + 14 + 14 * k
        out.append(f'<line x1="{ml + pw - 120}" y1="{ly - 4}" x2="{ml + pw - 100}" y2="{ly - 4}" '
                   f'stroke="{colour}" stroke-width="2"/>')
        out.append(f'<text x="{ml + pw - 96}" y="{ly}">{escape(str(label))}</text>')
    out.append(f'<text x="{ml + pw / 2:.1f}" y="{height - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{mt + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {mt + ph / 2:.1f})">{escape(ylabel)}</text>')
    out.append(f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="13">{escape(title)}</text>')
    out.append("</svg>")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(out) + "\n")
    return path


def write_stokes_csv(path, solution) -> Path:
    """Cell-centred ``x1, x2, u1, u2, p`` of a Stokes solution (fluid cells only)."""
    g = solution.grid
    uc, vc = solution.centred_velocity()
    X, Y = np.meshgrid(g.xc(), g.yc(), indexing="ij")
    f = g.fluid
    return write_csv(path, {"x1": X[f], "x2": Y[f], "u1": uc[f], "u2": vc[f], "p": solution.p[f]})


def svg_slice(path, solution, column: int | None = None, title: str = "") -> Path:
    """Profile of the centred horizontal velocity along one grid column."""
    g = solution.grid
    i = g.nx // 2 if column is None else column
    uc, _ = solution.centred_velocity()
    return svg_plot(path, [("u1", g.yc(), uc[i])], xlabel="x2", ylabel="u1", title=title)
