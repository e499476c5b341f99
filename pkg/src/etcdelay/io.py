"""CSV, JSON and SVG artifact writers."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np


def _fmt(v) -> str:
    v = float(v)
    if math.isnan(v):
        return "nan"
    return "%.17g" % v


def trajectory_header(n: int, m: int) -> list[str]:
    return (["t"] + [f"x{i + 1}" for i in range(n)] + [f"u{j + 1}" for j in range(m)]
            + ["eps_norm", "V", "residual", "event_flag"])


def write_trajectory_csv(path, result) -> int:
    n = result.x.shape[1]
    m = result.u.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(trajectory_header(n, m))
        for i in range(result.t.shape[0]):
            w.writerow(
                [_fmt(result.t[i])]
                + [_fmt(v) for v in result.x[i]]
                + [_fmt(v) for v in result.u[i]]
                + [_fmt(result.eps_norm[i]), _fmt(result.V[i]), _fmt(result.residual[i]),
                   str(int(result.event_flag[i]))]
            )
    return result.t.shape[0]


def write_events_csv(path, event_log) -> int:
    states = event_log.sampled_states
    n = len(states[0]) if states else 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "t_i", "gap_from_previous"] + [f"x{i + 1}" for i in range(n)])
        prev = None
        for i, (t, x) in enumerate(zip(event_log.times, states)):
            gap = "nan" if prev is None else _fmt(t - prev)
            w.writerow([str(i), _fmt(t), gap] + [_fmt(v) for v in x])
            prev = t
    return len(event_log.times)


def write_table_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else str(v) for v in row])


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def write_json(path, data) -> None:
    Path(path).write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# SVG line plots

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def _decimate(t, y, max_points):
    if t.size <= max_points:
        return t, y
    idx = np.unique(np.linspace(0, t.size - 1, max_points).astype(int))
    return t[idx], y[idx]


def svg_line_plot(path, t, series: dict, title: str = "", ylabel: str = "",
                  event_times=None, width: int = 720, height: int = 360,
                  max_points: int = 3000) -> None:
    """Write a self-contained SVG with one polyline per series.

    ``event_times`` are drawn as dots on the time axis.
    """
    t = np.asarray(t, dtype=float)
    pad_l, pad_r, pad_t, pad_b = 60, 20, 30, 40
    pw, ph = width - pad_l - pad_r, height - pad_t - pad_b
    ys = [np.asarray(v, dtype=float) for v in series.values()]
    finite = np.concatenate([y[np.isfinite(y)] for y in ys]) if ys else np.zeros(1)
    finite = finite if finite.size else np.zeros(1)
    y_lo, y_hi = float(finite.min()), float(finite.max())
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 1.0, y_hi + 1.0
    t_lo, t_hi = float(t[0]), float(t[-1]) if t[-1] > t[0] else float(t[0]) + 1.0

    def px(tv):
        return pad_l + (tv - t_lo) / (t_hi - t_lo) * pw

    def py(yv):
        return pad_t + (y_hi - yv) / (y_hi - y_lo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{width / 2}" y="18" text-anchor="middle" font-size="14" '
        f'font-family="sans-serif">{title}</text>',
        f'<line x1="{pad_l}" y1="{pad_t + ph}" x2="{pad_l + pw}" y2="{pad_t + ph}" stroke="black"/>',
        f'<line x1="{pad_l}" y1="{pad_t}" x2="{pad_l}" y2="{pad_t + ph}" stroke="black"/>',
    ]
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        tv = t_lo + frac * (t_hi - t_lo)
        yv = y_lo + frac * (y_hi - y_lo)
        out.append(f'<text x="{px(tv):.1f}" y="{pad_t + ph + 16}" text-anchor="middle" '
                   f'font-size="11" font-family="sans-serif">{tv:.3g}</text>')
        out.append(f'<text x="{pad_l - 6}" y="{py(yv) + 4:.1f}" text-anchor="end" '
                   f'font-size="11" font-family="sans-serif">{yv:.3g}</text>')
    if y_lo < 0 < y_hi:
        out.append(f'<line x1="{pad_l}" y1="{py(0):.1f}" x2="{pad_l + pw}" y2="{py(0):.1f}" '
                   'stroke="#bbbbbb" stroke-dasharray="4 3"/>')
    for i, (name, y) in enumerate(series.items()):
        tt, yy = _decimate(t, np.asarray(y, dtype=float), max_points)
        ok = np.isfinite(yy)
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(tt[ok], yy[ok]))
        color = _COLORS[i % len(_COLORS)]
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.4" points="{pts}"/>')
        out.append(f'<text x="{pad_l + pw - 4}" y="{pad_t + 14 + 14 * i}" text-anchor="end" '
                   f'font-size="12" fill="{color}" font-family="sans-serif">{name}</text>')
    for te in event_times if event_times is not None else ():
        out.append(f'<circle cx="{px(te):.2f}" cy="{pad_t + ph}" r="2.5" fill="red"/>')
    out.append(f'<text x="14" y="{pad_t + ph / 2}" font-size="12" font-family="sans-serif" '
               f'transform="rotate(-90 14 {pad_t + ph / 2})" text-anchor="middle">{ylabel}</text>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n")


def write_plots(outdir, result, prefix: str = "") -> list[Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    events = result.event_log.times[1:] if result.event_log.times else None
    paths = []
    p = outdir / f"{prefix}state.svg"
    svg_line_plot(p, result.t, {f"x{i + 1}": result.x[:, i] for i in range(result.x.shape[1])},
                  title="state", ylabel="x", event_times=events)
    paths.append(p)
    p = outdir / f"{prefix}control.svg"
    svg_line_plot(p, result.t, {f"u{j + 1}": result.u[:, j] for j in range(result.u.shape[1])},
                  title="control input", ylabel="u", event_times=events)
    paths.append(p)
    if np.any(np.isfinite(result.residual)):
        p = outdir / f"{prefix}residual.svg"
        svg_line_plot(p, result.t, {"residual": result.residual}, title="trigger residual",
                      ylabel="r", event_times=events)
        paths.append(p)
    return paths
