"""Standalone SVG rendering of sweep heatmaps and strategy time series.

Output is a pure function of the input CSV: no timestamps, fixed number
formatting, so identical input gives byte-identical files.
"""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .abm import TIMESERIES_HEADER
from .io import FormatError, read_csv
from .replicator import TRAJECTORY_HEADER
from .sweep import SWEEP_HEADER

COLOR_SCALES = {
    "viridis": ["#440154", "#3b528b", "#21918c", "#5ec962", "#fde725"],
    "redgreen": ["#c62828", "#f9a825", "#2e7d32"],
    "greys": ["#ffffff", "#000000"],
}

USER_COLORS = {"AllD": "#d62728", "BMedia": "#e6b800", "GMedia": "#1f77b4", "AllC": "#2ca02c"}
CREATOR_COLORS = {"Unsafe": "#d62728", "Safe": "#2ca02c"}
ETA_COLOR = "#000000"
MAX_POINTS = 2000


def _hex(c):
    return np.array([int(c[i:i + 2], 16) for i in (1, 3, 5)], dtype=float)


def color_for(value, scale="viridis"):
    stops = COLOR_SCALES[scale]
    v = min(1.0, max(0.0, float(value)))
    pos = v * (len(stops) - 1)
    i = min(int(pos), len(stops) - 2)
    frac = pos - i
    rgb = (1 - frac) * _hex(stops[i]) + frac * _hex(stops[i + 1])
    return "#" + "".join(f"{int(round(x)):02x}" for x in rgb)


def _num(v):
    return f"{v:.4g}"


def _svg_open(width, height):
    return [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
    ]


def _write(path, parts):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(parts) + "\n")
    return path


def _load_sweep(csv_path):
    _, rows = read_csv(csv_path, SWEEP_HEADER)
    if not rows:
        raise FormatError(f"{csv_path}: no data rows")
    x_name, y_name = rows[0][0], rows[0][2]
    try:
        cells = {}
        for r in rows:
            if r[0] != x_name or r[2] != y_name:
                raise FormatError(f"{csv_path}: mixed axis parameters")
            key = (float(r[1]), float(r[3]))
            if key in cells:
                raise FormatError(f"{csv_path}: duplicate cell {key}")
            cells[key] = (float(r[4]), r[7].strip().lower() == "true")
    except ValueError as exc:
        raise FormatError(f"{csv_path}: {exc}") from exc
    xs = sorted({k[0] for k in cells})
    ys = sorted({k[1] for k in cells})
    if len(xs) * len(ys) != len(cells):
        raise FormatError(f"{csv_path}: grid is not rectangular")
    eta = np.array([[cells[(x, y)][0] for y in ys] for x in xs])
    valid = np.array([[cells[(x, y)][1] for y in ys] for x in xs])
    return x_name, y_name, np.array(xs), np.array(ys), eta, valid


def render_heatmap(csv_path, out_svg_path, color_scale="viridis"):
    """Heatmap of eta over the two swept parameters, one rect per cell."""
    if color_scale not in COLOR_SCALES:
        raise ValueError(f"unknown color scale {color_scale!r}; choose from {sorted(COLOR_SCALES)}")
    x_name, y_name, xs, ys, eta, valid = _load_sweep(csv_path)
    nx, ny = len(xs), len(ys)
    left, top, plot_w, plot_h = 70, 30, 400, 400
    cw, ch = plot_w / nx, plot_h / ny
    width, height = left + plot_w + 110, top + plot_h + 60
    out = _svg_open(width, height)
    out += [
        "<defs>",
        '<pattern id="hatch" patternUnits="userSpaceOnUse" width="6" height="6">',
        '<rect width="6" height="6" fill="#dddddd"/>',
        '<path d="M0,6 L6,0" stroke="#555555" stroke-width="1"/>',
        "</pattern>",
        "</defs>",
        '<g id="cells">',
    ]
    for i in range(nx):
        for j in range(ny):
            x = left + i * cw
            y = top + plot_h - (j + 1) * ch
            ok = valid[i, j] and np.isfinite(eta[i, j])
            fill = color_for(eta[i, j], color_scale) if ok else "url(#hatch)"
            out.append(
                f'<rect class="cell" x="{x:.2f}" y="{y:.2f}" width="{cw:.2f}" height="{ch:.2f}" '
                f'fill="{fill}" data-eta="{"nan" if not ok else f"{eta[i, j]:.6f}"}"/>'
            )
    out.append("</g>")
    out.append(f'<rect x="{left}" y="{top}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#000000"/>')
    # ticks: first, middle, last
    for idx in sorted({0, (nx - 1) // 2, nx - 1}):
        cx = left + (idx + 0.5) * cw
        out.append(f'<text x="{cx:.2f}" y="{top + plot_h + 16}" text-anchor="middle">{_num(xs[idx])}</text>')
    for idx in sorted({0, (ny - 1) // 2, ny - 1}):
        cy = top + plot_h - (idx + 0.5) * ch
        out.append(f'<text x="{left - 6}" y="{cy + 4:.2f}" text-anchor="end">{_num(ys[idx])}</text>')
    out.append(f'<text class="xlabel" x="{left + plot_w / 2:.2f}" y="{top + plot_h + 40}" text-anchor="middle">{escape(x_name)}</text>')
    out.append(
        f'<text class="ylabel" x="20" y="{top + plot_h / 2:.2f}" text-anchor="middle" '
        f'transform="rotate(-90 20 {top + plot_h / 2:.2f})">{escape(y_name)}</text>'
    )
    # colour bar over [0, 1]
    bx, bw, n_bar = left + plot_w + 30, 20, 50
    bh = plot_h / n_bar
    out.append('<g id="colorbar">')
    for k in range(n_bar):
        v = (k + 0.5) / n_bar
        by = top + plot_h - (k + 1) * bh
        out.append(f'<rect class="cbar" x="{bx}" y="{by:.2f}" width="{bw}" height="{bh + 0.05:.2f}" fill="{color_for(v, color_scale)}"/>')
    out.append("</g>")
    out.append(f'<rect x="{bx}" y="{top}" width="{bw}" height="{plot_h}" fill="none" stroke="#000000"/>')
    for v in (0.0, 0.5, 1.0):
        out.append(f'<text x="{bx + bw + 4}" y="{top + plot_h - v * plot_h + 4:.2f}">{_num(v)}</text>')
    out.append(f'<text x="{bx + bw / 2}" y="{top - 10}" text-anchor="middle">eta</text>')
    out.append("</svg>")
    return _write(out_svg_path, out)


def load_timeseries(csv_path):
    """Return (time, label, {series name: values}) from a trajectory or ABM CSV."""
    header, rows = read_csv(csv_path)
    if not rows:
        raise FormatError(f"{csv_path}: no data rows")
    try:
        data = np.array([[float(v) for v in r] for r in rows])
    except ValueError as exc:
        raise FormatError(f"{csv_path}: {exc}") from exc
    if tuple(header) == TRAJECTORY_HEADER:
        t = data[:, 0]
        series = {
            "AllD": data[:, 1], "BMedia": data[:, 2], "GMedia": data[:, 3], "AllC": data[:, 4],
            "Unsafe": 1.0 - data[:, 5], "Safe": data[:, 5], "eta": data[:, 6],
        }
        return t, "t", series
    if tuple(header) == TIMESERIES_HEADER:
        t = data[:, 0]
        nu = data[:, 1:5].sum(axis=1)
        nc = data[:, 5:7].sum(axis=1)
        series = {
            "AllD": data[:, 1] / nu, "BMedia": data[:, 2] / nu, "GMedia": data[:, 3] / nu, "AllC": data[:, 4] / nu,
            "Unsafe": data[:, 5] / nc, "Safe": data[:, 6] / nc, "eta": data[:, 7],
        }
        return t, "generation", series
    raise FormatError(f"{csv_path}: header matches neither trajectory nor ABM time series")


def _thin(n):
    if n <= MAX_POINTS:
        return np.arange(n)
    idx = np.linspace(0, n - 1, MAX_POINTS).round().astype(int)
    return np.unique(idx)


def render_timeseries(csv_path, out_svg_path):
    """Three stacked panels: user strategies, creator strategies, eta."""
    t, tlabel, series = load_timeseries(csv_path)
    idx = _thin(len(t))
    t = t[idx]
    left, panel_w, panel_h, gap, top = 60, 560, 140, 40, 20
    panels = [
        ("users", [(k, USER_COLORS[k]) for k in ("AllD", "BMedia", "GMedia", "AllC")]),
        ("creators", [(k, CREATOR_COLORS[k]) for k in ("Unsafe", "Safe")]),
        ("eta", [("eta", ETA_COLOR)]),
    ]
    width = left + panel_w + 100
    height = top + len(panels) * (panel_h + gap) + 20
    out = _svg_open(width, height)
    t0, t1 = float(t[0]), float(t[-1])
    span = (t1 - t0) or 1.0
    for p, (title, lines) in enumerate(panels):
        py = top + p * (panel_h + gap)
        out.append(f'<g class="panel" id="panel-{title}">')
        out.append(f'<rect x="{left}" y="{py}" width="{panel_w}" height="{panel_h}" fill="none" stroke="#000000"/>')
        out.append(f'<text x="{left - 8}" y="{py + 10}" text-anchor="end">1</text>')
        out.append(f'<text x="{left - 8}" y="{py + panel_h}" text-anchor="end">0</text>')
        for k, (name, color) in enumerate(lines):
            vals = np.clip(series[name][idx], 0.0, 1.0)
            xs = left + (t - t0) / span * panel_w
            ys = py + panel_h - vals * panel_h
            pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(xs, ys))
            out.append(f'<polyline class="series" data-name="{name}" fill="none" stroke="{color}" stroke-width="1.2" points="{pts}"/>')
            out.append(f'<text x="{left + panel_w + 10}" y="{py + 14 + 16 * k}" fill="{color}">{name}</text>')
        out.append("</g>")
    base = top + len(panels) * (panel_h + gap) - gap
    out.append(f'<text x="{left}" y="{base + 16}" text-anchor="middle">{_num(t0)}</text>')
    out.append(f'<text x="{left + panel_w}" y="{base + 16}" text-anchor="middle">{_num(t1)}</text>')
    out.append(f'<text x="{left + panel_w / 2}" y="{base + 30}" text-anchor="middle">{tlabel}</text>')
    out.append("</svg>")
    return _write(out_svg_path, out)


def render(csv_path, out_svg_path, color_scale="viridis"):
    """Pick the renderer from the CSV header."""
    header, _ = read_csv(csv_path)
    if tuple(header) == SWEEP_HEADER:
        return render_heatmap(csv_path, out_svg_path, color_scale)
    return render_timeseries(csv_path, out_svg_path)
