"""Static SVG heatmaps of sweep results.

One cell per (rho, input scale) combination, grayscale with darker colors for
smaller values.  Overlaid polylines trace the outermost cells whose records
all satisfy (a) the necessary condition and (b) either sufficient condition.
Cells without a successful record are drawn in the sentinel color ``#cc3366``.
Rendering is deterministic: identical results produce byte-identical SVG.

Plottable quantities:

* ``esp_index_normalized``: per-cell mean stability index, scaled so the grid
  maximum is 1; the color ramp is linear in the normalized value.
* ``log10_test_mse``: log10 of the per-cell mean test MSE, linearly mapped
  over ``value_range`` (defaulting to the finite data range) and clipped.
"""

import math
from pathlib import Path

import numpy as np

from .sweep import SweepResults, normalize_index_grid, read_results

QUANTITIES = ("esp_index_normalized", "log10_test_mse")

_CELL = 22
_SENTINEL_FILL = "#cc3366"
_NECESSARY_STROKE = "#1f77b4"
_SUFFICIENT_STROKE = "#e31a1c"


def _gray(v: float) -> str:
    g = int(round(255 * min(max(v, 0.0), 1.0)))
    return f"#{g:02x}{g:02x}{g:02x}"


def _ticks(values):
    n = len(values)
    if n <= 12:
        return list(range(n))
    step = math.ceil(n / 12)
    idx = list(range(0, n, step))
    if idx[-1] != n - 1:
        idx.append(n - 1)
    return idx


def _flag_grids(results: SweepResults, rhos, scales):
    r_pos = {v: i for i, v in enumerate(rhos)}
    s_pos = {v: j for j, v in enumerate(scales)}
    shape = (len(rhos), len(scales))
    necessary = np.ones(shape, dtype=bool)
    sufficient = np.ones(shape, dtype=bool)
    seen = np.zeros(shape, dtype=bool)
    for rec in results.records:
        i, j = r_pos[rec.rho], s_pos[rec.input_scale]
        seen[i, j] = True
        if rec.error:
            necessary[i, j] = sufficient[i, j] = False
            continue
        necessary[i, j] &= rec.necessary_holds
        sufficient[i, j] &= (rec.schur_status == "certified" or rec.input_condition_holds)
    necessary &= seen
    sufficient &= seen
    return necessary, sufficient


def _boundary_path(flags, origin_x, origin_y, n_scales):
    """Edge segments separating flagged cells from unflagged/outside ones."""
    segments = []
    n_rho = flags.shape[0]
    for i in range(n_rho):
        for j in range(flags.shape[1]):
            if not flags[i, j]:
                continue
            x = origin_x + i * _CELL
            y = origin_y + (n_scales - 1 - j) * _CELL
            if i == 0 or not flags[i - 1, j]:
                segments.append((x, y, x, y + _CELL))
            if i == n_rho - 1 or not flags[i + 1, j]:
                segments.append((x + _CELL, y, x + _CELL, y + _CELL))
            if j == flags.shape[1] - 1 or not flags[i, j + 1]:
                segments.append((x, y, x + _CELL, y))
            if j == 0 or not flags[i, j - 1]:
                segments.append((x, y + _CELL, x + _CELL, y + _CELL))
    segments.sort()
    return " ".join(f"M{x1} {y1} L{x2} {y2}" for x1, y1, x2, y2 in segments)


def heatmap_svg(results: SweepResults, quantity: str, value_range=None) -> str:
    """Build the SVG document for one quantity of a sweep's results."""
    if quantity not in QUANTITIES:
        raise ValueError(f"unknown quantity {quantity!r}, expected one of {QUANTITIES}")
    if not results.records:
        raise ValueError("results contain no records")
    means = results.cell_means()
    rhos, scales = means["rho_values"], means["scale_values"]

    if quantity == "esp_index_normalized":
        grid = normalize_index_grid(means["esp_index"])
        lo, hi = (0.0, 1.0) if value_range is None else value_range
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            grid = np.log10(means["test_mse"])
        finite = grid[np.isfinite(grid)]
        if value_range is not None:
            lo, hi = value_range
        elif finite.size:
            lo, hi = float(finite.min()), float(finite.max())
        else:
            lo, hi = 0.0, 1.0
    if not lo < hi:
        lo, hi = lo - 0.5, hi + 0.5

    necessary, sufficient = _flag_grids(results, rhos, scales)

    left, top, bottom, right = 70, 34, 52, 168
    width = left + len(rhos) * _CELL + right
    # The legend column is ~210px tall; never clip it on small grids.
    height = max(top + len(scales) * _CELL + bottom, top + 210)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{left}" y="20" font-size="13">{quantity} (darker = smaller)</text>',
    ]
    for i, rho in enumerate(rhos):
        for j, scale in enumerate(scales):
            x = left + i * _CELL
            y = top + (len(scales) - 1 - j) * _CELL
            v = grid[i, j]
            if not np.isfinite(v) and not (quantity == "log10_test_mse" and v == -math.inf):
                fill = _SENTINEL_FILL
            else:
                if v == -math.inf:
                    v = lo
                fill = _gray((float(v) - lo) / (hi - lo))
            parts.append(
                f'<rect x="{x}" y="{y}" width="{_CELL}" height="{_CELL}" '
                f'fill="{fill}" data-rho="{rho:g}" data-scale="{scale:g}"/>'
            )
    for flags, stroke, dash in (
        (necessary, _NECESSARY_STROKE, ""),
        (sufficient, _SUFFICIENT_STROKE, ' stroke-dasharray="4 3"'),
    ):
        d = _boundary_path(flags, left, top, len(scales))
        if d:
            parts.append(f'<path d="{d}" stroke="{stroke}" stroke-width="2" fill="none"{dash}/>')

    plot_bottom = top + len(scales) * _CELL
    for i in _ticks(rhos):
        x = left + i * _CELL + _CELL // 2
        parts.append(
            f'<text x="{x}" y="{plot_bottom + 16}" font-size="10" '
            f'text-anchor="middle">{rhos[i]:g}</text>'
        )
    for j in _ticks(scales):
        y = top + (len(scales) - 1 - j) * _CELL + _CELL // 2 + 4
        parts.append(
            f'<text x="{left - 8}" y="{y}" font-size="10" text-anchor="end">{scales[j]:g}</text>'
        )
    parts.append(
        f'<text x="{left + len(rhos) * _CELL // 2}" y="{plot_bottom + 38}" '
        f'font-size="12" text-anchor="middle">spectral radius</text>'
    )
    mid_y = top + len(scales) * _CELL // 2
    parts.append(
        f'<text x="16" y="{mid_y}" font-size="12" text-anchor="middle" '
        f'transform="rotate(-90 16 {mid_y})">input scaling</text>'
    )

    lx = left + len(rhos) * _CELL + 18
    parts.append(f'<text x="{lx}" y="{top + 10}" font-size="10">{hi:.3g}</text>')
    for k in range(11):
        y = top + 14 + k * 10
        parts.append(
            f'<rect x="{lx}" y="{y}" width="16" height="10" fill="{_gray(1.0 - k / 10)}"/>'
        )
    parts.append(f'<text x="{lx}" y="{top + 136}" font-size="10">{lo:.3g}</text>')
    legend = [
        (f'stroke="{_NECESSARY_STROKE}"', "necessary"),
        (f'stroke="{_SUFFICIENT_STROKE}" stroke-dasharray="4 3"', "sufficient"),
    ]
    for k, (style, label) in enumerate(legend):
        y = top + 156 + k * 16
        parts.append(f'<line x1="{lx}" y1="{y}" x2="{lx + 22}" y2="{y}" {style} stroke-width="2"/>')
        parts.append(f'<text x="{lx + 27}" y="{y + 4}" font-size="10">{label}</text>')
    y = top + 156 + 2 * 16
    parts.append(f'<rect x="{lx}" y="{y - 7}" width="14" height="10" fill="{_SENTINEL_FILL}"/>')
    parts.append(f'<text x="{lx + 19}" y="{y + 2}" font-size="10">no data</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_heatmap(results, quantity: str, out_path, *, value_range=None) -> None:
    """Render one quantity of a results file (or object) to an SVG file."""
    if not isinstance(results, SweepResults):
        results = read_results(results)
    svg = heatmap_svg(results, quantity, value_range=value_range)
    Path(out_path).write_text(svg)
