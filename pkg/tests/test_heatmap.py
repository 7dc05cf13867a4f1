import math
import re

import numpy as np
import pytest

from esplab import SweepRecord, heatmap_svg, render_heatmap
from esplab.sweep import SweepResults


def record(rho, scale, seed=0, index=0.0, necessary=True, schur="unknown",
           input_cond=False, test_mse=1e-3, error=""):
    return SweepRecord(
        rho=rho, input_scale=scale, seed_index=seed, esp_index=index,
        necessary_holds=necessary, schur_status=schur,
        input_condition_holds=input_cond, lambda_used=0.1,
        train_mse=test_mse, test_mse=test_mse, error=error,
    )


def cell_fills(svg):
    """Map (rho, scale) -> hex fill parsed from the rect elements."""
    fills = {}
    pattern = re.compile(
        r'<rect [^>]*fill="(#[0-9a-f]{6})" data-rho="([^"]+)" data-scale="([^"]+)"/>'
    )
    for fill, rho, scale in pattern.findall(svg):
        fills[(float(rho), float(scale))] = fill
    return fills


class TestHeatmapSvg:
    def test_deterministic(self):
        records = [record(0.5, 1.0, index=0.0), record(1.5, 1.0, index=2.0, necessary=False)]
        results = SweepResults(config={}, records=records)
        assert heatmap_svg(results, "esp_index_normalized") == heatmap_svg(
            results, "esp_index_normalized"
        )

    def test_single_cell_with_legend(self):
        results = SweepResults(config={}, records=[record(1.0, 1.0, index=7.0)])
        svg = heatmap_svg(results, "esp_index_normalized")
        assert svg.startswith("<svg ")
        assert "spectral radius" in svg and "input scaling" in svg
        assert "no data" in svg
        # single nonzero cell normalizes to 1 -> white
        assert cell_fills(svg)[(1.0, 1.0)] == "#ffffff"

    def test_all_zero_grid_is_darkest(self):
        records = [record(r, s, index=0.0) for r in (0.5, 1.0) for s in (1.0, 2.0)]
        svg = heatmap_svg(SweepResults(config={}, records=records), "esp_index_normalized")
        assert set(cell_fills(svg).values()) == {"#000000"}

    def test_darker_means_smaller_along_scale(self):
        # index shrinking with input scale must darken the cells
        records = [record(2.0, s, index=v) for s, v in [(1.0, 8.0), (5.0, 1.0), (10.0, 0.0)]]
        svg = heatmap_svg(SweepResults(config={}, records=records), "esp_index_normalized")
        fills = cell_fills(svg)
        grays = [int(fills[(2.0, s)][1:3], 16) for s in (1.0, 5.0, 10.0)]
        assert grays[0] > grays[1] > grays[2]

    def test_nan_cells_use_sentinel_color(self):
        records = [record(0.5, 1.0), record(1.5, 1.0, error="ValueError: boom")]
        svg = heatmap_svg(SweepResults(config={}, records=records), "esp_index_normalized")
        assert cell_fills(svg)[(1.5, 1.0)] == "#cc3366"

    def test_boundary_consistent_with_flags(self):
        records = [
            record(0.5, 1.0, necessary=True, schur="certified"),
            record(1.5, 1.0, necessary=False),
        ]
        svg = heatmap_svg(SweepResults(config={}, records=records), "esp_index_normalized")
        # boundary encloses only the first column: 4 edges of one cell
        necessary_path = re.search(r'<path d="([^"]+)" stroke="#1f77b4"', svg).group(1)
        assert necessary_path.count("M") == 4
        x_right_of_true_cell = 70 + 22
        for seg in necessary_path.split("M")[1:]:
            x1 = float(seg.strip().split()[0])
            assert x1 <= x_right_of_true_cell

    def test_mixed_seed_flags_exclude_cell(self):
        records = [
            record(0.5, 1.0, seed=0, necessary=True),
            record(0.5, 1.0, seed=1, necessary=False),
        ]
        svg = heatmap_svg(SweepResults(config={}, records=records), "esp_index_normalized")
        assert 'stroke="#1f77b4"' not in svg

    def test_log10_quantity(self):
        records = [record(0.5, 1.0, test_mse=1e-4), record(1.5, 1.0, test_mse=1.0)]
        svg = heatmap_svg(SweepResults(config={}, records=records), "log10_test_mse")
        fills = cell_fills(svg)
        assert fills[(0.5, 1.0)] == "#000000"
        assert fills[(1.5, 1.0)] == "#ffffff"

    def test_zero_mse_clips_to_darkest(self):
        records = [record(0.5, 1.0, test_mse=0.0), record(1.5, 1.0, test_mse=1.0)]
        svg = heatmap_svg(SweepResults(config={}, records=records), "log10_test_mse",
                          value_range=(-6.0, 0.0))
        assert cell_fills(svg)[(0.5, 1.0)] == "#000000"

    def test_empty_results_rejected(self):
        with pytest.raises(ValueError):
            heatmap_svg(SweepResults(config={}, records=[]), "esp_index_normalized")

    def test_unknown_quantity_rejected(self):
        results = SweepResults(config={}, records=[record(1.0, 1.0)])
        with pytest.raises(ValueError):
            heatmap_svg(results, "esp_index")


class TestRenderHeatmap:
    def test_writes_byte_identical_files(self, tmp_path):
        records = [record(0.5, 1.0), record(1.5, 1.0, index=1.0, necessary=False)]
        results = SweepResults(config={}, records=records)
        a, b = tmp_path / "a.svg", tmp_path / "b.svg"
        render_heatmap(results, "esp_index_normalized", a)
        render_heatmap(results, "esp_index_normalized", b)
        assert a.read_bytes() == b.read_bytes()

    def test_accepts_results_path(self, tmp_path):
        from esplab import write_results
        records = [record(0.5, 1.0)]
        path = tmp_path / "r.csv"
        write_results(SweepResults(config={}, records=records), path)
        out = tmp_path / "h.svg"
        render_heatmap(path, "esp_index_normalized", out)
        assert out.read_text().startswith("<svg ")
