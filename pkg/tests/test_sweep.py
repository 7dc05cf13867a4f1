import math

import numpy as np
import pytest

import esplab.sweep as sweep_mod
from esplab import (
    EspIndexConfig,
    SchemaError,
    SweepConfig,
    SweepRecord,
    cell_seeds,
    make_next_step_task,
    normalize_index_grid,
    read_results,
    run_sweep,
    write_results,
)


def small_config(**overrides):
    defaults = dict(
        rho_values=(0.4, 1.5),
        scale_values=(1.0, 20.0),
        n_seeds=2,
        n_r=25,
        esp=EspIndexConfig(p_trials=3, transient=100, horizon=250, seed=0),
        base_seed=11,
    )
    defaults.update(overrides)
    return SweepConfig(**defaults)


@pytest.fixture(scope="module")
def small_task(chaotic_sig):
    return make_next_step_task(chaotic_sig, 600, 250, 100)


@pytest.fixture(scope="module")
def small_results(chaotic_sig, small_task, tmp_path_factory):
    path = tmp_path_factory.mktemp("sweep") / "results.csv"
    results = run_sweep(small_config(), chaotic_sig, small_task, out_path=path)
    return results, path


def records_equal(a, b):
    if len(a) != len(b):
        return False
    for ra, rb in zip(a, b):
        for name in ("rho", "input_scale", "esp_index", "lambda_used",
                     "train_mse", "test_mse"):
            va, vb = getattr(ra, name), getattr(rb, name)
            if not (va == vb or (math.isnan(va) and math.isnan(vb))):
                return False
        if (ra.seed_index, ra.necessary_holds, ra.schur_status,
                ra.input_condition_holds, ra.error) != (
                rb.seed_index, rb.necessary_holds, rb.schur_status,
                rb.input_condition_holds, rb.error):
            return False
    return True


class TestRunSweep:
    def test_single_cell_single_seed(self, chaotic_sig):
        cfg = small_config(rho_values=(0.4,), scale_values=(1.0,), n_seeds=1)
        results = run_sweep(cfg, chaotic_sig)
        assert len(results.records) == 1
        rec = results.records[0]
        assert rec.error == ""
        assert math.isnan(rec.train_mse)  # no task supplied

    def test_contractive_cell(self, chaotic_sig, small_task):
        cfg = small_config(rho_values=(0.4,), scale_values=(1.0,))
        results = run_sweep(cfg, chaotic_sig, small_task)
        for rec in results.records:
            assert rec.esp_index < 1e-8
            assert rec.necessary_holds is True
            assert math.isfinite(rec.test_mse)

    def test_default_grid_size(self):
        cfg = SweepConfig()
        assert len(cfg.rho_values) == 40
        assert len(cfg.scale_values) == 30
        assert cfg.n_seeds == 20
        assert len(cfg.rho_values) * len(cfg.scale_values) * cfg.n_seeds == 24000
        assert cfg.rho_values[0] == pytest.approx(0.1)
        assert cfg.rho_values[-1] == pytest.approx(4.0)

    def test_records_sorted(self, small_results):
        results, _ = small_results
        keys = [(r.rho, r.input_scale, r.seed_index) for r in results.records]
        assert keys == sorted(keys)
        assert len(results.records) == 8

    def test_parallel_matches_inline(self, chaotic_sig, small_task, small_results, tmp_path):
        inline, inline_path = small_results
        path = tmp_path / "par.csv"
        parallel = run_sweep(small_config(), chaotic_sig, small_task,
                             out_path=path, workers=2)
        assert records_equal(inline.records, parallel.records)
        assert path.read_bytes() == inline_path.read_bytes()

    def test_seed_isolation(self, chaotic_sig):
        cfg2 = small_config(rho_values=(1.5,), scale_values=(1.0,), n_seeds=2)
        cfg3 = small_config(rho_values=(1.5,), scale_values=(1.0,), n_seeds=3)
        a = run_sweep(cfg2, chaotic_sig)
        b = run_sweep(cfg3, chaotic_sig)
        assert records_equal(a.records, b.records[:2])

    def test_condition_consistency(self, small_results):
        results, _ = small_results
        for rec in results.records:
            if rec.schur_status == "certified":
                assert rec.necessary_holds is True

    def test_cell_failure_recorded_not_raised(self, chaotic_sig, monkeypatch):
        calls = {"n": 0}
        real = sweep_mod.esp_index

        def flaky(*args, **kwargs):
            calls["n"] += 1
            if calls["n"] == 2:
                raise RuntimeError("injected fault")
            return real(*args, **kwargs)

        monkeypatch.setattr(sweep_mod, "esp_index", flaky)
        cfg = small_config(rho_values=(0.4,), scale_values=(1.0, 20.0), n_seeds=1)
        results = run_sweep(cfg, chaotic_sig)
        errors = [r for r in results.records if r.error]
        assert len(errors) == 1
        assert "injected fault" in errors[0].error
        assert math.isnan(errors[0].esp_index)

    def test_signal_too_short_rejected(self):
        with pytest.raises(ValueError):
            run_sweep(small_config(), np.zeros(100))

    def test_cell_seeds_documented_mixing(self):
        expected = np.random.SeedSequence(11, spawn_key=(1, 0, 1)).generate_state(2, np.uint64)
        assert cell_seeds(11, 1, 0, 1) == (int(expected[0]), int(expected[1]))


class TestNormalizeIndexGrid:
    def test_simple(self):
        assert np.array_equal(
            normalize_index_grid([0.0, 2.0, 4.0]), [0.0, 0.5, 1.0]
        )

    def test_all_zero_stays(self):
        grid = np.zeros((2, 2))
        assert np.array_equal(normalize_index_grid(grid), grid)

    def test_single_cell(self):
        assert np.array_equal(normalize_index_grid([[7.0]]), [[1.0]])

    def test_nan_passthrough(self):
        out = normalize_index_grid([np.nan, 2.0])
        assert math.isnan(out[0]) and out[1] == 1.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            normalize_index_grid(np.zeros((0,)))


class TestResultsFile:
    def test_round_trip(self, small_results):
        results, path = small_results
        back = read_results(path)
        assert records_equal(results.records, back.records)
        assert back.config["n_seeds"] == 2
        assert back.config["rho_values"] == [0.4, 1.5]

    def test_unknown_column_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("rho,input_scale,seed_index,esp_index,surprise\n")
        with pytest.raises(SchemaError):
            read_results(path)

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(SchemaError):
            read_results(path)

    def test_write_is_sorted_and_17_digits(self, tmp_path):
        records = [
            SweepRecord(rho=1.5, input_scale=1.0, seed_index=1, esp_index=0.1,
                        necessary_holds=False, schur_status="unknown",
                        input_condition_holds=False, lambda_used=0.1,
                        train_mse=0.1, test_mse=0.1),
            SweepRecord(rho=0.5, input_scale=1.0, seed_index=0, esp_index=0.0,
                        necessary_holds=True, schur_status="certified",
                        input_condition_holds=True, lambda_used=1.0,
                        train_mse=0.0, test_mse=0.0),
        ]
        path = tmp_path / "r.csv"
        write_results(sweep_mod.SweepResults(config={}, records=records), path)
        lines = path.read_text().splitlines()
        assert lines[0].startswith("rho,input_scale")
        assert lines[1].startswith("0.5,")
        assert "0.10000000000000001" in lines[2]

    def test_resume_completes_interrupted_sweep(self, chaotic_sig, small_task,
                                                small_results, tmp_path):
        full, full_path = small_results
        path = tmp_path / "resume.csv"
        # simulate an interruption: journal holding only 3 completed rows
        lines = full_path.read_text().splitlines()
        path.write_text("\n".join(lines[:4]) + "\n")
        resumed = run_sweep(small_config(), chaotic_sig, small_task,
                            out_path=path, resume=True)
        assert records_equal(full.records, resumed.records)
        assert path.read_bytes() == full_path.read_bytes()

    def test_resume_tolerates_truncated_tail(self, chaotic_sig, small_task,
                                             small_results, tmp_path):
        full, full_path = small_results
        path = tmp_path / "cut.csv"
        text = full_path.read_text()
        path.write_text(text[: len(text) // 2])  # cut mid-row
        resumed = run_sweep(small_config(), chaotic_sig, small_task,
                            out_path=path, resume=True)
        assert records_equal(full.records, resumed.records)

    def test_resume_rejects_foreign_journal(self, chaotic_sig, small_results, tmp_path):
        _, full_path = small_results
        path = tmp_path / "foreign.csv"
        path.write_text(full_path.read_text())
        cfg = small_config(rho_values=(0.9,), scale_values=(2.0,))
        with pytest.raises(SchemaError):
            run_sweep(cfg, chaotic_sig, out_path=path, resume=True)


class TestAggregation:
    def test_cell_means_recomputable(self, small_results):
        results, _ = small_results
        means = results.cell_means()
        rhos, scales = means["rho_values"], means["scale_values"]
        for i, rho in enumerate(rhos):
            for j, scale in enumerate(scales):
                manual = np.mean([
                    r.esp_index for r in results.records
                    if r.rho == rho and r.input_scale == scale and not r.error
                ])
                assert means["esp_index"][i, j] == pytest.approx(manual, rel=1e-15)

    def test_normalized_grid_max_is_one(self, small_results):
        results, _ = small_results
        grid = results.normalized_index_grid()
        finite = grid[np.isfinite(grid)]
        assert finite.max() == pytest.approx(1.0)

    def test_aggregate_in_sidecar(self, small_results):
        import json
        _, path = small_results
        meta = json.loads((path.parent / (path.name + ".meta.json")).read_text())
        assert meta["schema"] == 1
        assert meta["config"]["task"]["train_len"] == 600
        assert len(meta["aggregate"]["esp_index_mean"]) == 2
