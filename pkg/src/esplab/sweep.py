"""Hyperparameter grid sweeps over spectral radius x input scaling.

Every grid cell (rho, scale) is evaluated for ``n_seeds`` independent
reservoir realizations.  Per realization the harness records the stability
index, the condition flags, and (when a prediction task is supplied) the
selected ridge coefficient plus train/test MSE.

Reproducibility: the reservoir seed and the trial seed of cell
``(rho_idx, scale_idx, seed_idx)`` are the two 64-bit words of
``SeedSequence(base_seed, spawn_key=(rho_idx, scale_idx, seed_idx))``, so any
single cell can be recomputed in isolation.  Cells are pure functions of
their inputs; they may run on a process pool, and the result is identical to
a sequential run regardless of scheduling.

Results file: comma-delimited text with a header row and exactly the columns

    rho, input_scale, seed_index, esp_index, necessary_holds, schur_status,
    input_condition_holds, lambda_used, train_mse, test_mse, error

Reals carry 17 significant digits (loss-free round trip), booleans are 0/1,
``schur_status`` is ``certified``/``unknown``, and ``error`` is empty unless
the cell failed, in which case the numeric fields hold ``nan`` sentinels.
A sidecar ``<file>.meta.json`` echoes the configuration and the per-cell
means; the CSV alone remains self-contained.  While a sweep is running the
file doubles as an append-only journal, which is what makes interrupted
sweeps resumable; on completion it is rewritten in canonical sorted order
(by rho, input_scale, seed_index).
"""

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field, replace
from multiprocessing import get_context
from pathlib import Path

import numpy as np

from .conditions import evaluate_conditions
from .datasets import NextStepTask
from .esp import EspIndexConfig, esp_index
from .readout import DEFAULT_LAMBDA_GRID, evaluate_next_step
from .reservoir import Signal, as_signal, init_reservoir

RESULTS_COLUMNS = (
    "rho", "input_scale", "seed_index", "esp_index", "necessary_holds",
    "schur_status", "input_condition_holds", "lambda_used", "train_mse",
    "test_mse", "error",
)
SCHEMA_VERSION = 1


class SchemaError(ValueError):
    """Results file does not match the supported schema."""


@dataclass(frozen=True)
class SweepConfig:
    """Grid, realization count and per-cell evaluation settings.

    Defaults follow the standard protocol for 100-unit reservoirs: rho from
    0.1 to 4.0 in steps of 0.1, input scaling 1 to 30 in steps of 1, 20
    realizations, index computed over a 1000-step horizon with a 500-step
    transient and 50 trials.
    """

    rho_values: tuple = tuple(np.round(np.arange(1, 41) * 0.1, 10))
    scale_values: tuple = tuple(float(v) for v in range(1, 31))
    n_seeds: int = 20
    n_r: int = 100
    esp: EspIndexConfig = EspIndexConfig(p_trials=50, transient=500, horizon=1000, seed=0)
    base_seed: int = 0
    lambda_grid: tuple = DEFAULT_LAMBDA_GRID
    val_fraction: float = 0.2
    schur_max_iters: int = 500
    schur_eps: float = 1e-6

    def __post_init__(self):
        object.__setattr__(self, "rho_values", tuple(float(v) for v in self.rho_values))
        object.__setattr__(self, "scale_values", tuple(float(v) for v in self.scale_values))
        if not self.rho_values or not self.scale_values:
            raise ValueError("rho_values and scale_values must be non-empty")
        for v in self.rho_values + self.scale_values:
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"grid value {v} must be finite and nonnegative")
        if self.n_seeds < 1 or self.n_r < 1:
            raise ValueError("n_seeds and n_r must be positive")
        if self.base_seed < 0:
            raise ValueError("base_seed must be nonnegative")


@dataclass(frozen=True)
class SweepRecord:
    """One (cell, realization) outcome; ``error`` is empty unless the cell failed."""

    rho: float
    input_scale: float
    seed_index: int
    esp_index: float
    necessary_holds: bool
    schur_status: str
    input_condition_holds: bool
    lambda_used: float
    train_mse: float
    test_mse: float
    error: str = ""


def cell_seeds(base_seed: int, rho_idx: int, scale_idx: int, seed_idx: int):
    """Derive (reservoir_seed, trial_seed) for one cell realization.

    The two seeds are the 64-bit words produced by
    ``SeedSequence(base_seed, spawn_key=(rho_idx, scale_idx, seed_idx))``.
    """
    ss = np.random.SeedSequence(base_seed, spawn_key=(rho_idx, scale_idx, seed_idx))
    words = ss.generate_state(2, np.uint64)
    return int(words[0]), int(words[1])


@dataclass(frozen=True, eq=False)
class _CellContext:
    """Everything a worker needs; shipped once per process."""

    cfg: SweepConfig
    signal_values: np.ndarray
    task: NextStepTask | None


_WORKER_CTX: _CellContext | None = None


def _worker_init(ctx: _CellContext) -> None:
    global _WORKER_CTX
    _WORKER_CTX = ctx


def _evaluate_cell(ctx: _CellContext, key) -> SweepRecord:
    rho_idx, scale_idx, seed_idx = key
    cfg = ctx.cfg
    rho = cfg.rho_values[rho_idx]
    scale = cfg.scale_values[scale_idx]
    nan = float("nan")
    try:
        res_seed, trial_seed = cell_seeds(cfg.base_seed, rho_idx, scale_idx, seed_idx)
        signal = Signal(ctx.signal_values)
        params = init_reservoir(cfg.n_r, signal.dim, rho, scale, res_seed)
        idx = esp_index(params, signal, replace(cfg.esp, seed=trial_seed),
                        keep_per_step=False)
        report = evaluate_conditions(
            params, signal, horizon=cfg.esp.horizon,
            max_iters=cfg.schur_max_iters, eps=cfg.schur_eps,
        )
        if ctx.task is not None:
            ev = evaluate_next_step(params, ctx.task, cfg.lambda_grid, cfg.val_fraction)
            lam, train, test = ev.lambda_used, ev.train_mse, ev.test_mse
        else:
            lam = train = test = nan
        return SweepRecord(
            rho=rho, input_scale=scale, seed_index=seed_idx,
            esp_index=idx.index,
            necessary_holds=report.necessary_holds,
            schur_status=report.schur_status,
            input_condition_holds=report.input_condition_holds,
            lambda_used=lam, train_mse=train, test_mse=test,
        )
    except Exception as exc:  # cell failures never abort the sweep
        return SweepRecord(
            rho=rho, input_scale=scale, seed_index=seed_idx,
            esp_index=nan, necessary_holds=False, schur_status="unknown",
            input_condition_holds=False, lambda_used=nan, train_mse=nan,
            test_mse=nan, error=f"{type(exc).__name__}: {exc}",
        )


def _evaluate_cell_worker(key) -> SweepRecord:
    return _evaluate_cell(_WORKER_CTX, key)


@dataclass(eq=False)
class SweepResults:
    """Configuration echo plus the full list of per-realization records."""

    config: dict
    records: list

    def axis_values(self):
        """(rho axis, scale axis), from the config echo or the records."""
        if self.config.get("rho_values") and self.config.get("scale_values"):
            return (tuple(self.config["rho_values"]), tuple(self.config["scale_values"]))
        rhos = tuple(sorted({r.rho for r in self.records}))
        scales = tuple(sorted({r.input_scale for r in self.records}))
        return rhos, scales

    def cell_means(self):
        """Per-cell means over realizations, skipping failed rows.

        Returns a dict with the axes and (n_rho, n_scale) grids for
        ``esp_index``, ``train_mse`` and ``test_mse``; cells with no
        successful realization hold nan.
        """
        rhos, scales = self.axis_values()
        r_pos = {v: i for i, v in enumerate(rhos)}
        s_pos = {v: j for j, v in enumerate(scales)}
        shape = (len(rhos), len(scales))
        sums = {k: np.zeros(shape) for k in ("esp_index", "train_mse", "test_mse")}
        counts = np.zeros(shape, dtype=int)
        for rec in self.records:
            if rec.error:
                continue
            i, j = r_pos[rec.rho], s_pos[rec.input_scale]
            counts[i, j] += 1
            sums["esp_index"][i, j] += rec.esp_index
            sums["train_mse"][i, j] += rec.train_mse
            sums["test_mse"][i, j] += rec.test_mse
        with np.errstate(invalid="ignore"):
            grids = {k: np.where(counts > 0, v / np.maximum(counts, 1), np.nan)
                     for k, v in sums.items()}
        return {"rho_values": rhos, "scale_values": scales, "counts": counts, **grids}

    def normalized_index_grid(self) -> np.ndarray:
        """Per-cell mean index scaled so the grid maximum is 1."""
        return normalize_index_grid(self.cell_means()["esp_index"])

    def aggregate(self) -> dict:
        """JSON-able per-cell means for the sidecar file."""
        m = self.cell_means()
        return {
            "rho_values": list(m["rho_values"]),
            "scale_values": list(m["scale_values"]),
            "esp_index_mean": _listify(m["esp_index"]),
            "train_mse_mean": _listify(m["train_mse"]),
            "test_mse_mean": _listify(m["test_mse"]),
            "esp_index_normalized": _listify(self.normalized_index_grid()),
        }


def _listify(grid):
    return [[(None if not math.isfinite(v) else v) for v in row] for row in grid]


def normalize_index_grid(grid) -> np.ndarray:
    """Divide a grid by its maximum; an all-zero grid is returned unchanged."""
    g = np.array(grid, dtype=float)
    if g.size == 0:
        raise ValueError("empty grid")
    finite = g[np.isfinite(g)]
    if finite.size == 0:
        return g
    top = float(np.max(finite))
    if top == 0.0:
        return g
    return g / top


def _sorted_records(records):
    return sorted(records, key=lambda r: (r.rho, r.input_scale, r.seed_index))


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def _record_row(rec: SweepRecord):
    return [
        _fmt(rec.rho), _fmt(rec.input_scale), str(int(rec.seed_index)),
        _fmt(rec.esp_index), "1" if rec.necessary_holds else "0",
        rec.schur_status, "1" if rec.input_condition_holds else "0",
        _fmt(rec.lambda_used), _fmt(rec.train_mse), _fmt(rec.test_mse),
        rec.error,
    ]


def _parse_bool(text, column, row_no):
    if text == "1":
        return True
    if text == "0":
        return False
    raise SchemaError(f"row {row_no}: column {column} must be 0 or 1, got {text!r}")


def _parse_row(row, row_no) -> SweepRecord:
    if len(row) != len(RESULTS_COLUMNS):
        raise SchemaError(
            f"row {row_no}: expected {len(RESULTS_COLUMNS)} fields, got {len(row)}"
        )
    status = row[5]
    if status not in ("certified", "unknown"):
        raise SchemaError(f"row {row_no}: bad schur_status {status!r}")
    return SweepRecord(
        rho=float(row[0]), input_scale=float(row[1]), seed_index=int(row[2]),
        esp_index=float(row[3]),
        necessary_holds=_parse_bool(row[4], "necessary_holds", row_no),
        schur_status=status,
        input_condition_holds=_parse_bool(row[6], "input_condition_holds", row_no),
        lambda_used=float(row[7]), train_mse=float(row[8]), test_mse=float(row[9]),
        error=row[10],
    )


def _meta_path(path) -> Path:
    return Path(str(path) + ".meta.json")


def write_results(results: SweepResults, path) -> None:
    """Write the canonical sorted results file plus its sidecar metadata."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULTS_COLUMNS)
        for rec in _sorted_records(results.records):
            writer.writerow(_record_row(rec))
    meta = {
        "schema": SCHEMA_VERSION,
        "config": results.config,
        "aggregate": results.aggregate(),
    }
    with open(_meta_path(path), "w") as fh:
        json.dump(meta, fh, indent=1)
        fh.write("\n")


def read_results(path) -> SweepResults:
    """Read a results file (and its sidecar, when present) back losslessly."""
    path = Path(path)
    records, _ = _read_rows(path, tolerate_partial_tail=False)
    config = {}
    meta_path = _meta_path(path)
    if meta_path.exists():
        with open(meta_path) as fh:
            meta = json.load(fh)
        if meta.get("schema") != SCHEMA_VERSION:
            raise SchemaError(
                f"{meta_path}: unsupported schema {meta.get('schema')!r}, "
                f"this reader supports v{SCHEMA_VERSION}"
            )
        config = meta.get("config", {})
    return SweepResults(config=config, records=records)


def _read_rows(path, tolerate_partial_tail):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty results file") from None
        if tuple(header) != RESULTS_COLUMNS:
            raise SchemaError(
                f"{path}: unsupported results schema; expected v{SCHEMA_VERSION} "
                f"columns {list(RESULTS_COLUMNS)}, found {header}"
            )
        records = []
        rows = list(reader)
    for row_no, row in enumerate(rows, start=2):
        try:
            records.append(_parse_row(row, row_no))
        except (SchemaError, ValueError):
            # A truncated final line is expected after an interrupted sweep.
            if tolerate_partial_tail and row_no == len(rows) + 1:
                break
            raise
    return records, tuple(header)


def run_sweep(cfg: SweepConfig, signal, task: NextStepTask | None = None, *,
              out_path=None, workers: int = 1, resume: bool = False) -> SweepResults:
    """Evaluate every (rho, scale, seed) cell of the grid.

    Args:
        cfg: grid and evaluation settings.
        signal: driving signal for the index and the conditions; must be at
            least ``cfg.esp.horizon`` steps long.
        task: optional next-step task; when omitted the readout columns hold
            nan sentinels.
        out_path: results file.  Rows are journaled there as cells complete,
            and the file is rewritten in canonical sorted order at the end.
        workers: size of the process pool; 1 runs inline.
        resume: when the journal already exists, skip its completed
            (cell, seed) rows instead of recomputing them.

    Cell failures are recorded as sentinel rows with the ``error`` column set;
    the sweep always runs to completion.  Output is identical for any
    ``workers`` value.
    """
    sig = as_signal(signal)
    if sig.length < cfg.esp.horizon:
        raise ValueError(
            f"signal has {sig.length} steps, sweep needs horizon {cfg.esp.horizon}"
        )
    if task is not None and task.n_u != sig.dim:
        raise ValueError("task input dimension does not match the signal")
    if workers < 1:
        raise ValueError("workers must be positive")
    ctx = _CellContext(cfg=cfg, signal_values=np.asarray(sig.values), task=task)

    keys = [
        (i, j, k)
        for i in range(len(cfg.rho_values))
        for j in range(len(cfg.scale_values))
        for k in range(cfg.n_seeds)
    ]
    done: dict = {}
    journal = None
    if out_path is not None:
        out_path = Path(out_path)
        if resume and out_path.exists() and out_path.stat().st_size > 0:
            prior, _ = _read_rows(out_path, tolerate_partial_tail=True)
            r_pos = {v: i for i, v in enumerate(cfg.rho_values)}
            s_pos = {v: j for j, v in enumerate(cfg.scale_values)}
            for rec in prior:
                if rec.rho not in r_pos or rec.input_scale not in s_pos:
                    raise SchemaError(
                        f"{out_path}: journal row (rho={rec.rho}, scale={rec.input_scale}) "
                        "is not a cell of this sweep's grid"
                    )
                if rec.seed_index < cfg.n_seeds:
                    done[(r_pos[rec.rho], s_pos[rec.input_scale], rec.seed_index)] = rec
        fresh = not (resume and out_path.exists() and out_path.stat().st_size > 0)
        journal = open(out_path, "w" if fresh else "a", newline="")
        journal_writer = csv.writer(journal, lineterminator="\n")
        if fresh:
            journal_writer.writerow(RESULTS_COLUMNS)
            journal.flush()

    pending = [key for key in keys if key not in done]

    def _journal(rec: SweepRecord) -> None:
        if journal is not None:
            journal_writer.writerow(_record_row(rec))
            journal.flush()

    try:
        if workers == 1 or not pending:
            for key in pending:
                rec = _evaluate_cell(ctx, key)
                done[key] = rec
                _journal(rec)
        else:
            mp = get_context("spawn")
            with ProcessPoolExecutor(max_workers=workers, mp_context=mp,
                                     initializer=_worker_init, initargs=(ctx,)) as pool:
                futures = {pool.submit(_evaluate_cell_worker, key): key for key in pending}
                for fut in as_completed(futures):
                    rec = fut.result()
                    done[futures[fut]] = rec
                    _journal(rec)
    finally:
        if journal is not None:
            journal.close()

    records = _sorted_records(done.values())
    config = {
        "schema": SCHEMA_VERSION,
        "rho_values": list(cfg.rho_values),
        "scale_values": list(cfg.scale_values),
        "n_seeds": cfg.n_seeds,
        "n_r": cfg.n_r,
        "esp": asdict(cfg.esp),
        "base_seed": cfg.base_seed,
        "lambda_grid": list(cfg.lambda_grid),
        "val_fraction": cfg.val_fraction,
        "schur_max_iters": cfg.schur_max_iters,
        "schur_eps": cfg.schur_eps,
        "signal_length": sig.length,
        "task": None if task is None else {
            "train_len": int(task.train_inputs.shape[0]),
            "test_len": int(task.test_inputs.shape[0]),
            "washout": task.washout,
        },
    }
    results = SweepResults(config=config, records=records)
    if out_path is not None:
        write_results(results, out_path)
    return results
