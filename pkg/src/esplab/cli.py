"""Command-line front end.

Subcommands: ``esp-index``, ``conditions``, ``train-eval``, ``sweep`` and
``plot``.  All numeric output is deterministic given the flags.  Exit codes:
0 on success, 2 for usage problems (bad flags, missing files, malformed
config), 1 for runtime failures.

The ``--seed`` of the single-configuration commands names one reservoir: the
reservoir and trial seeds are derived from it with the same mixing rule as
sweep cell (0, 0, 0), so a sweep record can be reproduced in isolation by
passing its cell's base seed.
"""

import argparse
import math
import sys
from pathlib import Path

from .conditions import evaluate_conditions
from .datasets import load_signal, load_sunspot_silso, make_next_step_task
from .esp import DEFAULT_ESP_TOL, EspIndexConfig, esp_index, is_esp_empirical
from .heatmap import QUANTITIES, render_heatmap
from .readout import DEFAULT_LAMBDA_GRID, evaluate_next_step
from .reservoir import init_reservoir
from .sweep import SweepConfig, cell_seeds, run_sweep


class UsageError(Exception):
    """Input problem the user can fix; reported with exit code 2."""


def _existing(path) -> Path:
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"no such file: {path}")
    return path


def _year_month(text):
    try:
        y, m = text.split("-")
        return int(y), int(m)
    except ValueError:
        raise UsageError(f"expected YYYY-MM, got {text!r}") from None


def _load_series(args):
    path = _existing(args.data)
    if args.format == "silso":
        return load_sunspot_silso(path, _year_month(args.silso_start),
                                  _year_month(args.silso_end))
    return load_signal(path)


def _values_list(text):
    """Parse 'a,b,c' or 'start:stop:step' (inclusive) into floats."""
    text = text.strip()
    try:
        if ":" in text:
            start, stop, step = (float(p) for p in text.split(":"))
            if step <= 0 or stop < start:
                raise ValueError
            count = int((stop - start) / step + 0.5) + 1
            return [round(start + i * step, 10) for i in range(count)]
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise UsageError(f"cannot parse value list {text!r}") from None


def _add_data_flags(sub):
    sub.add_argument("--data", required=True, help="series file")
    sub.add_argument("--format", choices=("text", "silso"), default="text",
                     help="series format (default: whitespace-separated text)")
    sub.add_argument("--silso-start", default="1749-01", metavar="YYYY-MM")
    sub.add_argument("--silso-end", default="2018-09", metavar="YYYY-MM")


def _add_reservoir_flags(sub):
    sub.add_argument("--rho", type=float, required=True, help="spectral radius")
    sub.add_argument("--scale", type=float, required=True, help="input scaling")
    sub.add_argument("--n-r", type=int, default=100, help="reservoir units (default 100)")
    sub.add_argument("--seed", type=int, default=1)


def _reservoir_for(args, sig):
    res_seed, trial_seed = cell_seeds(args.seed, 0, 0, 0)
    return init_reservoir(args.n_r, sig.dim, args.rho, args.scale, res_seed), trial_seed


def _cmd_esp_index(args):
    sig = _load_series(args)
    params, trial_seed = _reservoir_for(args, sig)
    cfg = EspIndexConfig(p_trials=args.P, transient=args.T, horizon=args.L,
                         seed=trial_seed)
    result = esp_index(params, sig, cfg, keep_per_step=False)
    print(f"esp_index={result.index:.17g}")
    print(f"per_trial_min={result.per_trial.min():.17g}")
    print(f"per_trial_max={result.per_trial.max():.17g}")
    print(f"trials={cfg.p_trials}")
    print(f"esp_empirical={1 if is_esp_empirical(result, args.tol) else 0}")
    return 0


def _cmd_conditions(args):
    sig = _load_series(args)
    params, _ = _reservoir_for(args, sig)
    report = evaluate_conditions(params, sig, horizon=min(args.horizon, sig.length),
                                 max_iters=args.max_iters, eps=args.eps)
    print(f"necessary={1 if report.necessary_holds else 0}")
    print(f"schur={report.schur_status}")
    print(f"input_condition={1 if report.input_condition_holds else 0}")
    print(f"input_condition_lhs={report.input_condition_lhs:.17g}")
    print(f"input_condition_rhs={report.input_condition_rhs:.17g}")
    print(f"sufficient={1 if report.sufficient_holds else 0}")
    return 0


def _cmd_train_eval(args):
    sig = _load_series(args)
    params, _ = _reservoir_for(args, sig)
    task = make_next_step_task(sig, args.train_len, args.test_len, args.washout)
    grid = _values_list(args.lambdas) if args.lambdas else DEFAULT_LAMBDA_GRID
    ev = evaluate_next_step(params, task, grid, args.val_fraction)
    print(f"lambda={ev.lambda_used:.17g}")
    print(f"train_mse={ev.train_mse:.17g}")
    print(f"test_mse={ev.test_mse:.17g}")
    print(f"log10_train_mse={(-math.inf if ev.train_mse == 0 else math.log10(ev.train_mse)):.17g}")
    print(f"log10_test_mse={(-math.inf if ev.test_mse == 0 else math.log10(ev.test_mse)):.17g}")
    return 0


_CONFIG_KEYS = (
    "data", "format", "silso_start", "silso_end", "rho_values", "scale_values",
    "n_seeds", "n_r", "p_trials", "transient", "horizon", "base_seed",
    "readout", "train_len", "test_len", "washout", "lambda_grid",
    "val_fraction", "schur_max_iters", "schur_eps",
)


def parse_sweep_config(path) -> dict:
    """Parse a flat key=value sweep config file ('#' starts a comment)."""
    raw = {}
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise UsageError(f"{path}: line {line_no}: expected key=value, got {text!r}")
            key, value = (p.strip() for p in text.split("=", 1))
            if key not in _CONFIG_KEYS:
                raise UsageError(f"{path}: line {line_no}: unknown key {key!r}")
            raw[key] = value
    if "data" not in raw:
        raise UsageError(f"{path}: missing required key 'data'")
    return raw


def _cmd_sweep(args):
    raw = parse_sweep_config(_existing(args.config))

    def geti(key, default):
        try:
            return int(raw.get(key, default))
        except ValueError:
            raise UsageError(f"config key {key} must be an integer, got {raw[key]!r}") from None

    def getf(key, default):
        try:
            return float(raw.get(key, default))
        except ValueError:
            raise UsageError(f"config key {key} must be a number, got {raw[key]!r}") from None

    data_args = argparse.Namespace(
        data=raw["data"], format=raw.get("format", "text"),
        silso_start=raw.get("silso_start", "1749-01"),
        silso_end=raw.get("silso_end", "2018-09"),
    )
    sig = _load_series(data_args)
    try:
        cfg = SweepConfig(
            rho_values=_values_list(raw.get("rho_values", "0.1:4.0:0.1")),
            scale_values=_values_list(raw.get("scale_values", "1:30:1")),
            n_seeds=geti("n_seeds", 20),
            n_r=geti("n_r", 100),
            esp=EspIndexConfig(p_trials=geti("p_trials", 50),
                               transient=geti("transient", 500),
                               horizon=geti("horizon", 1000), seed=0),
            base_seed=geti("base_seed", 0),
            lambda_grid=tuple(_values_list(raw["lambda_grid"]))
            if "lambda_grid" in raw else DEFAULT_LAMBDA_GRID,
            val_fraction=getf("val_fraction", 0.2),
            schur_max_iters=geti("schur_max_iters", 500),
            schur_eps=getf("schur_eps", 1e-6),
        )
    except ValueError as exc:
        raise UsageError(f"{args.config}: {exc}") from None
    task = None
    if raw.get("readout", "on") != "off":
        task = make_next_step_task(sig, geti("train_len", 5000),
                                   geti("test_len", 5092), geti("washout", 1000))
    results = run_sweep(cfg, sig, task, out_path=args.out,
                        workers=args.threads, resume=args.resume)
    print(f"records={len(results.records)}")
    print(f"out={args.out}")
    return 0


def _cmd_plot(args):
    path = _existing(args.results)
    value_range = None
    if args.vmin is not None or args.vmax is not None:
        if args.vmin is None or args.vmax is None:
            raise UsageError("--vmin and --vmax must be given together")
        value_range = (args.vmin, args.vmax)
    render_heatmap(path, args.quantity, args.out, value_range=value_range)
    print(f"out={args.out}")
    return 0


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="esplab",
        description="Stability laboratory for echo state networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("esp-index", help="empirical stability index of one reservoir")
    _add_data_flags(p)
    _add_reservoir_flags(p)
    p.add_argument("--L", type=int, default=1000, help="signal prefix length (default 1000)")
    p.add_argument("--T", type=int, default=500, help="discarded transient (default 500)")
    p.add_argument("--P", type=int, default=50, help="random initial states (default 50)")
    p.add_argument("--tol", type=float, default=DEFAULT_ESP_TOL,
                   help="threshold for calling the index empirically zero")
    p.set_defaults(func=_cmd_esp_index)

    p = sub.add_parser("conditions", help="necessary/sufficient stability conditions")
    _add_data_flags(p)
    _add_reservoir_flags(p)
    p.add_argument("--horizon", type=int, default=1000)
    p.add_argument("--max-iters", type=int, default=500)
    p.add_argument("--eps", type=float, default=1e-6)
    p.set_defaults(func=_cmd_conditions)

    p = sub.add_parser("train-eval", help="train the readout and report errors")
    _add_data_flags(p)
    _add_reservoir_flags(p)
    p.add_argument("--train-len", type=int, default=5000)
    p.add_argument("--test-len", type=int, default=5092)
    p.add_argument("--washout", type=int, default=1000)
    p.add_argument("--lambdas", default=None,
                   help="comma list of ridge coefficients (default 1e-8..1e2 decades)")
    p.add_argument("--val-fraction", type=float, default=0.2)
    p.set_defaults(func=_cmd_train_eval)

    p = sub.add_parser("sweep", help="grid sweep driven by a key=value config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="results CSV path")
    p.add_argument("--threads", type=int, default=1, help="worker processes")
    p.add_argument("--resume", action="store_true",
                   help="skip (cell, seed) rows already present in the output file")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("plot", help="render a heatmap SVG from a results file")
    p.add_argument("--results", required=True)
    p.add_argument("--quantity", choices=QUANTITIES, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--vmin", type=float, default=None)
    p.add_argument("--vmax", type=float, default=None)
    p.set_defaults(func=_cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"esplab: error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"esplab: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # one-line diagnostic, nonzero exit
        print(f"esplab: failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
