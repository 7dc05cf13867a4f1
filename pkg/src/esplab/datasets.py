"""Series loaders and next-step prediction task construction.

Two on-disk formats are understood:

* plain series: real numbers separated by whitespace/newlines, conventionally
  one value per line.  This is both the format of the chaotic-laser benchmark
  recording and the canonical format written by :func:`save_signal`
  (17 significant digits, loss-free round trip).
* SILSO monthly means: semicolon-delimited rows
  ``year;month;decimal date;monthly mean;std;observations;provisional``
  as published by the SIDC/SILSO World Data Center.  Field 4 is the monthly
  mean sunspot number; a value of -1 marks a missing month and is rejected.

Datasets are not bundled.  ``scripts/fetch_datasets.py`` documents the public
sources; :func:`henon_series` provides a deterministic chaotic stand-in so
demos and tests run without downloads.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .reservoir import Signal, _rng


def load_signal(path) -> Signal:
    """Load a whitespace-separated series of reals as a Signal.

    Raises ``ValueError`` naming the offending line for unparsable content,
    and for an empty file.
    """
    path = Path(path)
    values = []
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            for token in line.split():
                try:
                    values.append(float(token))
                except ValueError:
                    raise ValueError(
                        f"{path}: line {line_no}: cannot parse {token!r} as a real number"
                    ) from None
    if not values:
        raise ValueError(f"{path}: empty signal file")
    return Signal(np.array(values))


def load_laser(path) -> Signal:
    """Load the chaotic-laser intensity series (one real per line, as stored)."""
    return load_signal(path)


def save_signal(s: Signal, path) -> None:
    """Write a signal in the canonical format: one step per line, 17 significant digits.

    Univariate signals produce one value per line; wider signals write the
    step's components space-separated.  Reloading reproduces the signal
    bit-exactly.
    """
    path = Path(path)
    with open(path, "w") as fh:
        for row in s.values:
            fh.write(" ".join(format(v, ".17g") for v in row))
            fh.write("\n")


def _month_range(start, end):
    y, m = start
    while (y, m) <= tuple(end):
        yield y, m
        m += 1
        if m > 12:
            y, m = y + 1, 1


def load_sunspot_silso(path, start=(1749, 1), end=(2018, 9)) -> Signal:
    """Load SILSO monthly mean sunspot numbers over an inclusive month range.

    Values are divided by 1000 to land in the sensitive range of a tanh
    reservoir.  Any missing month in the range, a -1 missing-value sentinel,
    or a malformed row aborts with an error naming the month or row.
    """
    path = Path(path)
    start, end = (int(start[0]), int(start[1])), (int(end[0]), int(end[1]))
    for label, (y, m) in (("start", start), ("end", end)):
        if not 1 <= m <= 12:
            raise ValueError(f"{label} month {m} out of range 1..12")
    if start > end:
        raise ValueError(f"start {start} is after end {end}")
    by_month = {}
    with open(path) as fh:
        for row_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = [p.strip() for p in line.split(";")]
            if len(parts) < 7:
                raise ValueError(
                    f"{path}: row {row_no}: expected 7 semicolon-delimited fields, got {len(parts)}"
                )
            try:
                year, month, mean = int(parts[0]), int(parts[1]), float(parts[3])
            except ValueError:
                raise ValueError(f"{path}: row {row_no}: malformed fields {parts[:4]}") from None
            if (year, month) in by_month:
                raise ValueError(f"{path}: row {row_no}: duplicate month {year:04d}-{month:02d}")
            by_month[(year, month)] = mean
    values = []
    for y, m in _month_range(start, end):
        if (y, m) not in by_month:
            raise ValueError(f"{path}: no row for month {y:04d}-{m:02d}")
        mean = by_month[(y, m)]
        if mean == -1.0:
            raise ValueError(f"{path}: missing-value sentinel at {y:04d}-{m:02d}")
        values.append(mean / 1000.0)
    return Signal(np.array(values))


@dataclass(frozen=True, eq=False)
class NextStepTask:
    """Contiguous train/test split of a series for next-step prediction.

    Targets are the inputs shifted by one step; the test segment directly
    follows the training segment, and reservoir state is meant to carry over
    from train into test.  ``washout`` training steps still drive the
    reservoir but are excluded from regression.
    """

    train_inputs: np.ndarray
    train_targets: np.ndarray
    test_inputs: np.ndarray
    test_targets: np.ndarray
    washout: int

    def __post_init__(self):
        for name in ("train_inputs", "train_targets", "test_inputs", "test_targets"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_u(self) -> int:
        return self.train_inputs.shape[1]


def make_next_step_task(s: Signal, train_len: int, test_len: int,
                        washout: int) -> NextStepTask:
    """Build a next-step task with the given contiguous split.

    One sample is lost to the target shift, so the series must hold at least
    ``train_len + test_len + 1`` values.
    """
    if train_len < 1 or test_len < 1:
        raise ValueError("train_len and test_len must be positive")
    needed = train_len + test_len + 1
    if s.length < needed:
        raise ValueError(
            f"series too short: need {needed} samples "
            f"({train_len} train + {test_len} test + 1 shift), have {s.length}"
        )
    if not 0 <= washout < train_len:
        raise ValueError(f"washout {washout} must lie in [0, train_len={train_len})")
    v = s.values
    return NextStepTask(
        train_inputs=v[:train_len],
        train_targets=v[1:train_len + 1],
        test_inputs=v[train_len:train_len + test_len],
        test_targets=v[train_len + 1:train_len + test_len + 1],
        washout=int(washout),
    )


def henon_series(length: int, seed: int = 0) -> Signal:
    """Deterministic chaotic series from the Henon map, scaled into (-1, 1).

    The classic (a=1.4, b=0.3) map is started near the origin with a small
    seeded perturbation, run for 1000 burn-in steps, and its x coordinate is
    divided by 1.5.  Useful as an offline stand-in for a real chaotic
    recording in demos and tests.
    """
    if length < 0:
        raise ValueError("length must be nonnegative")
    gen = _rng(seed)
    x = 0.1 * gen.uniform(-1.0, 1.0)
    y = 0.1 * gen.uniform(-1.0, 1.0)
    for _ in range(1000):
        x, y = 1.0 - 1.4 * x * x + y, 0.3 * x
    out = np.empty(length)
    for t in range(length):
        x, y = 1.0 - 1.4 * x * x + y, 0.3 * x
        out[t] = x
    return Signal(out / 1.5)
