import math

import numpy as np
import pytest

from esplab import henon_series, save_signal

SIG_SEED = 12345


@pytest.fixture(scope="session")
def chaotic_sig():
    """Deterministic chaotic series long enough for the 5000/5092 split."""
    return henon_series(10093, seed=SIG_SEED)


@pytest.fixture(scope="session")
def laser_file(tmp_path_factory, chaotic_sig):
    path = tmp_path_factory.mktemp("data") / "laser.txt"
    save_signal(chaotic_sig, path)
    return path


def silso_row(year, month, mean, std=-1.0, n_obs=-1, provisional=1):
    decimal = year + (month - 0.5) / 12.0
    return f"{year};{month:02d};{decimal:.3f};{mean:.1f};{std};{n_obs};{provisional}\n"


def write_silso_file(path, start=(1749, 1), end=(2018, 9), missing=(), overrides=None):
    """Write a synthetic monthly-mean file in the semicolon-delimited layout.

    Means follow a deterministic cycle-like waveform; ``missing`` months are
    skipped entirely and ``overrides`` maps (year, month) to explicit means.
    """
    overrides = overrides or {}
    lines = []
    y, m = start
    t = 0
    while (y, m) <= tuple(end):
        if (y, m) not in missing:
            mean = overrides.get(
                (y, m), round(100.0 + 80.0 * math.sin(2 * math.pi * t / 132.0), 1)
            )
            lines.append(silso_row(y, m, mean))
        t += 1
        m += 1
        if m > 12:
            y, m = y + 1, 1
    path.write_text("".join(lines))
    return path
