"""Empirical echo-state-property index.

The echo state property (ESP) holds when orbits started from any two initial
states converge under the same input signal, i.e. the driven reservoir is
globally asymptotically stable.  The index measured here quantifies how far a
reservoir is from that regime on a concrete signal:

1. run a reference orbit from the zero state over the first ``horizon`` steps
   of the signal;
2. run ``p_trials`` orbits from random initial states drawn uniformly from
   (-1, 1)^N_R, the natural state space of a tanh reservoir;
3. after discarding a ``transient`` prefix, average the per-step Euclidean
   distances between each trial orbit and the reference orbit, then average
   over trials.

An index of zero means every random start collapsed onto the reference orbit,
so the ESP holds empirically on that signal; large values indicate coexisting
attractors or unstable dynamics.

Trial ``i`` draws its initial state from a Philox stream keyed by
``SeedSequence(seed, spawn_key=(i,))``, so increasing ``p_trials`` extends the
set of trials without reshuffling earlier ones.  All averages use exact
(compensated) summation, which makes the index invariant under any reordering
of trials or retained steps.
"""

import math
from dataclasses import dataclass

import numpy as np

from .reservoir import Orbit, ReservoirParams, as_signal, run_orbit, _rng

#: Index values at or below this are treated as "empirically zero" by default:
#: machine-precision orbit collapse sits many orders of magnitude below any
#: genuine multistability seen in practice.
DEFAULT_ESP_TOL = 1e-8


@dataclass(frozen=True)
class EspIndexConfig:
    """Settings for one index estimate.

    Attributes:
        p_trials: number of random initial states.
        transient: steps discarded before deviations are measured.
        horizon: signal prefix length driving every orbit.
        seed: base seed for the trial initial states.
    """

    p_trials: int = 50
    transient: int = 500
    horizon: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.p_trials < 1:
            raise ValueError("p_trials must be positive")
        if self.transient < 0:
            raise ValueError("transient must be nonnegative")
        if not self.transient < self.horizon:
            raise ValueError(
                f"transient ({self.transient}) must be smaller than horizon ({self.horizon})"
            )
        if self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")


@dataclass(frozen=True, eq=False)
class EspIndexResult:
    """Scalar index plus the per-trial and per-step deviations behind it.

    ``index`` is exactly the mean of ``per_trial``; ``per_step`` holds one row
    of retained-step distances per trial (or None when the caller dropped it
    to save memory).
    """

    index: float
    per_trial: np.ndarray
    per_step: np.ndarray | None = None


def orbit_deviation(reference: Orbit, trial: Orbit, transient: int):
    """Per-step Euclidean distances after a transient, and their mean.

    Both orbits must have identical shape.  Steps ``transient + 1`` through the
    end are retained; the mean uses exact summation over those steps.

    Returns:
        (delta_series, delta_mean) where ``delta_series`` has one entry per
        retained step.
    """
    a, b = reference.states, trial.states
    if a.shape != b.shape:
        raise ValueError(f"orbit shapes differ: {a.shape} vs {b.shape}")
    n_steps = a.shape[0] - 1
    if not 0 <= transient < n_steps:
        raise ValueError(f"transient {transient} must lie in [0, {n_steps})")
    deltas = np.linalg.norm(a[transient + 1:] - b[transient + 1:], axis=1)
    return deltas, math.fsum(deltas) / deltas.size


def esp_index(p: ReservoirParams, s, cfg: EspIndexConfig, *,
              keep_per_step: bool = True) -> EspIndexResult:
    """Estimate the stability index of a reservoir driven by a signal.

    Args:
        p: the reservoir to probe.
        s: driving signal; its first ``cfg.horizon`` steps are used and it
            must be at least that long.
        cfg: trial count, transient, horizon and trial seed.
        keep_per_step: include the full per-step deviation matrix in the
            result (rows are trials).  Disable in large sweeps.

    The result is deterministic given ``(p, s, cfg)``.
    """
    sig = as_signal(s)
    if sig.length < cfg.horizon:
        raise ValueError(
            f"signal has {sig.length} steps but horizon is {cfg.horizon}"
        )
    if sig.dim != p.n_u:
        raise ValueError(f"signal dimension {sig.dim} does not match n_u={p.n_u}")
    prefix = sig.prefix(cfg.horizon)
    reference = run_orbit(p, np.zeros(p.n_r), prefix)
    per_trial = np.empty(cfg.p_trials)
    retained = cfg.horizon - cfg.transient
    per_step = np.empty((cfg.p_trials, retained)) if keep_per_step else None
    for i in range(cfg.p_trials):
        z0 = _rng(cfg.seed, spawn_key=(i,)).uniform(-1.0, 1.0, size=p.n_r)
        trial = run_orbit(p, z0, prefix)
        deltas, mean = orbit_deviation(reference, trial, cfg.transient)
        per_trial[i] = mean
        if per_step is not None:
            per_step[i] = deltas
    index = math.fsum(per_trial) / cfg.p_trials
    per_trial.setflags(write=False)
    if per_step is not None:
        per_step.setflags(write=False)
    return EspIndexResult(index=index, per_trial=per_trial, per_step=per_step)


def is_esp_empirical(r: EspIndexResult, tol: float = DEFAULT_ESP_TOL) -> bool:
    """Whether the index is zero up to ``tol``, i.e. the ESP held empirically."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    return r.index <= tol
