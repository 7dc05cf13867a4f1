"""Randomly initialized tanh reservoirs and their driven orbits.

A reservoir is a fixed recurrent map

    x(t) = tanh(W x(t-1) + W_in u(t))

with an N_R x N_R recurrent matrix ``W`` and an N_R x N_U input matrix
``W_in``, both frozen after initialization.  This module constructs such
reservoirs reproducibly and iterates them over input signals.

Reproducibility contract: all randomness comes from the Philox counter-based
bit generator seeded through ``numpy.random.SeedSequence``.  Given the same
seed, ``init_reservoir`` draws the same matrices on any platform (entries for
``W`` are drawn first, then ``W_in``, both uniform on [-1, 1]).
"""

from dataclasses import dataclass

import numpy as np


class DegenerateReservoirError(RuntimeError):
    """Raised when a random draw cannot be rescaled to the requested radius."""


def _rng(seed, spawn_key=()):
    """Philox generator for a seed and an optional integer spawn key."""
    ss = np.random.SeedSequence(seed, spawn_key=tuple(spawn_key))
    return np.random.Generator(np.random.Philox(ss))


def spectral_radius(m) -> float:
    """Largest absolute value among the eigenvalues of a square matrix.

    Complex eigenvalues contribute their modulus.  Raises ``ValueError`` for
    non-square or non-finite input.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix contains non-finite entries")
    return float(np.max(np.abs(np.linalg.eigvals(m))))


@dataclass(frozen=True, eq=False)
class Signal:
    """A finite real-valued time series, one vector per step.

    ``values`` has shape (length, dim); a 1-D array is promoted to a single
    column.  The stored array is a read-only copy.
    """

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True)
        if v.ndim == 1:
            v = v.reshape(-1, 1)
        if v.ndim != 2:
            raise ValueError(f"signal must be 1-D or 2-D, got ndim={v.ndim}")
        if v.size and not np.all(np.isfinite(v)):
            raise ValueError("signal contains non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def length(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def __len__(self) -> int:
        return self.length

    def step(self, t: int) -> np.ndarray:
        """Input vector at step ``t`` (0-based)."""
        return self.values[t]

    def prefix(self, n: int) -> "Signal":
        if n > self.length:
            raise ValueError(f"prefix of {n} steps exceeds signal length {self.length}")
        return Signal(self.values[:n])


def as_signal(s) -> Signal:
    """Coerce an array-like or Signal into a Signal."""
    return s if isinstance(s, Signal) else Signal(np.asarray(s))


@dataclass(frozen=True, eq=False)
class Orbit:
    """State trajectory under a signal; row 0 is the initial state."""

    states: np.ndarray

    def __post_init__(self):
        st = np.asarray(self.states, dtype=float)
        if st.ndim != 2:
            raise ValueError("orbit states must be a 2-D array")
        st.setflags(write=False)
        object.__setattr__(self, "states", st)

    @property
    def n_steps(self) -> int:
        """Number of iterated steps (states minus the initial one)."""
        return self.states.shape[0] - 1

    def __len__(self) -> int:
        return self.states.shape[0]

    def state(self, t: int) -> np.ndarray:
        return self.states[t]


@dataclass(frozen=True, eq=False)
class ReservoirParams:
    """Frozen reservoir matrices plus the settings they were drawn from.

    Attributes:
        n_r: number of reservoir units.
        n_u: input dimension.
        w: recurrent matrix, shape (n_r, n_r), read-only.
        w_in: input matrix, shape (n_r, n_u), read-only; every entry lies in
            [-input_scale, +input_scale].
        target_rho: the spectral radius the recurrent matrix was rescaled to.
        input_scale: the multiplier applied to the raw uniform input weights.
        seed: the seed the matrices were drawn from (provenance).
    """

    n_r: int
    n_u: int
    w: np.ndarray
    w_in: np.ndarray
    target_rho: float
    input_scale: float
    seed: int

    def __post_init__(self):
        w = np.array(self.w, dtype=float, copy=True)
        w_in = np.array(self.w_in, dtype=float, copy=True)
        if w.shape != (self.n_r, self.n_r):
            raise ValueError(f"w has shape {w.shape}, expected {(self.n_r, self.n_r)}")
        if w_in.shape != (self.n_r, self.n_u):
            raise ValueError(f"w_in has shape {w_in.shape}, expected {(self.n_r, self.n_u)}")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(w_in))):
            raise ValueError("reservoir matrices contain non-finite entries")
        w.setflags(write=False)
        w_in.setflags(write=False)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "w_in", w_in)

    @classmethod
    def from_matrices(cls, w, w_in, seed: int = 0) -> "ReservoirParams":
        """Wrap explicit matrices, deriving the bookkeeping fields from them."""
        w = np.asarray(w, dtype=float)
        w_in = np.asarray(w_in, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError("w must be square")
        if w_in.ndim != 2 or w_in.shape[0] != w.shape[0]:
            raise ValueError("w_in rows must match w")
        return cls(
            n_r=w.shape[0],
            n_u=w_in.shape[1],
            w=w,
            w_in=w_in,
            target_rho=spectral_radius(w),
            input_scale=float(np.max(np.abs(w_in))) if w_in.size else 0.0,
            seed=seed,
        )


def init_reservoir(n_r: int, n_u: int, target_rho: float, input_scale: float,
                   seed: int) -> ReservoirParams:
    """Draw a fully connected reservoir and rescale it to a spectral radius.

    Entries of the raw recurrent and input matrices are i.i.d. uniform on
    [-1, 1] (recurrent matrix first, then input matrix, from a Philox stream
    keyed by ``seed``).  The recurrent matrix is multiplied by the scalar that
    brings its spectral radius to ``target_rho`` exactly; the input matrix is
    multiplied by ``input_scale``.

    Raises:
        DegenerateReservoirError: if the raw draw has spectral radius zero
            while ``target_rho`` is positive.  No automatic re-draw happens;
            the caller decides how to proceed.
    """
    if n_r < 1 or n_u < 1:
        raise ValueError("n_r and n_u must be positive")
    if target_rho < 0 or input_scale < 0:
        raise ValueError("target_rho and input_scale must be nonnegative")
    if seed < 0:
        raise ValueError("seed must be a nonnegative integer")
    gen = _rng(seed)
    w_raw = gen.uniform(-1.0, 1.0, size=(n_r, n_r))
    w_in = gen.uniform(-1.0, 1.0, size=(n_r, n_u)) * input_scale
    if target_rho == 0.0:
        w = np.zeros_like(w_raw)
    else:
        rho_raw = spectral_radius(w_raw)
        if rho_raw == 0.0:
            raise DegenerateReservoirError(
                f"raw draw for seed {seed} has spectral radius 0; "
                f"cannot rescale to {target_rho}"
            )
        w = w_raw * (target_rho / rho_raw)
    return ReservoirParams(
        n_r=n_r, n_u=n_u, w=w, w_in=w_in,
        target_rho=float(target_rho), input_scale=float(input_scale),
        seed=int(seed),
    )


def step(p: ReservoirParams, x: np.ndarray, u) -> np.ndarray:
    """One application of the state map: tanh(W x + W_in u)."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float).reshape(-1)
    if x.shape != (p.n_r,):
        raise ValueError(f"state has shape {x.shape}, expected ({p.n_r},)")
    if u.shape != (p.n_u,):
        raise ValueError(f"input has shape {u.shape}, expected ({p.n_u},)")
    return np.tanh(p.w @ x + p.w_in @ u)


def run_orbit(p: ReservoirParams, x0, s) -> Orbit:
    """Iterate the state map over a signal, recording every state.

    Returns an orbit of ``len(s) + 1`` states whose row ``t`` is the state
    after consuming the first ``t`` inputs; row 0 is ``x0``.  An empty signal
    yields an orbit containing only the initial state.  The computation is
    step-for-step identical to repeated calls of :func:`step`.
    """
    sig = as_signal(s)
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (p.n_r,):
        raise ValueError(f"initial state has shape {x0.shape}, expected ({p.n_r},)")
    if sig.length and sig.dim != p.n_u:
        raise ValueError(f"signal dimension {sig.dim} does not match n_u={p.n_u}")
    states = np.empty((sig.length + 1, p.n_r))
    states[0] = x0
    x = x0
    w, w_in, values = p.w, p.w_in, sig.values
    for t in range(sig.length):
        x = np.tanh(w @ x + w_in @ values[t])
        states[t + 1] = x
    return Orbit(states)
