"""Linear readout training and next-step evaluation.

The readout is the only trained part of the model: a linear map
``y(t) = W_out x(t)`` fitted by ridge regression on harvested reservoir
states.  The ridge coefficient is chosen by chronological-split validation
over a log-spaced grid (time series are never shuffled), and the chosen value
is reported so results stay auditable.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .reservoir import run_orbit

#: Default ridge grid: 1e-8 through 1e2 in decades.
DEFAULT_LAMBDA_GRID = tuple(10.0 ** e for e in range(-8, 3))


@dataclass(frozen=True, eq=False)
class RegressionProblem:
    """Harvested states (rows = retained steps) and aligned targets."""

    states: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.states, dtype=float)
        y = np.asarray(self.targets, dtype=float)
        if y.ndim == 1:
            y = y.reshape(-1, 1)
        if x.ndim != 2 or y.ndim != 2:
            raise ValueError("states and targets must be 2-D")
        if x.shape[0] != y.shape[0]:
            raise ValueError(f"row mismatch: {x.shape[0]} states vs {y.shape[0]} targets")
        if x.shape[0] < 1:
            raise ValueError("need at least one row")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("states/targets contain non-finite values")
        object.__setattr__(self, "states", x)
        object.__setattr__(self, "targets", y)


@dataclass(frozen=True, eq=False)
class ReadoutWeights:
    """Fitted readout matrix (N_Y x N_R) and the ridge coefficient used."""

    w_out: np.ndarray
    lam: float


def ridge_fit(prob: RegressionProblem, lam: float) -> ReadoutWeights:
    """Solve ``(X'X + lam I) w = X'y``.

    For ``lam > 0`` the normal-equations matrix is symmetric positive definite
    and a Cholesky solve is used.  For ``lam = 0`` the minimum-norm
    least-squares solution is returned (SVD-based, rank-revealing), which also
    satisfies the normal equations.
    """
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    x, y = prob.states, prob.targets
    if lam == 0.0:
        w, *_ = np.linalg.lstsq(x, y, rcond=None)
    else:
        gram = x.T @ x + lam * np.eye(x.shape[1])
        c, low = scipy.linalg.cho_factor(gram)
        w = scipy.linalg.cho_solve((c, low), x.T @ y)
    return ReadoutWeights(w_out=w.T, lam=float(lam))


def predict(wts: ReadoutWeights, states) -> np.ndarray:
    """Row-wise linear map of states through the readout."""
    states = np.asarray(states, dtype=float)
    if states.ndim != 2 or states.shape[1] != wts.w_out.shape[1]:
        raise ValueError(
            f"states shape {states.shape} incompatible with readout {wts.w_out.shape}"
        )
    return states @ wts.w_out.T


def mse(pred, target) -> float:
    """Mean over all entries of the squared error."""
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    diff = pred - target
    return float(np.mean(diff * diff))


def log10_mse(pred, target) -> float:
    """log10 of the MSE; exact zero error maps to -inf."""
    value = mse(pred, target)
    return -math.inf if value == 0.0 else math.log10(value)


def select_lambda(prob: RegressionProblem, grid, val_fraction: float = 0.2) -> float:
    """Pick the ridge coefficient by chronological-split validation.

    The first ``1 - val_fraction`` of rows (in time order, never shuffled) are
    fitted for every grid value; the value with the smallest validation MSE on
    the remaining tail wins, ties going to the larger coefficient.
    """
    grid = sorted(float(g) for g in grid)
    if not grid:
        raise ValueError("lambda grid is empty")
    if any(g < 0 for g in grid):
        raise ValueError("lambda grid values must be nonnegative")
    if not 0.0 < val_fraction < 1.0:
        raise ValueError("val_fraction must lie in (0, 1)")
    n = prob.states.shape[0]
    n_val = int(round(n * val_fraction))
    n_fit = n - n_val
    if n_fit < 1 or n_val < 1:
        raise ValueError(
            f"degenerate split: {n} rows with val_fraction {val_fraction}"
        )
    x_fit, y_fit = prob.states[:n_fit], prob.targets[:n_fit]
    x_val, y_val = prob.states[n_fit:], prob.targets[n_fit:]
    gram = x_fit.T @ x_fit
    rhs = x_fit.T @ y_fit
    eye = np.eye(gram.shape[0])
    best_lam = grid[0]
    best_err = math.inf
    for lam in grid:
        try:
            c, low = scipy.linalg.cho_factor(gram + lam * eye)
            w = scipy.linalg.cho_solve((c, low), rhs)
        except scipy.linalg.LinAlgError:
            # Singular at lam = 0: fall back to the minimum-norm solution.
            w, *_ = np.linalg.lstsq(x_fit, y_fit, rcond=None)
        err = mse(x_val @ w, y_val)
        if err <= best_err:
            best_err, best_lam = err, lam
    return best_lam


@dataclass(frozen=True, eq=False)
class TaskEvaluation:
    """Outcome of training and scoring a readout on a next-step task."""

    lambda_used: float
    train_mse: float
    test_mse: float
    weights: ReadoutWeights


def harvest_states(p, task):
    """Run the reservoir over a next-step task and collect regression rows.

    The training orbit starts from the zero state; the first ``task.washout``
    steps still drive the reservoir but are excluded from the regression rows.
    Test states continue the same orbit (no reset at the split).

    Returns:
        (train_problem, test_states, test_targets)
    """
    train_orbit = run_orbit(p, np.zeros(p.n_r), task.train_inputs)
    x_train = train_orbit.states[1 + task.washout:]
    y_train = task.train_targets[task.washout:]
    test_orbit = run_orbit(p, train_orbit.states[-1], task.test_inputs)
    return RegressionProblem(x_train, y_train), test_orbit.states[1:], task.test_targets


def evaluate_next_step(p, task, lambda_grid=DEFAULT_LAMBDA_GRID,
                       val_fraction: float = 0.2) -> TaskEvaluation:
    """Select a ridge coefficient, refit on all training rows, and score.

    Training MSE is reported on the post-washout training rows the readout was
    refitted on; test MSE on the continuation of the same orbit.
    """
    problem, x_test, y_test = harvest_states(p, task)
    lam = select_lambda(problem, lambda_grid, val_fraction)
    wts = ridge_fit(problem, lam)
    train = mse(predict(wts, problem.states), problem.targets)
    test = mse(predict(wts, x_test), np.asarray(y_test, dtype=float).reshape(x_test.shape[0], -1))
    return TaskEvaluation(lambda_used=lam, train_mse=train, test_mse=test, weights=wts)
