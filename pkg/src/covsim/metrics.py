"""Convergence and efficiency metrics."""

import numpy as np
from scipy.optimize import linear_sum_assignment


def rcov(previous: float, current: float) -> float:
    """Relative change of an objective between iterations, in percent."""
    if previous == 0.0:
        return np.inf if current != previous else 0.0
    return abs(current - previous) / abs(previous) * 100.0


def rcov_series(values) -> np.ndarray:
    """Per-step RCOV of a value series; the first entry is NaN."""
    values = np.asarray(values, dtype=float)
    out = np.full(values.shape, np.nan)
    prev = values[:-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        out[1:] = np.abs(np.diff(values)) / np.abs(prev) * 100.0
    return out


def path_length(positions, n_steps: int = 1400) -> float:
    """Total displacement summed over agents for the first ``n_steps`` steps.

    ``positions`` is the (S+1, n, 2) trajectory array of a trace.
    """
    positions = np.asarray(positions, dtype=float)
    if positions.ndim != 3 or positions.shape[0] < 1:
        raise ValueError("positions must be a nonempty (steps+1, n, 2) array")
    deltas = np.diff(positions[: n_steps + 1], axis=0)
    return float(np.linalg.norm(deltas, axis=2).sum())


def match_positions(a, b) -> float:
    """Largest pointwise distance between two position sets under the optimal
    one-to-one assignment (Hungarian matching)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    cost = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())
