"""Known-environment control law and both coverage costs.

All operations act on a discrete measure: an (N, 2) array of points plus an
(N,) array of weights (density values times cell area). The gradient of the
discretized soft cost with the rank table held fixed is exactly the discrete
control integral, so finite differences and the analytic law agree to
rounding.
"""

import numpy as np

from .ranking import compute_ranks, h_lambda, squared_distances
from .validation import as_positions


def cost_conventional(positions, points, weights, d2=None) -> float:
    """Hard-assignment coverage cost: half the weighted squared distance of
    every point to its nearest agent (lowest index wins ties)."""
    P = as_positions(positions)
    if d2 is None:
        d2 = squared_distances(P, points)
    return 0.5 * float(weights @ d2.min(axis=1))


def cost_proposed(positions, points, weights, lam, ranks=None, d2=None) -> float:
    """Annealed rank-weighted coverage cost.

    Every agent contributes at every point, attenuated by exp(-rank/lam);
    as lam -> 0 this collapses onto ``cost_conventional``.
    """
    P = as_positions(positions)
    if ranks is None:
        ranks = compute_ranks(P, points)
    if d2 is None:
        d2 = squared_distances(P, points)
    h = h_lambda(ranks, lam)
    return 0.5 * float(weights @ np.einsum("kn,kn->k", h, d2))


def control_w(positions, points, weights, lam, ranks=None) -> np.ndarray:
    """Descent directions W_i for all agents, as an (n, 2) array.

    W_i is the weighted first moment of (q - p_i) under the annealed
    assignment, i.e. minus the partial gradient of the soft cost; the rank
    table is piecewise constant in the positions and contributes nothing.
    """
    P = as_positions(positions)
    Q = np.asarray(points, dtype=float)
    if ranks is None:
        ranks = compute_ranks(P, points)
    h = h_lambda(ranks, lam)
    hw = h * np.asarray(weights, dtype=float)[:, None]  # (N, n)
    # W_i = sum_k hw[k, i] * (q_k - p_i), via two BLAS products
    moments = hw.T @ Q  # (n, 2)
    return moments - hw.sum(axis=0)[:, None] * P


def grad_w_diag(positions, points, weights, lam, ranks=None) -> np.ndarray:
    """Per-agent curvature alpha_i = integral of h_lambda * phi, as (n,).

    The Jacobian of W_i with respect to p_i is -alpha_i * I; cross blocks
    vanish for frozen ranks, so the soft cost's Hessian is block diagonal.
    """
    P = as_positions(positions)
    if ranks is None:
        ranks = compute_ranks(P, points)
    h = h_lambda(ranks, lam)
    return np.asarray(weights, dtype=float) @ h
