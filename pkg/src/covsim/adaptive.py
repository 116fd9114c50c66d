"""Per-agent online estimation of the density coefficients.

Each agent carries a coefficient estimate a_hat plus the data-collection
accumulators (Upsilon, Lambda) built from its own point measurements of the
true density. The pre-adaptation rate combines a control-consistency term
(F), a data-fit term and a neighbor consensus term; a componentwise
projection keeps every coefficient at or above ``a_min``.
"""

from dataclasses import dataclass, field

import numpy as np

from .ranking import compute_ranks, h_lambda
from .validation import ValidationError, as_positions


@dataclass
class DataWeight:
    """Data-collection gate: weight ``r`` before ``tau_w``, zero afterwards."""

    r: float = 180.0
    tau_w: float = 6.0

    def __post_init__(self):
        if self.r <= 0 or self.tau_w <= 0:
            raise ValidationError("data weight r and tau_w must be positive")

    def __call__(self, t: float) -> float:
        return self.r if t < self.tau_w else 0.0


@dataclass
class EstimatorState:
    """Mutable estimator state owned by a single agent."""

    a_hat: np.ndarray
    Lambda: np.ndarray
    Upsilon: np.ndarray
    gamma: float = 0.14
    zeta: float = 0.01
    Gamma_diag: np.ndarray | None = None
    a_min: float = 0.0

    def __post_init__(self):
        self.a_hat = np.asarray(self.a_hat, dtype=float).copy()
        m = self.a_hat.shape[0]
        if self.Gamma_diag is None:
            self.Gamma_diag = np.ones(m)
        else:
            self.Gamma_diag = np.broadcast_to(
                np.asarray(self.Gamma_diag, dtype=float), (m,)
            ).copy()
        if np.any(self.Gamma_diag <= 0):
            raise ValidationError("adaptation gain diagonal must be positive")
        if self.gamma <= 0 or self.zeta < 0:
            raise ValidationError("gamma must be positive and zeta nonnegative")
        if np.any(self.a_hat < self.a_min):
            raise ValidationError("initial estimate lies below a_min")

    @classmethod
    def create(cls, m: int, a_hat_init=400.0, **kwargs) -> "EstimatorState":
        a0 = np.broadcast_to(np.asarray(a_hat_init, dtype=float), (m,)).copy()
        return cls(a_hat=a0, Lambda=np.zeros((m, m)), Upsilon=np.zeros(m), **kwargs)

    @property
    def m(self) -> int:
        return self.a_hat.shape[0]


def accumulate_data(state: EstimatorState, k_p, measured_phi: float,
                    w_t: float, dt: float) -> EstimatorState:
    """Advance the data integrals with one own-position measurement.

    ``k_p`` is the basis vector at the agent's position and ``measured_phi``
    the sensor reading there (noiseless, hence nonnegative).
    """
    if measured_phi < 0:
        raise ValidationError("measured density must be nonnegative")
    if w_t == 0.0:
        return state
    k_p = np.asarray(k_p, dtype=float)
    state.Upsilon += (w_t * measured_phi * dt) * k_p
    state.Lambda += (w_t * dt) * np.outer(k_p, k_p)
    return state


def pre_adaptation(state: EstimatorState, F, neighbor_a_hats, l_weights) -> np.ndarray:
    """Pre-projection estimate rate: control-consistency + data fit + consensus."""
    a = state.a_hat
    rate = -np.asarray(F, dtype=float) @ a
    rate -= state.gamma * (state.Lambda @ a - state.Upsilon)
    for l_ij, a_j in zip(l_weights, neighbor_a_hats):
        if l_ij < 0:
            raise ValidationError("consensus weights must be nonnegative")
        rate -= state.zeta * l_ij * (a - np.asarray(a_j, dtype=float))
    return rate


def control_basis_moment(positions, points, basis_grid, cell_area, lam=None,
                         ranks=None, h_matrix=None) -> np.ndarray:
    """Weighted moment integrals B_i = int (q - p_i) K(q)^T h_i dq, (n, 2, m).

    The per-point weights are the annealed ranks by default; pass ``h_matrix``
    (e.g. a hard Voronoi indicator) for the baseline variant.
    """
    P = as_positions(positions)
    Q = np.asarray(points, dtype=float)
    n = P.shape[0]
    if h_matrix is None:
        if ranks is None:
            ranks = compute_ranks(P, points)
        h_matrix = h_lambda(ranks, lam)  # (N, n)
    # sum_k h[k,i] (q_k - p_i) K(q_k)^T, as one (2n, m) BLAS product
    hdiff = h_matrix[:, :, None] * (Q[:, None, :] - P[None, :, :])  # (N, n, 2)
    B = hdiff.reshape(Q.shape[0], 2 * n).T @ basis_grid  # (2n, m)
    return B.reshape(n, 2, -1) * cell_area


def compute_F(positions, points, basis_grid, cell_area, lam, agent: int,
              epsilon: float, ranks=None) -> np.ndarray:
    """Control-consistency matrix F_i = eps * B_i^T B_i, positive semidefinite."""
    B = control_basis_moment(positions, points, basis_grid, cell_area, lam, ranks)
    Bi = B[agent]  # (2, m)
    return epsilon * (Bi.T @ Bi)


def project_and_step(state: EstimatorState, a_dot_pre, dt: float) -> np.ndarray:
    """Euler-advance the estimate under the nonnegativity projection.

    A component sitting at the bound with an inward (negative) rate is frozen;
    any component that still crosses the bound within the finite step is
    snapped back to exactly ``a_min`` (the continuous-time law cannot cross,
    the discrete one can).
    """
    rate = state.Gamma_diag * np.asarray(a_dot_pre, dtype=float)
    frozen = (state.a_hat <= state.a_min) & (np.asarray(a_dot_pre) < 0)
    state.a_hat[~frozen] += rate[~frozen] * dt
    np.maximum(state.a_hat, state.a_min, out=state.a_hat)
    return state.a_hat


def estimated_control(positions, points, basis_grid, cell_area, a_hat, lam,
                      epsilon: float, ranks=None) -> np.ndarray:
    """Control inputs from estimated densities: u_i = eps * W_i(phi_hat_i), (n, 2).

    ``a_hat`` is an (n, m) stack of per-agent estimates; a single (m,) vector
    is broadcast to all agents.
    """
    P = as_positions(positions)
    Q = np.asarray(points, dtype=float)
    if ranks is None:
        ranks = compute_ranks(P, points)
    h = h_lambda(ranks, lam)  # (N, n)
    A = np.asarray(a_hat, dtype=float)
    if A.ndim == 1:
        A = np.broadcast_to(A, (P.shape[0], A.shape[0]))
    hp = h * (basis_grid @ A.T)  # (N, n) annealed estimated density per agent
    moments = hp.T @ Q
    return epsilon * cell_area * (moments - hp.sum(axis=0)[:, None] * P)
