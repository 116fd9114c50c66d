"""Self-contained invariant suite behind ``covsim validate``.

Each check prints one PASS/FAIL line; the suite is a fast smoke test of the
core mathematical identities (the full test suite lives with the sources).
"""

import tempfile
from pathlib import Path

import numpy as np

from . import adaptive, controller
from .config import load_scenario
from .engine import run
from .environment import BasisSet, DensityField, Domain
from .network import NetworkGraph
from .ranking import compute_ranks


def _random_setup(rng, n_agents=5, resolution=60):
    domain = Domain(grid_resolution=resolution)
    basis = BasisSet.grid_layout(sigma=0.5)
    coeffs = rng.random(basis.size) * 100.0
    density = DensityField(domain, basis, coeffs)
    positions = rng.random((n_agents, 2))
    return density, positions


def check_gradient_identity(rng) -> bool:
    """Analytic W equals minus the central finite difference of the soft cost."""
    density, P = _random_setup(rng)
    pts, w = density.domain.points, density.grid_weights
    lam = 0.7
    ranks = compute_ranks(P, pts)
    W = controller.control_w(P, pts, w, lam, ranks)
    step = 1e-6
    worst = 0.0
    for i in range(P.shape[0]):
        for d in range(2):
            hi, lo = P.copy(), P.copy()
            hi[i, d] += step
            lo[i, d] -= step
            g = (controller.cost_proposed(hi, pts, w, lam, ranks)
                 - controller.cost_proposed(lo, pts, w, lam, ranks)) / (2 * step)
            worst = max(worst, abs(-g - W[i, d]) / max(np.linalg.norm(W[i]), 1e-12))
    return worst < 1e-4


def check_voronoi_limit(rng) -> bool:
    """The soft cost collapses onto the hard cost for small lambda."""
    density, P = _random_setup(rng)
    pts, w = density.domain.points, density.grid_weights
    hard = controller.cost_conventional(P, pts, w)
    soft = controller.cost_proposed(P, pts, w, 0.03)
    return abs(soft - hard) <= 1e-9 * hard


def check_curvature(rng) -> bool:
    """Numeric Jacobian of W_i is -alpha_i I with frozen ranks."""
    density, P = _random_setup(rng, n_agents=3)
    pts, w = density.domain.points, density.grid_weights
    lam = 0.5
    ranks = compute_ranks(P, pts)
    alphas = controller.grad_w_diag(P, pts, w, lam, ranks)
    step = 1e-6
    i = 1
    J = np.zeros((2, 2))
    for d in range(2):
        hi, lo = P.copy(), P.copy()
        hi[i, d] += step
        lo[i, d] -= step
        J[:, d] = (controller.control_w(hi, pts, w, lam, ranks)[i]
                   - controller.control_w(lo, pts, w, lam, ranks)[i]) / (2 * step)
    return np.allclose(J, -alphas[i] * np.eye(2), rtol=1e-4, atol=1e-8 * alphas[i])


def check_rank_equivariance(rng) -> bool:
    density, P = _random_setup(rng)
    pts = density.domain.points
    perm = rng.permutation(P.shape[0])
    ranks = compute_ranks(P, pts)
    return np.array_equal(compute_ranks(P[perm], pts), ranks[:, perm])


def check_consensus_contraction(rng) -> bool:
    """gamma = 0, F = 0 consensus shrinks the worst pairwise disagreement."""
    n, m = 6, 10
    graph = NetworkGraph.complete(n)
    states = [adaptive.EstimatorState.create(m, a_hat_init=rng.random(m) * 50,
                                             gamma=1e-12, zeta=0.01)
              for _ in range(n)]
    F = np.zeros((m, m))
    def spread():
        A = np.array([s.a_hat for s in states])
        return np.linalg.norm(A[:, None, :] - A[None, :, :], axis=2).max()
    previous = spread()
    for _ in range(200):
        snapshot = [s.a_hat.copy() for s in states]
        for i, s in enumerate(states):
            rate = adaptive.pre_adaptation(s, F, snapshot, graph.weights[i])
            adaptive.project_and_step(s, rate, 0.01)
        current = spread()
        if current > previous + 1e-12:
            return False
        previous = current
    return True


def check_data_consistency(rng) -> bool:
    """Noiseless measurements keep Lambda @ a = Upsilon exactly."""
    basis = BasisSet.grid_layout(sigma=0.5)
    a = rng.random(basis.size) * 100.0
    state = adaptive.EstimatorState.create(basis.size, a_hat_init=0.0)
    for _ in range(10):
        p = rng.random(2)
        k_p = basis.evaluate(p)
        adaptive.accumulate_data(state, k_p, float(k_p @ a), 180.0, 0.01)
    residual = np.linalg.norm(state.Lambda @ a - state.Upsilon)
    return residual <= 1e-8 * max(np.linalg.norm(state.Upsilon), 1e-12)


def check_determinism(rng) -> bool:
    cfg = load_scenario("known-3", ["engine.max_steps=5",
                                    "domain.grid_resolution=40"])
    with tempfile.TemporaryDirectory() as tmp:
        paths = [Path(tmp) / "a.csv", Path(tmp) / "b.csv"]
        for path in paths:
            run(cfg).write_csv(path)
        return paths[0].read_bytes() == paths[1].read_bytes()


CHECKS = [
    ("gradient identity", check_gradient_identity),
    ("hard-assignment limit", check_voronoi_limit),
    ("curvature structure", check_curvature),
    ("rank permutation equivariance", check_rank_equivariance),
    ("consensus contraction", check_consensus_contraction),
    ("data-integral consistency", check_data_consistency),
    ("trace determinism", check_determinism),
]


def run_all(seed=0) -> int:
    rng = np.random.default_rng(seed)
    failures = 0
    for name, check in CHECKS:
        ok = check(rng)
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
        failures += 0 if ok else 1
    return 0 if failures == 0 else 1
