import numpy as np
import pytest

from covsim.adaptive import (DataWeight, EstimatorState, accumulate_data,
                             compute_F, control_basis_moment,
                             estimated_control, pre_adaptation,
                             project_and_step)
from covsim.controller import control_w
from covsim.environment import BasisSet
from covsim.network import NetworkGraph
from covsim.validation import ValidationError


@pytest.fixture
def basis():
    return BasisSet.grid_layout(sigma=0.5)


def fresh_state(m=25, init=400.0, **kw):
    return EstimatorState.create(m, a_hat_init=init, **kw)


class TestDataWeight:
    def test_gate(self):
        w = DataWeight(r=180.0, tau_w=6.0)
        assert w(0.0) == 180.0
        assert w(5.99) == 180.0
        assert w(6.0) == 0.0
        assert w(100.0) == 0.0

    def test_rejects_nonpositive(self):
        with pytest.raises(ValidationError):
            DataWeight(r=0.0)


class TestAccumulateData:
    def test_zero_weight_noop(self, basis):
        state = fresh_state()
        before_L = state.Lambda.copy()
        before_U = state.Upsilon.copy()
        accumulate_data(state, basis.evaluate([0.3, 0.3]), 5.0, 0.0, 0.01)
        assert np.array_equal(state.Lambda, before_L)
        assert np.array_equal(state.Upsilon, before_U)

    def test_single_component_outer_product(self):
        state = fresh_state(m=4, init=0.0)
        k_p = np.array([0.0, 0.0, 2.0, 0.0])  # c = 2 on component 3
        accumulate_data(state, k_p, measured_phi=5.0, w_t=3.0, dt=0.1)
        expected_L = np.zeros((4, 4))
        expected_L[2, 2] = 3.0 * 4.0 * 0.1
        expected_U = np.zeros(4)
        expected_U[2] = 3.0 * 2.0 * 5.0 * 0.1
        assert np.allclose(state.Lambda, expected_L)
        assert np.allclose(state.Upsilon, expected_U)

    def test_noiseless_consistency_along_path(self, basis, rng):
        # phi(p) = K(p) . a implies Lambda @ a = Upsilon for any trajectory
        a = rng.random(basis.size) * 1e4
        state = fresh_state()
        for _ in range(10):
            p = rng.random(2)
            k_p = basis.evaluate(p)
            accumulate_data(state, k_p, float(k_p @ a), w_t=180.0, dt=0.01)
        residual = np.linalg.norm(state.Lambda @ a - state.Upsilon)
        assert residual <= 1e-8 * np.linalg.norm(state.Upsilon)

    def test_lambda_psd_and_growing(self, basis, rng):
        state = fresh_state()
        prev_min = 0.0
        for _ in range(5):
            k_p = basis.evaluate(rng.random(2))
            accumulate_data(state, k_p, 1.0, 180.0, 0.01)
            eigs = np.linalg.eigvalsh(state.Lambda)
            assert eigs.min() >= -1e-10
            assert eigs.min() >= prev_min - 1e-12
        assert np.allclose(state.Lambda, state.Lambda.T)

    def test_rejects_negative_measurement(self, basis):
        with pytest.raises(ValidationError):
            accumulate_data(fresh_state(), basis.evaluate([0.5, 0.5]), -1.0,
                            180.0, 0.01)


class TestPreAdaptation:
    def test_truth_fixed_point_reduces_to_F_term(self, basis, rng):
        a = rng.random(basis.size) * 100
        state = fresh_state(init=a)
        # build consistent data so Lambda @ a = Upsilon
        for _ in range(5):
            k_p = basis.evaluate(rng.random(2))
            accumulate_data(state, k_p, float(k_p @ a), 180.0, 0.01)
        F = rng.random((basis.size, basis.size))
        rate = pre_adaptation(state, F, [a, a], [1.0, 1.0])
        assert np.allclose(rate, -F @ a, atol=1e-8 * np.linalg.norm(F @ a))

    def test_gains_zero_leaves_F_term(self, basis, rng):
        m = basis.size
        state = EstimatorState.create(m, a_hat_init=7.0, gamma=1e-300, zeta=0.0)
        F = rng.random((m, m))
        rate = pre_adaptation(state, F, [], [])
        assert np.allclose(rate, -F @ state.a_hat)

    def test_identical_neighbors_no_consensus_term(self, rng):
        m = 6
        state = EstimatorState.create(m, a_hat_init=3.0, zeta=5.0)
        rate_alone = pre_adaptation(state, np.zeros((m, m)), [], [])
        rate_pair = pre_adaptation(state, np.zeros((m, m)),
                                   [state.a_hat.copy()], [123.0])
        assert np.allclose(rate_alone, rate_pair)

    def test_rejects_negative_weight(self, rng):
        m = 3
        state = EstimatorState.create(m, a_hat_init=1.0)
        with pytest.raises(ValidationError):
            pre_adaptation(state, np.zeros((m, m)), [np.zeros(m)], [-1.0])


class TestComputeF:
    def test_psd_random_configs(self, basis, rng):
        pts = rng.random((800, 2))
        K = basis.evaluate(pts)
        P = rng.random((4, 2))
        for i in range(4):
            F = compute_F(P, pts, K, 1.0 / 800, lam=0.8, agent=i, epsilon=0.9)
            eigs = np.linalg.eigvalsh(F)
            assert eigs.min() >= -1e-10
            assert np.linalg.matrix_rank(F, tol=1e-12) <= 2

    def test_symmetric_basis_rank_deficient(self):
        # two bumps mirrored about the agent: the x-moment rows cancel
        basis = BasisSet(means=np.array([[0.3, 0.5], [0.7, 0.5]]), sigma=0.5,
                         rho_trunc=0.2)
        xs = np.linspace(0.0, 1.0, 201)
        ys = np.linspace(0.0, 1.0, 201)
        gx, gy = np.meshgrid(xs, ys)
        pts = np.column_stack([gx.ravel(), gy.ravel()])
        K = basis.evaluate(pts)
        P = np.array([[0.5, 0.5]])
        B = control_basis_moment(P, pts, K, 1.0, lam=1.0)
        # K_1 and K_2 moments are mirror images: summed x-moments cancel pairwise
        assert B[0, 0, 0] == pytest.approx(-B[0, 0, 1], abs=1e-10)


class TestProjection:
    def test_frozen_at_bound_with_negative_rate(self):
        state = EstimatorState.create(3, a_hat_init=0.0, a_min=0.0)
        project_and_step(state, np.array([-5.0, -1.0, -0.1]), 0.01)
        assert np.all(state.a_hat == 0.0)

    def test_bound_with_positive_rate_moves(self):
        state = EstimatorState.create(1, a_hat_init=0.0, a_min=0.0)
        project_and_step(state, np.array([5.0]), 0.01)
        assert state.a_hat[0] == pytest.approx(0.05)

    def test_snap_when_crossing_in_one_step(self):
        # interior component with a huge negative rate cannot undershoot a_min;
        # a tiny-dt reference integration stays at the bound as well
        state = EstimatorState.create(1, a_hat_init=1.0, a_min=0.0)
        project_and_step(state, np.array([-1e4]), 0.01)
        assert state.a_hat[0] == 0.0
        ref = EstimatorState.create(1, a_hat_init=1.0, a_min=0.0)
        for _ in range(1000):
            project_and_step(ref, np.array([-1e4]), 0.01 / 1000)
        assert ref.a_hat[0] == 0.0

    def test_gamma_gain_scales_update(self):
        state = EstimatorState.create(2, a_hat_init=1.0, Gamma_diag=[2.0, 0.5])
        project_and_step(state, np.array([1.0, 1.0]), 0.1)
        assert np.allclose(state.a_hat, [1.2, 1.05])

    def test_never_below_bound_random_sequences(self, rng):
        state = EstimatorState.create(8, a_hat_init=rng.random(8), a_min=0.1)
        state.a_hat += 0.1
        for _ in range(300):
            project_and_step(state, rng.normal(size=8) * 50, 0.01)
            assert np.all(state.a_hat >= 0.1)


class TestConsensus:
    def test_disagreement_contracts(self, rng):
        n, m = 5, 12
        graph = NetworkGraph.complete(n)
        states = [EstimatorState.create(m, a_hat_init=rng.random(m) * 100,
                                        gamma=1e-300, zeta=0.05)
                  for _ in range(n)]
        F = np.zeros((m, m))

        def disagreement():
            A = np.array([s.a_hat for s in states])
            return np.linalg.norm(A[:, None] - A[None, :], axis=2).max()

        # zeta * dt * ||L|| = 0.05 * 0.01 * 5 well below the stability bound;
        # the contraction rate is zeta * n * dt per step, so 2000 steps gives
        # a factor e^-5
        values = [disagreement()]
        for _ in range(2000):
            snap = [s.a_hat.copy() for s in states]
            for i, s in enumerate(states):
                rate = pre_adaptation(s, F, snap, graph.weights[i])
                project_and_step(s, rate, 0.01)
            values.append(disagreement())
        diffs = np.diff(values)
        assert np.all(diffs <= 1e-12)
        assert values[-1] < 0.01 * values[0]

    def test_truth_initialization_stays_bounded(self, basis, rng):
        # all agents start at the truth; only the -F a drift acts and the
        # estimates stay bounded over 1e3 steps
        a = rng.random(basis.size) * 500
        n = 4
        pts = rng.random((500, 2))
        K = basis.evaluate(pts)
        graph = NetworkGraph.complete(n)
        states = [EstimatorState.create(basis.size, a_hat_init=a) for _ in range(n)]
        P = rng.random((n, 2))
        bound = 10 * np.linalg.norm(a)
        for _ in range(1000):
            snap = [s.a_hat.copy() for s in states]
            for i, s in enumerate(states):
                F = compute_F(P, pts, K, 1.0 / 500, lam=1.0, agent=i, epsilon=0.9)
                rate = pre_adaptation(s, F, snap, graph.weights[i])
                project_and_step(s, rate, 0.01)
            assert all(np.linalg.norm(s.a_hat) < bound for s in states)


class TestEstimatedControl:
    def test_truth_matches_true_control(self, basis, rng):
        a = rng.random(basis.size) * 100
        pts = rng.random((600, 2))
        K = basis.evaluate(pts)
        cell = 1.0 / 600
        P = rng.random((4, 2))
        u_est = estimated_control(P, pts, K, cell, a, lam=0.9, epsilon=0.9)
        w = (K @ a) * cell
        u_true = 0.9 * control_w(P, pts, w, 0.9)
        assert np.allclose(u_est, u_true, rtol=1e-10)

    def test_zero_estimate_zero_control(self, basis, rng):
        pts = rng.random((200, 2))
        K = basis.evaluate(pts)
        P = rng.random((3, 2))
        u = estimated_control(P, pts, K, 1.0 / 200, np.zeros(basis.size),
                              lam=1.0, epsilon=0.9)
        assert np.all(u == 0.0)

    def test_linearity_in_coefficients(self, basis, rng):
        a = rng.random(basis.size) * 50
        pts = rng.random((400, 2))
        K = basis.evaluate(pts)
        P = rng.random((3, 2))
        u1 = estimated_control(P, pts, K, 1.0 / 400, a, lam=0.7, epsilon=0.5)
        u2 = estimated_control(P, pts, K, 1.0 / 400, 2 * a, lam=0.7, epsilon=0.5)
        assert np.allclose(u2, 2 * u1, rtol=1e-12)

    def test_per_agent_estimates(self, basis, rng):
        pts = rng.random((300, 2))
        K = basis.evaluate(pts)
        P = rng.random((2, 2))
        A = rng.random((2, basis.size)) * 10
        u_stack = estimated_control(P, pts, K, 1.0 / 300, A, lam=1.0, epsilon=1.0)
        for i in range(2):
            u_i = estimated_control(P, pts, K, 1.0 / 300, A[i], lam=1.0, epsilon=1.0)
            assert np.allclose(u_stack[i], u_i[i])
