"""Time stepping, convergence detection and scenario execution.

The engine forward-Euler integrates the agent dynamics at a fixed sampling
time. Each step computes controls from the current state, advances positions
(clamped to the domain by default) and, in unknown mode, runs one synchronous
round of measurement, data accumulation, pre-adaptation with consensus and
projection; consensus always reads the estimates published at the previous
step.
"""

import numpy as np

from . import adaptive, controller, lloyd
from .config import ScenarioConfig
from .metrics import rcov
from .ranking import DECAYING, compute_ranks, lambda_at, squared_distances
from .trace import SimulationTrace
from .validation import ValidationError


class SimulationError(RuntimeError):
    """The integration produced an invalid state."""


class Simulation:
    """Mutable simulation state for one scenario run."""

    def __init__(self, config: ScenarioConfig, density=None, seed=None):
        self.config = config
        self.density = config.build_density() if density is None else density
        self.domain = self.density.domain
        self.points = self.domain.points
        self.weights = self.density.grid_weights
        self.method = config.engine.method
        self.env_mode = config.engine.env_mode
        self.epsilon = config.engine.epsilon
        self.dt = config.engine.dt
        self.positions = config.initial_positions(self.domain, seed)
        self.t = 0.0
        self.steps_done = 0
        self.schedule = config.build_schedule()
        self.unknown = self.env_mode == "unknown"
        if self.unknown:
            est = config.estimator
            n = config.agents.n
            m = self.density.n_coeffs
            self.network = config.build_network()
            self.data_weight = adaptive.DataWeight(est.w_r, est.tau_w)
            self.estimators = [
                adaptive.EstimatorState.create(
                    m, a_hat_init=est.a_hat_init, gamma=est.gamma, zeta=est.zeta,
                    Gamma_diag=est.gamma_gain, a_min=est.a_min)
                for _ in range(n)
            ]
            self._signal_history: list[float] = []
        self.lloyd_gain = None
        if self.method == "lloyd":
            self.lloyd_gain = self._resolve_lloyd_gain()

    # -- gains ------------------------------------------------------------

    def _initial_proposed_speed(self) -> float:
        """Largest initial speed of the proposed law, the calibration target."""
        ranks = compute_ranks(self.positions, self.points)
        lam = self._peek_lambda()
        if self.unknown:
            a0 = np.array([e.a_hat for e in self.estimators])
            u = adaptive.estimated_control(
                self.positions, self.points, self.density.basis_grid,
                self.domain.cell_area, a0, lam, self.epsilon, ranks)
        else:
            u = self.epsilon * controller.control_w(
                self.positions, self.points, self.weights, lam, ranks)
        return float(np.linalg.norm(u, axis=1).max())

    def _peek_lambda(self) -> float:
        if self.schedule.mode == "known-decay":
            return self.schedule.decay(self.schedule.lambda_s, self.t)
        return self.schedule._current if self.schedule.state != DECAYING else \
            self.schedule.decay(self.schedule.lambda_peak, self.t - self.schedule.t_switch)

    def _resolve_lloyd_gain(self) -> float:
        gain = self.config.lloyd.gain
        if gain != "auto":
            gain = float(gain)
            if gain <= 0:
                raise ValidationError("lloyd.gain must be positive")
            return gain
        target = self._initial_proposed_speed()
        weights = self._lloyd_weights()
        k = lloyd.calibrate_gain(self.positions, self.points, weights, target)
        return k

    def _lloyd_weights(self) -> np.ndarray:
        """Measure the Lloyd law sees: true density when known, the agents'
        shared initial estimate when unknown (per-agent later in the run)."""
        if not self.unknown:
            return self.weights
        a0 = self.estimators[0].a_hat
        return (self.density.basis_grid @ a0) * self.domain.cell_area

    # -- schedule signal ---------------------------------------------------

    def _learning_signal(self):
        """Windowed relative change (percent) of the mean estimate norm."""
        window = self.config.schedule.switch_window
        hist = self._signal_history
        norm = float(np.mean([np.linalg.norm(e.a_hat) for e in self.estimators]))
        hist.append(norm)
        if len(hist) <= window or hist[-1 - window] == 0.0:
            return None
        return rcov(hist[-1 - window], hist[-1])

    # -- stepping ----------------------------------------------------------

    def compute_controls(self, d2=None):
        """Controls and annealing value at the current state.

        Warm-up schedules mutate on this call, so call it exactly once per
        step (the run loop does).
        """
        if d2 is None:
            d2 = squared_distances(self.positions, self.points)
        ranks = None
        if self.method == "proposed" or self.unknown:
            ranks = compute_ranks(self.positions, self.points, d2)
        signal = self._learning_signal() if self.unknown else None
        lam = lambda_at(self.schedule, self.t, signal)

        if self.method == "proposed":
            if self.unknown:
                a_hat = np.array([e.a_hat for e in self.estimators])
                u = adaptive.estimated_control(
                    self.positions, self.points, self.density.basis_grid,
                    self.domain.cell_area, a_hat, lam, self.epsilon, ranks)
            else:
                u = self.epsilon * controller.control_w(
                    self.positions, self.points, self.weights, lam, ranks)
        else:
            owner = lloyd.voronoi_assign(self.positions, self.points, d2)
            if self.unknown:
                a_hat = np.array([e.a_hat for e in self.estimators])
                phi_hat_w = (self.density.basis_grid @ a_hat.T) * self.domain.cell_area
                ind = owner[:, None] == np.arange(self.positions.shape[0])[None, :]
                hp = ind * phi_hat_w  # per-agent estimated measure on own cell
                moment = hp.T @ self.points - hp.sum(axis=0)[:, None] * self.positions
                u = self.lloyd_gain * moment
            else:
                u = lloyd.lloyd_control(self.positions, self.points, self.weights,
                                        self.lloyd_gain, owner)
        if not np.all(np.isfinite(u)):
            bad = int(np.flatnonzero(~np.isfinite(u).all(axis=1))[0])
            raise SimulationError(
                f"non-finite control for agent {bad} at step {self.steps_done}")
        return u, lam, ranks, d2

    def _update_estimators(self, lam, ranks):
        """One synchronous estimation round from the current state.

        The baseline uses the hard Voronoi indicator in place of the annealed
        weights inside the consistency integrals; everything else is shared.
        """
        w_t = self.data_weight(self.t)
        basis = self.density.basis
        if self.method == "proposed":
            B = adaptive.control_basis_moment(
                self.positions, self.points, self.density.basis_grid,
                self.domain.cell_area, lam=lam, ranks=ranks)
        else:
            owner = lloyd.voronoi_assign(self.positions, self.points)
            ind = (owner[:, None] == np.arange(self.positions.shape[0])[None, :])
            B = adaptive.control_basis_moment(
                self.positions, self.points, self.density.basis_grid,
                self.domain.cell_area, h_matrix=ind.astype(float))
        snapshot = [e.a_hat.copy() for e in self.estimators]
        L = self.network.weights
        for i, est in enumerate(self.estimators):
            k_p = basis.evaluate(self.positions[i])
            phi_p = float(k_p @ self.density.coeffs)
            adaptive.accumulate_data(est, k_p, phi_p, w_t, self.dt)
            F = self.epsilon * (B[i].T @ B[i])
            rate = adaptive.pre_adaptation(est, F, snapshot, L[i])
            adaptive.project_and_step(est, rate, self.dt)

    def advance(self, u, lam=None, ranks=None):
        """Euler-advance positions (and estimates in unknown mode) by dt.

        ``lam``/``ranks`` are the values already computed for this step by
        ``compute_controls``; the estimation round consumes the same ones.
        """
        if self.unknown:
            self._update_estimators(lam, ranks)
        new_positions = self.positions + u * self.dt
        outside = (new_positions < self.domain.lower) | (new_positions > self.domain.upper)
        if np.any(outside):
            if self.config.engine.out_of_domain == "error":
                bad = int(np.flatnonzero(outside.any(axis=1))[0])
                raise SimulationError(
                    f"agent {bad} left the domain at step {self.steps_done}")
            new_positions = self.domain.clamp(new_positions)
        self.positions = new_positions
        self.t += self.dt
        self.steps_done += 1


def run(config: ScenarioConfig, density=None, seed=None) -> SimulationTrace:
    """Run a scenario to convergence or max_steps and return its trace."""
    sim = Simulation(config, density=density, seed=seed)
    conv = config.convergence
    n = config.agents.n
    unknown = sim.unknown

    t_rec, p_rec, u_rec = [], [], []
    cost_c, cost_p, lam_rec, rcov_rec = [], [], [], []
    a_rec = [] if unknown else None
    converged_at = None
    sustained = 0

    def record():
        u, lam, ranks, d2 = sim.compute_controls()
        t_rec.append(sim.t)
        p_rec.append(sim.positions.copy())
        u_rec.append(u)
        cost_c.append(controller.cost_conventional(
            sim.positions, sim.points, sim.weights, d2))
        if sim.method == "proposed":
            cost_p.append(controller.cost_proposed(
                sim.positions, sim.points, sim.weights, lam, ranks, d2))
            lam_rec.append(lam)
        else:
            cost_p.append(np.nan)
            lam_rec.append(np.nan)
        rcov_rec.append(rcov(cost_c[-2], cost_c[-1]) if len(cost_c) > 1 else np.nan)
        if unknown:
            a_rec.append(np.array([e.a_hat for e in sim.estimators]))
        return u, lam, ranks

    u, lam, ranks = record()
    while sim.steps_done < config.engine.max_steps:
        sim.advance(u, lam, ranks)
        u, lam, ranks = record()
        check = conv.enabled and (not unknown or sim.schedule.state == DECAYING)
        if check and rcov_rec[-1] < conv.threshold_pct:
            sustained += 1
            if sustained >= conv.window:
                converged_at = sim.steps_done
                break
        else:
            sustained = 0

    return SimulationTrace(
        t=t_rec, positions=p_rec, controls=u_rec, cost_conventional=cost_c,
        cost_proposed=cost_p, lam=lam_rec, rcov=rcov_rec,
        a_hat=a_rec, converged_at_step=converged_at, name=config.name,
        method=sim.method, env_mode=sim.env_mode,
    )
