"""Scikit-learn style estimators over discrete measures.

Both estimators fit agent positions to a weighted point set (any discrete
measure, e.g. a density sampled on a grid with cell-area weights), expose
``get_params``/``set_params`` through ``BaseEstimator`` and follow the usual
fit/predict/transform conventions, so they compose with sklearn pipelines
and model-selection utilities.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from . import controller, lloyd
from .metrics import rcov
from .ranking import compute_ranks, squared_distances
from .validation import ValidationError


def _check_measure(X, sample_weight):
    X = check_array(X, dtype=float)
    if X.shape[1] != 2:
        raise ValidationError(f"expected 2-dimensional points, got {X.shape[1]}")
    if sample_weight is None:
        w = np.full(X.shape[0], 1.0 / X.shape[0])
    else:
        w = check_array(sample_weight, ensure_2d=False, dtype=float)
        if w.shape != (X.shape[0],):
            raise ValidationError("sample_weight length must match X")
        if np.any(w < 0):
            raise ValidationError("sample_weight must be nonnegative")
    return X, w


class _CoverageBase(BaseEstimator):
    def _init_positions(self, X):
        rng = np.random.default_rng(self.random_state)
        lo, hi = X.min(axis=0), X.max(axis=0)
        return lo + rng.random((self.n_agents, 2)) * (hi - lo)

    def predict(self, X):
        """Index of the nearest fitted agent for each point."""
        check_is_fitted(self, "positions_")
        X = check_array(X, dtype=float)
        return squared_distances(self.positions_, X).argmin(axis=1)

    def transform(self, X):
        """Distances from each point to each fitted agent, (N, n_agents)."""
        check_is_fitted(self, "positions_")
        X = check_array(X, dtype=float)
        return np.sqrt(squared_distances(self.positions_, X))

    def score(self, X, y=None, sample_weight=None):
        """Negative hard-assignment coverage cost (higher is better)."""
        check_is_fitted(self, "positions_")
        X, w = _check_measure(X, sample_weight)
        return -controller.cost_conventional(self.positions_, X, w)


class AnnealedCoverage(_CoverageBase):
    """Coverage by annealed rank-weighted gradient descent.

    Every agent descends the soft cost in which its weight at a point decays
    exponentially with how many agents are closer; the temperature anneals
    from ``lambda_start`` toward zero, recovering hard Voronoi assignment.
    Unlike Lloyd iteration the result is insensitive to initialization.

    Parameters mirror the simulation engine: ``epsilon`` is the gradient
    gain, ``dt`` the Euler step, ``lambda_decay`` and ``decay_base`` shape the
    annealing ``lambda_start * decay_base**(-lambda_decay * t)``, and ``tol``
    (percent, with ``window``) stops early on a sustained small relative cost
    change.
    """

    def __init__(self, n_agents=8, epsilon=0.1, dt=0.01, max_steps=2000,
                 lambda_start=4.0, lambda_decay=0.2, decay_base=40.0,
                 tol=None, window=10, random_state=None):
        self.n_agents = n_agents
        self.epsilon = epsilon
        self.dt = dt
        self.max_steps = max_steps
        self.lambda_start = lambda_start
        self.lambda_decay = lambda_decay
        self.decay_base = decay_base
        self.tol = tol
        self.window = window
        self.random_state = random_state

    def fit(self, X, y=None, sample_weight=None):
        X, w = _check_measure(X, sample_weight)
        if self.decay_base <= 1 or self.lambda_start <= 0 or self.lambda_decay < 0:
            raise ValidationError("need decay_base > 1, lambda_start > 0, lambda_decay >= 0")
        self.n_features_in_ = 2
        P = self._init_positions(X)
        lo, hi = X.min(axis=0), X.max(axis=0)
        costs = [controller.cost_conventional(P, X, w)]
        sustained = 0
        step = 0
        for step in range(1, self.max_steps + 1):
            lam = self.lambda_start * self.decay_base ** (-self.lambda_decay * (step - 1) * self.dt)
            W = controller.control_w(P, X, w, lam)
            P = np.clip(P + self.epsilon * self.dt * W, lo, hi)
            costs.append(controller.cost_conventional(P, X, w))
            if self.tol is not None:
                sustained = sustained + 1 if rcov(costs[-2], costs[-1]) < self.tol else 0
                if sustained >= self.window:
                    break
        self.positions_ = P
        self.cost_history_ = np.asarray(costs)
        self.cost_ = costs[-1]
        self.n_iter_ = step
        self.labels_ = self.predict(X)
        return self

    def fit_predict(self, X, y=None, sample_weight=None):
        return self.fit(X, sample_weight=sample_weight).labels_


class LloydCoverage(_CoverageBase):
    """Coverage by Lloyd iteration (gradient flow toward cell centroids).

    Converges to a local optimum that depends on the initialization, and an
    agent whose cell carries no weight never moves; kept as the classical
    baseline to compare against :class:`AnnealedCoverage`.
    """

    def __init__(self, n_agents=8, gain=1.0, dt=0.01, max_steps=2000,
                 tol=None, window=10, random_state=None):
        self.n_agents = n_agents
        self.gain = gain
        self.dt = dt
        self.max_steps = max_steps
        self.tol = tol
        self.window = window
        self.random_state = random_state

    def fit(self, X, y=None, sample_weight=None):
        X, w = _check_measure(X, sample_weight)
        self.n_features_in_ = 2
        P = self._init_positions(X)
        lo, hi = X.min(axis=0), X.max(axis=0)
        costs = [controller.cost_conventional(P, X, w)]
        sustained = 0
        step = 0
        for step in range(1, self.max_steps + 1):
            u = lloyd.lloyd_control(P, X, w, self.gain)
            P = np.clip(P + u * self.dt, lo, hi)
            costs.append(controller.cost_conventional(P, X, w))
            if self.tol is not None:
                sustained = sustained + 1 if rcov(costs[-2], costs[-1]) < self.tol else 0
                if sustained >= self.window:
                    break
        self.positions_ = P
        self.cost_history_ = np.asarray(costs)
        self.cost_ = costs[-1]
        self.n_iter_ = step
        self.labels_ = self.predict(X)
        return self

    def fit_predict(self, X, y=None, sample_weight=None):
        return self.fit(X, sample_weight=sample_weight).labels_
