"""Per-point agent ranking, the annealed weight, and the annealing schedule."""

from dataclasses import dataclass

import numpy as np

from .validation import ValidationError, as_positions

KNOWN_DECAY = "known-decay"
UNKNOWN_WARMUP = "unknown-warmup"

WARMING = "warming"
DECAYING = "decaying"


def squared_distances(positions, points) -> np.ndarray:
    """(N, n) squared distances from each point to each agent.

    Computed coordinatewise as (qx-px)^2 + (qy-py)^2 so that geometrically
    equidistant pairs compare exactly equal (rank ties depend on it).
    """
    P = np.asarray(positions, dtype=float)
    Q = np.asarray(points, dtype=float)
    dx = Q[:, 0][:, None] - P[:, 0][None, :]
    dy = Q[:, 1][:, None] - P[:, 1][None, :]
    return dx * dx + dy * dy


def compute_ranks(positions, points, d2=None) -> np.ndarray:
    """Rank of each agent at each point: the number of strictly closer agents.

    Returns an (N, n) integer array; the nearest agent has rank 0 and
    equidistant agents share a rank (a tie does not increment either side).
    Implemented by sorting the per-point distances; the comparison is exact
    on squared distances.
    """
    P = as_positions(positions)
    if d2 is None:
        d2 = squared_distances(P, points)
    N, n = d2.shape
    order = np.argsort(d2, axis=1, kind="stable")
    sorted_d2 = np.take_along_axis(d2, order, axis=1)
    sorted_ranks = np.broadcast_to(np.arange(n), (N, n)).copy()
    for j in range(1, n):  # equal distances inherit the first tied slot's rank
        tie = sorted_d2[:, j] == sorted_d2[:, j - 1]
        if tie.any():
            sorted_ranks[tie, j] = sorted_ranks[tie, j - 1]
    ranks = np.empty_like(sorted_ranks)
    np.put_along_axis(ranks, order, sorted_ranks, axis=1)
    return ranks


def h_lambda(rank, lam) -> np.ndarray | float:
    """Annealed assignment weight exp(-rank / lam), in (0, 1].

    Rank 0 maps to exactly 1. For tiny ``lam`` the result underflows to 0,
    which is the hard Voronoi indicator limit and is accepted silently.
    """
    if not np.isfinite(lam) or lam <= 0:
        raise ValidationError(f"lambda must be positive, got {lam}")
    rank = np.asarray(rank)
    if np.any(rank < 0):
        raise ValidationError("ranks must be nonnegative")
    with np.errstate(under="ignore"):
        out = np.exp(-rank / lam)
    return out if out.ndim else float(out)


def rank_weights(positions, points, lam, ranks=None) -> np.ndarray:
    """(N, n) matrix of h_lambda weights; pass ``ranks`` to reuse/freeze them."""
    if ranks is None:
        ranks = compute_ranks(positions, points)
    return h_lambda(ranks, lam)


@dataclass
class LambdaSchedule:
    """Annealing parameter state machine.

    known-decay mode is the pure function ``lambda_s * alpha**(-lambda_f * t)``.
    unknown-warmup mode starts low and grows geometrically per step (so agents
    first spread out and learn); once the supplied learning signal has risen
    above ``switch_threshold_pct`` and then falls back below it, the schedule
    freezes the peak value and decays exactly like the known mode from that
    moment on.
    """

    mode: str = KNOWN_DECAY
    lambda_s: float = 4.0
    lambda_f: float = 0.2
    alpha: float = 40.0
    warmup_lambda_0: float = 0.05
    warmup_growth: float = 1.005
    switch_threshold_pct: float = 1.0

    def __post_init__(self):
        if self.mode not in (KNOWN_DECAY, UNKNOWN_WARMUP):
            raise ValidationError(f"unknown schedule mode {self.mode!r}")
        for name in ("lambda_s", "lambda_f", "warmup_lambda_0", "warmup_growth"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be positive")
        if self.alpha <= 1:
            raise ValidationError("alpha must exceed 1 for the decay to shrink lambda")
        self.state = DECAYING if self.mode == KNOWN_DECAY else WARMING
        self.t_switch: float | None = None
        self.lambda_peak: float | None = None
        self._current = self.warmup_lambda_0
        self._armed = False

    def decay(self, lam0: float, dt_since: float) -> float:
        return lam0 * self.alpha ** (-self.lambda_f * dt_since)


def lambda_at(schedule: LambdaSchedule, t: float, rcov_signal=None) -> float:
    """Annealing value at time ``t``; the engine calls this once per step.

    In unknown-warmup mode the call is stateful: it advances the geometric
    warm-up by one step and performs the warm-up -> decay switch the first
    time ``rcov_signal`` drops below the threshold after having exceeded it.
    (The signal starts near zero before any data has been collected, so the
    switch only arms once the signal has actually risen above the threshold.)
    """
    if t < 0:
        raise ValidationError("time must be nonnegative")
    if schedule.mode == KNOWN_DECAY:
        return schedule.decay(schedule.lambda_s, t)

    if schedule.state == WARMING and rcov_signal is not None:
        if rcov_signal >= schedule.switch_threshold_pct:
            schedule._armed = True
        elif schedule._armed:
            schedule.state = DECAYING
            schedule.t_switch = t
            schedule.lambda_peak = schedule._current

    if schedule.state == DECAYING:
        return schedule.decay(schedule.lambda_peak, t - schedule.t_switch)

    lam = schedule._current
    schedule._current *= schedule.warmup_growth
    return lam
