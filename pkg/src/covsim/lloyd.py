"""Voronoi assignment, cell centroids and the Lloyd gradient law (baseline)."""

import numpy as np

from .ranking import squared_distances
from .validation import ValidationError, as_positions


def voronoi_assign(positions, points, d2=None) -> np.ndarray:
    """Owner agent of each point: nearest agent, lowest index on ties."""
    P = as_positions(positions)
    if d2 is None:
        d2 = squared_distances(P, points)
    return d2.argmin(axis=1)


def cell_mass_moment(positions, points, weights, owner=None):
    """Per-cell mass M_i and first moment integral of (q - p_i) over V_i.

    Returns ``(mass (n,), moment (n, 2))``. An empty or zero-density cell has
    mass 0 and moment (0, 0).
    """
    P = as_positions(positions)
    Q = np.asarray(points, dtype=float)
    w = np.asarray(weights, dtype=float)
    if owner is None:
        owner = voronoi_assign(P, points)
    n = P.shape[0]
    mass = np.bincount(owner, weights=w, minlength=n)
    mx = np.bincount(owner, weights=w * Q[:, 0], minlength=n)
    my = np.bincount(owner, weights=w * Q[:, 1], minlength=n)
    moment = np.column_stack([mx, my]) - mass[:, None] * P
    return mass, moment


def cell_centroids(positions, points, weights, owner=None) -> np.ndarray:
    """Mass centroid of each Voronoi cell; an agent's own position stands in
    for the undefined centroid of a zero-mass cell."""
    P = as_positions(positions)
    mass, moment = cell_mass_moment(P, points, weights, owner)
    centroids = P.copy()
    ok = mass > 0
    centroids[ok] += moment[ok] / mass[ok, None]
    return centroids


def lloyd_control(positions, points, weights, gain, owner=None) -> np.ndarray:
    """Lloyd velocities k_i * M_i * (C_i - p_i), as (n, 2).

    Computed through the moment integral, which is identically zero for a
    zero-mass cell: such an agent stalls instead of dividing by zero.
    """
    gain = np.asarray(gain, dtype=float)
    if np.any(gain <= 0):
        raise ValidationError("lloyd gain must be positive")
    _, moment = cell_mass_moment(positions, points, weights, owner)
    return np.atleast_1d(gain)[:, None] * moment if gain.ndim else gain * moment


def calibrate_gain(positions, points, weights, target_max_speed: float,
                   fallback: float = 1.0) -> float:
    """Gain k making the fastest initial Lloyd velocity match ``target_max_speed``.

    Keeps both methods inside the same control input range at t = 0. Falls
    back to ``fallback`` when every cell is massless (nothing to match).
    """
    _, moment = cell_mass_moment(positions, points, weights)
    peak = float(np.linalg.norm(moment, axis=1).max())
    if peak <= 0.0 or target_max_speed <= 0.0:
        return fallback
    return target_max_speed / peak
