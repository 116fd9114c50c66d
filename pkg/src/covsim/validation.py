"""Shared input checks and the package's error types."""

import numpy as np


class DomainError(ValueError):
    """A point lies outside the simulation domain."""


class ValidationError(ValueError):
    """An argument violates a documented precondition."""


def as_point(q) -> np.ndarray:
    """Coerce ``q`` to a (2,) float array."""
    q = np.asarray(q, dtype=float)
    if q.shape != (2,):
        raise ValidationError(f"expected a 2-vector, got shape {q.shape}")
    if not np.all(np.isfinite(q)):
        raise ValidationError("point has non-finite coordinates")
    return q


def as_positions(P, n: int | None = None) -> np.ndarray:
    """Coerce ``P`` to an (n, 2) float array of agent positions."""
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[1] != 2:
        raise ValidationError(f"expected an (n, 2) position array, got shape {P.shape}")
    if n is not None and P.shape[0] != n:
        raise ValidationError(f"expected {n} positions, got {P.shape[0]}")
    if not np.all(np.isfinite(P)):
        raise ValidationError("positions contain non-finite values")
    return P


def check_positive(x, name: str) -> float:
    x = float(x)
    if not np.isfinite(x) or x <= 0:
        raise ValidationError(f"{name} must be positive, got {x}")
    return x


def check_nonnegative_vector(v, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise ValidationError(f"{name} must be a vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValidationError(f"{name} contains non-finite values")
    if np.any(v < 0):
        raise ValidationError(f"{name} must be elementwise nonnegative")
    return v
