"""Rectangular domain, truncated-Gaussian basis set and density field.

The domain is discretized with a midpoint-rule grid; every integral in the
package is the Riemann sum ``sum_k f(q_k) * cell_area`` over this one grid,
so analytic gradients and finite differences of the discretized costs agree
exactly.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .validation import DomainError, ValidationError, as_point, check_positive


@dataclass(frozen=True)
class Domain:
    """Axis-aligned box with a uniform midpoint sample grid.

    ``grid_resolution`` is the number of samples per axis; the grid has
    ``grid_resolution**2`` points, each carrying the cell area
    ``prod(spacing)``.
    """

    lower: np.ndarray = field(default_factory=lambda: np.zeros(2))
    upper: np.ndarray = field(default_factory=lambda: np.ones(2))
    grid_resolution: int = 100

    def __post_init__(self):
        object.__setattr__(self, "lower", as_point(self.lower))
        object.__setattr__(self, "upper", as_point(self.upper))
        if not np.all(self.upper > self.lower):
            raise ValidationError("domain upper bound must exceed lower bound elementwise")
        if int(self.grid_resolution) < 1:
            raise ValidationError("grid_resolution must be a positive integer")
        object.__setattr__(self, "grid_resolution", int(self.grid_resolution))

    @cached_property
    def spacing(self) -> np.ndarray:
        return (self.upper - self.lower) / self.grid_resolution

    @cached_property
    def cell_area(self) -> float:
        return float(np.prod(self.spacing))

    @cached_property
    def points(self) -> np.ndarray:
        """Midpoint grid as an (N, 2) array, x varying fastest."""
        res = self.grid_resolution
        xs = self.lower[0] + (np.arange(res) + 0.5) * self.spacing[0]
        ys = self.lower[1] + (np.arange(res) + 0.5) * self.spacing[1]
        gx, gy = np.meshgrid(xs, ys)  # row k*res+j -> (xs[j], ys[k])
        pts = np.column_stack([gx.ravel(), gy.ravel()])
        pts.setflags(write=False)
        return pts

    @property
    def n_points(self) -> int:
        return self.grid_resolution**2

    def contains(self, q) -> bool:
        q = np.asarray(q, dtype=float)
        return bool(np.all(q >= self.lower - 1e-12) and np.all(q <= self.upper + 1e-12))

    def clamp(self, positions: np.ndarray) -> np.ndarray:
        return np.clip(positions, self.lower, self.upper)

    def integrate(self, values) -> float:
        """Riemann sum of a per-grid-point field (flat or (res, res) shaped)."""
        values = np.asarray(values, dtype=float)
        if values.size != self.n_points:
            raise ValidationError(
                f"field has {values.size} values, grid has {self.n_points} points"
            )
        return float(values.sum() * self.cell_area)

    def with_resolution(self, grid_resolution: int) -> "Domain":
        return Domain(self.lower.copy(), self.upper.copy(), grid_resolution)


@dataclass(frozen=True)
class BasisSet:
    """Truncated Gaussian bumps: each component is ``G_j(q) - g_trunc`` inside
    a disk of radius ``rho_trunc`` around its mean and exactly zero outside,
    which keeps every component continuous and nonnegative.
    """

    means: np.ndarray
    sigma: float = 0.1
    rho_trunc: float = 0.2

    def __post_init__(self):
        means = np.asarray(self.means, dtype=float)
        if means.ndim != 2 or means.shape[1] != 2:
            raise ValidationError(f"means must be (m, 2), got shape {means.shape}")
        object.__setattr__(self, "means", means)
        check_positive(self.sigma, "sigma")
        check_positive(self.rho_trunc, "rho_trunc")

    @property
    def size(self) -> int:
        return self.means.shape[0]

    @cached_property
    def peak(self) -> float:
        """Gaussian value at the mean, before subtracting the truncation level."""
        return 1.0 / (self.sigma * np.sqrt(2.0 * np.pi))

    @cached_property
    def g_trunc(self) -> float:
        """Gaussian value at the truncation radius; subtracted so components hit 0 there."""
        return self.peak * np.exp(-self.rho_trunc**2 / (2.0 * self.sigma**2))

    def evaluate(self, points) -> np.ndarray:
        """Evaluate all components at ``points``; returns (..., m)."""
        pts = np.asarray(points, dtype=float)
        squeeze = pts.ndim == 1
        pts = np.atleast_2d(pts)
        d2 = ((pts[:, None, :] - self.means[None, :, :]) ** 2).sum(axis=2)
        vals = self.peak * np.exp(-d2 / (2.0 * self.sigma**2)) - self.g_trunc
        vals[d2 >= self.rho_trunc**2] = 0.0
        np.maximum(vals, 0.0, out=vals)  # guard rounding at the disk edge
        return vals[0] if squeeze else vals

    @classmethod
    def grid_layout(cls, shape=(5, 5), lower=(0.0, 0.0), upper=(1.0, 1.0),
                    sigma: float = 0.1, rho_trunc: float = 0.2) -> "BasisSet":
        """Means at the cell centers of an nx-by-ny partition, row-major.

        Component ``j`` (1-based) sits at column ``u = (j-1) % nx`` and row
        ``v = (j-1) // nx``.
        """
        nx, ny = int(shape[0]), int(shape[1])
        lower = as_point(lower)
        upper = as_point(upper)
        ext = upper - lower
        means = [
            lower + ext * np.array([(2 * u + 1) / (2 * nx), (2 * v + 1) / (2 * ny)])
            for v in range(ny)
            for u in range(nx)
        ]
        return cls(np.array(means), sigma=sigma, rho_trunc=rho_trunc)


class DensityField:
    """Nonnegative density ``phi(q) = K(q) . coeffs`` over a domain grid.

    Grid evaluations of the basis matrix and of phi are cached once at
    construction; the instance is immutable afterwards and safe to share.
    """

    def __init__(self, domain: Domain, basis: BasisSet, coeffs):
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (basis.size,):
            raise ValidationError(
                f"coeffs must have shape ({basis.size},), got {coeffs.shape}"
            )
        if np.any(coeffs < 0) or not np.all(np.isfinite(coeffs)):
            raise ValidationError("density coefficients must be finite and nonnegative")
        self.domain = domain
        self.basis = basis
        self.coeffs = coeffs
        self.coeffs.setflags(write=False)
        self.basis_grid = basis.evaluate(domain.points)  # (N, m)
        self.basis_grid.setflags(write=False)
        self.phi_grid = self.basis_grid @ coeffs  # (N,)
        self.phi_grid.setflags(write=False)

    @property
    def n_coeffs(self) -> int:
        return self.basis.size

    def eval_basis(self, point) -> np.ndarray:
        """Basis vector K(point); raises DomainError outside the domain."""
        q = as_point(point)
        if not self.domain.contains(q):
            raise DomainError(f"point {q} lies outside the domain")
        return self.basis.evaluate(q)

    def eval_density(self, point, coeffs=None) -> float:
        """phi at ``point``; ``coeffs`` defaults to the field's own vector."""
        if coeffs is None:
            coeffs = self.coeffs
        else:
            coeffs = np.asarray(coeffs, dtype=float)
            if coeffs.shape != (self.n_coeffs,):
                raise ValidationError(
                    f"coeffs must have shape ({self.n_coeffs},), got {coeffs.shape}"
                )
            if np.any(coeffs < 0):
                raise ValidationError("density coefficients must be nonnegative")
        return float(self.eval_basis(point) @ coeffs)

    def integrate(self, values) -> float:
        return self.domain.integrate(values)

    @cached_property
    def mass(self) -> float:
        return self.integrate(self.phi_grid)

    @cached_property
    def grid_weights(self) -> np.ndarray:
        """Discrete measure phi(q_k) * cell_area used by every controller integral."""
        w = self.phi_grid * self.domain.cell_area
        w.setflags(write=False)
        return w

    def with_coeffs(self, coeffs) -> "DensityField":
        return DensityField(self.domain, self.basis, coeffs)

    def with_resolution(self, grid_resolution: int) -> "DensityField":
        return DensityField(self.domain.with_resolution(grid_resolution),
                            self.basis, self.coeffs)
