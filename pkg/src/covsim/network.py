"""Communication graph between agents and its weighted Laplacian."""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .validation import ValidationError


@dataclass(frozen=True)
class NetworkGraph:
    """Nonnegative communication weights l_ij with zero diagonal."""

    weights: np.ndarray

    def __post_init__(self):
        W = np.asarray(self.weights, dtype=float)
        if W.ndim != 2 or W.shape[0] != W.shape[1]:
            raise ValidationError(f"weights must be square, got shape {W.shape}")
        if np.any(W < 0) or not np.all(np.isfinite(W)):
            raise ValidationError("weights must be finite and nonnegative")
        if np.any(np.diag(W) != 0):
            raise ValidationError("self edges are not permitted")
        object.__setattr__(self, "weights", W)

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    @cached_property
    def laplacian(self) -> np.ndarray:
        """L = diag(row sums) - weights; L @ 1 = 0 by construction."""
        W = self.weights
        return np.diag(W.sum(axis=1)) - W

    def is_connected(self) -> bool:
        """BFS reachability over the symmetrized edge set."""
        adj = (self.weights + self.weights.T) > 0
        seen = np.zeros(self.n, dtype=bool)
        stack = [0]
        seen[0] = True
        while stack:
            i = stack.pop()
            for j in np.flatnonzero(adj[i] & ~seen):
                seen[j] = True
                stack.append(j)
        return bool(seen.all())

    @classmethod
    def complete(cls, n: int, weight: float = 1.0) -> "NetworkGraph":
        W = np.full((n, n), float(weight))
        np.fill_diagonal(W, 0.0)
        return cls(W)

    @classmethod
    def ring(cls, n: int, weight: float = 1.0) -> "NetworkGraph":
        W = np.zeros((n, n))
        for i in range(n):
            W[i, (i + 1) % n] = W[(i + 1) % n, i] = weight
        return cls(W)
