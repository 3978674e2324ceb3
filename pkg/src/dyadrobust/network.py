"""Core domain types: bipartite networks, parameter points, misspecification bounds.

All types are immutable after construction and safe to share across workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError

# Hard cap on the dyad count of a dense panel (N*M float64 arrays).
MAX_DYADS = 500_000_000


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class BipartiteNetwork:
    """An observed bipartite network on N agents and M projects.

    Attributes
    ----------
    adjacency : (N, M) array of {0.0, 1.0}
        Link indicators, agent i by project j.
    x_attrs : (N, d_x) array
        Agent-level observed attributes.
    w_attrs : (M, d_w) array
        Project-level observed attributes.
    z_features : (N, M, d_z) array
        Dyad-level regressors (distances between agent and project attributes).
    names : tuple of str, optional
        Labels for the d_z dyad features.
    """

    adjacency: np.ndarray
    x_attrs: np.ndarray
    w_attrs: np.ndarray
    z_features: np.ndarray
    names: tuple = ()

    def __post_init__(self):
        y = np.asarray(self.adjacency, dtype=np.float64)
        if y.ndim != 2:
            raise DataError("adjacency must be an N x M matrix")
        n_a, n_p = y.shape
        if n_a < 2 or n_p < 2:
            raise DataError("need at least 2 agents and 2 projects")
        if n_a * n_p > MAX_DYADS:
            raise DataError(f"dyad panel too large: {n_a}x{n_p}")
        if not np.isin(y, (0.0, 1.0)).all():
            raise DataError("adjacency entries must be exactly 0 or 1")
        z = np.asarray(self.z_features, dtype=np.float64)
        if z.ndim != 3 or z.shape[:2] != (n_a, n_p):
            raise DataError("z_features must have shape (N, M, d_z)")
        if not np.isfinite(z).all():
            raise DataError("z_features contain NaN or Inf")
        x = np.asarray(self.x_attrs, dtype=np.float64).reshape(n_a, -1)
        w = np.asarray(self.w_attrs, dtype=np.float64).reshape(n_p, -1)
        object.__setattr__(self, "adjacency", _freeze(y))
        object.__setattr__(self, "x_attrs", _freeze(x))
        object.__setattr__(self, "w_attrs", _freeze(w))
        object.__setattr__(self, "z_features", _freeze(z))
        object.__setattr__(self, "names", tuple(self.names))

    @property
    def n_agents(self) -> int:
        return self.adjacency.shape[0]

    @property
    def n_projects(self) -> int:
        return self.adjacency.shape[1]

    @property
    def n_total(self) -> int:
        """Total node count n = N + M (the asymptotic index)."""
        return self.n_agents + self.n_projects

    @property
    def d_z(self) -> int:
        return self.z_features.shape[2]

    def regressors(self) -> np.ndarray:
        """Dyad design array R = (1, z) of shape (N, M, 1 + d_z)."""
        ones = np.ones(self.adjacency.shape + (1,))
        return np.concatenate([ones, self.z_features], axis=2)

    def mean_degree(self) -> float:
        """Observed link frequency, mean of the adjacency matrix."""
        return float(self.adjacency.mean())


@dataclass(frozen=True)
class Theta:
    """Parameter point of the logistic dyad index: sparse intercept plus slopes.

    ``alpha_n`` lives on the log(rate / n) scale, so fitted link
    probabilities are O(1/n) for fixed ``beta``.
    """

    alpha_n: float
    beta: np.ndarray

    def __post_init__(self):
        b = np.atleast_1d(np.asarray(self.beta, dtype=np.float64))
        if not np.isfinite(self.alpha_n) or not np.isfinite(b).all():
            raise ConfigError("theta entries must be finite")
        object.__setattr__(self, "alpha_n", float(self.alpha_n))
        object.__setattr__(self, "beta", _freeze(b))

    @property
    def d_r(self) -> int:
        return 1 + self.beta.size

    def as_array(self) -> np.ndarray:
        return np.concatenate([[self.alpha_n], self.beta])

    @staticmethod
    def from_array(v) -> "Theta":
        v = np.asarray(v, dtype=np.float64).ravel()
        return Theta(alpha_n=float(v[0]), beta=v[1:])


@dataclass(frozen=True)
class MisspecNeighborhood:
    """Researcher-chosen bound on the second moment of the misspecification mean."""

    sigma_bar_sq: float = field(default=0.0)

    def __post_init__(self):
        if not (np.isfinite(self.sigma_bar_sq) and self.sigma_bar_sq >= 0):
            raise ConfigError("sigma_bar_sq must be a nonnegative real")
        object.__setattr__(self, "sigma_bar_sq", float(self.sigma_bar_sq))
