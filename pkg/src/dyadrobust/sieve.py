"""Instrument (sieve) bases turning the conditional moment into unconditional ones."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .network import BipartiteNetwork

# Guard against accidentally huge tensor-product bases.
MAX_BASIS_DIM = 256


@dataclass(frozen=True)
class SieveBasis:
    """Evaluated instrument matrix H, one k-vector per dyad.

    The first column is always the constant 1, and the dimension must be at
    least d_z + 1 so the regularity constraint can be satisfied.
    """

    dim: int
    family: str
    values: np.ndarray  # (N, M, dim)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 3 or v.shape[2] != self.dim:
            raise ConfigError("values must have shape (N, M, dim)")
        if not np.isfinite(v).all():
            raise ConfigError("basis values must be finite")
        if not np.allclose(v[..., 0], 1.0):
            raise ConfigError("first basis function must be the constant 1")
        v = np.ascontiguousarray(v)
        v.flags.writeable = False
        object.__setattr__(self, "values", v)


def hermite_columns(z: np.ndarray, k: int) -> np.ndarray:
    """Probabilists' Hermite polynomials He_0 .. He_{k-1} evaluated at z.

    Uses the recurrence He_{j+1}(z) = z He_j(z) - j He_{j-1}(z).
    """
    z = np.asarray(z, dtype=np.float64)
    cols = np.empty(z.shape + (k,))
    cols[..., 0] = 1.0
    if k > 1:
        cols[..., 1] = z
    for j in range(1, k - 1):
        cols[..., j + 1] = z * cols[..., j] - j * cols[..., j - 1]
    return cols


def hermite_basis(z_features: np.ndarray, k_n: int) -> SieveBasis:
    """Hermite basis of a scalar dyad feature; dimension k_n counts the constant.

    k_n = 2 reproduces the raw regressors (1, z) exactly.
    """
    z = np.asarray(z_features, dtype=np.float64)
    if z.ndim != 3:
        raise ConfigError("z_features must have shape (N, M, d_z)")
    if z.shape[2] != 1:
        raise ConfigError("hermite_basis requires a scalar dyad feature; "
                          "use tensor_poly_basis for d_z > 1")
    if k_n < 2:
        raise ConfigError("k_n must be at least 2 (constant plus slope)")
    return SieveBasis(k_n, "hermite_scalar", hermite_columns(z[..., 0], k_n))


def tensor_poly_basis(x_attrs: np.ndarray, w_attrs: np.ndarray,
                      degrees: tuple) -> SieveBasis:
    """Tensor product of per-node polynomial expansions, constant included once.

    ``degrees = (p, q)`` expands scalar attributes to (1, x, .., x^p) and
    (1, w, .., w^q) and takes all products, giving dimension (p+1)(q+1).
    """
    x = np.asarray(x_attrs, dtype=np.float64).reshape(len(x_attrs), -1)
    w = np.asarray(w_attrs, dtype=np.float64).reshape(len(w_attrs), -1)
    if x.shape[1] != 1 or w.shape[1] != 1:
        raise ConfigError("tensor_poly_basis expects scalar node attributes")
    p, q = int(degrees[0]), int(degrees[1])
    dim = (p + 1) * (q + 1)
    if dim > MAX_BASIS_DIM:
        raise ConfigError(f"tensor basis dimension {dim} exceeds cap {MAX_BASIS_DIM}")
    xp = np.stack([x[:, 0] ** a for a in range(p + 1)], axis=1)  # (N, p+1)
    wq = np.stack([w[:, 0] ** b for b in range(q + 1)], axis=1)  # (M, q+1)
    # Order: constant, then x-powers, then w-powers, then mixed products.
    vals = np.einsum("ia,jb->ijab", xp, wq)
    n_a, n_p = x.shape[0], w.shape[0]
    cols = [vals[:, :, 0, 0]]
    cols += [vals[:, :, a, 0] for a in range(1, p + 1)]
    cols += [vals[:, :, 0, b] for b in range(1, q + 1)]
    for a in range(1, p + 1):
        for b in range(1, q + 1):
            cols.append(vals[:, :, a, b])
    return SieveBasis(dim, "tensor_poly", np.stack(cols, axis=2))


def regressor_augmented_basis(network: BipartiteNetwork, k_n: int) -> SieveBasis:
    """Instruments for multi-feature dyads: R plus centered squares and products.

    Always spans the regressors (1, z), so the plug-in comparator check and
    the regularity constraint remain well posed. Extra columns are z_i^2 - 1
    then z_i z_j (i < j), appended until the requested dimension (at least
    d_z + 1) is reached.
    """
    z = network.z_features
    d_z = z.shape[2]
    if d_z == 1:
        return hermite_basis(z, max(k_n, 2))
    dim = max(k_n, d_z + 1)
    cols = [np.ones(z.shape[:2])] + [z[..., i] for i in range(d_z)]
    extras = [z[..., i] ** 2 - 1.0 for i in range(d_z)]
    for i in range(d_z):
        for j in range(i + 1, d_z):
            extras.append(z[..., i] * z[..., j])
    for e in extras:
        if len(cols) >= dim:
            break
        cols.append(e)
    if len(cols) < dim:
        raise ConfigError(f"cannot reach dimension {dim} with degree-2 terms "
                          f"of {d_z} features")
    return SieveBasis(len(cols), "regressor_augmented", np.stack(cols, axis=2))
