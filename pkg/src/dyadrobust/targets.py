"""Catalog of scalar target functionals of the dyad model.

A target is a triple: the per-dyad kernel ``eval(z, v, theta)`` whose
population average (integrated over the unobserved perturbation ``v``)
defines the scalar of interest, plus its analytic derivatives ``d_theta``
(gradient in the index parameters at ``v = 0``) and ``d_v`` (derivative in
the perturbation slot at ``v = 0``).

The perturbation slot is the *scaled* one: estimands are averages of
``eval(z, v / sqrt(n), theta)`` over draws of ``v``, and ``d_v`` is the
derivative with respect to that slot. This keeps ``d_v`` O(1) for degree
targets in the sparse regime.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import expit

from .errors import ConfigError
from .network import Theta

KINDS = (
    "coordinate",
    "avg_out_degree",
    "avg_in_degree",
    "avg_marginal_effect",
    "avg_partial_effect",
)


def _index(z: np.ndarray, theta: Theta) -> np.ndarray:
    """Linear index R'theta per dyad; z has shape (..., d_z)."""
    return theta.alpha_n + z @ theta.beta


def _logistic(u):
    return expit(u)


@dataclass(frozen=True)
class TargetFunctional:
    """Scalar parameter of interest with analytic derivatives.

    ``eval(z, v, theta)`` maps dyad features (..., d_z), a perturbation and a
    parameter point to per-dyad values; ``d_theta(z, theta)`` returns the
    (..., d_r) gradient at v=0 and ``d_v(z, theta)`` the perturbation
    derivative at v=0.
    """

    kind: str
    eval: Callable[[np.ndarray, float, Theta], np.ndarray]
    d_theta: Callable[[np.ndarray, Theta], np.ndarray]
    d_v: Callable[[np.ndarray, Theta], np.ndarray]

    def plugin_mean(self, z: np.ndarray, theta: Theta) -> float:
        """Sample average of the kernel at v = 0."""
        return float(np.mean(self.eval(z, 0.0, theta)))


def _coordinate(component: int) -> TargetFunctional:
    def ev(z, v, theta):
        out = np.broadcast_to(theta.as_array()[component], z.shape[:-1])
        return out + 0.0 * np.asarray(v)  # v never enters

    def dth(z, theta):
        e = np.zeros(theta.d_r)
        e[component] = 1.0
        return np.broadcast_to(e, z.shape[:-1] + (theta.d_r,))

    def dv(z, theta):
        return np.zeros(z.shape[:-1])

    return TargetFunctional(f"coordinate({component})", ev, dth, dv)


def _degree(side_count: int, kind: str, logistic_form: bool) -> TargetFunctional:
    c = float(side_count)
    if logistic_form:
        def ev(z, v, theta):
            return c * _logistic(_index(z, theta) + v)

        def dth(z, theta):
            lam = _logistic(_index(z, theta))
            w = c * lam * (1.0 - lam)
            r = np.concatenate([np.ones(z.shape[:-1] + (1,)), z], axis=-1)
            return w[..., None] * r

        def dv(z, theta):
            lam = _logistic(_index(z, theta))
            return c * lam * (1.0 - lam)
    else:
        def ev(z, v, theta):
            return c * np.exp(_index(z, theta) + v)

        def dth(z, theta):
            w = c * np.exp(_index(z, theta))
            r = np.concatenate([np.ones(z.shape[:-1] + (1,)), z], axis=-1)
            return w[..., None] * r

        def dv(z, theta):
            return c * np.exp(_index(z, theta))

    return TargetFunctional(kind, ev, dth, dv)


def _effect(kind: str, component: int, n: int, scale_by_n: bool) -> TargetFunctional:
    """Average marginal / partial effect of dyad feature ``component``.

    Marginal effect: derivative of the link probability in z_component,
    i.e. the logistic density times beta_component. Partial effect:
    derivative in beta_component, the density times z_component. The sparse
    n-scaling (as the estimand is usually reported) is on by default.
    """
    scale = float(n) if scale_by_n else 1.0

    def dens(u):
        lam = _logistic(u)
        return lam * (1.0 - lam)

    def ddens(u):
        lam = _logistic(u)
        return lam * (1.0 - lam) * (1.0 - 2.0 * lam)

    marginal = kind == "avg_marginal_effect"

    def ev(z, v, theta):
        fac = theta.beta[component] if marginal else z[..., component]
        return scale * dens(_index(z, theta) + v) * fac

    def dth(z, theta):
        u = _index(z, theta)
        r = np.concatenate([np.ones(z.shape[:-1] + (1,)), z], axis=-1)
        fac = theta.beta[component] if marginal else z[..., component]
        g = scale * (ddens(u) * fac)[..., None] * r
        if marginal:
            e = np.zeros(theta.d_r)
            e[1 + component] = 1.0
            g = g + scale * dens(u)[..., None] * e
        return g

    def dv(z, theta):
        fac = theta.beta[component] if marginal else z[..., component]
        return scale * ddens(_index(z, theta)) * fac

    return TargetFunctional(f"{kind}({component})", ev, dth, dv)


def builtin_target(kind, n=None, n_agents=None, n_projects=None, *,
                   component=None, logistic_form=False, scale_by_n=True):
    """Build one of the cataloged target functionals.

    Parameters
    ----------
    kind : str
        One of ``coordinate``, ``avg_out_degree``, ``avg_in_degree``,
        ``avg_marginal_effect``, ``avg_partial_effect``.
    n, n_agents, n_projects : int
        Sample-size constants bound into the functional where needed.
    component : int
        Coordinate index (for ``coordinate``: position in (alpha, beta);
        for effects: which dyad feature).
    logistic_form : bool
        Degree targets use the exponential (sparse-limit) kernel by
        default; set True for the literal logistic-CDF kernel.
    scale_by_n : bool
        Whether effect targets carry the n scaling (default, as reported).
    """
    if kind == "coordinate":
        if component is None or component < 0:
            raise ConfigError("coordinate target needs a nonnegative component index")
        return _coordinate(int(component))
    if kind == "avg_out_degree":
        if n_projects is None:
            raise ConfigError("avg_out_degree needs n_projects")
        return _degree(n_projects, kind, logistic_form)
    if kind == "avg_in_degree":
        if n_agents is None:
            raise ConfigError("avg_in_degree needs n_agents")
        return _degree(n_agents, kind, logistic_form)
    if kind in ("avg_marginal_effect", "avg_partial_effect"):
        if component is None or n is None:
            raise ConfigError(f"{kind} needs component and n")
        return _effect(kind, int(component), int(n), scale_by_n)
    raise ConfigError(f"unknown target kind: {kind!r}")


def numeric_target(kind: str, eval_fn, step: float = 1e-6) -> TargetFunctional:
    """Escape hatch: wrap a custom kernel with central-difference derivatives."""

    def dth(z, theta):
        th = theta.as_array()
        cols = []
        for k in range(th.size):
            hi = th.copy(); hi[k] += step
            lo = th.copy(); lo[k] -= step
            cols.append((eval_fn(z, 0.0, Theta.from_array(hi))
                         - eval_fn(z, 0.0, Theta.from_array(lo))) / (2 * step))
        return np.stack(cols, axis=-1)

    def dv(z, theta):
        return (eval_fn(z, step, theta) - eval_fn(z, -step, theta)) / (2 * step)

    return TargetFunctional(kind, eval_fn, dth, dv)
