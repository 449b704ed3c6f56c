"""Tataru distance, its smoothed variant, and the scalar time minimization.

The distance between pi and mu is the infimum over t >= 0 of
``t + exp(kappa_hat t) d(pi, mu(t))`` where mu(t) is the gradient flow started
at mu and kappa_hat = min(kappa, 0).  The smoothed variant replaces d by
``psi_eps(d^2 / 2)``, a C^2 approximation of r -> sqrt(2 r) that makes the
objective differentiable in the squared distance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spaces import FlowCurve, ModelSpace, SpacePoint

GRID_POINTS = 512
VALUE_TOL = 1e-9


def psi_eps(eps: float, r) -> np.ndarray | float:
    """Smoothed square root: sqrt(2 r) for r >= eps, a matched quadratic below.

    Explicitly, for 0 <= r <= eps the value is
    ``sqrt(2 eps) + (r - eps)/sqrt(2 eps) - (r - eps)^2 / (2 (2 eps)^{3/2})``,
    which glues C^1 to sqrt(2 r) at r = eps.  Strictly increasing with a
    positive, strictly decreasing derivative.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    arr = np.asarray(r, dtype=float)
    if np.any(arr < 0):
        raise ValueError("psi_eps requires r >= 0")
    root = np.sqrt(2.0 * eps)
    low = root + (arr - eps) / root - np.square(arr - eps) / (2.0 * root**3)
    high = np.sqrt(2.0 * np.maximum(arr, eps))
    out = np.where(arr <= eps, low, high)
    return float(out) if np.isscalar(r) or out.ndim == 0 else out


def psi_eps_prime(eps: float, r) -> np.ndarray | float:
    """Derivative of psi_eps; positive, strictly decreasing."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    arr = np.asarray(r, dtype=float)
    if np.any(arr < 0):
        raise ValueError("psi_eps requires r >= 0")
    root = np.sqrt(2.0 * eps)
    low = 1.0 / root - (arr - eps) / root**3
    high = 1.0 / np.sqrt(2.0 * np.maximum(arr, eps))
    out = np.where(arr <= eps, low, high)
    return float(out) if np.isscalar(r) or out.ndim == 0 else out


def d_eps(space: ModelSpace, eps: float, x: SpacePoint, y: SpacePoint) -> float:
    """Modified distance psi_eps(d^2/2); satisfies d <= d_eps <= max(sqrt(2 eps), d)."""
    return float(psi_eps(eps, 0.5 * space.distance(x, y) ** 2))


@dataclass(frozen=True)
class TataruResult:
    """Value and minimizer set of the scalar time minimization."""

    value: float
    minimizers: np.ndarray
    t_cap: float
    grid_points: int

    @property
    def minimizer(self) -> float:
        return float(self.minimizers[0])


def _golden(f, a: float, b: float, tol: float = 1e-11) -> tuple[float, float]:
    """Golden-section minimum of f on [a, b]; returns (t, f(t))."""
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > tol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = f(x2)
    t = 0.5 * (a + b)
    return t, f(t)


def _minimize_over_time(objective_batch, objective_one, t_cap: float,
                        grid_points: int = GRID_POINTS) -> TataruResult:
    """Coarse grid plus golden refinement around the best local minima.

    ``objective_batch`` maps an array of times to objective values,
    ``objective_one`` a scalar time to a value.  The minimizer set collects all
    refined minima whose value is within VALUE_TOL of the best one.
    """
    ts = np.linspace(0.0, t_cap, grid_points)
    vals = objective_batch(ts)
    # local minima, boundaries included
    left = np.r_[np.inf, vals[:-1]]
    right = np.r_[vals[1:], np.inf]
    local = np.flatnonzero((vals <= left) & (vals <= right))
    order = local[np.argsort(vals[local], kind="stable")][:3]
    candidates = []
    for i in order:
        a = ts[max(i - 1, 0)]
        b = ts[min(i + 1, grid_points - 1)]
        if b <= a:
            candidates.append((float(ts[i]), float(vals[i])))
            continue
        t_star, v_star = _golden(objective_one, a, b)
        candidates.append((t_star, v_star))
        candidates.append((float(ts[i]), float(vals[i])))
    best = min(v for _, v in candidates)
    mins = sorted(t for t, v in candidates if v <= best + VALUE_TOL)
    dedup: list[float] = []
    for t in mins:
        if not dedup or t - dedup[-1] > 1e-8:
            dedup.append(t)
    return TataruResult(value=best, minimizers=np.array(dedup), t_cap=t_cap,
                        grid_points=grid_points)


def _flow_objective(space: ModelSpace, pi: SpacePoint, curve: FlowCurve,
                    kappa_hat: float, eps: float | None):
    pvals = pi.values
    w = space.weight

    def inner(dist2):
        if eps is None:
            return np.sqrt(dist2)
        return psi_eps(eps, 0.5 * dist2)

    def batch(ts):
        diffs = curve.values_at(ts) - pvals[None, :]
        dist2 = w * np.sum(diffs * diffs, axis=1)
        return ts + np.exp(kappa_hat * ts) * inner(dist2)

    def one(t):
        diff = curve.value_at(t) - pvals
        dist2 = w * float(np.dot(diff, diff))
        return t + float(np.exp(kappa_hat * t)) * float(inner(dist2))

    return batch, one


def tataru(space: ModelSpace, pi: SpacePoint, mu: SpacePoint,
           kappa_override: float | None = None) -> TataruResult:
    """Tataru distance from pi to mu (flowing mu), with optional kappa override.

    The search interval [0, T_cap] with T_cap = d(pi, mu) + 1 is exhaustive:
    the objective at t = 0 equals d(pi, mu) and exceeds d(pi, mu) for
    t > T_cap since the objective dominates t.
    """
    kappa = space.kappa if kappa_override is None else kappa_override
    kappa_hat = min(kappa, 0.0)
    curve = space.flow_curve(mu)
    batch, one = _flow_objective(space, pi, curve, kappa_hat, eps=None)
    t_cap = space.distance(pi, mu) + 1.0
    return _minimize_over_time(batch, one, t_cap)


def tataru_eps(space: ModelSpace, eps: float, pi: SpacePoint, mu: SpacePoint,
               kappa_override: float | None = None) -> TataruResult:
    """Smoothed Tataru distance; its minimizer set is the argmin set Xi(pi)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    kappa = space.kappa if kappa_override is None else kappa_override
    kappa_hat = min(kappa, 0.0)
    curve = space.flow_curve(mu)
    batch, one = _flow_objective(space, pi, curve, kappa_hat, eps=eps)
    t_cap = d_eps(space, eps, pi, mu) + 1.0
    return _minimize_over_time(batch, one, t_cap)
