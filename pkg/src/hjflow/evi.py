"""Numerical verification of the EVI inequality and its flow estimates.

Each check returns a signed violation (positive means the inequality failed by
that much); suites sample random instances and collect worst cases.  The upper
right time derivative is realized as a forward finite difference with a small
step delta, so residuals of exact-equality instances sit at O(delta).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spaces import FlowTrajectory, ModelSpace, SpacePoint
from .tataru import psi_eps


def evi_residual(space: ModelSpace, x: SpacePoint, rho: SpacePoint,
                 t: float, delta: float) -> float:
    """Forward-difference EVI residual L - R at time t along the flow from x.

    L approximates the upper right derivative of d^2(x(.), rho)/2 with step
    delta; R = E(rho) - E(x(t)) - kappa/2 d^2(x(t), rho).  Nonpositive up to
    O(delta) for valid flows.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    if t < 0:
        raise ValueError("negative time")
    curve = space.flow_curve(x)

    def half_sq(s: float) -> float:
        diff = curve.value_at(s) - rho.values
        return 0.5 * space.weight * float(np.dot(diff, diff))

    lhs = (half_sq(t + delta) - half_sq(t)) / delta
    x_t = curve.point_at(t)
    rhs = (space.energy(rho) - space.energy(x_t)
           - 0.5 * space.kappa * space.distance(x_t, rho) ** 2)
    return lhs - rhs


def contraction_violation(space: ModelSpace, x: SpacePoint, y: SpacePoint,
                          times) -> float:
    """max over times of d(x(t), y(t)) - exp(-kappa t) d(x, y)."""
    ts = np.asarray(list(times), dtype=float)
    cx = space.flow_curve(x).values_at(ts)
    cy = space.flow_curve(y).values_at(ts)
    dists = np.sqrt(space.weight * np.sum((cx - cy) ** 2, axis=1))
    bound = np.exp(-space.kappa * ts) * space.distance(x, y)
    return float(np.max(dists - bound))


def energy_identity_residual(space: ModelSpace, traj: FlowTrajectory) -> float:
    """|E(end) - E(start) + trapezoid integral of the squared slopes|."""
    if len(traj.points) < 2:
        raise ValueError("trajectory needs at least two samples")
    dissipated = float(np.trapezoid(traj.slopes**2, traj.times))
    return abs(traj.energies[-1] - traj.energies[0] + dissipated)


def slope_decay_violation(space: ModelSpace, x: SpacePoint, times) -> float:
    """max over times of I(x(t)) - I(x) exp(-2 kappa t)."""
    ts = np.asarray(list(times), dtype=float)
    vals = space.flow_curve(x).values_at(ts)
    grads = space.potential.dv(vals)
    info = space.weight * np.sum(grads * grads, axis=1)
    bound = space.information(x) * np.exp(-2.0 * space.kappa * ts)
    return float(np.max(info - bound))


def _growth_rhs(space: ModelSpace, pi: SpacePoint, mu: SpacePoint, ts: np.ndarray) -> np.ndarray:
    """Right side of the integrated distance-growth inequality."""
    kappa = space.kappa
    d0_sq = space.distance(pi, mu) ** 2
    e_gap = space.energy(pi) - space.energy(mu)
    info = space.information(mu)
    if kappa != 0.0:
        ekt = np.exp(kappa * ts)
        return (0.5 * d0_sq + (ekt - 1.0) / kappa * e_gap
                + info / (2.0 * kappa**2) * (ekt + np.exp(-kappa * ts) - 2.0))
    return 0.5 * d0_sq + ts * e_gap + 0.5 * ts**2 * info


def distance_growth_violation(space: ModelSpace, pi: SpacePoint, mu: SpacePoint,
                              times) -> float:
    """max over times of LHS - RHS of the integrated growth inequality.

    For kappa != 0 the left side is exp(kappa t) d^2(pi, mu(t)) / 2; for
    kappa = 0 it is d^2(pi, mu(t)) / 2.
    """
    ts = np.asarray(list(times), dtype=float)
    vals = space.flow_curve(mu).values_at(ts)
    diffs = vals - pi.values[None, :]
    half_sq = 0.5 * space.weight * np.sum(diffs * diffs, axis=1)
    if space.kappa != 0.0:
        lhs = np.exp(space.kappa * ts) * half_sq
    else:
        lhs = half_sq
    return float(np.max(lhs - _growth_rhs(space, pi, mu, ts)))


def damped_distance_bound_violation(space: ModelSpace, pi: SpacePoint, mu: SpacePoint,
                                    times, eps_list=(None, 0.1, 1.0)) -> float:
    """Violation of the damped modified-distance bound along the flow.

    Checks exp(kappa_hat t) d_eps(pi, mu(t)) <= sqrt(2 RHS(t)) + sqrt(2 eps)
    where RHS is the integrated growth bound; eps None means the plain metric.
    """
    ts = np.asarray(list(times), dtype=float)
    vals = space.flow_curve(mu).values_at(ts)
    diffs = vals - pi.values[None, :]
    dist2 = space.weight * np.sum(diffs * diffs, axis=1)
    rhs = np.sqrt(2.0 * np.maximum(_growth_rhs(space, pi, mu, ts), 0.0))
    damping = np.exp(space.kappa_hat * ts)
    worst = -math.inf
    for eps in eps_list:
        if eps is None:
            deps_vals = np.sqrt(dist2)
            gap = 0.0
        else:
            deps_vals = psi_eps(eps, 0.5 * dist2)
            gap = math.sqrt(2.0 * eps)
        worst = max(worst, float(np.max(damping * deps_vals - rhs - gap)))
    return worst


# ---------------------------------------------------------------------------
# randomized suite
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EviReport:
    rows: tuple
    max_residual: float
    worst_case: tuple


def suite_time_horizon(space: ModelSpace) -> float:
    return 20.0 / max(abs(space.kappa), 0.2)


def run_evi_suite(space: ModelSpace, rng: np.random.Generator, instances: int = 200,
                  delta: float = 1e-4, tolerances: dict | None = None) -> EviReport:
    """Randomized EVI checks; rows are (check, instance, value, bound, violation, pass)."""
    tolerances = tolerances or {}
    tol_evi = tolerances.get("evi_residual", 10 * delta)
    tol_other = tolerances.get("flow_estimates", 1e-3)
    t_max = suite_time_horizon(space)
    rows = []
    worst = (-math.inf, None)
    for i in range(instances):
        x = space.sample(rng)
        rho = space.sample(rng)
        t = float(rng.uniform(0.0, min(t_max, 5.0)))
        times = np.linspace(0.0, t_max, 9)[1:]

        res = evi_residual(space, x, rho, t, delta)
        rows.append(("evi_residual", i, res, tol_evi, res - tol_evi, res <= tol_evi))
        if res > worst[0]:
            worst = (res, (x, t, rho))

        v = contraction_violation(space, x, rho, times)
        rows.append(("contraction", i, v, tol_other, v - tol_other, v <= tol_other))

        traj = space.flow_trajectory(x, np.linspace(0.0, 1.0, 2001))
        v = energy_identity_residual(space, traj)
        rows.append(("energy_identity", i, v, tol_other, v - tol_other, v <= tol_other))

        v = slope_decay_violation(space, x, times)
        rows.append(("slope_decay", i, v, tol_other, v - tol_other, v <= tol_other))

        v = distance_growth_violation(space, x, rho, times)
        rows.append(("distance_growth", i, v, tol_other, v - tol_other, v <= tol_other))

        v = damped_distance_bound_violation(space, x, rho, times)
        rows.append(("damped_distance_bound", i, v, tol_other, v - tol_other, v <= tol_other))
    return EviReport(rows=tuple(rows), max_residual=worst[0], worst_case=worst[1])
