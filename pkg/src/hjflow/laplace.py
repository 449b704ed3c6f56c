"""Exponential measures, Laplace integrals and tilted-measure diagnostics.

Everything is accumulated in log space: the quantities of interest are the
normalized exponents -(1/m) log Lambda, and raw Lambda values underflow double
precision already for moderate m.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .spaces import ModelSpace, SpacePoint
from .tataru import d_eps, psi_eps, psi_eps_prime

_GL15 = np.polynomial.legendre.leggauss(15)
_GL7 = np.polynomial.legendre.leggauss(7)


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finite measure with nonnegative weights summing to one, sorted atoms."""

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if atoms.shape != weights.shape or atoms.ndim != 1:
            raise ValueError("atoms and weights must be matching 1-d arrays")
        if np.any(weights < 0) or np.any(atoms < 0):
            raise ValueError("atoms and weights must be nonnegative")
        if np.any(np.diff(atoms) < 0):
            raise ValueError("atoms must be sorted")
        total = weights.sum()
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to one (got {total!r})")
        atoms.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)

    def mass_within(self, center: float, radius: float) -> float:
        sel = np.abs(self.atoms - center) <= radius
        return float(self.weights[sel].sum())

    def expectation(self, values) -> float:
        return float(np.dot(self.weights, np.asarray(values, dtype=float)))


def discrete_exp_log_weights(m: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Atoms i/n, i = 1..n^2, and log weights of the normalized geometric law."""
    if m < 1 or n < 1:
        raise ValueError("m and n must be >= 1")
    atoms = np.arange(1, n * n + 1, dtype=float) / n
    log_raw = -m * atoms
    return atoms, log_raw - logsumexp(log_raw)


def discrete_exp_measure(m: int, n: int) -> DiscreteMeasure:
    """Geometric approximation of the exponential law of rate m.

    Atoms i/n for i = 1..n^2 with weights proportional to exp(-m i / n),
    normalized in log space.
    """
    atoms, log_w = discrete_exp_log_weights(m, n)
    weights = np.exp(log_w)
    weights = weights / weights.sum()
    return DiscreteMeasure(atoms=atoms, weights=weights)


class HCurve:
    """Evaluator of h(t) = exp(kappa_hat t) psi_eps(d^2(pi, mu(t)) / 2).

    Bundles the flow curve of the anchor mu with the squared distances,
    energies and psi-derivative factors needed by the Laplace integrands and
    the Hamiltonian ladder.
    """

    def __init__(self, space: ModelSpace, eps: float, pi: SpacePoint, mu: SpacePoint,
                 kappa_override: float | None = None):
        if eps <= 0:
            raise ValueError("eps must be positive")
        self.space = space
        self.eps = eps
        self.pi = pi
        self.mu = mu
        kappa = space.kappa if kappa_override is None else kappa_override
        self.kappa_hat = min(kappa, 0.0)
        self.curve = space.flow_curve(mu)
        self._pvals = pi.values

    def dist2(self, ts) -> np.ndarray:
        diffs = self.curve.values_at(ts) - self._pvals[None, :]
        return self.space.weight * np.sum(diffs * diffs, axis=1)

    def flow_energies(self, ts) -> np.ndarray:
        vals = self.curve.values_at(ts)
        return self.space.weight * np.sum(self.space.potential.v(vals), axis=1)

    def damping(self, ts) -> np.ndarray:
        return np.exp(self.kappa_hat * np.asarray(ts, dtype=float))

    def h(self, ts) -> np.ndarray:
        return self.damping(ts) * psi_eps(self.eps, 0.5 * self.dist2(ts))

    def psi_prime(self, ts) -> np.ndarray:
        return psi_eps_prime(self.eps, 0.5 * self.dist2(ts))

    def t_cap(self) -> float:
        return d_eps(self.space, self.eps, self.pi, self.mu) + 1.0


@dataclass(frozen=True)
class LaplaceValue:
    """Log-space value of a Laplace integral plus per-node contributions."""

    m: int
    log_value: float
    nodes: np.ndarray
    log_contrib: np.ndarray
    tail_log_bound: float = -np.inf
    panels: int = 0

    @property
    def neg_log(self) -> float:
        return -self.log_value / self.m

    @property
    def value(self) -> float:
        v = math.exp(self.log_value)
        if v == 0.0:
            raise ValueError("Lambda underflows double precision; use log_value")
        return v

    def tilted_weights(self) -> np.ndarray:
        return np.exp(self.log_contrib - self.log_value)

    def tilted_expectation(self, values) -> float:
        return float(np.dot(self.tilted_weights(), np.asarray(values, dtype=float)))


def lambda_discrete(space: ModelSpace, eps: float, m: int, n: int,
                    pi: SpacePoint, mu: SpacePoint,
                    kappa_override: float | None = None) -> LaplaceValue:
    """Riemann-sum Laplace integral of exp(-m h) against the discrete
    exponential measure of rate m + 1."""
    if m < 1 or n < 1:
        raise ValueError("m and n must be >= 1")
    hcurve = HCurve(space, eps, pi, mu, kappa_override)
    atoms, log_w = discrete_exp_log_weights(m + 1, n)
    log_contrib = log_w - m * hcurve.h(atoms)
    log_value = float(logsumexp(log_contrib))
    return LaplaceValue(m=m, log_value=log_value, nodes=atoms,
                        log_contrib=log_contrib)


def _panel(log_f, a: float, b: float):
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    ts = mid + half * _GL15[0]
    log_contrib = log_f(ts) + np.log(_GL15[1] * half)
    log_i15 = float(logsumexp(log_contrib))
    ts7 = mid + half * _GL7[0]
    log_i7 = float(logsumexp(log_f(ts7) + np.log(_GL7[1] * half)))
    top = max(log_i15, log_i7)
    if not np.isfinite(top):
        log_err = -np.inf
    else:
        gap = abs(math.exp(log_i15 - top) - math.exp(log_i7 - top))
        log_err = top + math.log(gap) if gap > 0 else -np.inf
    return log_i15, log_err, ts, log_contrib


def _adaptive_log_quadrature(log_f, a: float, b: float, rel_tol: float = 1e-10,
                             seed_panels: int = 64, max_panels: int = 4096):
    """log of int_a^b exp(log_f) dt by adaptive Gauss panels, fully in log space."""
    edges = np.linspace(a, b, seed_panels + 1)
    heap = []
    store = {}
    for i in range(seed_panels):
        log_i, log_err, ts, contrib = _panel(log_f, edges[i], edges[i + 1])
        store[i] = (log_i, log_err, edges[i], edges[i + 1], ts, contrib)
        heapq.heappush(heap, (-log_err, i))
    next_id = seed_panels
    while True:
        logs = np.array([v[0] for v in store.values()])
        errs = np.array([v[1] for v in store.values()])
        log_total = float(logsumexp(logs))
        log_err_total = float(logsumexp(errs)) if np.any(np.isfinite(errs)) else -np.inf
        if log_err_total <= log_total + math.log(rel_tol):
            break
        if len(store) >= max_panels:
            achieved = math.exp(min(log_err_total - log_total, 700.0))
            raise RuntimeError(
                f"quadrature did not converge: achieved relative tolerance {achieved:.3e}"
            )
        # split the panel with the largest error estimate
        while True:
            _, worst = heapq.heappop(heap)
            if worst in store:
                break
        _, _, pa, pb, _, _ = store.pop(worst)
        mid = 0.5 * (pa + pb)
        for lo, hi in ((pa, mid), (mid, pb)):
            log_i, log_err, ts, contrib = _panel(log_f, lo, hi)
            store[next_id] = (log_i, log_err, lo, hi, ts, contrib)
            heapq.heappush(heap, (-log_err, next_id))
            next_id += 1
    nodes = np.concatenate([v[4] for v in store.values()])
    contribs = np.concatenate([v[5] for v in store.values()])
    order = np.argsort(nodes, kind="stable")
    return log_total, nodes[order], contribs[order], len(store)


def lambda_continuous(space: ModelSpace, eps: float, m: int,
                      pi: SpacePoint, mu: SpacePoint,
                      rel_tol: float = 1e-10,
                      kappa_override: float | None = None) -> LaplaceValue:
    """Laplace integral of exp(-m h) against the exponential law of rate m + 1.

    Quadrature runs on [0, T] with T = T_cap + 5/(m+1).  The tail beyond T is
    appended as the frozen-exponent estimate exp(-(m+1)T - m h(T)), exact for
    constant exponents and exponentially accurate otherwise since the flow has
    settled by T; the analytic bracket exp(-(m+1)T) (valid since h >= 0) is
    recorded alongside, so the truncation is never silently ignored.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    hcurve = HCurve(space, eps, pi, mu, kappa_override)
    t_quad = hcurve.t_cap() + 5.0 / (m + 1)
    log_rate = math.log(m + 1.0)

    def log_f(ts):
        return log_rate - (m + 1.0) * ts - m * hcurve.h(ts)

    log_quad, nodes, log_contrib, n_panels = _adaptive_log_quadrature(
        log_f, 0.0, t_quad, rel_tol=rel_tol
    )
    log_tail = float(-(m + 1.0) * t_quad - m * hcurve.h(np.array([t_quad]))[0])
    log_value = float(np.logaddexp(log_quad, log_tail))
    nodes = np.append(nodes, t_quad)
    log_contrib = np.append(log_contrib, log_tail)
    return LaplaceValue(m=m, log_value=log_value, nodes=nodes,
                        log_contrib=log_contrib,
                        tail_log_bound=-(m + 1.0) * t_quad, panels=n_panels)


def varadhan_error_curve(space: ModelSpace, eps: float, pi: SpacePoint,
                         mu: SpacePoint, m_list) -> list[tuple[int, float]]:
    """|-(1/m) log Lambda_{eps,m} - d_{T,eps}| for each m; the Laplace-limit gap."""
    from .tataru import tataru_eps

    m_list = list(m_list)
    if any(b <= a for a, b in zip(m_list, m_list[1:])):
        raise ValueError("m_list must be increasing")
    target = tataru_eps(space, eps, pi, mu).value
    out = []
    for m in m_list:
        val = lambda_continuous(space, eps, int(m), pi, mu)
        out.append((int(m), abs(val.neg_log - target)))
    return out


def tilted_measure(space: ModelSpace, eps: float, m: int,
                   pi: SpacePoint, mu: SpacePoint) -> DiscreteMeasure:
    """Probability measure with density proportional to exp(-m h) against the
    rate-(m+1) exponential law, on the quadrature grid; concentrates on the
    minimizers of t + h(t) as m grows."""
    val = lambda_continuous(space, eps, m, pi, mu)
    weights = val.tilted_weights()
    weights = weights / weights.sum()
    return DiscreteMeasure(atoms=val.nodes, weights=weights)
