"""Model metric spaces carrying exact EVI gradient flows.

Two finite-dimensional geometries sit behind one interface:

* a Euclidean box with a kappa-convex potential applied coordinatewise, and
* one-dimensional probability measures in quantile coordinates on a uniform
  grid of (0, 1), i.e. a discrete L2(0, 1) that is isometric to Wasserstein-2.

In both, the energy is the potential energy of the coordinates, the steepest
descent ODE is coordinatewise x' = -V'(x), and the evolution variational
inequality with parameter kappa = inf V'' holds exactly, which is what makes
these spaces usable as ground truth for everything built on top.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np
from scipy.integrate import solve_ivp

MONOTONE_SLACK = 1e-9


# ---------------------------------------------------------------------------
# potentials
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Potential:
    """Scalar confining potential with explicit derivatives and convexity bound.

    ``kappa`` is a lower bound for V'' on the working box; ``exact_rate`` is
    set when V' is linear (V = kappa x^2 / 2), in which case the descent flow
    has the closed form x * exp(-kappa t).
    """

    form: str
    kappa: float
    v: Callable[[np.ndarray], np.ndarray]
    dv: Callable[[np.ndarray], np.ndarray]
    d2v: Callable[[np.ndarray], np.ndarray]
    exact_rate: float | None = None


def quadratic_potential(kappa: float) -> Potential:
    """V(x) = kappa x^2 / 2; the flow is exactly x exp(-kappa t)."""
    k = float(kappa)
    return Potential(
        form="quadratic",
        kappa=k,
        v=lambda x: 0.5 * k * np.square(x),
        dv=lambda x: k * np.asarray(x, dtype=float),
        d2v=lambda x: np.full_like(np.asarray(x, dtype=float), k),
        exact_rate=k,
    )


def quartic_potential() -> Potential:
    """V(x) = x^4 / 4, convex with kappa = 0 (tight at the origin)."""
    return Potential(
        form="quartic",
        kappa=0.0,
        v=lambda x: 0.25 * np.power(x, 4),
        dv=lambda x: np.power(x, 3),
        d2v=lambda x: 3.0 * np.square(x),
    )


def double_well_potential(kappa: float) -> Potential:
    """V(x) = x^4 / 4 + kappa x^2 / 2 with kappa < 0; V'' >= kappa, tight at 0."""
    k = float(kappa)
    if k >= 0:
        raise ValueError("double-well potential requires kappa < 0")
    return Potential(
        form="double_well",
        kappa=k,
        v=lambda x: 0.25 * np.power(x, 4) + 0.5 * k * np.square(x),
        dv=lambda x: np.power(x, 3) + k * np.asarray(x, dtype=float),
        d2v=lambda x: 3.0 * np.square(x) + k,
    )


def make_potential(form: str, kappa: float | None = None) -> Potential:
    if form == "quadratic":
        return quadratic_potential(1.0 if kappa is None else kappa)
    if form == "quartic":
        return quartic_potential()
    if form == "double_well":
        return double_well_potential(-0.5 if kappa is None else kappa)
    raise ValueError(f"unknown potential form {form!r}")


# ---------------------------------------------------------------------------
# points
# ---------------------------------------------------------------------------


def _clean_values(vals) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(vals, dtype=float)).copy()
    if arr.ndim != 1:
        raise ValueError("point coordinates must be one-dimensional")
    if not np.all(np.isfinite(arr)):
        raise ValueError("point coordinates must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class EuclideanPoint:
    """Element of the Euclidean model space."""

    coords: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coords", _clean_values(self.coords))

    @property
    def values(self) -> np.ndarray:
        return self.coords

    def __repr__(self) -> str:
        return f"EuclideanPoint({np.array2string(self.coords, precision=6)})"


@dataclass(frozen=True, eq=False)
class QuantilePoint:
    """Quantile vector of a probability measure on the line; nondecreasing."""

    quantiles: np.ndarray

    def __post_init__(self):
        arr = _clean_values(self.quantiles)
        gaps = np.diff(arr)
        if gaps.size and gaps.min() < -MONOTONE_SLACK:
            raise ValueError("quantiles must be nondecreasing")
        if gaps.size and gaps.min() < 0:
            # repair float-level order noise; anything larger raised above
            arr = np.maximum.accumulate(np.asarray(arr))
            arr.setflags(write=False)
        object.__setattr__(self, "quantiles", arr)

    @property
    def values(self) -> np.ndarray:
        return self.quantiles

    def __repr__(self) -> str:
        return f"QuantilePoint({np.array2string(self.quantiles, precision=6)})"


SpacePoint = Union[EuclideanPoint, QuantilePoint]


# ---------------------------------------------------------------------------
# flow curves and trajectories
# ---------------------------------------------------------------------------


class FlowCurve:
    """Steepest-descent curve from a fixed start, evaluable at arbitrary t >= 0.

    For quadratic potentials the exponential closed form is used; otherwise the
    curve is integrated once with an adaptive RK45 scheme and stored as dense
    segments that are extended (never recomputed) when larger times are asked
    for, so repeated queries are reproducible bit for bit.
    """

    def __init__(self, space: "ModelSpace", start: np.ndarray):
        self._space = space
        self._y0 = np.asarray(start, dtype=float)
        self._rate = space.potential.exact_rate
        self._segments: list = []
        self._horizon = 0.0
        self._tail = self._y0

    def _extend(self, t_max: float) -> None:
        while self._horizon < t_max:
            t_next = max(1.0, 2.0 * self._horizon, t_max)
            sol = solve_ivp(
                lambda _t, y: -self._space.potential.dv(y),
                (self._horizon, t_next),
                self._tail,
                method="RK45",
                dense_output=True,
                rtol=self._space.flow_rtol,
                atol=self._space.flow_atol,
            )
            if not sol.success:  # pragma: no cover - defensive
                raise RuntimeError(f"flow integration failed: {sol.message}")
            self._segments.append((self._horizon, t_next, sol.sol))
            self._horizon = t_next
            self._tail = sol.y[:, -1]

    def values_at(self, times) -> np.ndarray:
        """Points along the curve; shape (len(times), n)."""
        ts = np.atleast_1d(np.asarray(times, dtype=float))
        if ts.size and ts.min() < 0:
            raise ValueError("negative time")
        if self._rate is not None:
            out = np.exp(-self._rate * ts)[:, None] * self._y0[None, :]
        else:
            out = np.empty((ts.size, self._y0.size))
            if ts.size:
                self._extend(float(ts.max()))
            for lo, hi, interp in self._segments:
                mask = (ts >= lo) & (ts <= hi) if hi < self._horizon else (ts >= lo)
                if mask.any():
                    out[mask] = interp(ts[mask]).T
            zero = ts == 0.0
            if zero.any():
                out[zero] = self._y0
        if self._space.kind == "quantile":
            out = np.maximum.accumulate(out, axis=1)
        return out

    def value_at(self, t: float) -> np.ndarray:
        return self.values_at([t])[0]

    def point_at(self, t: float) -> SpacePoint:
        return self._space.point(self.value_at(t))


@dataclass(frozen=True)
class FlowTrajectory:
    """Flow samples with the matching energies and slopes."""

    start: SpacePoint
    times: np.ndarray
    points: tuple
    energies: np.ndarray
    slopes: np.ndarray

    def __post_init__(self):
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")


# ---------------------------------------------------------------------------
# model space
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModelSpace:
    """Bundle of metric, geodesics, energy, slope and gradient flow.

    ``kind`` is ``"euclidean"`` or ``"quantile"``; ``size`` is the coordinate
    dimension resp. the quantile grid size N.  Immutable and safe to share.
    """

    kind: str
    size: int
    potential: Potential
    box: float = 5.0
    sample_radius: float = 2.0
    flow_rtol: float = 1e-11
    flow_atol: float = 1e-13
    flow_method: str = "rk45"  # adaptive embedded 4th/5th-order stepping

    def __post_init__(self):
        if self.kind not in ("euclidean", "quantile"):
            raise ValueError(f"unknown space kind {self.kind!r}")
        if self.size < 1:
            raise ValueError("size must be >= 1")

    # -- basic structure ----------------------------------------------------

    @property
    def kappa(self) -> float:
        return self.potential.kappa

    @property
    def kappa_hat(self) -> float:
        return min(self.potential.kappa, 0.0)

    @property
    def weight(self) -> float:
        """Coordinate weight of the metric: 1 (euclidean) or 1/N (quantile)."""
        return 1.0 if self.kind == "euclidean" else 1.0 / self.size

    def point(self, vals) -> SpacePoint:
        if self.kind == "euclidean":
            p = EuclideanPoint(vals)
        else:
            p = QuantilePoint(vals)
        if p.values.size != self.size:
            raise ValueError("incompatible points")
        return p

    def _vals(self, p: SpacePoint) -> np.ndarray:
        expected = EuclideanPoint if self.kind == "euclidean" else QuantilePoint
        if not isinstance(p, expected) or p.values.size != self.size:
            raise ValueError("incompatible points")
        return p.values

    def rest_point(self) -> SpacePoint:
        """The critical point of V at the origin (V'(0) = 0 for all forms)."""
        return self.point(np.zeros(self.size))

    # -- metric and geodesics ------------------------------------------------

    def distance(self, x: SpacePoint, y: SpacePoint) -> float:
        dx = self._vals(x) - self._vals(y)
        return float(np.sqrt(self.weight * np.dot(dx, dx)))

    def geodesic_point(self, x: SpacePoint, y: SpacePoint, t: float) -> SpacePoint:
        if not 0.0 <= t <= 1.0:
            raise ValueError("parameter out of range")
        return self.point((1.0 - t) * self._vals(x) + t * self._vals(y))

    # -- energy, slope, information ------------------------------------------

    def energy(self, x: SpacePoint) -> float:
        return float(self.weight * np.sum(self.potential.v(self._vals(x))))

    def slope(self, x: SpacePoint) -> float:
        g = self.potential.dv(self._vals(x))
        return float(np.sqrt(self.weight * np.dot(g, g)))

    def information(self, x: SpacePoint) -> float:
        """Squared slope; drives the energy dissipation identity."""
        return self.slope(x) ** 2

    def energy_and_slope(self, x: SpacePoint) -> tuple[float, float]:
        return self.energy(x), self.slope(x)

    # -- gradient flow --------------------------------------------------------

    def flow_curve(self, x: SpacePoint) -> FlowCurve:
        return FlowCurve(self, self._vals(x))

    def flow(self, x: SpacePoint, t: float) -> SpacePoint:
        if t < 0:
            raise ValueError("negative time")
        return self.flow_curve(x).point_at(float(t))

    def flow_trajectory(self, x: SpacePoint, times: Sequence[float]) -> FlowTrajectory:
        ts = np.asarray(list(times), dtype=float)
        if ts.size == 0:
            raise ValueError("trajectory needs at least one time")
        if np.any(np.diff(ts) <= 0):
            raise ValueError("trajectory times must be strictly increasing")
        if ts[0] < 0:
            raise ValueError("negative time")
        vals = self.flow_curve(x).values_at(ts)
        points = tuple(self.point(v) for v in vals)
        energies = np.array([self.energy(p) for p in points])
        slopes = np.array([self.slope(p) for p in points])
        return FlowTrajectory(start=x, times=ts, points=points, energies=energies, slopes=slopes)

    # -- sampling --------------------------------------------------------------

    def sample(self, rng: np.random.Generator, radius: float | None = None) -> SpacePoint:
        r = self.sample_radius if radius is None else radius
        r = min(r, self.box)
        vals = rng.uniform(-r, r, size=self.size)
        if self.kind == "quantile":
            vals = np.sort(vals)
        return self.point(vals)


def euclidean_space(potential: Potential, dim: int = 1, **kw) -> ModelSpace:
    return ModelSpace(kind="euclidean", size=dim, potential=potential, **kw)


def quantile_space(potential: Potential, grid_size: int = 64, **kw) -> ModelSpace:
    return ModelSpace(kind="quantile", size=grid_size, potential=potential, **kw)
