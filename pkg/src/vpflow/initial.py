"""Analytic initial distributions for the built-in plasma benchmarks.

Every supported f0 factorizes into a velocity part (per-axis Gaussian
mixtures, optionally times an even power of v) and a spatial perturbation
1 + alpha * sum_a cos(k * x_a). That small family covers the classic Landau
damping and two-stream setups and keeps f0 trivially integrable, so the
neutralizing background density can be validated against closed forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import UsageError
from .grids import GridSpec, PhasePoint, v_mid_matrix, x_node_matrix

GAUSS_NORM = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class VelocityProfile:
    """One velocity axis: v^power * sum_m weights[m] * N(v; centers[m], 1)."""

    centers: tuple[float, ...] = (0.0,)
    weights: tuple[float, ...] = (1.0,)
    power: int = 0

    def __post_init__(self):
        if len(self.centers) != len(self.weights) or not self.centers:
            raise UsageError("centers and weights must be non-empty and equal-length")
        if self.power not in (0, 2):
            raise UsageError(f"velocity power must be 0 or 2, got {self.power}")
        if any(w <= 0 for w in self.weights):
            raise UsageError("mixture weights must be positive")

    def factor(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        out = np.zeros_like(v)
        for c, w in zip(self.centers, self.weights):
            out += w * np.exp(-0.5 * (v - c) ** 2)
        out *= GAUSS_NORM
        if self.power:
            out = out * v**self.power
        return out

    def moment0(self) -> float:
        """Exact integral of the factor over the real line."""
        if self.power == 0:
            return float(sum(self.weights))
        # power == 2: E[v^2] of a unit-variance Gaussian centered at c is 1 + c^2
        return float(sum(w * (1.0 + c * c) for c, w in zip(self.centers, self.weights)))

    def axis_max(self) -> float:
        """Numerical maximum of the factor, found by scan plus local refinement."""
        span = max(abs(c) for c in self.centers) + 8.0
        vs = np.linspace(-span, span, 4001)
        seed = vs[int(np.argmax(self.factor(vs)))]
        res = minimize_scalar(
            lambda v: -self.factor(np.asarray(v)),
            bounds=(seed - 1.0, seed + 1.0),
            method="bounded",
            options={"xatol": 1e-12},
        )
        return float(max(-res.fun, self.factor(np.asarray(seed))))


@dataclass(frozen=True)
class InitialCondition:
    """A benchmark f0 together with its perturbation parameters.

    rho_bar is the exact background density of the unperturbed state,
    i.e. (1/L^d) * integral of f0; it equals 1 for all built-ins.
    """

    benchmark: str
    d: int
    L: float
    alpha: float
    k: float
    profiles: tuple[VelocityProfile, ...]
    v0: float | None = None
    rho_bar: float = field(init=False)

    def __post_init__(self):
        if len(self.profiles) != self.d:
            raise UsageError(f"need {self.d} velocity profiles, got {len(self.profiles)}")
        if self.alpha < 0:
            raise UsageError(f"perturbation amplitude must be >= 0, got {self.alpha}")
        if self.alpha * self.d > 1.0 + 1e-12:
            raise UsageError(f"alpha*d = {self.alpha * self.d} > 1 makes f0 negative")
        cycles = self.k * self.L / (2.0 * math.pi)
        if abs(cycles - round(cycles)) > 1e-9:
            raise UsageError(
                f"k*L = {self.k * self.L} is not a multiple of 2*pi; f0 would not be x-periodic"
            )
        vol_factor = 1.0
        for p in self.profiles:
            vol_factor *= p.moment0()
        object.__setattr__(self, "rho_bar", vol_factor)
        if not self.rho_bar > 0:
            raise UsageError("background density must be positive")


# Canonical parameters of the built-in benchmarks. The 3-d two-stream case
# uses L = 10*pi so that k*L = 2*pi keeps f0 exactly periodic; the counter
# streams sit on the second velocity axis.
BENCHMARK_DEFAULTS: dict[str, dict] = {
    "weak_landau_1d": dict(d=1, L=4.0 * math.pi, alpha=0.01, k=0.5, v0=None),
    "two_stream_1d": dict(d=1, L=4.0 * math.pi, alpha=0.01, k=0.5, v0=None),
    "strong_landau_2d": dict(d=2, L=4.0 * math.pi, alpha=0.5, k=0.5, v0=None),
    "two_stream_3d": dict(d=3, L=10.0 * math.pi, alpha=1e-3, k=0.2, v0=2.4),
}

DEFAULT_VMAX = 10.0


def _profiles_for(name: str, d: int, v0: float | None) -> tuple[VelocityProfile, ...]:
    maxwell = VelocityProfile()
    if name == "two_stream_1d":
        return (VelocityProfile(power=2),)
    if name == "two_stream_3d":
        streams = VelocityProfile(centers=(-v0, v0), weights=(0.5, 0.5))
        return (maxwell, streams, maxwell)
    return (maxwell,) * d


def make_benchmark(
    name: str,
    *,
    L: float | None = None,
    alpha: float | None = None,
    k: float | None = None,
    v0: float | None = None,
) -> InitialCondition:
    """Build one of the named benchmarks, optionally overriding parameters."""
    if name not in BENCHMARK_DEFAULTS:
        known = ", ".join(sorted(BENCHMARK_DEFAULTS))
        raise UsageError(f"unknown benchmark {name!r}; known: {known}")
    params = dict(BENCHMARK_DEFAULTS[name])
    if L is not None:
        params["L"] = L
    if alpha is not None:
        params["alpha"] = alpha
    if k is not None:
        params["k"] = k
    if v0 is not None:
        params["v0"] = v0
    d = params["d"]
    return InitialCondition(
        benchmark=name,
        d=d,
        L=params["L"],
        alpha=params["alpha"],
        k=params["k"],
        v0=params["v0"],
        profiles=_profiles_for(name, d, params["v0"]),
    )


def eval_f0(ic: InitialCondition, x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Evaluate f0 at positions x and velocities v of shape (..., d).

    Returns an array of shape (...); values are nonnegative and x-periodic.
    """
    x = np.asarray(x, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if x.shape != v.shape or x.shape[-1:] != (ic.d,):
        raise UsageError(f"x and v must both end in a length-{ic.d} axis")
    vel = ic.profiles[0].factor(v[..., 0])
    for a in range(1, ic.d):
        vel = vel * ic.profiles[a].factor(v[..., a])
    pert = np.cos(ic.k * x[..., 0])
    for a in range(1, ic.d):
        pert = pert + np.cos(ic.k * x[..., a])
    return vel * (1.0 + ic.alpha * pert)


def f0_at(ic: InitialCondition, p: PhasePoint) -> float:
    return float(eval_f0(ic, p.x, p.v))


def background_density(ic: InitialCondition, grid: GridSpec) -> float:
    """Midpoint-quadrature background density on the run's full phase grid.

    This is the value used in the charge density so that discrete neutrality
    holds at machine precision at t = 0; it matches ic.rho_bar up to the
    quadrature error of the velocity grid.
    """
    if grid.d != ic.d:
        raise UsageError(f"grid dimension {grid.d} does not match benchmark dimension {ic.d}")
    X = x_node_matrix(grid)
    V = v_mid_matrix(grid)
    # f0 factorizes, so the (x, v) sum splits into a product of two sums
    vel = ic.profiles[0].factor(V[:, 0])
    for a in range(1, ic.d):
        vel = vel * ic.profiles[a].factor(V[:, a])
    pert = np.cos(ic.k * X[:, 0])
    for a in range(1, ic.d):
        pert = pert + np.cos(ic.k * X[:, a])
    sum_v = float(np.add.reduce(vel))
    sum_x = float(np.add.reduce(1.0 + ic.alpha * pert))
    total = sum_x * sum_v * grid.hx**grid.d * grid.hv**grid.d
    return total / grid.L**grid.d


@lru_cache(maxsize=64)
def _sup_cached(ic: InitialCondition) -> float:
    sup = 1.0 + ic.alpha * ic.d
    for p in ic.profiles:
        sup *= p.axis_max()
    return sup


def sup_f0(ic: InitialCondition) -> float:
    """Supremum of f0 over all of phase space (maximum-principle bound)."""
    return _sup_cached(ic)
