"""Backward numerical flows through the stored potential history.

psi traces a phase point from time n*tau back to t = 0 with the symmetric
leapfrog scheme (one field evaluation per stored step plus a leading
half-kick); psi_tilde omits that leading half-kick and therefore needs no
field at the current time, which is what lets each step's charge density be
computed before its own potential exists. The distribution function is never
stored: eval_f composes the initial datum with psi.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import kernels
from .errors import UsageError
from .grids import GridSpec, PhasePoint
from .initial import InitialCondition, background_density, eval_f0
from .spline import PotentialHistory, SplineField


@dataclass(eq=False)
class FlowContext:
    """Bundles the immutable inputs of flow evaluation plus an eval counter."""

    history: PotentialHistory
    ic: InitialCondition
    tau: float
    grid: GridSpec
    field_evals: int = 0
    extra_fields: dict = field(default_factory=dict)  # step -> non-spline field override

    @cached_property
    def rho_bar(self) -> float:
        """Background density, fixed once from the t = 0 quadrature."""
        return background_density(self.ic, self.grid)

    def reset_counter(self) -> None:
        self.field_evals = 0

    def install_field(self, step: int, fld) -> None:
        """Override the stored field at one step (testing hook; any object
        with eval_E_many works, e.g. UniformField)."""
        self.extra_fields[step] = fld

    def _field(self, step: int):
        if step in self.extra_fields:
            return self.extra_fields[step]
        return self.history.entry(step)


def _require_history(ctx: FlowContext, n: int, needed: int, what: str) -> None:
    have = len(ctx.history)
    if ctx.extra_fields:
        have = max(have, 1 + max(ctx.extra_fields))
    if have < needed:
        raise UsageError(
            f"{what} at step {n} needs fields 0..{needed - 1}; history holds {have}"
        )


def _trace_generic(ctx: FlowContext, n: int, X, V, half_kick: bool) -> int:
    """Python-level trace used when a non-spline field is installed."""
    M = X.shape[0]
    tau = ctx.tau
    evals = 0
    if half_kick:
        V += (0.5 * tau) * ctx._field(n).eval_E_many(X)
        evals += M
    k = n
    while k > 1:
        k -= 1
        X -= tau * V
        V += tau * ctx._field(k).eval_E_many(X)
        evals += M
    X -= tau * V
    V += (0.5 * tau) * ctx._field(0).eval_E_many(X)
    evals += M
    return evals


def _trace(ctx: FlowContext, n: int, X, V, half_kick: bool) -> None:
    if n == 0:
        return
    if ctx.extra_fields:
        ctx.field_evals += _trace_generic(ctx, n, X, V, half_kick)
        return
    stack = ctx.history.stacked()
    rows = n + 1 if half_kick else n
    ctx.field_evals += kernels.trace_backward(
        stack[:rows], ctx.grid.L, n, ctx.tau, X, V, half_kick
    )


def _as_batch(x, v, d: int):
    X = np.array(np.atleast_2d(np.asarray(x, dtype=np.float64)), copy=True)
    V = np.array(np.atleast_2d(np.asarray(v, dtype=np.float64)), copy=True)
    if X.shape != V.shape or X.shape[1] != d:
        raise UsageError(f"x and v must both have shape (M, {d})")
    return X, V


def psi_batch(ctx: FlowContext, n: int, x, v) -> tuple[np.ndarray, np.ndarray]:
    """Backward flow from step n to t = 0 for a batch of points (M, d)."""
    if n > 0:
        _require_history(ctx, n, n + 1, "psi")
    X, V = _as_batch(x, v, ctx.grid.d)
    _trace(ctx, n, X, V, half_kick=True)
    return X, V


def psi_tilde_batch(ctx: FlowContext, n: int, x, v) -> tuple[np.ndarray, np.ndarray]:
    """Half-kick-free backward flow; needs no field at step n itself."""
    if n > 0:
        _require_history(ctx, n, n, "psi_tilde")
    X, V = _as_batch(x, v, ctx.grid.d)
    _trace(ctx, n, X, V, half_kick=False)
    return X, V


def psi(ctx: FlowContext, n: int, p: PhasePoint) -> PhasePoint:
    X, V = psi_batch(ctx, n, p.x[None, :], p.v[None, :])
    return PhasePoint(x=X[0], v=V[0])


def psi_tilde(ctx: FlowContext, n: int, p: PhasePoint) -> PhasePoint:
    X, V = psi_tilde_batch(ctx, n, p.x[None, :], p.v[None, :])
    return PhasePoint(x=X[0], v=V[0])


def eval_f_batch(ctx: FlowContext, n: int, x, v) -> np.ndarray:
    """Distribution values f(n*tau, x, v) = f0(psi(x, v)) for a batch."""
    X, V = psi_batch(ctx, n, x, v)
    return eval_f0(ctx.ic, X, V)


def eval_f(ctx: FlowContext, n: int, p: PhasePoint) -> float:
    return float(eval_f_batch(ctx, n, p.x[None, :], p.v[None, :])[0])
