"""Charge density and phase-space quadrature over the full (x, v) grid.

The density at step n integrates f0 composed with the half-kick-free
backward flow over velocity (midpoint rule, weight hv^d), which by a change
of variables equals the velocity integral of f itself; no field at step n is
needed. Observable sweeps run after the step's potential is stored and use
the full flow, since v-weighted moments are not invariant under the
half-kick shift.

All reductions are pairwise with a fixed order, so results are bit-identical
across runs and worker counts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UsageError
from .flow import FlowContext, psi_batch, psi_tilde_batch
from .grids import v_mid_matrix, x_node_matrix
from .initial import eval_f0
from .poisson import DensityGrid

# Cap on points per traced batch; node-aligned so per-node sums never split.
DEFAULT_CHUNK = 1 << 21

_point_cache: dict = {}


def _quadrature_points(ctx: FlowContext) -> tuple[np.ndarray, np.ndarray]:
    """Full tensor batch of (node, midpoint) pairs, cached per grid."""
    key = ctx.grid
    if key not in _point_cache:
        X = x_node_matrix(ctx.grid)
        V = v_mid_matrix(ctx.grid)
        n_nodes, n_cells = X.shape[0], V.shape[0]
        XX = np.repeat(X, n_cells, axis=0)
        VV = np.tile(V, (n_nodes, 1))
        _point_cache[key] = (XX, VV)
    return _point_cache[key]


def _batches(ctx: FlowContext, n: int, use_psi: bool, chunk: int):
    """Yield (node_slice, X0, V0, F) over node-aligned chunks of the grid.

    X0/V0 are the untraced quadrature coordinates; F holds f values there.
    """
    grid = ctx.grid
    XX, VV = _quadrature_points(ctx)
    n_cells = grid.n_cells
    nodes_per = max(1, chunk // n_cells)
    flow = psi_batch if use_psi else psi_tilde_batch
    for start in range(0, grid.n_nodes, nodes_per):
        stop = min(start + nodes_per, grid.n_nodes)
        sl = slice(start * n_cells, stop * n_cells)
        Xb, Vb = XX[sl], VV[sl]
        Xt, Vt = flow(ctx, n, Xb, Vb)
        F = eval_f0(ctx.ic, Xt, Vt)
        yield slice(start, stop), Xb, Vb, F


@dataclass(frozen=True)
class RhoResult:
    density: DensityGrid
    neutralization: float  # constant subtracted to restore a zero nodal mean
    f_min: float
    f_max: float


def compute_rho(ctx: FlowContext, n: int, chunk: int = DEFAULT_CHUNK) -> RhoResult:
    """Charge density at step n on the spatial grid, neutralized to zero mean."""
    grid = ctx.grid
    hv_d = grid.hv**grid.d
    rho = np.empty(grid.n_nodes)
    f_min = np.inf
    f_max = -np.inf
    for sl, _, _, F in _batches(ctx, n, use_psi=False, chunk=chunk):
        per_node = F.reshape(sl.stop - sl.start, grid.n_cells)
        rho[sl] = ctx.rho_bar - hv_d * np.add.reduce(per_node, axis=1)
        f_min = min(f_min, float(per_node.min()))
        f_max = max(f_max, float(per_node.max()))
    constant = float(rho.mean())
    rho -= constant
    return RhoResult(
        density=DensityGrid(grid=grid, values=rho.reshape(grid.shape_x)),
        neutralization=constant,
        f_min=f_min,
        f_max=f_max,
    )


def quadrature_sweep(ctx: FlowContext, n: int, weight, chunk: int = DEFAULT_CHUNK):
    """Integrate weight(x, v, f) over phase space at step n.

    weight maps batched (X, V, F) to shape (M,) or (M, m); the result is the
    midpoint-rule integral (scalar or length-m vector). Uses the full flow,
    so the step's own potential must already be stored.
    """
    return quadrature_sweep_many(ctx, n, [weight], chunk=chunk)[0]


def quadrature_sweep_many(ctx: FlowContext, n: int, weights, chunk: int = DEFAULT_CHUNK):
    """Like quadrature_sweep for several weights sharing one traced batch."""
    grid = ctx.grid
    measure = grid.hx**grid.d * grid.hv**grid.d
    totals = [None] * len(weights)
    for _, Xb, Vb, F in _batches(ctx, n, use_psi=True, chunk=chunk):
        for iw, w in enumerate(weights):
            vals = np.asarray(w(Xb, Vb, F), dtype=np.float64)
            if vals.shape[0] != F.shape[0]:
                raise UsageError("weight must return one row per phase point")
            part = np.add.reduce(vals, axis=0)
            totals[iw] = part if totals[iw] is None else totals[iw] + part
    out = []
    for t in totals:
        t = t * measure
        out.append(float(t) if np.ndim(t) == 0 else t)
    return out
