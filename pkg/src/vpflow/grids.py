"""Phase-space discretization: the periodic spatial grid and the velocity
midpoint grid shared by every other module.

Positions live on the torus [0, L)^d with Nx nodes per axis; velocities are
cut off at |v_a| <= vmax and carry Nv cells per axis whose midpoints are the
quadrature nodes. Multi-indices are linearized row-major throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UsageError


@dataclass(frozen=True)
class GridSpec:
    """Uniform discretization parameters, identical along every axis."""

    d: int
    L: float
    Nx: int
    Nv: int
    vmax: float

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise UsageError(f"dimension must be 1, 2 or 3, got {self.d}")
        if self.Nx < 2 or self.Nv < 2:
            raise UsageError(f"need Nx >= 2 and Nv >= 2, got Nx={self.Nx}, Nv={self.Nv}")
        if not (self.L > 0 and self.vmax > 0):
            raise UsageError(f"need L > 0 and vmax > 0, got L={self.L}, vmax={self.vmax}")

    @property
    def hx(self) -> float:
        return self.L / self.Nx

    @property
    def hv(self) -> float:
        return 2.0 * self.vmax / self.Nv

    @property
    def n_nodes(self) -> int:
        return self.Nx**self.d

    @property
    def n_cells(self) -> int:
        return self.Nv**self.d

    @property
    def shape_x(self) -> tuple[int, ...]:
        return (self.Nx,) * self.d

    @property
    def shape_v(self) -> tuple[int, ...]:
        return (self.Nv,) * self.d


@dataclass(frozen=True)
class PhasePoint:
    """A single (position, velocity) pair with finite components."""

    x: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        v = np.atleast_1d(np.asarray(self.v, dtype=float))
        if x.shape != v.shape or x.ndim != 1:
            raise UsageError(f"x and v must be equal-length vectors, got {x.shape} and {v.shape}")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(v))):
            raise UsageError("phase point components must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "v", v)

    @property
    def d(self) -> int:
        return self.x.shape[0]


def _check_multi_index(i, n_axes: int, bound: int, what: str) -> np.ndarray:
    idx = np.atleast_1d(np.asarray(i))
    if idx.shape != (n_axes,):
        raise UsageError(f"{what} index must have {n_axes} component(s), got shape {idx.shape}")
    if np.any(idx < 0) or np.any(idx >= bound):
        raise UsageError(f"{what} index {idx.tolist()} out of range [0, {bound})")
    return idx


def x_node(grid: GridSpec, i) -> np.ndarray:
    """Position of grid node i (multi-index, one component per axis)."""
    idx = _check_multi_index(i, grid.d, grid.Nx, "node")
    return idx * grid.hx


def v_mid(grid: GridSpec, j) -> np.ndarray:
    """Midpoint of velocity cell j: -vmax + (j + 1/2) * hv per component."""
    idx = _check_multi_index(j, grid.d, grid.Nv, "cell")
    return -grid.vmax + (idx + 0.5) * grid.hv


def x_node_matrix(grid: GridSpec) -> np.ndarray:
    """All node positions as a (Nx^d, d) array in row-major index order."""
    axes = [np.arange(grid.Nx) * grid.hx] * grid.d
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh], axis=-1)


def v_mid_matrix(grid: GridSpec) -> np.ndarray:
    """All velocity-cell midpoints as a (Nv^d, d) array in row-major order."""
    ax = -grid.vmax + (np.arange(grid.Nv) + 0.5) * grid.hv
    mesh = np.meshgrid(*([ax] * grid.d), indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh], axis=-1)
