"""Periodic tensor-product cubic splines for the electric potential, and the
append-only history of them that constitutes the entire simulation state.

Fitting deconvolves the nodal values by the B-spline filter (1/6, 4/6, 1/6)
per axis in Fourier space; evaluation touches only the local 4^d coefficient
stencil, so a single field evaluation costs O(1) regardless of resolution.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import UsageError
from .grids import GridSpec

_FILTER_NUM = (4.0, 2.0)  # symbol (4 + 2 cos(2 pi k / N)) / 6 per axis


def _filter_symbol(N: int) -> np.ndarray:
    k = np.arange(N)
    return (_FILTER_NUM[0] + _FILTER_NUM[1] * np.cos(2.0 * np.pi * k / N)) / 6.0


@dataclass(frozen=True)
class SplineField:
    """Immutable periodic C^2 spline of one stored potential."""

    grid: GridSpec
    coeffs: np.ndarray  # shape grid.shape_x; float32 or float64

    @property
    def d(self) -> int:
        return self.grid.d

    def nodal_values(self) -> np.ndarray:
        """Potential values at the grid nodes (exact B-spline filter)."""
        phi = self.coeffs.astype(np.float64)
        for axis in range(self.grid.d):
            phi = (np.roll(phi, 1, axis=axis) + 4.0 * phi + np.roll(phi, -1, axis=axis)) / 6.0
        return phi

    def eval_phi_many(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return kernels.eval_phi_many(self.coeffs, self.grid.L, X)

    def eval_E_many(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return kernels.eval_E_many(self.coeffs, self.grid.L, X)


class UniformField:
    """A spatially constant electric field, installable into a history.

    No periodic potential generates it; it exists for flow tests against the
    constant-force closed form. Only E evaluation is defined.
    """

    def __init__(self, E0):
        self.E0 = np.atleast_1d(np.asarray(E0, dtype=np.float64))
        self.d = self.E0.shape[0]

    def eval_E_many(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return np.broadcast_to(self.E0, (X.shape[0], self.d)).copy()


def fit_spline(phi_nodes: np.ndarray, grid: GridSpec, dtype=np.float64) -> SplineField:
    """Interpolating periodic spline through nodal values phi_nodes."""
    if grid.Nx < 4:
        raise UsageError(f"spline fitting needs Nx >= 4, got {grid.Nx}")
    phi = np.asarray(phi_nodes, dtype=np.float64)
    if phi.shape != grid.shape_x:
        raise UsageError(f"phi_nodes must have shape {grid.shape_x}, got {phi.shape}")
    sym = _filter_symbol(grid.Nx)
    hat = np.fft.fftn(phi)
    for axis in range(grid.d):
        shape = [1] * grid.d
        shape[axis] = grid.Nx
        hat = hat / sym.reshape(shape)
    coeffs = np.fft.ifftn(hat).real.astype(dtype)
    coeffs.flags.writeable = False
    return SplineField(grid=grid, coeffs=coeffs)


def eval_phi(field: SplineField, x) -> float:
    """Spline value at one position (wrapped periodically)."""
    X = np.asarray(x, dtype=np.float64).reshape(1, -1)
    if X.shape[1] != field.d:
        raise UsageError(f"position must have {field.d} components")
    return float(field.eval_phi_many(X)[0])


def eval_E(field: SplineField, x) -> np.ndarray:
    """Electric field -grad(phi) at one position."""
    X = np.asarray(x, dtype=np.float64).reshape(1, -1)
    if X.shape[1] != field.d:
        raise UsageError(f"position must have {field.d} components")
    return field.eval_E_many(X)[0]


_MAGIC = b"VPHIST01"


class PotentialHistory:
    """Append-only sequence of spline fields, one per completed time step.

    Coefficients live in one contiguous (capacity, Nx^d) buffer so the trace
    kernels can walk the whole history without gathering; entries are
    read-only views into it. A single writer appends between steps; reads
    during a quadrature sweep are safe because rows never move or mutate
    (growth copies into a fresh buffer before publication).
    """

    def __init__(self, grid: GridSpec, tau: float, dtype=np.float64):
        if tau <= 0:
            raise UsageError(f"time step must be positive, got {tau}")
        self.grid = grid
        self.tau = float(tau)
        self.dtype = np.dtype(dtype)
        if self.dtype not in (np.dtype(np.float32), np.dtype(np.float64)):
            raise UsageError(f"history dtype must be float32 or float64, got {self.dtype}")
        self._buf = np.empty((16, grid.n_nodes), dtype=self.dtype)
        self._len = 0

    def __len__(self) -> int:
        return self._len

    def append(self, field: SplineField) -> SplineField:
        """Copy a fitted field into the history; returns the stored entry."""
        if field.grid != self.grid:
            raise UsageError("field grid does not match the history grid")
        if self._len == self._buf.shape[0]:
            bigger = np.empty((2 * self._buf.shape[0], self.grid.n_nodes), dtype=self.dtype)
            bigger[: self._len] = self._buf[: self._len]
            self._buf = bigger
        self._buf[self._len] = field.coeffs.reshape(-1)
        self._len += 1
        return self.entry(self._len - 1)

    def entry(self, m: int) -> SplineField:
        if not 0 <= m < self._len:
            raise UsageError(f"history has {self._len} entries, requested {m}")
        view = self._buf[m].reshape(self.grid.shape_x)
        view.flags.writeable = False
        return SplineField(grid=self.grid, coeffs=view)

    def stacked(self) -> np.ndarray:
        """Contiguous (len, Nx, ..., Nx) view of all stored coefficients."""
        view = self._buf[: self._len].reshape((self._len,) + self.grid.shape_x)
        view.flags.writeable = False
        return view

    # -- checkpoint format: little-endian header + raw coefficient rows -----

    def save(self, path) -> None:
        header = struct.pack(
            "<8sBBIQdd",
            _MAGIC,
            self.grid.d,
            self.dtype.itemsize,
            self.grid.Nx,
            self._len,
            self.grid.L,
            self.tau,
        )
        le = self._buf[: self._len].astype(self.dtype.newbyteorder("<"), copy=False)
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(le.tobytes())

    @classmethod
    def load(cls, path, grid: GridSpec | None = None) -> "PotentialHistory":
        """Reload a saved history; grid, when given, supplies Nv and vmax."""
        with open(path, "rb") as fh:
            head = fh.read(struct.calcsize("<8sBBIQdd"))
            magic, d, itemsize, Nx, count, L, tau = struct.unpack("<8sBBIQdd", head)
            if magic != _MAGIC:
                raise UsageError(f"{path} is not a potential-history file")
            dtype = np.dtype("<f4") if itemsize == 4 else np.dtype("<f8")
            payload = np.frombuffer(fh.read(), dtype=dtype)
        if grid is None:
            grid = GridSpec(d=d, L=L, Nx=Nx, Nv=2, vmax=1.0)  # velocity grid unknown
        elif (grid.d, grid.Nx) != (d, Nx) or abs(grid.L - L) > 1e-12 * L:
            raise UsageError("checkpoint grid does not match the supplied grid")
        if payload.size != count * Nx**d:
            raise UsageError(f"truncated history file: {path}")
        hist = cls(grid, tau, dtype=np.dtype(f"=f{itemsize}"))
        hist._buf = payload.astype(hist.dtype).reshape(count, Nx**d).copy() if count else hist._buf
        hist._len = int(count)
        return hist
