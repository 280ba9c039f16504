"""Periodic spectral Poisson solver on the spatial grid.

Grid functions are represented by trigonometric interpolants whose
coefficients come from the FFT; solving -laplace(phi) = rho is a division by
|2*pi*alpha/L|^2 mode by mode, and the electric energy follows from
Parseval's identity without ever forming the field on a mesh.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalConsistencyError, UsageError
from .grids import GridSpec


@dataclass(frozen=True)
class DensityGrid:
    """Charge density values at the Nx^d spatial nodes (row-major layout)."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != self.grid.shape_x:
            raise UsageError(f"values must have shape {self.grid.shape_x}, got {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise UsageError("density values must be finite")
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class SpectralField:
    """Complex mode amplitudes c_alpha in numpy FFT layout.

    Normalization: values(x_i) = sum_alpha c_alpha * exp(i * 2*pi*alpha.x_i / L),
    so a constant field c has c_0 = c.
    """

    grid: GridSpec
    coeffs: np.ndarray


def _mode_numbers(grid: GridSpec) -> list[np.ndarray]:
    """Integer mode numbers per axis in FFT layout (0, 1, ..., -1)."""
    return [np.fft.fftfreq(grid.Nx, d=1.0 / grid.Nx) for _ in range(grid.d)]


def wavenumber_squared(grid: GridSpec) -> np.ndarray:
    """|2*pi*alpha/L|^2 on the full mode grid."""
    scale = 2.0 * np.pi / grid.L
    modes = np.meshgrid(*_mode_numbers(grid), indexing="ij")
    k2 = np.zeros(grid.shape_x)
    for m in modes:
        k2 += (scale * m) ** 2
    return k2


def _nyquist_mask(grid: GridSpec) -> np.ndarray:
    """True where any axis carries the (sign-ambiguous) Nyquist mode."""
    mask = np.zeros(grid.shape_x, dtype=bool)
    if grid.Nx % 2 == 0:
        modes = np.meshgrid(*_mode_numbers(grid), indexing="ij")
        for m in modes:
            mask |= np.abs(m) == grid.Nx // 2
    return mask


def transform_values(grid: GridSpec, values: np.ndarray) -> SpectralField:
    """Trigonometric interpolant coefficients of real nodal values."""
    values = np.asarray(values, dtype=np.float64)
    if values.shape != grid.shape_x:
        raise UsageError(f"values must have shape {grid.shape_x}, got {values.shape}")
    coeffs = np.fft.fftn(values) / grid.n_nodes
    return SpectralField(grid=grid, coeffs=coeffs)


def forward_transform(rho: DensityGrid) -> SpectralField:
    return transform_values(rho.grid, rho.values)


def inverse_transform(spectrum: SpectralField) -> np.ndarray:
    """Real nodal values of the interpolant (imaginary roundoff discarded)."""
    return np.fft.ifftn(spectrum.coeffs * spectrum.grid.n_nodes).real


def solve_poisson(rho: DensityGrid) -> tuple[np.ndarray, SpectralField]:
    """Solve -laplace(phi) = rho on the torus; returns (phi nodal values, phi spectrum).

    The input must be neutral: |mean(rho)| <= 1e-8 * max|rho|. The potential
    is gauged to zero mean, and the Nyquist modes of phi are zeroed since
    their derivative is ambiguous for real data.
    """
    grid = rho.grid
    mean = float(rho.values.mean())
    tol = 1e-8 * float(np.max(np.abs(rho.values)))
    if abs(mean) > tol:
        raise NumericalConsistencyError(
            f"density is not neutral: nodal mean {mean:.3e} exceeds tolerance {tol:.3e}; "
            "subtract the mean before solving"
        )
    spec = forward_transform(rho)
    k2 = wavenumber_squared(grid)
    phi_hat = np.zeros_like(spec.coeffs)
    interior = k2 > 0
    phi_hat[interior] = spec.coeffs[interior] / k2[interior]
    phi_hat[_nyquist_mask(grid)] = 0.0
    phi_spec = SpectralField(grid=grid, coeffs=phi_hat)
    return inverse_transform(phi_spec), phi_spec


def electric_energy(spectrum: SpectralField) -> float:
    """(1/2) * integral of |grad(phi)|^2 via Parseval on the interpolant."""
    grid = spectrum.grid
    k2 = wavenumber_squared(grid)
    total = np.add.reduce((k2 * np.abs(spectrum.coeffs) ** 2).reshape(-1))
    return 0.5 * grid.L**grid.d * float(total)
