"""Hot numerical kernels: periodic cubic-spline field evaluation and the
backward leapfrog trace through a stack of stored coefficient grids.

Two interchangeable implementations are kept: a vectorized numpy reference
path and numba-compiled per-point kernels (used by default when numba
imports). Both walk the identical arithmetic sequence; tests compare them.
The trace kernels return the number of single-point field evaluations they
actually performed, which feeds the cost accounting.

Set VPFLOW_BACKEND=numpy (or call set_backend) to force the reference path.
"""

from __future__ import annotations

import itertools
import os

import numpy as np

from .errors import UsageError

try:
    import numba
    from numba import njit, prange

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

_BACKEND = "numba" if HAVE_NUMBA else "numpy"
if os.environ.get("VPFLOW_BACKEND"):
    _BACKEND = os.environ["VPFLOW_BACKEND"]


def set_backend(name: str) -> None:
    global _BACKEND
    if name not in ("numpy", "numba"):
        raise UsageError(f"backend must be 'numpy' or 'numba', got {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise UsageError("numba is not importable")
    _BACKEND = name


def get_backend() -> str:
    return _BACKEND


# ---------------------------------------------------------------------------
# numpy reference path
# ---------------------------------------------------------------------------

def _locate(x: np.ndarray, L: float, N: int) -> tuple[np.ndarray, np.ndarray]:
    """Wrap positions into [0, L) and split into cell index and fraction."""
    u = np.mod(x, L)
    u[u >= L] = 0.0  # -tiny % L rounds to L
    t = u * (N / L)
    i = t.astype(np.int64)
    np.minimum(i, N - 1, out=i)
    return i, t - i


def bspline_weights(t: np.ndarray) -> np.ndarray:
    """Cubic B-spline values for the 4-node stencil, shape (4,) + t.shape."""
    s = 1.0 - t
    w = np.empty((4,) + t.shape)
    w[0] = s * s * s / 6.0
    w[1] = 2.0 / 3.0 - t * t * (1.0 - 0.5 * t)
    w[2] = 2.0 / 3.0 - s * s * (1.0 - 0.5 * s)
    w[3] = t * t * t / 6.0
    return w


def bspline_dweights(t: np.ndarray) -> np.ndarray:
    """Stencil weights of d/dt (multiply by N/L for the spatial derivative)."""
    s = 1.0 - t
    w = np.empty((4,) + t.shape)
    w[0] = -0.5 * s * s
    w[1] = t * (1.5 * t - 2.0)
    w[2] = s * (2.0 - 1.5 * s)
    w[3] = 0.5 * t * t
    return w


def eval_phi_many(coeffs: np.ndarray, L: float, X: np.ndarray) -> np.ndarray:
    """Spline values at X of shape (M, d); coeffs has shape (N,)*d."""
    d = X.shape[1]
    N = coeffs.shape[0]
    loc = [(_locate(np.array(X[:, a], dtype=np.float64), L, N)) for a in range(d)]
    wts = [bspline_weights(t) for _, t in loc]
    flat = coeffs.reshape(-1)
    out = np.zeros(X.shape[0])
    for offs in itertools.product(range(4), repeat=d):
        idx = (loc[0][0] + (offs[0] - 1)) % N
        w = wts[0][offs[0]]
        for a in range(1, d):
            idx = idx * N + (loc[a][0] + (offs[a] - 1)) % N
            w = w * wts[a][offs[a]]
        out += flat[idx] * w
    return out


def eval_E_many(coeffs: np.ndarray, L: float, X: np.ndarray) -> np.ndarray:
    """Minus the spline gradient at X, shape (M, d)."""
    d = X.shape[1]
    N = coeffs.shape[0]
    inv_h = N / L
    loc = [(_locate(np.array(X[:, a], dtype=np.float64), L, N)) for a in range(d)]
    wts = [bspline_weights(t) for _, t in loc]
    dwts = [bspline_dweights(t) for _, t in loc]
    flat = coeffs.reshape(-1)
    E = np.zeros((X.shape[0], d))
    for offs in itertools.product(range(4), repeat=d):
        idx = (loc[0][0] + (offs[0] - 1)) % N
        for a in range(1, d):
            idx = idx * N + (loc[a][0] + (offs[a] - 1)) % N
        c = flat[idx]
        for g in range(d):
            w = c
            for a in range(d):
                w = w * (dwts[a][offs[a]] if a == g else wts[a][offs[a]])
            E[:, g] -= w
    E *= inv_h
    return E


def _trace_numpy(coeffs, L, n, tau, X, V, half_kick) -> int:
    if n == 0:
        return 0
    M = X.shape[0]
    evals = 0
    half = 0.5 * tau
    if half_kick:
        V += half * eval_E_many(coeffs[n], L, X)
        evals += M
    k = n
    while k > 1:
        k -= 1
        X -= tau * V
        V += tau * eval_E_many(coeffs[k], L, X)
        evals += M
    X -= tau * V
    V += half * eval_E_many(coeffs[0], L, X)
    evals += M
    return evals


# ---------------------------------------------------------------------------
# numba path (scalar per-point twins of the arithmetic above)
# ---------------------------------------------------------------------------

if HAVE_NUMBA:

    @njit(inline="always")
    def _cell_1d(x, L, N, inv_h):
        u = x % L
        if u >= L or u < 0.0:
            u = 0.0
        t = u * inv_h
        i = int(t)
        if i > N - 1:
            i = N - 1
        return i, t - i

    @njit(inline="always")
    def _E_1d(c, k, L, N, inv_h, x):
        i, f = _cell_1d(x, L, N, inv_h)
        s = 1.0 - f
        dw0 = -0.5 * s * s
        dw1 = f * (1.5 * f - 2.0)
        dw2 = s * (2.0 - 1.5 * s)
        dw3 = 0.5 * f * f
        im = i - 1
        if im < 0:
            im += N
        i1 = i + 1
        if i1 >= N:
            i1 -= N
        i2 = i + 2
        if i2 >= N:
            i2 -= N
        g = c[k, im] * dw0 + c[k, i] * dw1 + c[k, i1] * dw2 + c[k, i2] * dw3
        return -g * inv_h

    @njit(cache=True, parallel=True)
    def _trace_1d(coeffs, L, n, tau, X, V, half_kick):
        N = coeffs.shape[1]
        inv_h = N / L
        half = 0.5 * tau
        total = 0
        for p in prange(X.shape[0]):
            x = X[p]
            v = V[p]
            cnt = 0
            if half_kick:
                v += half * _E_1d(coeffs, n, L, N, inv_h, x)
                cnt += 1
            k = n
            while k > 1:
                k -= 1
                x -= tau * v
                v += tau * _E_1d(coeffs, k, L, N, inv_h, x)
                cnt += 1
            x -= tau * v
            v += half * _E_1d(coeffs, 0, L, N, inv_h, x)
            cnt += 1
            X[p] = x
            V[p] = v
            total += cnt
        return total

    @njit(inline="always")
    def _fill_weights(f, w, dw):
        s = 1.0 - f
        w[0] = s * s * s / 6.0
        w[1] = 2.0 / 3.0 - f * f * (1.0 - 0.5 * f)
        w[2] = 2.0 / 3.0 - s * s * (1.0 - 0.5 * s)
        w[3] = f * f * f / 6.0
        dw[0] = -0.5 * s * s
        dw[1] = f * (1.5 * f - 2.0)
        dw[2] = s * (2.0 - 1.5 * s)
        dw[3] = 0.5 * f * f

    @njit(inline="always")
    def _stencil_1d(i, N, idx):
        idx[0] = i - 1 if i > 0 else N - 1
        idx[1] = i
        idx[2] = i + 1 if i + 1 < N else i + 1 - N
        idx[3] = i + 2 if i + 2 < N else i + 2 - N

    @njit(inline="always")
    def _E_2d(c, k, L, N, inv_h, x, y, wx, dwx, wy, dwy, ix, iy):
        i, f = _cell_1d(x, L, N, inv_h)
        _fill_weights(f, wx, dwx)
        _stencil_1d(i, N, ix)
        j, g = _cell_1d(y, L, N, inv_h)
        _fill_weights(g, wy, dwy)
        _stencil_1d(j, N, iy)
        gx = 0.0
        gy = 0.0
        for m in range(4):
            r = 0.0
            rd = 0.0
            for q in range(4):
                cc = c[k, ix[m], iy[q]]
                r += cc * wy[q]
                rd += cc * dwy[q]
            gx += dwx[m] * r
            gy += wx[m] * rd
        return -gx * inv_h, -gy * inv_h

    @njit(cache=True, parallel=True)
    def _trace_2d(coeffs, L, n, tau, X, V, half_kick):
        N = coeffs.shape[1]
        inv_h = N / L
        half = 0.5 * tau
        total = 0
        for p in prange(X.shape[0]):
            wx = np.empty(4)
            dwx = np.empty(4)
            wy = np.empty(4)
            dwy = np.empty(4)
            ix = np.empty(4, dtype=np.int64)
            iy = np.empty(4, dtype=np.int64)
            x = X[p, 0]
            y = X[p, 1]
            u = V[p, 0]
            v = V[p, 1]
            cnt = 0
            if half_kick:
                ex, ey = _E_2d(coeffs, n, L, N, inv_h, x, y, wx, dwx, wy, dwy, ix, iy)
                u += half * ex
                v += half * ey
                cnt += 1
            k = n
            while k > 1:
                k -= 1
                x -= tau * u
                y -= tau * v
                ex, ey = _E_2d(coeffs, k, L, N, inv_h, x, y, wx, dwx, wy, dwy, ix, iy)
                u += tau * ex
                v += tau * ey
                cnt += 1
            x -= tau * u
            y -= tau * v
            ex, ey = _E_2d(coeffs, 0, L, N, inv_h, x, y, wx, dwx, wy, dwy, ix, iy)
            u += half * ex
            v += half * ey
            cnt += 1
            X[p, 0] = x
            X[p, 1] = y
            V[p, 0] = u
            V[p, 1] = v
            total += cnt
        return total

    @njit(inline="always")
    def _E_3d(c, kk, L, N, inv_h, x, y, z, wx, dwx, wy, dwy, wz, dwz, ix, iy, iz):
        i, f = _cell_1d(x, L, N, inv_h)
        _fill_weights(f, wx, dwx)
        _stencil_1d(i, N, ix)
        j, g = _cell_1d(y, L, N, inv_h)
        _fill_weights(g, wy, dwy)
        _stencil_1d(j, N, iy)
        l, h = _cell_1d(z, L, N, inv_h)
        _fill_weights(h, wz, dwz)
        _stencil_1d(l, N, iz)
        gx = 0.0
        gy = 0.0
        gz = 0.0
        for m in range(4):
            sy = 0.0
            sdy = 0.0
            sdz = 0.0
            for q in range(4):
                r = 0.0
                rd = 0.0
                for w in range(4):
                    cc = c[kk, ix[m], iy[q], iz[w]]
                    r += cc * wz[w]
                    rd += cc * dwz[w]
                sy += wy[q] * r
                sdy += dwy[q] * r
                sdz += wy[q] * rd
            gx += dwx[m] * sy
            gy += wx[m] * sdy
            gz += wx[m] * sdz
        return -gx * inv_h, -gy * inv_h, -gz * inv_h

    @njit(cache=True, parallel=True)
    def _trace_3d(coeffs, L, n, tau, X, V, half_kick):
        N = coeffs.shape[1]
        inv_h = N / L
        half = 0.5 * tau
        total = 0
        for p in prange(X.shape[0]):
            wx = np.empty(4)
            dwx = np.empty(4)
            wy = np.empty(4)
            dwy = np.empty(4)
            wz = np.empty(4)
            dwz = np.empty(4)
            ix = np.empty(4, dtype=np.int64)
            iy = np.empty(4, dtype=np.int64)
            iz = np.empty(4, dtype=np.int64)
            x = X[p, 0]
            y = X[p, 1]
            z = X[p, 2]
            u = V[p, 0]
            v = V[p, 1]
            w = V[p, 2]
            cnt = 0
            if half_kick:
                ex, ey, ez = _E_3d(coeffs, n, L, N, inv_h, x, y, z,
                                   wx, dwx, wy, dwy, wz, dwz, ix, iy, iz)
                u += half * ex
                v += half * ey
                w += half * ez
                cnt += 1
            k = n
            while k > 1:
                k -= 1
                x -= tau * u
                y -= tau * v
                z -= tau * w
                ex, ey, ez = _E_3d(coeffs, k, L, N, inv_h, x, y, z,
                                   wx, dwx, wy, dwy, wz, dwz, ix, iy, iz)
                u += tau * ex
                v += tau * ey
                w += tau * ez
                cnt += 1
            x -= tau * u
            y -= tau * v
            z -= tau * w
            ex, ey, ez = _E_3d(coeffs, 0, L, N, inv_h, x, y, z,
                               wx, dwx, wy, dwy, wz, dwz, ix, iy, iz)
            u += half * ex
            v += half * ey
            w += half * ez
            cnt += 1
            X[p, 0] = x
            X[p, 1] = y
            X[p, 2] = z
            V[p, 0] = u
            V[p, 1] = v
            V[p, 2] = w
            total += cnt
        return total


def trace_backward(coeffs: np.ndarray, L: float, n: int, tau: float,
                   X: np.ndarray, V: np.ndarray, half_kick: bool) -> int:
    """Trace (X, V) backward in time through the coefficient stack, in place.

    coeffs holds one spline-coefficient grid per stored step; rows 0..n-1 are
    read, plus row n for the leading half-kick when half_kick is set. Returns
    the number of single-point field evaluations performed.
    """
    if n == 0:
        return 0
    need = n + 1 if half_kick else n
    if coeffs.shape[0] < need:
        raise UsageError(f"need {need} stored fields for step {n}, have {coeffs.shape[0]}")
    if X.shape[0] == 0:
        return 0
    d = X.shape[1]
    if _BACKEND == "numba":
        if d == 1:
            return int(_trace_1d(coeffs, L, n, tau, X[:, 0], V[:, 0], half_kick))
        if d == 2:
            return int(_trace_2d(coeffs, L, n, tau, X, V, half_kick))
        return int(_trace_3d(coeffs, L, n, tau, X, V, half_kick))
    return _trace_numpy(coeffs, L, n, tau, X, V, half_kick)
