"""Nonuniform discrete Fourier transforms through a handful of uniform FFTs.

Type 2 (``nufft_apply``) evaluates f_j = sum_{k=0}^{n-1} c_k exp(i k t_j) at
arbitrary points t_j in [0, 2 pi); type 1 (``nufft_apply_adjoint``) applies
the conjugate transpose.  Writing t_j = 2 pi s_j / n + delta_j with s_j the
nearest grid index, the factor exp(i k delta_j) is a smooth function of
omega_k = 2(k - n/2)/n in [-1, 1] and x_j = n delta_j / 2 in [-pi/2, pi/2]:

    exp(i k delta_j) = exp(i x_j) sum_l i^l eps_l J_l(x_j) T_l(omega_k)

(Jacobi-Anger, eps_0 = 1, eps_l = 2).  Truncating after K terms gives a
rank-K correction to a uniform FFT, so one apply costs K FFTs of length n.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy import fft, special

from .errors import ParameterError

__all__ = ["NufftPlan", "nudft_direct", "nufft_plan", "nufft_apply", "nufft_apply_adjoint",
           "apply_rows", "adjoint_rows"]

MIN_EPS = 1e-15
MAX_TERMS = 40


def nudft_direct(coeffs, points, chunk: int = 1024) -> np.ndarray:
    """O(n m) evaluation of sum_k c_k exp(i k t_j); k starts at 0."""
    c = np.asarray(coeffs, dtype=complex)
    t = np.asarray(points, dtype=float)
    k = np.arange(c.size)
    out = np.empty(t.shape, dtype=complex)
    flat = t.ravel()
    res = out.ravel()
    for s in range(0, flat.size, chunk):
        res[s:s + chunk] = np.exp(1j * np.outer(flat[s:s + chunk], k)) @ c
    return res.reshape(t.shape)


@dataclass(frozen=True, eq=False)
class NufftPlan:
    """Grid assignment and Chebyshev correction factors for fixed points."""

    n: int
    points: np.ndarray
    grid_index: np.ndarray  # s_j
    left: np.ndarray  # (K, m) point factors i^l eps_l J_l(x_j) exp(i x_j)
    right: np.ndarray  # (K, n) frequency factors T_l(omega_k)
    eps_f: float

    @property
    def identity_map(self) -> bool:
        """True when point j sits on grid index j (gathers become slices)."""
        m = self.points.size
        return m <= self.n and bool(np.array_equal(self.grid_index, np.arange(m)))

    @property
    def terms(self) -> int:
        return self.left.shape[0]


def _terms_needed(xmax: float, eps_f: float) -> int:
    # tail of sum_l eps_l |J_l(x)| with |T_l| <= 1; each J_l, l >= 1, is
    # increasing on [0, pi/2], so the largest |x| bounds every point
    if xmax == 0.0:
        return 1
    ls = np.arange(MAX_TERMS + 1)
    mags = np.abs(special.jv(ls, xmax)) * np.where(ls == 0, 1.0, 2.0)
    tail = np.cumsum(mags[::-1])[::-1]  # tail[K] = sum_{l >= K}
    ok = np.nonzero(tail <= eps_f)[0]
    if ok.size == 0:
        raise ParameterError(f"eps_f={eps_f} needs more than {MAX_TERMS} terms")
    return max(int(ok[0]), 1)


def nufft_plan(points, n: int, eps_f: float = 1e-14) -> NufftPlan:
    """Plan for n frequencies 0..n-1 at the given points in [0, 2 pi)."""
    if not eps_f >= MIN_EPS:
        raise ParameterError(f"eps_f must be >= {MIN_EPS:g}")
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise ParameterError("n must be a positive integer")
    n = int(n)
    t = np.asarray(points, dtype=float).ravel()
    if np.any(~(t >= 0)) or np.any(~(t < 2 * np.pi)):
        raise ParameterError("points must lie in [0, 2 pi)")
    h = 2 * np.pi / n
    s = np.rint(t / h)
    delta = t - s * h
    s = s.astype(np.int64) % n
    x = 0.5 * n * delta
    K = _terms_needed(float(np.abs(x).max(initial=0.0)), eps_f)
    ls = np.arange(K)
    left = (1j ** ls)[:, None] * np.where(ls == 0, 1.0, 2.0)[:, None] \
        * special.jv(ls[:, None], x[None, :]) * np.exp(1j * x)[None, :]
    omega = 2.0 * (np.arange(n) - 0.5 * n) / n
    right = C.chebvander(omega, K - 1).T
    t = t.copy()
    t.setflags(write=False)
    return NufftPlan(n, t, s, left, np.ascontiguousarray(right), float(eps_f))


def _check_shape(x, size, what):
    x = np.asarray(x)
    if x.shape[0] != size:
        raise ParameterError(f"expected {size} {what}, got {x.shape[0]}")
    return x


def apply_rows(plan: NufftPlan, rows: np.ndarray) -> np.ndarray:
    """Type-2 transform of each row of an (r, n) array; returns (r, m)."""
    m = plan.points.size
    ident = plan.identity_map
    out = np.zeros((rows.shape[0], m), dtype=complex)
    # one work buffer reused by every term: fresh arrays of this size are
    # page-faulted in on each allocation, which dominates at large n
    buf = np.empty((rows.shape[0], plan.n), dtype=complex)
    picked = buf[:, :m] if ident else np.empty((rows.shape[0], m), dtype=complex)
    for l in range(plan.terms):
        # T_0 = 1, so the first term needs no frequency scaling
        if l:
            np.multiply(rows, plan.right[l], out=buf)
        else:
            buf[...] = rows
        g = fft.ifft(buf, axis=-1, norm="forward", overwrite_x=True)
        if ident:
            picked = g[:, :m]
        else:
            np.take(g, plan.grid_index, axis=1, out=picked)
        picked *= plan.left[l]
        out += picked
        buf = g
    return out


def adjoint_rows(plan: NufftPlan, rows: np.ndarray) -> np.ndarray:
    """Type-1 transform of each row of an (r, m) array; returns (r, n)."""
    m = plan.points.size
    ident = plan.identity_map
    out = np.zeros((rows.shape[0], plan.n), dtype=complex)
    spectrum = np.empty_like(out)
    w = None if ident else np.empty_like(rows, dtype=complex)
    for l in range(plan.terms):
        if ident:
            spectrum[:, m:] = 0.0
            np.multiply(np.conj(plan.left[l]), rows, out=spectrum[:, :m])
        else:
            np.multiply(np.conj(plan.left[l]), rows, out=w)
            for r in range(rows.shape[0]):
                spectrum[r].real = np.bincount(plan.grid_index, w[r].real, plan.n)
                spectrum[r].imag = np.bincount(plan.grid_index, w[r].imag, plan.n)
        spectrum = fft.fft(spectrum, axis=-1, overwrite_x=True)
        if l:
            spectrum *= plan.right[l]  # T_0 = 1 needs no scaling
        out += spectrum
    return out


def nufft_apply(plan: NufftPlan, coeffs) -> np.ndarray:
    """Type-2 transform: values sum_k c_k exp(i k t_j) at the planned points.

    ``coeffs`` may have trailing columns (n, r); each is transformed.
    """
    c = _check_shape(coeffs, plan.n, "coefficients")
    rows = np.array(c.reshape(plan.n, -1).T, dtype=complex, order="C")
    return apply_rows(plan, rows).T.reshape((plan.points.size,) + c.shape[1:])


def nufft_apply_adjoint(plan: NufftPlan, values) -> np.ndarray:
    """Type-1 transform: sum_j v_j exp(-i k t_j) for k = 0..n-1."""
    v = _check_shape(values, plan.points.size, "values")
    rows = np.array(v.reshape(v.shape[0], -1).T, dtype=complex, order="C")
    return adjoint_rows(plan, rows).T.reshape((plan.n,) + v.shape[1:])
