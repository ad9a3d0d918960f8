"""Piecewise and bivariate Chebyshev discretizations.

Every smooth function in this package is stored by its values on a k-point
piecewise Chebyshev grid (Chebyshev extrema mapped onto each interval, with
shared endpoints stored once).  This module provides node generation,
barycentric interpolation, spectral integration/differentiation and the
tensor-product variant used for the phase and amplitude tables.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial import chebyshev as npcheb

from .errors import DomainError, ParameterError

__all__ = [
    "cheb_nodes",
    "bary_eval",
    "PiecewiseChebGrid",
    "BivariateChebTable",
    "pw_eval",
    "spectral_integrate",
    "spectral_differentiate",
    "bivar_eval",
]

# Grid families with O(1) interval lookup.
GENERIC = "generic"
DYADIC = "dyadic"  # (pi/2) 2^(i-L) mirrored about pi/2
TRIADIC = "triadic"  # 27 * 3^j, last breakpoint capped


def cheb_nodes(k: int, lo: float, hi: float) -> np.ndarray:
    """Return the k-point Chebyshev extrema grid on [lo, hi], increasing.

    The endpoints are reproduced exactly.
    """
    if int(k) != k or k < 2:
        raise ParameterError(f"k must be an integer >= 2, got {k!r}")
    if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
        raise ParameterError(f"invalid interval ({lo}, {hi})")
    x = _ref_nodes(int(k))
    nodes = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
    nodes[0] = lo
    nodes[-1] = hi
    return nodes


@lru_cache(maxsize=None)
def _ref_nodes(k: int) -> np.ndarray:
    i = np.arange(1, k + 1)
    x = np.cos(np.pi * (k - i) / (k - 1))
    x[0], x[-1] = -1.0, 1.0
    if k % 2 == 1:
        x[k // 2] = 0.0
    # symmetrize so that mirrored grids are exact mirrors
    x = 0.5 * (x - x[::-1])
    x.setflags(write=False)
    return x


@lru_cache(maxsize=None)
def _bary_weights(k: int) -> np.ndarray:
    w = np.ones(k)
    w[1::2] = -1.0
    w[0] *= 0.5
    w[-1] *= 0.5
    w.setflags(write=False)
    return w


def bary_rows(nodes: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Lagrange weights of the Chebyshev interpolant through ``nodes``.

    ``nodes`` has shape (k,) (one interval shared by all points) or (n, k)
    (one interval per point).  Returns an (n, k) array ``W`` with
    ``p(t[i]) = W[i] @ f``.  Points that coincide with a node produce an exact
    unit row.
    """
    t = np.asarray(t, dtype=float)
    nodes = np.asarray(nodes, dtype=float)
    w = _bary_weights(nodes.shape[-1])
    c = t[:, None] - nodes
    with np.errstate(divide="ignore", invalid="ignore"):
        np.divide(w, c, out=c)
        total = c.sum(axis=1)
        c /= total[:, None]
    # a point on a node gives an infinite term and a non-finite row sum
    bad = np.nonzero(~np.isfinite(total))[0]
    if bad.size:
        hit = np.isinf(c[bad]) | np.isnan(c[bad])
        exact = t[bad, None] == np.broadcast_to(nodes, (t.size, nodes.shape[-1]))[bad]
        jh = np.argmax(exact | hit, axis=1)
        c[bad] = 0.0
        c[bad, jh] = 1.0
    return c


def bary_eval(nodes, fvals, t):
    """Evaluate the Chebyshev interpolant through (nodes, fvals) at t.

    ``nodes`` must be a single-interval Chebyshev extrema grid.  Scalar ``t``
    gives a float, array ``t`` gives an array.
    """
    nodes = np.asarray(nodes, dtype=float)
    fvals = np.asarray(fvals)
    if nodes.shape != fvals.shape[:1]:
        raise ParameterError("nodes and fvals must have the same length")
    scalar = np.ndim(t) == 0
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    out = bary_rows(nodes, tt) @ fvals
    return out[0] if scalar else out


@dataclass(frozen=True, eq=False)
class PiecewiseChebGrid:
    """k-point piecewise Chebyshev grid on sigma_1 < ... < sigma_m."""

    breakpoints: np.ndarray
    k: int
    family: str = GENERIC
    nodes: np.ndarray = field(init=False, repr=False)
    _local: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        bp = np.array(self.breakpoints, dtype=float)
        if bp.ndim != 1 or bp.size < 2:
            raise ParameterError("need at least two breakpoints")
        if not np.all(np.diff(bp) > 0):
            raise ParameterError("breakpoints must be strictly increasing")
        if int(self.k) != self.k or self.k < 2:
            raise ParameterError(f"k must be an integer >= 2, got {self.k!r}")
        if self.family not in (GENERIC, DYADIC, TRIADIC):
            raise ParameterError(f"unknown grid family {self.family!r}")
        bp.setflags(write=False)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "k", int(self.k))
        k = self.k
        x = _ref_nodes(k)
        lo, hi = bp[:-1, None], bp[1:, None]
        local = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
        local[:, 0] = bp[:-1]
        local[:, -1] = bp[1:]
        local.setflags(write=False)
        nodes = np.concatenate([local[:, :-1].ravel(), bp[-1:]])
        nodes.setflags(write=False)
        object.__setattr__(self, "_local", local)
        object.__setattr__(self, "nodes", nodes)

    @property
    def m(self) -> int:
        return self.breakpoints.size

    @property
    def nintervals(self) -> int:
        return self.breakpoints.size - 1

    @property
    def npoints(self) -> int:
        return (self.k - 1) * (self.m - 1) + 1

    @property
    def lo(self) -> float:
        return float(self.breakpoints[0])

    @property
    def hi(self) -> float:
        return float(self.breakpoints[-1])

    def interval_nodes(self, j: int) -> np.ndarray:
        return self._local[j]

    def block(self, j):
        """Flat node indices of interval(s) j, shape (..., k)."""
        return np.asarray(j)[..., None] * (self.k - 1) + np.arange(self.k)

    def by_interval(self, fvals) -> np.ndarray:
        """Reshape flat nodal values (npoints, ...) to (nintervals, k, ...)."""
        fvals = np.asarray(fvals)
        if fvals.shape[0] != self.npoints:
            raise ParameterError(
                f"expected {self.npoints} nodal values, got {fvals.shape[0]}")
        return fvals[self.block(np.arange(self.nintervals))]

    def locate(self, t) -> np.ndarray:
        """Index of the interval containing each t (closed intervals)."""
        t = np.asarray(t, dtype=float)
        bp = self.breakpoints
        if np.any(~(t >= bp[0])) or np.any(~(t <= bp[-1])):
            raise DomainError(
                f"point outside [{bp[0]}, {bp[-1]}]")
        if self.family == DYADIC:
            guess = self._guess_dyadic(t)
        elif self.family == TRIADIC:
            guess = self._guess_triadic(t)
        else:
            return np.clip(np.searchsorted(bp, t, side="right") - 1,
                           0, self.nintervals - 1)
        j = np.clip(guess, 0, self.nintervals - 1)
        j = np.where(t < bp[j], j - 1, j)
        j = np.where(t > bp[np.minimum(j + 1, self.m - 1)], j + 1, j)
        j = np.clip(j, 0, self.nintervals - 1)
        bad = (t < bp[j]) | (t > bp[j + 1])
        if np.any(bad):
            j = np.where(bad, np.clip(np.searchsorted(bp, t, side="right") - 1,
                                      0, self.nintervals - 1), j)
        return j

    def _guess_dyadic(self, t):
        bp = self.breakpoints
        half = (self.m - 1) // 2  # index of the pi/2 breakpoint
        left = t <= bp[half]
        u = np.where(left, t, np.pi - t)
        _, e = np.frexp(u / bp[0])
        i = e - 1  # floor(log2(u / alpha_1))
        return np.where(left, i, self.nintervals - 1 - i)

    def _guess_triadic(self, t):
        with np.errstate(divide="ignore"):
            return np.floor(np.log(t / self.breakpoints[0]) / np.log(3.0)).astype(int)

    def interp_weights(self, t):
        """(interval index, Lagrange rows) for points t; see ``bary_rows``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        j = self.locate(t)
        return j, bary_rows(self._local[j], t)

    def __eq__(self, other):
        return (isinstance(other, PiecewiseChebGrid) and self.k == other.k
                and np.array_equal(self.breakpoints, other.breakpoints))

    __hash__ = None


PW_CHUNK = 1 << 16


def pw_eval(grid: PiecewiseChebGrid, fvals, t):
    """Evaluate the piecewise interpolant of nodal values ``fvals`` at t.

    ``fvals`` may carry trailing dimensions (npoints, ...); each trailing
    column is interpolated independently.
    """
    fvals = np.asarray(fvals)
    if fvals.shape[0] != grid.npoints:
        raise ParameterError("fvals does not match grid")
    scalar = np.ndim(t) == 0
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty(t.shape + fvals.shape[1:], dtype=np.result_type(fvals.dtype, float))
    flat = t.ravel()
    res = out.reshape((flat.size,) + fvals.shape[1:])
    if flat.size > 64 and np.all(flat[1:] >= flat[:-1]):
        _pw_eval_sorted(grid, fvals, flat, res)
        return out[0] if scalar else out
    for s in range(0, flat.size, PW_CHUNK):  # bounds the (n, k) temporaries
        j, W = grid.interp_weights(flat[s:s + PW_CHUNK])
        res[s:s + PW_CHUNK] = np.einsum("nk,nk...->n...", W, fvals[grid.block(j)])
    return out[0] if scalar else out


def _pw_eval_sorted(grid, fvals, t, res):
    """pw_eval for nondecreasing t: each interval owns a contiguous range."""
    grid.locate(t[[0, -1]])
    cuts = np.searchsorted(t, grid.breakpoints[1:-1], side="left")
    starts = np.concatenate([[0], cuts])
    stops = np.concatenate([cuts, [t.size]])
    blocks = grid.by_interval(fvals).reshape(grid.nintervals, grid.k, -1)
    flat_res = res.reshape(t.size, -1)
    for j in np.nonzero(stops > starts)[0]:
        for s in range(starts[j], stops[j], PW_CHUNK):
            e = min(s + PW_CHUNK, stops[j])
            np.matmul(bary_rows(grid._local[j], t[s:e]), blocks[j], out=flat_res[s:e])


@lru_cache(maxsize=None)
def _integration_matrix(k: int) -> np.ndarray:
    """S with (S f)_i = int_{-1}^{x_i} p, p the interpolant of f on [-1, 1]."""
    x = _ref_nodes(k)
    V = npcheb.chebvander(x, k - 1)
    A = np.empty((k, k))
    for j in range(k):
        e = np.zeros(k)
        e[j] = 1.0
        A[:, j] = npcheb.chebval(x, npcheb.chebint(e, lbnd=-1.0))
    S = np.linalg.solve(V.T, A.T).T
    S[0] = 0.0
    S.setflags(write=False)
    return S


@lru_cache(maxsize=None)
def _diff_matrix(k: int) -> np.ndarray:
    """Spectral differentiation matrix on the reference nodes of [-1, 1]."""
    x = _ref_nodes(k)
    w = _bary_weights(k)
    dx = x[:, None] - x[None, :]
    np.fill_diagonal(dx, 1.0)
    D = (w[None, :] / w[:, None]) / dx
    np.fill_diagonal(D, 0.0)
    D[np.diag_indices(k)] = -D.sum(axis=1)
    D.setflags(write=False)
    return D


def spectral_integrate(grid: PiecewiseChebGrid, fvals) -> np.ndarray:
    """Values of F(t) = int_{sigma_1}^t f at every grid node (F(sigma_1) = 0)."""
    blocks = grid.by_interval(fvals)
    h = 0.5 * np.diff(grid.breakpoints)
    S = _integration_matrix(grid.k)
    local = np.einsum("ij,mj...->mi...", S, blocks)
    local *= h.reshape((-1,) + (1,) * (local.ndim - 1))
    offsets = np.cumsum(local[:, -1], axis=0)
    out = np.empty((grid.npoints,) + local.shape[2:], dtype=local.dtype)
    out[0] = 0.0
    k = grid.k
    for j in range(grid.nintervals):
        base = offsets[j - 1] if j > 0 else 0.0
        out[j * (k - 1) + 1:(j + 1) * (k - 1) + 1] = local[j, 1:] + base
    return out


def spectral_differentiate(grid: PiecewiseChebGrid, fvals) -> np.ndarray:
    """Derivative of the piecewise interpolant at every node.

    At a shared breakpoint the one-sided derivatives are averaged.
    """
    blocks = grid.by_interval(fvals)
    h = 0.5 * np.diff(grid.breakpoints)
    D = _diff_matrix(grid.k)
    local = np.einsum("ij,mj...->mi...", D, blocks)
    local /= h.reshape((-1,) + (1,) * (local.ndim - 1))
    k = grid.k
    out = np.empty((grid.npoints,) + local.shape[2:], dtype=local.dtype)
    for j in range(grid.nintervals):
        out[j * (k - 1):(j + 1) * (k - 1) + 1] = local[j]
    for j in range(1, grid.nintervals):
        out[j * (k - 1)] = 0.5 * (local[j - 1, -1] + local[j, 0])
    return out


@dataclass(frozen=True, eq=False)
class BivariateChebTable:
    """Values of f(t, v) on the tensor product of two piecewise grids."""

    tgrid: PiecewiseChebGrid
    vgrid: PiecewiseChebGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != (self.tgrid.npoints, self.vgrid.npoints):
            raise ParameterError(
                f"table shape {vals.shape} does not match grids "
                f"({self.tgrid.npoints}, {self.vgrid.npoints})")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)


def bivar_eval(table: BivariateChebTable, t, v, chunk: int = 8192):
    """Tensor-product barycentric interpolation of ``table`` at (t, v)."""
    scalar = np.ndim(t) == 0 and np.ndim(v) == 0
    t, v = np.broadcast_arrays(np.atleast_1d(np.asarray(t, float)),
                               np.atleast_1d(np.asarray(v, float)))
    out = np.empty(t.shape)
    for s in range(0, t.size, chunk):
        out.flat[s:s + chunk] = _bivar_chunk(
            (table,), t.ravel()[s:s + chunk], v.ravel()[s:s + chunk])[0]
    return out[0] if scalar else out


def _bivar_chunk(tables, t, v):
    """Interpolate several tables sharing grids at the same points."""
    tgrid, vgrid = tables[0].tgrid, tables[0].vgrid
    it, Wt = tgrid.interp_weights(t)
    iv, Wv = vgrid.interp_weights(v)
    rows = tgrid.block(it)[:, :, None]
    cols = vgrid.block(iv)[:, None, :]
    return [np.einsum("nk,nkl,nl->n", Wt, tab.values[rows, cols], Wv)
            for tab in tables]
