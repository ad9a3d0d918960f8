"""Orthogonal forward and inverse Jacobi transforms.

With t_1 < ... < t_n the nodes and w_j the weights of the n-point modified
Gauss-Jacobi rule, the n x n matrix J with entries P~_k(t_j) sqrt(w_j),
k = 0..n-1, is orthogonal.  ``forward`` maps coefficients alpha to samples
J alpha and ``inverse`` applies J^T.

For k >= 28, P~_k(t) = Re(G(t, k) exp(i k t)) with the nonoscillatory
G(t, nu) = M exp(i(psi - nu t)).  G has low numerical rank, so
G(t_j, k) ~= sum_r u_r(t_j) v_r(k) and each term is a diagonal scaling of a
nonuniform FFT.  Degrees 0..27 are applied as a dense block.

By default the plan goes one step further.  The nodes are the points where
psi_n(t_j) = (k0 + j + 1/2) pi, so t_j = pi j / n + E(t_j) with E smooth and
O(1/n).  Folding exp(i nu E(t)) into G leaves a kernel of essentially the
same rank whose exponential part sits on the uniform grid pi j / n, and the
NUFFT collapses to one FFT of length 2n per term.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jacobi_ref as jr
from .chebgrid import GENERIC, PiecewiseChebGrid, _bivar_chunk, pw_eval
from .errors import AccuracyError, FormatError, ParameterError
from .jacobi_ref import JacobiParams
from .lowrank import interpolative_decomposition
from .nufft import NufftPlan, adjoint_rows, apply_rows, nufft_plan
from .phasefn import PhaseExpansion
from .quadrule import _phase_rule, modified_gauss_jacobi

__all__ = [
    "TransformPlan",
    "dense_jacobi_matrix",
    "build_transform_plan",
    "forward",
    "inverse",
    "audit_reconstruction",
    "read_vector",
    "write_vector",
]

DENSE_DEGREES = jr.PHASE_CUTOFF + 1  # degrees below this use the recurrence
DENSE_MAX_N = 4096
MAX_RANK = 512
EPS_RANGE = (1e-14, 1e-6)
COLUMN_BLOCK = 4  # low-rank terms pushed through the NUFFT together


def _check_n(n) -> int:
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise ParameterError(f"n must be a positive integer, got {n!r}")
    return int(n)


def dense_jacobi_matrix(params: JacobiParams, n: int) -> np.ndarray:
    """J with entries P~_k(t_j) sqrt(w_j) from the three-term recurrence.

    O(n^2) memory, so n is limited to 4096.
    """
    n = _check_n(n)
    if n > DENSE_MAX_N:
        raise ParameterError(f"dense matrix limited to n <= {DENSE_MAX_N}")
    rule = modified_gauss_jacobi(params, n)
    tab = jr.ptilde_table(params, n - 1, rule.nodes, np.longdouble)
    return (tab.T * np.sqrt(rule.weights.astype(np.longdouble))[:, None]).astype(float)


@dataclass(frozen=True, eq=False)
class _Interp:
    """Lagrange rows mapping values on a piecewise grid to sorted points."""

    ranges: list  # (interval, start, stop) for each interval holding points
    cols: np.ndarray  # (k, npoints): column i holds the weights of point i

    def apply(self, by_interval: np.ndarray) -> np.ndarray:
        """Real values of shape (nint, r, k) on the grid -> (r, npoints)."""
        out = np.empty((by_interval.shape[1], self.cols.shape[1]))
        for j, s, e in self.ranges:
            np.matmul(by_interval[j], self.cols[:, s:e], out=out[:, s:e])
        return out


def _interp(grid: PiecewiseChebGrid, pts: np.ndarray, chunk: int = 1 << 16) -> _Interp:
    j = np.empty(pts.size, dtype=np.int64)
    cols = np.empty((grid.k, pts.size))
    for s in range(0, pts.size, chunk):
        js, rows = grid.interp_weights(pts[s:s + chunk])
        j[s:s + chunk] = js
        cols[:, s:s + chunk] = rows.T
    if np.any(np.diff(j) < 0):
        raise ParameterError("points must be sorted")
    cuts = np.flatnonzero(np.diff(j)) + 1
    starts = np.concatenate([[0], cuts])
    stops = np.concatenate([cuts, [pts.size]])
    return _Interp([(int(j[s]), int(s), int(e)) for s, e in zip(starts, stops)], cols)


def _by_interval(grid: PiecewiseChebGrid, vals: np.ndarray) -> np.ndarray:
    """(npoints, r) complex nodal values -> (2, nint, r, k) real and imaginary blocks."""
    blocks = np.swapaxes(grid.by_interval(vals), 1, 2)
    return np.ascontiguousarray(np.stack([blocks.real, blocks.imag]))


def _subgrid(grid: PiecewiseChebGrid, lo: float, hi: float):
    """Contiguous intervals of ``grid`` covering [lo, hi] and their node slice."""
    bp = grid.breakpoints
    j0 = int(np.clip(np.searchsorted(bp, lo, side="right") - 1, 0, grid.nintervals - 1))
    j1 = int(np.clip(np.searchsorted(bp, hi, side="left") - 1, j0, grid.nintervals - 1))
    sub = PiecewiseChebGrid(bp[j0:j1 + 2], grid.k, GENERIC)
    start = j0 * (grid.k - 1)
    return sub, slice(start, start + sub.npoints)


@dataclass(frozen=True, eq=False)
class TransformPlan:
    """Everything needed to apply J_n and its transpose in O(r n log n)."""

    params: JacobiParams
    n: int
    eps: float
    folded: bool  # node offsets folded into the factors
    nodes: np.ndarray
    weights: np.ndarray
    dense: np.ndarray  # (n, min(n, 28)) entries P~_k(t_j) sqrt(w_j)
    skel: np.ndarray  # skeleton degrees (nodes of the nu-grid)
    u_grid: np.ndarray | None  # (2, nint_t, r, k_t) Re/Im of u_r on the t sub-grid
    v_grid: np.ndarray | None  # (2, nint_v, r, k_v) Re/Im of v_r on the nu sub-grid
    u_interp: _Interp | None
    v_interp: _Interp | None
    nufft: NufftPlan | None
    offsets: np.ndarray | None = None  # E(t_j) when folded

    @property
    def rank(self) -> int:
        return int(self.skel.size)

    def factor_block(self, r0: int, r1: int):
        """Real and imaginary parts of u_r(t_j) sqrt(w_j) and of v_r(k).

        Rows r0 <= r < r1; k runs over 28..n-1.
        """
        sw = np.sqrt(self.weights)
        u = [self.u_interp.apply(g[:, r0:r1]) * sw for g in self.u_grid]
        v = [self.v_interp.apply(g[:, r0:r1]) for g in self.v_grid]
        return u, v


def build_transform_plan(exp: PhaseExpansion, n: int, eps: float = 1e-13,
                         fold: bool = True) -> TransformPlan:
    """Factor the nonoscillatory kernel for the n-point transform.

    The kernel is sampled on the t-intervals of the degree-n phase grid
    covering [t_1, t_n] and on the nu-intervals of the table covering
    [28, n-1], using the tabulated slow phase and amplitude.  A column ID
    selects r skeleton degrees; u_r is the kernel at those degrees,
    interpolated to the t_j, and v_r interpolates the ID coefficients to the
    integer degrees.  ``fold=False`` factors G itself and applies a genuine
    NUFFT at the nodes.
    """
    n = _check_n(n)
    if n > exp.nmax + 1:
        raise ParameterError(f"n={n} exceeds nmax + 1 = {exp.nmax + 1}")
    if not (EPS_RANGE[0] <= eps <= EPS_RANGE[1]):
        raise ParameterError(f"eps must lie in [{EPS_RANGE[0]:g}, {EPS_RANGE[1]:g}]")
    params = exp.params
    if n <= DENSE_DEGREES:
        rule = modified_gauss_jacobi(params, n)
        t, w = np.asarray(rule.nodes), np.asarray(rule.weights)
        dense = jr.ptilde_table(params, n - 1, t).T * np.sqrt(w)[:, None]
        return TransformPlan(params, n, float(eps), bool(fold), t, w, dense, np.zeros(0),
                             None, None, None, None, None)

    t, w, phase, k0 = _phase_rule(params, n)
    dense = jr.ptilde_table(params, DENSE_DEGREES - 1, t)
    dense *= np.sqrt(w)
    dense = dense.T
    tsub, _ = _subgrid(phase.tgrid, t[0], t[-1])
    vsub, vcols = _subgrid(exp.vgrid, DENSE_DEGREES, n - 1)
    x = tsub.nodes
    nu = vsub.nodes
    shift = 0.5 * (params.a + params.b + 1)  # p - nu
    slow = pw_eval(exp.tgrid, exp.slow.values[:, vcols], x)
    amp = pw_eval(exp.tgrid, exp.amp.values[:, vcols], x)
    A = amp * np.exp(1j * (slow + shift * x[:, None]))
    offsets = None
    if fold:
        # E(t) = t - pi j(t) / n with psi_n(t) = (k0 + j(t) + 1/2) pi
        def E(s):
            return (-shift * s - pw_eval(phase.tgrid, phase.slow, s) + (k0 + 0.5) * np.pi) / n
        A = A * np.exp(1j * nu[None, :] * E(x)[:, None])
        offsets = E(t)
        fft_plan = nufft_plan(np.pi * np.arange(n) / n, 2 * n, max(0.1 * eps, 1e-15))
    else:
        fft_plan = nufft_plan(t, n, max(0.1 * eps, 1e-15))
    idf = interpolative_decomposition(A, eps)
    if idf.rank > MAX_RANK:
        raise AccuracyError(f"rank {idf.rank} exceeds {MAX_RANK}")
    degrees = np.arange(DENSE_DEGREES, n, dtype=float)
    return TransformPlan(
        params, n, float(eps), bool(fold), t, w, dense, nu[idf.skel],
        _by_interval(tsub, A[:, idf.skel]), _by_interval(vsub, idf.R.T),
        _interp(tsub, t), _interp(vsub, degrees), fft_plan, offsets)


def _check_vec(plan: TransformPlan, x, what: str) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size != plan.n:
        raise ParameterError(f"{what} must be a vector of length {plan.n}, got shape {x.shape}")
    return x


def forward(plan: TransformPlan, alpha) -> np.ndarray:
    """Samples f(t_j) sqrt(w_j) of f = sum_k alpha_k P~_k, i.e. J alpha."""
    alpha = _check_vec(plan, alpha, "alpha")
    nd = plan.dense.shape[1]
    out = plan.dense @ alpha[:nd]
    for r0 in range(0, plan.rank, COLUMN_BLOCK):
        r1 = min(r0 + COLUMN_BLOCK, plan.rank)
        u, v = plan.factor_block(r0, r1)
        c = np.zeros((r1 - r0, plan.nufft.n), dtype=complex)
        c[:, nd:plan.n] = v[0] * alpha[nd:]
        c[:, nd:plan.n] += 1j * (v[1] * alpha[nd:])
        f = apply_rows(plan.nufft, c)
        out += np.einsum("rj,rj->j", u[0], f.real) - np.einsum("rj,rj->j", u[1], f.imag)
    return out


def inverse(plan: TransformPlan, samples) -> np.ndarray:
    """Coefficients J^T y; inverts ``forward`` since J is orthogonal."""
    y = _check_vec(plan, samples, "samples")
    nd = plan.dense.shape[1]
    out = np.zeros(plan.n)
    out[:nd] = plan.dense.T @ y
    for r0 in range(0, plan.rank, COLUMN_BLOCK):
        r1 = min(r0 + COLUMN_BLOCK, plan.rank)
        u, v = plan.factor_block(r0, r1)
        # sum_j z_j exp(+i k t_j) = conj(adjoint(conj z)); only Re(v s) is
        # needed, and Re(v conj(a)) = Re(v) Re(a) + Im(v) Im(a)
        z = u[0] * y - 1j * (u[1] * y)
        a = adjoint_rows(plan.nufft, z)[:, nd:plan.n]
        out[nd:] += np.einsum("rk,rk->k", v[0], a.real) + np.einsum("rk,rk->k", v[1], a.imag)
    return out


def audit_reconstruction(plan: TransformPlan, exp: PhaseExpansion, m: int = 200,
                         seed: int = 0) -> tuple[float, float]:
    """(max residual, max |G|) of the factorization at m random (j, k) pairs.

    For a folded plan the reference kernel includes exp(i k E(t_j)).
    """
    if plan.rank == 0:
        return 0.0, 0.0
    rng = np.random.default_rng(seed)
    j = rng.integers(0, plan.n, m)
    k = rng.integers(DENSE_DEGREES, plan.n, m)
    t = plan.nodes[j]
    slow, amp = _bivar_chunk((exp.slow, exp.amp), t, k.astype(float))
    g = amp * np.exp(1j * (slow + 0.5 * (plan.params.a + plan.params.b + 1) * t))
    if plan.folded:
        g = g * np.exp(1j * k * plan.offsets[j])
    u, v = plan.factor_block(0, plan.rank)
    u = (u[0] + 1j * u[1])[:, j] / np.sqrt(plan.weights[j])
    v = (v[0] + 1j * v[1])[:, k - DENSE_DEGREES]
    approx = np.einsum("rm,rm->m", u, v)
    return float(np.abs(approx - g).max()), float(np.abs(g).max())


# --------------------------------------------------------------------------
# vector files: u64 length, then that many little-endian f64 values

def write_vector(path, x) -> None:
    x = np.ascontiguousarray(x, dtype="<f8")
    if x.ndim != 1:
        raise ParameterError("only 1-d vectors can be written")
    with open(path, "wb") as fh:
        fh.write(np.uint64(x.size).astype("<u8").tobytes())
        fh.write(x.tobytes())


def read_vector(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 8:
        raise FormatError("vector file is truncated")
    size = int(np.frombuffer(data[:8], "<u8")[0])
    if len(data) != 8 + 8 * size:
        raise FormatError(f"vector file holds {len(data) - 8} bytes, header says {8 * size}")
    return np.frombuffer(data[8:], "<f8").astype(float)
