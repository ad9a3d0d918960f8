"""Nonoscillatory phase and amplitude functions for the modified Jacobi ODE.

For y'' + q y = 0 with q = q_nu^{(a,b)}, the pair P~, Q~ has Wronskian
W = 2p/pi and can be written P~ = M cos(psi), Q~ = M sin(psi) with M and psi
slowly varying.  N = M^2 solves the third-order linear equation
N''' + 4 q N' + 2 q' N = 0 and psi' = W / N.

The solver works with eta = (pi/2) N - 1, which is O(p^-2) away from the
endpoints and satisfies the same equation with forcing -2 q'.  Then
psi' - p = -p eta / (1 + eta) integrates to the slow phase psi - p t without
cancellation, so that part keeps absolute accuracy near eps even where psi
itself is of size 10^6.

``build_phase_expansion`` tabulates psi, M, psi' and psi - p t on a tensor
product of a dyadic piecewise Chebyshev grid in t and a triadic one in nu,
after which P~_nu(t) is available in O(1) time for any (t, nu) in the table.
"""

from __future__ import annotations

import math
import struct
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import jacobi_ref as jr
from .chebgrid import (DYADIC, TRIADIC, BivariateChebTable, PiecewiseChebGrid,
                       _bivar_chunk, _integration_matrix, _ref_nodes, spectral_integrate)
from .errors import (AccuracyError, AccuracyWarning, ConsistencyError, DomainError,
                     FormatError, ParameterError)
from .jacobi_ref import JacobiParams

__all__ = [
    "PhaseExpansion",
    "PhaseColumn",
    "q_coefficient",
    "build_grids",
    "t_grid",
    "initial_data",
    "solve_amplitude_ode",
    "phase_column",
    "build_phase_expansion",
    "eval_phase",
    "eval_ptilde",
    "eval_p",
    "save",
    "load",
]

T_POINTS = 16
V_POINTS = 24
T0 = 0.5 * np.pi  # where the initial data are imposed
WRONSKIAN_TOL = 1e-10
VERIFY_TOL = 1e-9  # 16- vs 24-point agreement on the worst interval
PHASE_MATCH_TOL = 1e-8


def q_coefficient(params: JacobiParams, nu, t):
    """Coefficient q of y'' + q y = 0 and its t-derivative.

    Uses q = p^2 + (1/4 - a^2)/(4 sin^2(t/2)) + (1/4 - b^2)/(4 cos^2(t/2)),
    an algebraically equivalent rearrangement with no cancellation.
    """
    t = np.asarray(t, dtype=float)
    if np.any(~(t > 0)) or np.any(~(t < np.pi)):
        raise DomainError("q is singular at t = 0 and t = pi")
    p = params.p(np.asarray(nu, dtype=float))
    c = 0.25 - params.a ** 2
    d = 0.25 - params.b ** 2
    s, co = jr.half_angle(t)
    q = p * p + c / (4 * s * s) + d / (4 * co * co)
    dq = -c * co / (4 * s ** 3) + d * s / (4 * co ** 3)
    return q, dq


def t_grid(nmax: int) -> PiecewiseChebGrid:
    """16-point dyadic grid in t covering [1/nmax, pi - 1/nmax]."""
    half = 1
    while 0.5 * np.pi * 2.0 ** (1 - half) > 1.0 / nmax:
        half += 1
    left = 0.5 * np.pi * 2.0 ** (np.arange(1, half + 1) - half)
    right = np.pi - left[-2::-1]  # mirrored; pi/2 kept once
    return PiecewiseChebGrid(np.concatenate([left, right]), T_POINTS, DYADIC)


def v_grid(nmax: int) -> PiecewiseChebGrid:
    """24-point grid in nu on breakpoints min(3^(j+2), nmax) starting at 27."""
    m = 0
    while 3 ** m < nmax:
        m += 1
    bp = sorted({min(3 ** (j + 2), nmax) for j in range(1, max(m, 1) + 1)})
    if len(bp) < 2:
        bp = [27, nmax]
    return PiecewiseChebGrid(np.array(bp, dtype=float), V_POINTS, TRIADIC)


def build_grids(nmax: int):
    """(t-grid, nu-grid) used for a phase expansion with degree bound nmax."""
    if isinstance(nmax, bool) or int(nmax) != nmax or nmax <= jr.PHASE_CUTOFF:
        raise ParameterError(f"nmax must be an integer > {jr.PHASE_CUTOFF}, got {nmax!r}")
    nmax = int(nmax)
    return t_grid(nmax), v_grid(nmax)


def _initial_eta(params: JacobiParams, gammas):
    """(eta, eta', eta'') at pi/2 as a (3, ng) array, and arg S(pi/2)."""
    out = np.empty((3, gammas.size))
    arg = np.empty(gammas.size)
    for i, g in enumerate(gammas):
        eta, deta, d2eta, argS, err = jr.amplitude_deviation(params, g, np.array([T0]))
        if err[0] > 1e-14:
            raise AccuracyError(f"initial data inaccurate for nu={g}")
        out[:, i] = eta[0], deta[0], d2eta[0]
        arg[i] = argS[0]
    return out, arg


def initial_data(params: JacobiParams, gammas):
    """N, N', N'' at t = pi/2 from the Hahn expansion.

    With P~ + i Q~ = K e^{i theta0} S, N = K^2 |S|^2 and its derivatives
    involve only the slowly varying S, never the large angle theta0.
    """
    gammas = np.atleast_1d(np.asarray(gammas, dtype=float))
    out = (2 / np.pi) * _initial_eta(params, gammas)[0]
    out[0] += 2 / np.pi
    return out


@lru_cache(maxsize=None)
def _ops(k: int):
    S = _integration_matrix(k)
    Sr = S - S[-1][None, :]  # integrate from the right end
    return S, Sr


def _solve_interval(params, gammas, lo, hi, k, start, from_left):
    """Collocation solve for eta on one interval; (eta, eta', eta'') at the k nodes.

    The unknown is sigma = eta''' at the nodes; lower derivatives follow by repeated
    spectral integration from the starting endpoint, which turns the ODE into
    a well-conditioned second-kind system for sigma.
    """
    x = 0.5 * (hi - lo) * _ref_nodes(k) + 0.5 * (hi + lo)
    x[0], x[-1] = lo, hi
    h = 0.5 * (hi - lo)
    Sl, Sr = _ops(k)
    I1 = (Sl if from_left else Sr) * h
    I2 = I1 @ I1
    I3 = I2 @ I1
    tau = x - (lo if from_left else hi)
    n0, n1, n2 = (v[:, None] for v in start)
    q, dq = q_coefficient(params, gammas[:, None], x[None, :])
    A = np.eye(k)[None] + 4 * q[:, :, None] * I2[None] + 2 * dq[:, :, None] * I3[None]
    base1 = n1 + n2 * tau
    base0 = n0 + n1 * tau + 0.5 * n2 * tau * tau
    rhs = -4 * q * base1 - 2 * dq * (base0 + 1.0)
    sig = np.linalg.solve(A, rhs[..., None])[..., 0]
    e2 = n2 + sig @ I1.T
    e1 = base1 + sig @ I2.T
    e0 = base0 + sig @ I3.T
    return e0, e1, e2


@lru_cache(maxsize=None)
def _coef_matrix(k: int):
    from numpy.polynomial import chebyshev as C
    return np.linalg.inv(C.chebvander(_ref_nodes(k), k - 1))


def _solve_eta(params, gammas, tgrid, init, verify=True):
    bp = tgrid.breakpoints
    mid = int(np.argmin(np.abs(bp - T0)))
    if bp[mid] != T0:
        raise ParameterError("t-grid must have pi/2 as a breakpoint")
    k = tgrid.k
    eta = np.empty((tgrid.npoints, gammas.size))
    deta = np.empty_like(eta)
    starts = {}
    for from_left, order in ((True, range(mid, tgrid.nintervals)),
                             (False, range(mid - 1, -1, -1))):
        cur = tuple(np.array(v, dtype=float) for v in init)
        for j in order:
            starts[j] = cur
            e0, e1, e2 = _solve_interval(params, gammas, bp[j], bp[j + 1], k, cur, from_left)
            idx = tgrid.block(j)
            eta[idx] = e0.T
            deta[idx] = e1.T
            e = -1 if from_left else 0
            cur = (e0[:, e], e1[:, e], e2[:, e])
    if not np.all(eta > -1):
        raise AccuracyError("amplitude ODE produced a nonpositive M^2")
    if verify:
        _verify(params, gammas, tgrid, eta, starts, mid)
    return eta, deta


def solve_amplitude_ode(params: JacobiParams, gamma, tgrid: PiecewiseChebGrid,
                        init=None, verify: bool = True):
    """N = M^2 and N' at every node of ``tgrid`` for each degree in ``gamma``.

    Marches interval by interval outward from t = pi/2 (which must be a
    breakpoint); ``init`` optionally overrides (N, N', N'') there.  Returns
    arrays of shape (npoints,) for scalar gamma and (npoints, len(gamma))
    otherwise.  With ``verify`` the interval whose Chebyshev tail is largest
    is re-solved with 24 points; disagreement above 1e-9 (relative) raises
    AccuracyError.
    """
    scalar = np.ndim(gamma) == 0
    gammas = np.atleast_1d(np.asarray(gamma, dtype=float))
    if init is None:
        start = _initial_eta(params, gammas)[0]
    else:
        start = (0.5 * np.pi) * np.asarray(init, dtype=float).reshape(3, -1)
        start[0] -= 1.0
    eta, deta = _solve_eta(params, gammas, tgrid, start, verify)
    N = (2 / np.pi) * (1.0 + eta)
    dN = (2 / np.pi) * deta
    if scalar:
        return N[:, 0], dN[:, 0]
    return N, dN


def _verify(params, gammas, tgrid, eta, starts, mid):
    blocks = tgrid.by_interval(eta)  # (nint, k, ng)
    coefs = np.einsum("ij,mjg->mig", _coef_matrix(tgrid.k), blocks)
    tail = (np.abs(coefs[:, -1]) + np.abs(coefs[:, -2])) / (1.0 + blocks).min(axis=1)
    j, g = np.unravel_index(np.argmax(tail), tail.shape)
    from_left = j >= mid
    bp = tgrid.breakpoints
    st = tuple(v[g:g + 1] for v in starts[j])
    fine = _solve_interval(params, gammas[g:g + 1], bp[j], bp[j + 1], V_POINTS, st, from_left)[0]
    e = -1 if from_left else 0
    coarse = blocks[j, e, g]
    rel = abs(fine[0, e] - coarse) / (1.0 + coarse)
    if rel > VERIFY_TOL:
        raise AccuracyError(
            f"amplitude solve not resolved on [{bp[j]:.3g}, {bp[j+1]:.3g}] for nu={gammas[g]:.6g} "
            f"(16/24-point mismatch {rel:.1e})")


def _phase_tables(params, gammas, tgrid):
    """(slow, psi', M, psi) at the grid nodes, one column per degree; slow = psi - p t."""
    start, argS = _initial_eta(params, gammas)
    eta, _ = _solve_eta(params, gammas, tgrid, start)
    p = params.p(gammas)
    slow = spectral_integrate(tgrid, -p[None, :] * eta / (1.0 + eta))
    alpha1 = tgrid.breakpoints[0]
    mid_idx = int(np.nonzero(tgrid.nodes == T0)[0][0])
    a = params.a
    for i, g in enumerate(gammas):
        # the constant from the values at alpha_1, the 2 pi branch from the
        # Hahn phase at pi/2 (continuous in nu)
        r = jr.pq_ref(params, g, alpha1, want_q=True)
        c0 = math.atan2(r.q, r.p) - p[i] * alpha1
        target = argS[i] - 0.5 * (a + 0.5) * np.pi - slow[mid_idx, i]
        c = c0 + 2 * np.pi * round((target - c0) / (2 * np.pi))
        if abs(c - target) > PHASE_MATCH_TOL:
            raise ConsistencyError(
                f"phase at pi/2 disagrees with its asymptotic value by {abs(c - target):.1e} "
                f"(nu={g})")
        slow[:, i] += c
    dpsi = p[None, :] / (1.0 + eta)
    amp = np.sqrt((2 / np.pi) * (1.0 + eta))
    psi = p[None, :] * tgrid.nodes[:, None] + slow
    return slow, dpsi, amp, psi


@dataclass(frozen=True)
class PhaseColumn:
    """Phase data for a single degree on a t-grid (used for quadrature)."""

    params: JacobiParams
    nu: float
    tgrid: PiecewiseChebGrid
    psi: np.ndarray
    dpsi: np.ndarray
    amp: np.ndarray
    slow: np.ndarray  # psi - p t


def phase_column(params: JacobiParams, nu, tgrid: PiecewiseChebGrid | None = None) -> PhaseColumn:
    """psi, psi' and M for one degree nu >= 27 on ``tgrid`` (default t_grid(nu))."""
    nu = float(nu)
    if nu < jr.PHASE_CUTOFF:
        raise ParameterError(f"phase functions need nu >= {jr.PHASE_CUTOFF}")
    if tgrid is None:
        tgrid = t_grid(max(int(math.ceil(nu)), jr.PHASE_CUTOFF + 1))
    slow, dpsi, amp, psi = _phase_tables(params, np.array([nu]), tgrid)
    return PhaseColumn(params, nu, tgrid, psi[:, 0], dpsi[:, 0], amp[:, 0], slow[:, 0])


@dataclass(frozen=True, eq=False)
class PhaseExpansion:
    """Tables of psi, M, psi' and psi - p t on a (t, nu) tensor-product Chebyshev grid."""

    params: JacobiParams
    nmax: int
    psi: BivariateChebTable
    amp: BivariateChebTable
    dpsi: BivariateChebTable
    slow: BivariateChebTable

    @property
    def tgrid(self) -> PiecewiseChebGrid:
        return self.psi.tgrid

    @property
    def vgrid(self) -> PiecewiseChebGrid:
        return self.psi.vgrid

    @property
    def nbytes(self) -> int:
        return 4 * self.psi.values.nbytes


def build_phase_expansion(params: JacobiParams, nmax: int) -> PhaseExpansion:
    """Solve the amplitude equation at every nu-grid node and tabulate."""
    tgrid, vgrid = build_grids(nmax)
    gammas = vgrid.nodes
    slow, dpsi, amp, psi = _phase_tables(params, gammas, tgrid)
    W = 2 * params.p(gammas) / np.pi
    wr = np.abs(amp * amp * dpsi / W[None, :] - 1.0).max()
    if wr > WRONSKIAN_TOL:
        raise ConsistencyError(f"Wronskian identity violated by {wr:.1e}")
    if not np.all(dpsi > 0):
        raise ConsistencyError("phase derivative is not positive")
    return PhaseExpansion(params, int(nmax),
                          BivariateChebTable(tgrid, vgrid, psi),
                          BivariateChebTable(tgrid, vgrid, amp),
                          BivariateChebTable(tgrid, vgrid, dpsi),
                          BivariateChebTable(tgrid, vgrid, slow))


def _check_rect(exp: PhaseExpansion, t, v):
    tg, vg = exp.tgrid, exp.vgrid
    if np.any(~(t >= tg.lo)) or np.any(~(t <= tg.hi)):
        raise DomainError(f"t outside [{tg.lo:.6g}, {tg.hi:.6g}]")
    if np.any(~(v >= vg.lo)) or np.any(~(v <= vg.hi)):
        raise DomainError(f"nu outside [{vg.lo:.6g}, {vg.hi:.6g}]")


def eval_phase(exp: PhaseExpansion, t, v, chunk: int = 8192):
    """(psi, M, psi') at (t, v) by tensor-product barycentric interpolation.

    psi is assembled as p t + (psi - p t), interpolating only the slow part.
    """
    scalar = np.ndim(t) == 0 and np.ndim(v) == 0
    t, v = np.broadcast_arrays(np.atleast_1d(np.asarray(t, float)),
                               np.atleast_1d(np.asarray(v, float)))
    _check_rect(exp, t, v)
    shape = t.shape
    t, v = t.ravel(), v.ravel()
    outs = [np.empty(t.size) for _ in range(3)]
    tables = (exp.slow, exp.amp, exp.dpsi)
    for s in range(0, t.size, chunk):
        vals = _bivar_chunk(tables, t[s:s + chunk], v[s:s + chunk])
        for o, val in zip(outs, vals):
            o[s:s + chunk] = val
    outs[0] += exp.params.p(v) * t
    outs = [o.reshape(shape) for o in outs]
    if scalar:
        return tuple(float(o[0]) for o in outs)
    return tuple(outs)


def eval_ptilde(exp: PhaseExpansion, t, v):
    """P~_v(t) = M cos(psi)."""
    psi, m, _ = eval_phase(exp, t, v)
    return m * np.cos(psi)


def eval_p(exp: PhaseExpansion, x, v, warn_below: float = 1e-8):
    """Unnormalized Jacobi function P_v(x), x = cos t.

    Dividing out C_v sin(t/2)^(a+1/2) cos(t/2)^(b+1/2) amplifies the absolute
    error of P~ by its reciprocal; an AccuracyWarning reports that factor when
    the prefactor drops below ``warn_below``.
    """
    x = np.asarray(x, dtype=float)
    if np.any(~(np.abs(x) < 1)):
        raise DomainError("x must lie in (-1, 1)")
    t = np.arccos(x)
    pt = eval_ptilde(exp, t, v)
    pref = jr.norm_constant(exp.params, np.asarray(v, float)) * jr.trig_weight(exp.params, t)
    small = np.min(pref)
    if small < warn_below:
        warnings.warn(f"P evaluation amplifies errors by up to {1 / small:.2e}",
                      AccuracyWarning, stacklevel=2)
    return pt / pref


# --------------------------------------------------------------------------
# binary format

MAGIC = b"FJPH"
VERSION = 1


def _pack_grid(g: PiecewiseChebGrid) -> bytes:
    return struct.pack("<II", g.k, g.m) + np.asarray(g.breakpoints, "<f8").tobytes()


def save(exp: PhaseExpansion, path) -> None:
    """Write the expansion in the little-endian FJPH format."""
    parts = [MAGIC, struct.pack("<Idd Q", VERSION, exp.params.a, exp.params.b, exp.nmax),
             _pack_grid(exp.tgrid), _pack_grid(exp.vgrid)]
    for tab in (exp.psi, exp.amp, exp.dpsi, exp.slow):
        parts.append(np.ascontiguousarray(tab.values, "<f8").tobytes())
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise FormatError("phase file is truncated")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def floats(self, n: int) -> np.ndarray:
        return np.frombuffer(self.take(8 * n), "<f8").astype(float)


def load(path) -> PhaseExpansion:
    """Read an expansion written by ``save``."""
    with open(path, "rb") as fh:
        data = fh.read()
    r = _Reader(data)
    if r.take(4) != MAGIC:
        raise FormatError("not a phase file (bad magic)")
    version, a, b, nmax = r.unpack("<Idd Q")
    if version != VERSION:
        raise FormatError(f"unsupported phase file version {version}")
    try:
        params = JacobiParams(a, b)
    except ParameterError as exc:
        raise FormatError(f"invalid parameters in phase file: {exc}") from None
    grids = []
    for family in (DYADIC, TRIADIC):
        k, m = r.unpack("<II")
        if k < 2 or m < 2 or m > 1 << 20:
            raise FormatError("invalid grid header")
        try:
            grids.append(PiecewiseChebGrid(r.floats(m), k, family))
        except ParameterError as exc:
            raise FormatError(f"invalid grid: {exc}") from None
    tg, vg = grids
    shape = (tg.npoints, vg.npoints)
    tabs = [BivariateChebTable(tg, vg, r.floats(shape[0] * shape[1]).reshape(shape))
            for _ in range(4)]
    if r.pos != len(data):
        raise FormatError("trailing bytes after phase tables")
    return PhaseExpansion(params, int(nmax), *tabs)
