"""Gauss-Jacobi rules from the nonoscillatory phase of P~_n.

The zeros of P~_n = M cos(psi_n) are t_k = psi_n^{-1}(pi/2 + k pi) and the
modified rule (integrating products of P~'s over (0, pi)) has weights
pi / psi_n'(t_k).  Inverting psi_n once on a piecewise Chebyshev grid makes
every node an O(1) interpolation, so an n-point rule costs O(n).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from . import jacobi_ref as jr
from .chebgrid import GENERIC, PiecewiseChebGrid, bary_rows, pw_eval
from .errors import AccuracyError, ParameterError
from .jacobi_ref import JacobiParams
from .phasefn import PhaseColumn, phase_column, t_grid

__all__ = [
    "QuadratureRule",
    "InversePhase",
    "MODIFIED",
    "STANDARD",
    "phase_for_degree",
    "invert_phase",
    "modified_gauss_jacobi",
    "gauss_jacobi",
    "gauss_jacobi_reference",
]

MODIFIED = "modified"
STANDARD = "standard"
SMALL_N = jr.PHASE_CUTOFF + 1  # n below this goes to the recurrence rule
REFERENCE_MAX_N = 2000
NEWTON_MAXIT = 50


@dataclass(frozen=True)
class QuadratureRule:
    """n-point rule; modified nodes are angles in (0, pi), standard ones x in (-1, 1).

    Both are stored in ascending order.
    """

    kind: str
    n: int
    nodes: np.ndarray
    weights: np.ndarray
    params: JacobiParams | None = None

    def __post_init__(self):
        if self.kind not in (MODIFIED, STANDARD):
            raise ParameterError(f"unknown rule kind {self.kind!r}")
        for name in ("nodes", "weights"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def integrate(self, fvals) -> float:
        return float(np.dot(self.weights, fvals))


def _modified_to_standard(params: JacobiParams, t, w) -> tuple[np.ndarray, np.ndarray]:
    a, b = params.a, params.b
    s, c = jr.half_angle(t)
    ws = w * 2.0 ** (a + b + 1) * s ** (2 * a + 1) * c ** (2 * b + 1)
    # x = cos t = 1 - 2 sin^2(t/2) = 2 cos^2(t/2) - 1, whichever is exact
    x = np.where(t <= 0.5 * np.pi, 1 - 2 * s * s, 2 * c * c - 1)
    return x[::-1].copy(), ws[::-1].copy()


def _check_n(n) -> int:
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise ParameterError(f"n must be a positive integer, got {n!r}")
    return int(n)


# --------------------------------------------------------------------------
# recurrence + Newton oracle

def _sum_squares(params, n, t, block=256):
    acc = np.zeros(t.shape)
    for s in range(0, t.size, block):
        tab = jr.ptilde_table(params, n - 1, t[s:s + block], np.longdouble)
        acc[s:s + block] = (tab * tab).sum(axis=0)
    return acc


def gauss_jacobi_reference(params: JacobiParams, n: int, kind: str = STANDARD) -> QuadratureRule:
    """Rule from Newton iteration on the recurrence-evaluated P~_n.

    Starting values are the eigenvalues of the Jacobi matrix; Newton then
    runs in the angle t, where the zeros are well separated near x = +-1.
    Weights are 1 / sum_{j<n} P~_j(t_k)^2.  The recurrences run in extended
    precision because near x = +-1 their rounding errors grow like n^2 eps.
    O(n^2) work, so n is capped at 2000.
    """
    n = _check_n(n)
    if n > REFERENCE_MAX_N:
        raise ParameterError(f"reference rule limited to n <= {REFERENCE_MAX_N}")
    al, sb = jr.recurrence_coeffs(params, np.arange(n))
    x0 = eigh_tridiagonal(al, sb[1:], eigvals_only=True)
    t = np.sort(np.arccos(np.clip(x0, -1.0, 1.0)))
    t = np.clip(t, 1e-300, np.pi * (1 - 1e-16))
    extra = 2  # steps beyond the point where updates reach rounding level
    for _ in range(NEWTON_MAXIT):
        val, der = jr.ptilde_and_derivative(params, n, t, np.longdouble)
        step = val / der
        t = t - step
        if np.all(np.abs(step) <= 1e-13 * np.maximum(1.0, t)):
            extra -= 1
            if extra < 0:
                break
    else:
        raise AccuracyError("Newton iteration for reference nodes did not converge")
    # Christoffel numbers: a sum of squares, free of the cancellation that
    # the derivative formula 2p / P~_n'(t)^2 suffers near the endpoints
    w = 1.0 / _sum_squares(params, n, t)
    if kind == MODIFIED:
        return QuadratureRule(MODIFIED, n, t, w, params)
    if kind != STANDARD:
        raise ParameterError(f"unknown rule kind {kind!r}")
    x, ws = _modified_to_standard(params, t, w)
    return QuadratureRule(STANDARD, n, x, ws, params)


# --------------------------------------------------------------------------
# phase-based rules

def phase_for_degree(params: JacobiParams, n: int) -> PhaseColumn:
    """psi_n, psi_n' and M for the single degree n >= 28."""
    n = _check_n(n)
    if n < SMALL_N:
        raise ParameterError(f"phase rules need n >= {SMALL_N}")
    return phase_column(params, n, t_grid(n))


@dataclass(frozen=True)
class InversePhase:
    """psi^{-1} tabulated on the omega-grid omega_i = psi(alpha_i)."""

    grid: PiecewiseChebGrid
    values: np.ndarray

    def __call__(self, xi):
        return pw_eval(self.grid, self.values, xi)


def _solve_psi(phase: PhaseColumn, j, xi):
    """t in t-interval j with psi(t) = xi; safeguarded Newton, vectorized."""
    tg = phase.tgrid
    nodes = tg._local[j]
    blocks = tg.block(j)
    psi_loc = phase.psi[blocks]
    dpsi_loc = phase.dpsi[blocks]
    lo = nodes[:, 0].copy()
    hi = nodes[:, -1].copy()
    f_lo = psi_loc[:, 0]
    f_hi = psi_loc[:, -1]
    y = lo + (xi - f_lo) / (f_hi - f_lo) * (hi - lo)
    done = np.zeros(xi.shape, dtype=bool)
    for _ in range(NEWTON_MAXIT):
        act = ~done
        if not act.any():
            return y
        W = bary_rows(nodes[act], y[act])
        r = np.einsum("nk,nk->n", W, psi_loc[act]) - xi[act]
        d = np.einsum("nk,nk->n", W, dpsi_loc[act])
        ya = y[act]
        # keep the bracket; psi is increasing
        lo[act] = np.where(r < 0, ya, lo[act])
        hi[act] = np.where(r > 0, ya, hi[act])
        new = ya - r / d
        bad = ~((new > lo[act]) & (new < hi[act]))
        new = np.where(bad, 0.5 * (lo[act] + hi[act]), new)
        step = np.abs(new - ya)
        y[act] = new
        conv = (step <= 1e-15 * np.maximum(1.0, np.abs(new))) | (r == 0) | \
            (hi[act] - lo[act] <= 2e-16 * np.maximum(1.0, np.abs(new)))
        idx = np.nonzero(act)[0]
        done[idx[conv]] = True
    if not done.all():
        raise AccuracyError("Newton inversion of the phase did not converge")
    return y


def invert_phase(phase: PhaseColumn) -> InversePhase:
    """Tabulate psi^{-1} on 16-point Chebyshev grids between omega_i = psi(alpha_i)."""
    if not np.all(phase.dpsi > 0):
        raise ParameterError("phase derivative must be positive")
    tg = phase.tgrid
    bp_idx = np.arange(tg.m) * (tg.k - 1)
    omega = phase.psi[bp_idx]
    wg = PiecewiseChebGrid(omega, tg.k, GENERIC)
    xi = wg.nodes
    j = np.repeat(np.arange(tg.nintervals), tg.k - 1)
    j = np.append(j, tg.nintervals - 1)
    vals = _solve_psi(phase, j, xi.copy())
    # interval ends are known exactly
    vals[bp_idx] = tg.breakpoints
    return InversePhase(wg, vals)


def _phase_rule(params: JacobiParams, n: int):
    phase = phase_for_degree(params, n)
    inv = invert_phase(phase)
    lo, hi = inv.grid.lo, inv.grid.hi
    k0 = math.ceil((lo - 0.5 * np.pi) / np.pi)
    k1 = math.floor((hi - 0.5 * np.pi) / np.pi)
    if k1 - k0 + 1 != n:
        raise AccuracyError(f"phase range holds {k1 - k0 + 1} zeros, expected {n}")
    half_k = np.arange(k0, k1 + 1, dtype=float) + 0.5
    t = inv(np.pi * half_k)
    # one Newton correction; psi(t) - xi = (p t - xi) + (psi - p t) keeps the
    # large parts out of the interpolation and is formed in extended
    # precision.  The shift is O(1e-15 t), too small to matter for psi'.
    vals = pw_eval(phase.tgrid, np.stack([phase.slow, phase.dpsi], axis=1), t)
    ld = np.longdouble
    lin = ld(params.p(float(n))) * t.astype(ld) - half_k.astype(ld) * (ld(np.pi) + ld(jr.PI_LO))
    t = t - (lin + vals[:, 0]).astype(float) / vals[:, 1]
    w = np.pi / vals[:, 1]
    if not (np.all(np.diff(t) > 0) and t[0] > 0 and t[-1] < np.pi):
        raise AccuracyError("computed nodes are not strictly increasing in (0, pi)")
    return t, w, phase, k0


def modified_gauss_jacobi(params: JacobiParams, n: int) -> QuadratureRule:
    """n-point rule for integrals of f(t) over (0, pi), exact for P~_j P~_k, j + k < 2n."""
    n = _check_n(n)
    if n < SMALL_N:
        return gauss_jacobi_reference(params, n, MODIFIED)
    t, w, _, _ = _phase_rule(params, n)
    return QuadratureRule(MODIFIED, n, t, w, params)


def gauss_jacobi(params: JacobiParams, n: int) -> QuadratureRule:
    """n-point rule for the weight (1-x)^a (1+x)^b on (-1, 1)."""
    n = _check_n(n)
    if n < SMALL_N:
        return gauss_jacobi_reference(params, n, STANDARD)
    t, w, _, _ = _phase_rule(params, n)
    x, ws = _modified_to_standard(params, t, w)
    return QuadratureRule(STANDARD, n, x, ws, params)
