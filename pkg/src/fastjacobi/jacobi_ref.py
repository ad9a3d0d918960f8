"""Reference evaluation of the normalized Jacobi functions.

``P~_nu(t) = C_nu P_nu^{(a,b)}(cos t) sin(t/2)^{a+1/2} cos(t/2)^{b+1/2}`` and the
companion second-kind function ``Q~_nu`` are computed here by several
independent methods:

* three-term recurrence in the degree (integer or real degree),
* Gauss hypergeometric series,
* Baratella-Gatteschi Bessel expansions,
* Hahn trigonometric expansions.

``pq_ref`` / ``ptilde_ref`` pick the most accurate branch for a given (nu, t).
These routines supply initial data for the phase construction and serve as
test oracles; they are not meant to be fast.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy import special

from .errors import AccuracyError, DomainError, ParameterError

__all__ = [
    "JacobiParams",
    "PQPair",
    "log_gamma_ratio",
    "norm_constant",
    "trig_weight",
    "half_angle",
    "recurrence_coeffs",
    "recurrence_eval",
    "ptilde_table",
    "ptilde_and_derivative",
    "pq_recurrence",
    "series_pq",
    "bg_asym",
    "hahn_asym",
    "hahn_sum",
    "amplitude_deviation",
    "pq_ref",
    "ptilde_ref",
]

EPS = np.finfo(float).eps
PI_LO = 1.2246467991473532e-16  # pi - float(pi)
PHASE_CUTOFF = 27  # lowest degree covered by the phase tables
HAHN_MIN_PT = 20.0  # Hahn expansion reaches full precision once p*t exceeds this


@dataclass(frozen=True)
class JacobiParams:
    """Parameter pair (a, b), both restricted to [-1/2, 1/2].

    The closed endpoints are admitted for the Chebyshev-type cases
    a, b = +-1/2, where q is constant.
    """

    a: float
    b: float

    def __post_init__(self):
        for name in ("a", "b"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, float, np.floating, np.integer)):
                raise ParameterError(f"{name} must be a real number")
            v = float(v)
            if not (-0.5 <= v <= 0.5):
                raise ParameterError(f"{name}={v} outside [-1/2, 1/2]")
            object.__setattr__(self, name, v)

    def p(self, nu):
        """Shifted degree nu + (a+b+1)/2."""
        return nu + 0.5 * (self.a + self.b + 1.0)

    def swapped(self) -> "JacobiParams":
        return JacobiParams(self.b, self.a)


@dataclass(frozen=True)
class PQPair:
    """Values of P~ and Q~ (and optionally their t-derivatives)."""

    p: np.ndarray | float
    q: np.ndarray | float | None = None
    dp: np.ndarray | float | None = None
    dq: np.ndarray | float | None = None
    err: np.ndarray | float | None = None  # estimated truncation error, if known


# --------------------------------------------------------------------------
# gamma-function helpers

_STIRLING = [special.bernoulli(2 * k)[-1] / (2 * k * (2 * k - 1)) for k in range(1, 9)]


def _stirling_tail(z):
    z = np.asarray(z, dtype=float)
    zi2 = 1.0 / (z * z)
    acc = np.zeros_like(z)
    for c in reversed(_STIRLING):
        acc = acc * zi2 + c
    return acc / z


def _stirling_shift(x, s):
    """log Gamma(x+s) - [(x+s-1/2) log x - x + log(2 pi)/2], for large x."""
    u = s / x
    return x * (np.log1p(u) - u) + (s - 0.5) * np.log1p(u) + _stirling_tail(x + s)


def log_gamma_ratio(x, s, t):
    """log(Gamma(x+s) / Gamma(x+t)) without cancellation for large x."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    big = x >= 30.0
    xs = x[~big]
    out[~big] = special.gammaln(xs + s) - special.gammaln(xs + t)
    xb = x[big]
    out[big] = (s - t) * np.log(xb) + _stirling_shift(xb, s) - _stirling_shift(xb, t)
    return out if out.ndim else float(out)


def _log_norm_constant(params: JacobiParams, nu):
    a, b = params.a, params.b
    nu = np.asarray(nu, dtype=float)
    # at nu = 0, (a+b+1) Gamma(a+b+1) = Gamma(a+b+2) also covers a + b = -1
    zero = nu == 0
    nz = np.where(zero, 1.0, nu)
    general = 0.5 * (np.log(2 * nz + a + b + 1)
                     + log_gamma_ratio(nz + 1, 0.0, a)
                     + log_gamma_ratio(nz + 1, a + b, b))
    at0 = 0.5 * (special.gammaln(a + b + 2) - special.gammaln(a + 1) - special.gammaln(b + 1))
    return np.where(zero, at0, general)


def norm_constant(params: JacobiParams, nu):
    """C_nu making P~_nu unit-norm on (0, pi) for integer nu."""
    if np.any(np.asarray(nu) < 0):
        raise ParameterError("degree must be nonnegative")
    return np.exp(_log_norm_constant(params, nu))


def half_angle(t, dtype=float):
    """sin(t/2), cos(t/2), each to full relative accuracy on [0, pi].

    cos(t/2) near t = pi is taken as sin((pi - t)/2) so that it does not
    inherit the absolute rounding error of t/2 near pi/2.
    """
    t = np.asarray(t, dtype=dtype)
    right = t > 0.5 * np.pi
    r = 0.5 * ((np.pi - t) + PI_LO)
    h = 0.5 * t
    s = np.where(right, np.cos(r), np.sin(h))
    c = np.where(right, np.sin(r), np.cos(h))
    return s, c


def trig_weight(params: JacobiParams, t):
    """sin(t/2)^(a+1/2) cos(t/2)^(b+1/2)."""
    s, c = half_angle(t)
    return s ** (params.a + 0.5) * c ** (params.b + 0.5)


def _check_t(t):
    t = np.asarray(t, dtype=float)
    if np.any(~(t > 0)) or np.any(~(t < np.pi)):
        raise DomainError("t must lie in (0, pi)")
    return t


def _reflect(t):
    """pi - t for float t, including the low-order part of pi."""
    return (np.pi - t) + PI_LO


def _is_integer(nu) -> bool:
    return float(nu) == math.floor(nu)


def _trig_cs(nu):
    """cos(pi nu), sin(pi nu) with the argument reduced exactly mod 2."""
    r = math.fmod(float(nu), 2.0)
    if r == math.floor(r):
        return (1.0, 0.0) if r == 0.0 else (-1.0, 0.0)
    if r == 0.5:
        return 0.0, 1.0
    if r == 1.5:
        return 0.0, -1.0
    return math.cos(math.pi * r), math.sin(math.pi * r)


# --------------------------------------------------------------------------
# three-term recurrences

def recurrence_coeffs(params: JacobiParams, n, dtype=float):
    """Monic recurrence data (alpha_n, sqrt(beta_n)) for real degrees n.

    The orthonormal functions satisfy
    ``x p_n = sqrt(beta_{n+1}) p_{n+1} + alpha_n p_n + sqrt(beta_n) p_{n-1}``.
    """
    a, b = dtype(params.a), dtype(params.b)
    n = np.asarray(n, dtype=dtype)
    s = 2 * n + a + b
    with np.errstate(divide="ignore", invalid="ignore"):
        alpha = (b * b - a * a) / (s * (s + 2))
        beta = 4 * n * (n + a) * (n + b) * (n + a + b) / (s * s * (s + 1) * (s - 1))
    alpha = np.where(n == 0, (b - a) / (a + b + 2), alpha)
    beta = np.where(n == 1, 4 * (1 + a) * (1 + b) / ((2 + a + b) ** 2 * (3 + a + b)), beta)
    beta = np.where(n == 0, 0.0, beta)
    return alpha, np.sqrt(beta)


def recurrence_eval(params: JacobiParams, n: int, x):
    """Unnormalized P_0(x), ..., P_n(x); result has shape (n+1,) + shape(x)."""
    if int(n) != n or n < 0:
        raise ParameterError("n must be a nonnegative integer")
    a, b = params.a, params.b
    x = np.asarray(x, dtype=float)
    out = np.empty((int(n) + 1,) + x.shape)
    out[0] = 1.0
    if n >= 1:
        out[1] = (a + 1) + (a + b + 2) * (x - 1) / 2
    for k in range(1, int(n)):
        s = 2 * k + a + b
        c1 = 2 * (k + 1) * (k + a + b + 1) * s
        c2 = (s + 1) * (a * a - b * b)
        c3 = s * (s + 1) * (s + 2)
        c4 = 2 * (k + a) * (k + b) * (s + 2)
        out[k + 1] = ((c2 + c3 * x) * out[k] - c4 * out[k - 1]) / c1
    return out


def _shifted_x(t, dtype=float):
    """Return (1 - x, 1 + x) for x = cos t, each with full relative accuracy."""
    s, c = half_angle(t, dtype)
    return 2 * s * s, 2 * c * c


def _x_minus(alpha, omx, opx, left):
    # x - alpha evaluated from whichever endpoint is closer
    return np.where(left, (1.0 - alpha) - omx, opx - (1.0 + alpha))


def ptilde_table(params: JacobiParams, n: int, t, dtype=float):
    """P~_0(t), ..., P~_n(t) by the orthonormal recurrence; shape (n+1, len(t)).

    ``dtype=np.longdouble`` runs the recurrence in extended precision where
    the platform provides it.
    """
    t = _check_t(np.atleast_1d(t))
    n = int(n)
    omx, opx = _shifted_x(t, dtype)
    left = t <= 0.5 * np.pi
    al, sb = recurrence_coeffs(params, np.arange(n + 2), dtype)
    out = np.empty((n + 1, t.size), dtype=dtype)
    out[0] = np.exp(_log_norm_constant(params, 0.0)) * trig_weight(params, t)
    if n >= 1:
        out[1] = _x_minus(al[0], omx, opx, left) * out[0] / sb[1]
    for k in range(1, n):
        out[k + 1] = (_x_minus(al[k], omx, opx, left) * out[k] - sb[k] * out[k - 1]) / sb[k + 1]
    return out


def ptilde_and_derivative(params: JacobiParams, n: int, t, dtype=float):
    """P~_n(t) and dP~_n/dt for integer n via recurrence (vectorized in t)."""
    t = _check_t(np.atleast_1d(t))
    n = int(n)
    a, b = params.a, params.b
    omx, opx = _shifted_x(t, dtype)
    left = t <= 0.5 * np.pi
    al, sb = recurrence_coeffs(params, np.arange(n + 2), dtype)
    p0 = np.full(t.shape, np.exp(_log_norm_constant(params, 0.0)), dtype=dtype)
    d0 = np.zeros(t.shape, dtype=dtype)
    pm, dm = np.zeros_like(d0), np.zeros_like(d0)
    for k in range(n):
        xm = _x_minus(al[k], omx, opx, left)
        p1 = (xm * p0 - sb[k] * pm) / sb[k + 1]
        d1 = (xm * d0 + p0 - sb[k] * dm) / sb[k + 1]
        pm, dm, p0, d0 = p0, d0, p1, d1
    s, c = half_angle(t, dtype)
    sin_t = 2 * s * c
    w = trig_weight(params, t)
    dlogw = 0.5 * ((a + 0.5) * c / s - (b + 0.5) * s / c)
    val = p0 * w
    der = (-sin_t * d0 + p0 * dlogw) * w
    return val.astype(float), der.astype(float)


def pq_recurrence(params: JacobiParams, nu, t, want_q: bool = False) -> PQPair:
    """P~_nu(t) (and Q~_nu(t)) by upward recurrence in the degree.

    Works for real nu >= 0: the recurrence is started at two degrees sharing
    the fractional part of nu, obtained from the hypergeometric series, and
    run upward.  Points with t > pi/2 are reflected to pi - t.
    """
    nu = float(nu)
    if nu < 0:
        raise ParameterError("degree must be nonnegative")
    t = _check_t(t)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    P = np.empty(t.shape)
    Q = np.empty(t.shape) if want_q else None
    left = t <= 0.5 * np.pi
    if left.any():
        p, q = _pq_recurrence_left(params, nu, t[left], want_q)
        P[left] = p
        if want_q:
            Q[left] = q
    if (~left).any():
        s = _reflect(t[~left])
        sw = params.swapped()
        cn, sn = _trig_cs(nu)
        need_q = want_q or sn != 0.0
        p, q = _pq_recurrence_left(sw, nu, s, need_q)
        P[~left] = cn * p + (sn * q if sn != 0.0 else 0.0)
        if want_q:
            Q[~left] = sn * p - cn * q
    if scalar:
        return PQPair(P[0], Q[0] if want_q else None)
    return PQPair(P, Q)


def _pq_recurrence_left(params, nu, t, want_q):
    if _is_integer(nu) and not want_q:
        return ptilde_table(params, int(nu), t)[-1], None
    frac = nu - math.floor(nu)
    if nu < frac + 2:
        sp = series_pq(params, nu, t, want_q=want_q)
        return sp.p, sp.q
    d0, d1 = frac + 1.0, frac + 2.0
    s0 = series_pq(params, d0, t, want_q=want_q)
    s1 = series_pq(params, d1, t, want_q=want_q)
    omx, opx = _shifted_x(t)
    steps = int(round(nu - d1))
    degs = d1 + np.arange(steps + 1)
    al, sb = recurrence_coeffs(params, np.concatenate([[d0], degs, [degs[-1] + 1]]))
    al, sb = al[1:], sb  # al[k] belongs to degree d1 + k; sb[k] to d0 + k
    ones = np.ones(t.shape, dtype=bool)

    def run(f0, f1):
        for k in range(steps):
            xm = _x_minus(al[k], omx, opx, ones)
            f0, f1 = f1, (xm * f1 - sb[k + 1] * f0) / sb[k + 2]
        return f1

    P = run(s0.p, s1.p)
    Q = run(s0.q, s1.q) if want_q else None
    return P, Q


# --------------------------------------------------------------------------
# hypergeometric series

_SERIES_MAX_TERMS = 5000
_SERIES_EXACT_ABOVE = 1e-14  # float error estimate that triggers exact summation


def _hyp_terms(A, B, Cc, z, dA=0.0, dB=0.0, dC=0.0):
    """Sum 2F1(A, B; C; z) and, as a dual number, its derivative along
    (dA, dB, dC).  Returns (value, derivative, sum |term|).
    """
    val = np.ones_like(z)
    der = np.zeros_like(z)
    tv = np.ones_like(z)
    td = np.zeros_like(z)
    absum = np.ones_like(z)
    peak = np.ones_like(z)
    for j in range(_SERIES_MAX_TERMS):
        num = (A + j) * (B + j)
        den = (Cc + j) * (j + 1)
        r = num / den
        dr = ((dA * (B + j) + dB * (A + j)) * den - num * dC * (j + 1)) / (den * den)
        tv, td = tv * r * z, (td * r + tv * dr) * z
        val = val + tv
        der = der + td
        mag = np.abs(tv) + np.abs(td)
        absum = absum + mag
        peak = np.maximum(peak, mag)
        if np.all(mag == 0.0) or (j > abs(A) + abs(B) + 2 and np.all(mag <= 1e-18 * peak)):
            return val, der, absum
    raise AccuracyError(f"hypergeometric series did not converge in {_SERIES_MAX_TERMS} terms")


def _hyp_exact(A, B, Cc, z, dA=0, dB=0, dC=0):
    """Scalar twin of ``_hyp_terms`` in exact rational arithmetic.

    The inputs are converted exactly from binary floating point, so the only
    rounding is the final conversion of the sums.
    """
    A, B, Cc, z = (Fraction(float(v)) for v in (A, B, Cc, z))
    dA, dB, dC = (Fraction(float(v)) for v in (dA, dB, dC))
    val, der = Fraction(1), Fraction(0)
    tv, td = Fraction(1), Fraction(0)
    peak = 1.0
    for j in range(_SERIES_MAX_TERMS):
        num = (A + j) * (B + j)
        den = (Cc + j) * (j + 1)
        r = num / den
        dr = ((dA * (B + j) + dB * (A + j)) * den - num * dC * (j + 1)) / (den * den)
        tv, td = tv * r * z, (td * r + tv * dr) * z
        val += tv
        der += td
        mag = abs(float(tv)) + abs(float(td))
        peak = max(peak, mag)
        if mag == 0.0 or (j > abs(A) + abs(B) + 2 and mag <= 1e-20 * peak):
            return float(val), float(der)
        # keep the rationals small: rounding far below double precision
        if j % 16 == 15:
            tv, td, val, der = (_trim(x) for x in (tv, td, val, der))
    raise AccuracyError(f"hypergeometric series did not converge in {_SERIES_MAX_TERMS} terms")


def _trim(x: Fraction, bits: int = 600) -> Fraction:
    """Round a rational to a dyadic with about ``bits`` significant bits."""
    if x == 0:
        return x
    e = x.numerator.bit_length() - x.denominator.bit_length()
    shift = bits - e
    if shift <= 0:
        return Fraction(round(x / (1 << -shift)) << -shift)
    return Fraction(round(x * (1 << shift)), 1 << shift)


def _hyp(A, B, Cc, z, dA=0.0, dB=0.0, dC=0.0):
    """2F1 and its parameter derivative; exact summation where floats cancel."""
    val, der, absum = _hyp_terms(A, B, Cc, z, dA, dB, dC)
    bad = EPS * absum > _SERIES_EXACT_ABOVE * np.maximum(1.0, np.abs(val))
    for i in np.nonzero(bad)[0]:
        val[i], der[i] = _hyp_exact(A, B, Cc, z[i], dA, dB, dC)
    return val, der


def series_pq(params: JacobiParams, nu, t, want_q: bool = True) -> PQPair:
    """P~ and Q~ from the Gauss hypergeometric representations.

    Series terms are summed in floating point; where cancellation would cost
    accuracy the sum is redone in exact rational arithmetic.  Intended for
    moderate nu and t <= pi/2.  For |a| < 1e-8 the second-kind function uses
    its a -> 0 limit.
    """
    a, b = params.a, params.b
    nu = float(nu)
    if nu < 0:
        raise ParameterError("degree must be nonnegative")
    t = _check_t(t)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    s, c = half_angle(t)
    z = s * s
    scale = math.exp(float(_log_norm_constant(params, nu))) * trig_weight(params, t)

    FP, _ = _hyp(-nu, nu + a + b + 1, a + 1, z)
    prefP = math.exp(float(log_gamma_ratio(nu + 1, a, 0.0)) - special.gammaln(a + 1))
    P = scale * prefP * FP
    Q = None
    if want_q:
        if abs(a) >= 1e-8:
            FQ, _ = _hyp(nu + 1, -nu - a - b, 1 - a, z)
            g = special.gamma(a) / np.pi * math.exp(float(log_gamma_ratio(nu + 1, b, a + b)))
            h = g * s ** (-2 * a) * c ** (-2 * b)
            Q = scale * (prefP * FP / np.tan(a * np.pi) - h * FQ)
        else:
            Q = scale * _q_limit_a0(b, nu, z, c)
    if scalar:
        return PQPair(P[0], None if Q is None else Q[0])
    return PQPair(P, Q)


def _q_limit_a0(b, nu, z, c):
    """Q_nu^{(0,b)}(x) as the a -> 0 limit of the second-kind formula."""
    FP, dFP = _hyp(-nu, nu + b + 1, 1.0, z, dB=1.0, dC=1.0)
    FQ, dFQ = _hyp(nu + 1, -nu - b, 1.0, z, dB=-1.0, dC=-1.0)
    dP = (special.digamma(nu + 1) - special.digamma(1.0)) * FP + dFP
    lead = c ** (-2 * b)
    dH = lead * ((special.digamma(1.0) - special.digamma(nu + b + 1) - np.log(z)) * FQ + dFQ)
    return (dP - dH) / np.pi


# --------------------------------------------------------------------------
# Baratella-Gatteschi expansion

_BG_POWERS = 160
_BG_ORDER = 4  # A_0..A_4 and B_0..B_3


def _even_series(kind: str, npow: int) -> np.ndarray:
    """Taylor coefficients (in t) of 1/(4 sin^2(t/2)) - 1/t^2 or 1/(4 cos^2(t/2))."""
    out = np.zeros(npow + 1)
    for n in range(1, npow // 2 + 2):
        k = 2 * n - 2
        if k > npow:
            break
        z = special.zeta(2 * n) * 2.0 / np.pi ** (2 * n) * (2 * n - 1)
        if kind == "cos":
            z *= 4.0 ** n - 1.0
        out[k] = 0.25 * z * 0.5 ** k
    return out


def _sder(f):
    return f[1:] * np.arange(1, f.size)


def _sint(f):
    return np.concatenate([[0.0], f / np.arange(1, f.size + 1)])


def _smul(f, g, npow):
    return np.convolve(f, g)[:npow + 1]


def _spad(f, npow):
    out = np.zeros(npow + 1)
    m = min(f.size, npow + 1)
    out[:m] = f[:m]
    return out


@lru_cache(maxsize=32)
def _bg_coefficients(a: float, b: float):
    """Power-series coefficients of A_j (j <= order) and B_j (j < order)."""
    npow = _BG_POWERS
    cc, dd = 0.25 - a * a, 0.25 - b * b
    phi = cc * _even_series("sin", npow) + dd * _even_series("cos", npow)
    beta = [_spad(0.5 * _sint(phi), npow)]
    alpha = [_spad(np.array([1.0]), npow)]
    for m in range(1, _BG_ORDER + 1):
        bp = beta[m - 1]
        rhs = _spad(_sder(_sder(bp)), npow) + _smul(phi, bp, npow)
        am = _spad(-0.5 * _sint(rhs), npow)
        am[0] = -(0.5 + a) * bp[1]  # forces A_m(0) = 0
        alpha.append(am)
        bt = _spad(bp[1:], npow)  # beta/t
        corr = _spad(_sder(bt)[1:], npow)  # (beta/t)'/t
        rhs2 = _spad(_sder(_sder(am)), npow) + _smul(phi, am, npow) - 2 * cc * corr
        beta.append(_spad(0.5 * _sint(rhs2), npow))
    A = [alpha[0]]
    for m in range(1, _BG_ORDER + 1):
        A.append(alpha[m] + (0.5 + a) * _spad(beta[m - 1][1:], npow))
    B = [-_spad(beta[m][1:], npow) for m in range(_BG_ORDER)]
    A = np.array(A)
    B = np.array(B)
    A.setflags(write=False)
    B.setflags(write=False)
    return A, B


def _polyval_der(coef, t):
    """Value and derivative of power series with coefficients ``coef`` at t."""
    v = np.zeros_like(t)
    d = np.zeros_like(t)
    for c in coef[::-1]:
        d = d * t + v
        v = v * t + c
    return v, d


def _bg_left(params, nu, t, want_q):
    a = params.a
    p = params.p(nu)
    A, B = _bg_coefficients(params.a, params.b)
    logpref = (float(_log_norm_constant(params, nu)) - a * math.log(p) - 0.5 * math.log(2.0)
               + float(log_gamma_ratio(nu + 1, a, 0.0)))
    pref = math.exp(logpref)
    SA = np.zeros_like(t)
    SAd = np.zeros_like(t)
    SB = np.zeros_like(t)
    SBd = np.zeros_like(t)
    for j in range(A.shape[0]):
        v, d = _polyval_der(A[j], t)
        SA += v / p ** (2 * j)
        SAd += d / p ** (2 * j)
    for j in range(B.shape[0]):
        v, d = _polyval_der(B[j], t)
        SB += v / p ** (2 * j + 1)
        SBd += d / p ** (2 * j + 1)
    z = p * t
    rt = np.sqrt(t)

    def combine(f0, f1):
        w = rt * f0
        v = t * rt * f1
        dw = (0.5 + a) * f0 / rt - p * rt * f1
        dv = (0.5 - a) * rt * f1 + p * t * rt * f0
        val = SA * w + SB * v
        der = SAd * w + SA * dw + SBd * v + SB * dv
        return pref * val, pref * der

    # scipy's yv returns 0 for subnormal orders; Y_a = Y_0 + O(a) there
    order = a if abs(a) >= 1e-200 else 0.0
    P, dP = combine(special.jv(order, z), special.jv(order + 1, z))
    if want_q:
        Q, dQ = combine(special.yv(order, z), special.yv(order + 1, z))
        return P, Q, dP, dQ
    return P, None, dP, None


def bg_asym(params: JacobiParams, nu, t, want_q: bool = True) -> PQPair:
    """Baratella-Gatteschi expansion of P~ and Q~ with t-derivatives.

    The coefficient functions are carried as Taylor series about t = 0, which
    converge for t < pi; points with t > pi/2 are mapped to pi - t with the
    reflection formula so the series is only used on (0, pi/2].
    """
    nu = float(nu)
    if nu < PHASE_CUTOFF:
        raise DomainError(f"Bessel expansion needs nu >= {PHASE_CUTOFF}")
    return _reflect_apply(_bg_left, params, nu, t, want_q)


def _reflect_apply(fn, params, nu, t, want_q):
    """Evaluate fn (valid on (0, pi/2]) anywhere in (0, pi) via reflection."""
    t = _check_t(t)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    P, dP = np.empty(t.shape), np.empty(t.shape)
    Q = np.empty(t.shape) if want_q else None
    dQ = np.empty(t.shape) if want_q else None
    left = t <= 0.5 * np.pi
    if left.any():
        p, q, dp, dq = fn(params, nu, t[left], want_q)
        P[left], dP[left] = p, dp
        if want_q:
            Q[left], dQ[left] = q, dq
    if (~left).any():
        cn, sn = _trig_cs(nu)
        need_q = want_q or sn != 0.0
        p, q, dp, dq = fn(params.swapped(), nu, _reflect(t[~left]), need_q)
        if sn == 0.0:
            P[~left], dP[~left] = cn * p, -cn * dp
        else:
            P[~left], dP[~left] = cn * p + sn * q, -(cn * dp + sn * dq)
        if want_q:
            Q[~left] = sn * p - cn * q
            dQ[~left] = -(sn * dp - cn * dq)
    if scalar:
        return PQPair(P[0], None if Q is None else Q[0], dP[0], None if dQ is None else dQ[0])
    return PQPair(P, Q, dP, dQ)


# --------------------------------------------------------------------------
# Hahn trigonometric expansion

_HAHN_MAX_TERMS = 80


def _hahn_coeffs(x, count):
    """(1/2+x)_l (1/2-x)_l / l! for l < count."""
    out = np.empty(count)
    out[0] = 1.0
    for l in range(1, count):
        out[l] = out[l - 1] * (0.5 + x + l - 1) * (0.5 - x + l - 1) / l
    return out


def _log_hahn_scale(a, b, nu):
    """log of C_nu Gamma(nu+a+1) Gamma(nu+b+1) / (sqrt(pi) Gamma(nu+(a+b)/2+1) Gamma(nu+(a+b+3)/2)).

    This is O(1); for large nu the log(nu) terms cancel exactly and are
    dropped before rounding.
    """
    x = nu + 1.0
    if x < 30.0:
        return (float(_log_norm_constant(JacobiParams(a, b), nu)) - 0.5 * math.log(math.pi)
                + float(log_gamma_ratio(x, a, 0.5 * (a + b)))
                + float(log_gamma_ratio(x, b, 0.5 * (a + b + 1))))
    g = lambda s: float(_stirling_shift(x, s))
    return (0.5 * math.log(2.0 + (a + b - 1.0) / x) - 0.5 * math.log(math.pi)
            + 0.5 * (g(0.0) - g(a) + g(a + b) - g(b))
            + g(a) - g(0.5 * (a + b)) + g(b) - g(0.5 * (a + b + 1)))


def _hahn_series(params: JacobiParams, nu, t, terms=None, second=False):
    """Sum of the Hahn series S = 1 + S1 and its t-derivatives.

    Returns (S1, dS, d2S, bound) where S1 excludes the leading 1 so that
    |S|^2 - 1 can be formed without cancellation; d2S is None unless
    ``second``.  ``bound`` is twice the first omitted term.
    """
    a, b = params.a, params.b
    t = np.atleast_1d(np.asarray(t, dtype=float))
    p = params.p(nu)
    nmax = _HAHN_MAX_TERMS if terms is None else int(terms)
    ea = _hahn_coeffs(a, nmax + 1)
    fb = _hahn_coeffs(b, nmax + 1)
    s, c = half_angle(t)
    inv_s, inv_c = 0.5 / s, 0.5 / c
    with np.errstate(over="ignore"):
        ps = inv_s[None, :] ** np.arange(nmax + 1)[:, None]
        pc = inv_c[None, :] ** np.arange(nmax + 1)[:, None]
    if terms is not None and not (np.all(np.isfinite(ps)) and np.all(np.isfinite(pc))):
        big = float(np.maximum(inv_s, inv_c).max())
        safe = int(min(np.floor(np.log(np.finfo(float).max) / np.log(big)), nmax))
        raise AccuracyError(f"Hahn expansion with {terms} terms overflows; at most {safe} are safe")
    S1 = np.zeros(t.shape, dtype=complex)
    dS = np.zeros(t.shape, dtype=complex)
    d2S = np.zeros(t.shape, dtype=complex) if second else None
    active = np.ones(t.shape, dtype=bool)
    prev = np.full(t.shape, np.inf)
    err = np.zeros_like(t)
    inv_poch = 1.0  # 1/(2p+1)_m
    dlog_s = -0.5 * c / s
    dlog_c = 0.5 * s / c
    ddlog_s = 0.25 / (s * s)
    ddlog_c = 0.25 / (c * c)
    for m in range(nmax + 1):
        if m > 0:
            inv_poch /= (2 * p + m)
        l = np.arange(m + 1)
        mag = (ea[l][:, None] * fb[m - l][:, None] * ps[l] * pc[m - l]) * inv_poch
        bound = np.abs(mag).sum(axis=0)
        if terms is None:
            # stop at full precision or where the asymptotic series turns
            stop = active & ((bound <= 1e-17) | (bound > prev))
            err[stop] = 2 * bound[stop]
            active &= ~stop
            if not active.any():
                break
            prev = np.where(active, bound, prev)
        elif m == nmax:
            err = 2 * bound
            break
        if m == 0:
            continue  # the leading term is exactly 1
        rot = np.exp(1j * ((0.5 * m) * t[None, :] - (0.5 * np.pi) * l[:, None]))
        dlog = l[:, None] * dlog_s[None, :] + (m - l)[:, None] * dlog_c[None, :] + 0.5j * m
        msk = active[None, :]
        term = np.where(msk, mag * rot, 0.0)
        S1 += term.sum(axis=0)
        dS += (term * dlog).sum(axis=0)
        if second:
            ddlog = l[:, None] * ddlog_s[None, :] + (m - l)[:, None] * ddlog_c[None, :]
            d2S += (term * (dlog * dlog + ddlog)).sum(axis=0)
    else:
        if terms is None:
            err[active] = 2 * prev[active]
    return S1, dS, d2S, err


def hahn_sum(params: JacobiParams, nu, t, terms=None):
    """Hahn expansion in complex form.

    Returns (K, theta0, S, dS, err) with
    ``P~ + i Q~ = K exp(i theta0) S(t)``, ``theta0 = p t - (a+1/2) pi/2`` and
    ``dS = S'(t)``.  Since S = 1 + O(1/p), rotation-invariant quantities such
    as P~^2 + Q~^2 = K^2 |S|^2 carry no error from the large angle theta0.
    """
    a = params.a
    t = np.atleast_1d(np.asarray(t, dtype=float))
    K = math.exp(_log_hahn_scale(params.a, params.b, nu))
    S1, dS, _, err = _hahn_series(params, nu, t, terms)
    theta0 = params.p(nu) * t - 0.5 * (a + 0.5) * np.pi
    return K, theta0, 1.0 + S1, dS, K * err


def _log1pmx(u):
    """log(1 + u) - u, accurate for small |u|."""
    if abs(u) > 0.05:
        return math.log1p(u) - u
    acc = 0.0
    for k in range(24, 1, -1):
        acc = acc * (-u) + 1.0 / k
    return -u * u * acc


def _log_amplitude_scale(a, b, nu):
    """log((pi/2) K^2) for the Hahn scale K, to full relative accuracy.

    The result is O(1/nu^2) while the separate gamma-function terms are
    O(1/nu); each is summed in a form without an O(1) part so that the
    absolute error stays near eps / nu.
    """
    x = nu + 1.0

    def g(s):
        u = s / x
        return x * _log1pmx(u) + (s - 0.5) * math.log1p(u) + float(_stirling_tail(x + s))

    G = (0.5 * (g(0.0) - g(a) + g(a + b) - g(b))
         + g(a) - g(0.5 * (a + b)) + g(b) - g(0.5 * (a + b + 1)))
    return math.log1p((a + b - 1.0) / (2 * x)) + 2 * G


def amplitude_deviation(params: JacobiParams, nu, t):
    """eta = (pi/2)(P~^2 + Q~^2) - 1 with eta' and eta'' from the Hahn series.

    For large nu, eta is O(nu^-2) in the interior and is returned with
    absolute accuracy comparable to eps * |eta| rather than eps.  Also
    returns arg S, the slowly varying part of the phase of P~ + i Q~.
    """
    nu = float(nu)
    if nu < PHASE_CUTOFF:
        raise DomainError(f"trigonometric expansion needs nu >= {PHASE_CUTOFF}")
    t = _check_t(np.atleast_1d(t))
    S1, dS, d2S, err = _hahn_series(params, nu, t, second=True)
    L = _log_amplitude_scale(params.a, params.b, nu)
    mod2m1 = 2 * S1.real + np.abs(S1) ** 2  # |S|^2 - 1
    scale = math.exp(L)
    S = 1.0 + S1
    eta = np.expm1(L + np.log1p(mod2m1))
    deta = scale * 2 * (S.conjugate() * dS).real
    d2eta = scale * 2 * (np.abs(dS) ** 2 + (S.conjugate() * d2S).real)
    return eta, deta, d2eta, np.angle(S), err


def _hahn_left(params, nu, t, want_q, terms=None):
    p = params.p(nu)
    K, theta0, S, dS, err = hahn_sum(params, nu, t, terms)
    e = K * np.exp(1j * theta0)
    F = e * S
    dF = e * (1j * p * S + dS)
    if want_q:
        return F.real, F.imag, dF.real, dF.imag, err
    return F.real, None, dF.real, None, err


def hahn_asym(params: JacobiParams, nu, t, terms: int | None = None,
              want_q: bool = True) -> PQPair:
    """Hahn trigonometric expansion of P~ and Q~ (with t-derivatives).

    With ``terms=None`` each point is truncated adaptively at full precision
    or at its smallest term.  ``err`` holds twice the first omitted term.
    """
    nu = float(nu)
    if nu < PHASE_CUTOFF:
        raise DomainError(f"trigonometric expansion needs nu >= {PHASE_CUTOFF}")
    if terms is not None and (int(terms) != terms or terms < 1):
        raise ParameterError("terms must be a positive integer")
    t = _check_t(t)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    P, Q, dP, dQ, E = _hahn_left(params, nu, t, want_q, terms)
    if scalar:
        return PQPair(P[0], None if Q is None else Q[0], dP[0],
                      None if dQ is None else dQ[0], E[0])
    return PQPair(P, Q, dP, dQ, E)


# --------------------------------------------------------------------------
# dispatcher

def _ref_left(params, nu, t, want_q):
    p = params.p(nu)
    P, dP = np.empty(t.shape), np.empty(t.shape)
    Q = np.empty(t.shape) if want_q else None
    dQ = np.empty(t.shape) if want_q else None
    hahn = p * t >= HAHN_MIN_PT
    for mask, fn in ((hahn, lambda tt: _hahn_left(params, nu, tt, want_q)[:4]),
                     (~hahn, lambda tt: _bg_left(params, nu, tt, want_q))):
        if mask.any():
            r = fn(t[mask])
            P[mask], dP[mask] = r[0], r[2]
            if want_q:
                Q[mask], dQ[mask] = r[1], r[3]
    return P, Q, dP, dQ


def pq_ref(params: JacobiParams, nu, t, want_q: bool = True) -> PQPair:
    """Best available reference values of P~_nu(t), Q~_nu(t).

    nu < 27: recurrence in the degree (seeded by the hypergeometric series).
    nu >= 27: Hahn expansion where p*min(t, pi-t) >= 20, Bessel expansion
    elsewhere.  Derivatives are returned for nu >= 27 only.
    """
    nu = float(nu)
    if nu < 0:
        raise ParameterError("degree must be nonnegative")
    if nu < PHASE_CUTOFF:
        r = pq_recurrence(params, nu, t, want_q)
        return r
    return _reflect_apply(_ref_left, params, nu, t, want_q)


def ptilde_ref(params: JacobiParams, nu, t):
    """Reference value of P~_nu(t) for nu >= 0, t in (0, pi)."""
    return pq_ref(params, nu, t, want_q=False).p
