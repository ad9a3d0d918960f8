import numpy as np
import pytest

from fastjacobi import DomainError, JacobiParams, ParameterError, modified_gauss_jacobi
from fastjacobi import jacobi_ref as jr
from fastjacobi.phasefn import q_coefficient

A, B = -0.25, 1 / 3
PR = JacobiParams(A, B)


def ptilde_from_recurrence(params, n, t):
    """P~_n(t) through the unnormalized three-term recurrence."""
    p = jr.recurrence_eval(params, n, np.cos(t))[n]
    return jr.norm_constant(params, float(n)) * jr.trig_weight(params, t) * p


def test_params_validation():
    with pytest.raises(ParameterError):
        JacobiParams(0.6, 0.0)
    with pytest.raises(ParameterError):
        JacobiParams(0.0, "x")
    assert JacobiParams(-0.5, 0.5).swapped() == JacobiParams(0.5, -0.5)


def test_norm_constant_closed_forms():
    legendre = JacobiParams(0, 0)
    assert jr.norm_constant(legendre, 3.0) == pytest.approx(np.sqrt(7.0), rel=1e-15)
    assert jr.norm_constant(legendre, 0.0) == pytest.approx(1.0, rel=1e-15)


def test_norm_constant_vs_oracle(oracles):
    for row in oracles["norm_constant"]:
        got = jr.norm_constant(JacobiParams(row["a"], row["b"]), row["nu"])
        assert got == pytest.approx(float(row["value"]), rel=1e-14)


def test_ptilde_ref_vs_oracle(oracles):
    worst = 0.0
    for row in oracles["ptilde"]:
        got = jr.ptilde_ref(JacobiParams(row["a"], row["b"]), row["nu"], np.array([row["t"]]))[0]
        tol = 2e-12 if row["nu"] > 1000 else 2e-13
        err = abs(got - float(row["value"]))
        worst = max(worst, err)
        assert err <= tol, row
    assert worst > 0.0


def test_recurrence_eval_low_degrees():
    x = np.linspace(-0.9, 0.9, 7)
    for a, b in [(0.25, -0.4), (-0.5, 0.5)]:
        vals = jr.recurrence_eval(JacobiParams(a, b), 1, x)
        assert np.all(vals[0] == 1.0)
        assert np.allclose(vals[1], (a + 1) + (a + b + 2) * (x - 1) / 2, rtol=0, atol=1e-15)
    assert jr.recurrence_eval(JacobiParams(0, 0), 2, 0.5)[2] == pytest.approx(-0.125, abs=1e-16)


def test_ptilde_table_matches_unnormalized_recurrence():
    t = np.array([0.2, 1.1, 2.9])
    tab = jr.ptilde_table(PR, 40, t)
    for n in (0, 1, 17, 40):
        assert np.abs(tab[n] - ptilde_from_recurrence(PR, n, t)).max() <= 1e-12


def test_series_matches_recurrence():
    pr = JacobiParams(0.25, -1 / 3)
    got = jr.series_pq(pr, 30.0, np.array([0.4])).p[0]
    assert abs(got - ptilde_from_recurrence(pr, 30, 0.4)) <= 1e-12


def test_bessel_expansion():
    got = jr.bg_asym(PR, 1000.0, np.array([1.0])).p[0]
    assert abs(got - ptilde_from_recurrence(PR, 1000, 1.0)) <= 1e-12
    bg = jr.bg_asym(PR, 1e6, np.array([2.0])).p[0]
    hahn = jr.hahn_asym(PR, 1e6, np.array([2.0])).p[0]
    assert abs(bg - hahn) <= 1e-10
    with pytest.raises(DomainError):
        jr.bg_asym(PR, 10.0, np.array([1.0]))


def test_hahn_fixed_terms():
    got = jr.hahn_asym(PR, 5000.0, np.array([0.05]), terms=30).p[0]
    assert abs(got - ptilde_from_recurrence(PR, 5000, 0.05)) <= 1e-11
    with pytest.raises(ParameterError):
        jr.hahn_asym(PR, 5000.0, np.array([0.05]), terms=0)


def test_chebyshev_case_is_a_pure_cosine():
    pr = JacobiParams(-0.5, -0.5)
    t = np.array([0.1, 0.7, 1.5, 2.5, 3.1])
    for nu in (5.0, 30.0, 100.5, 1000.0):
        r = jr.pq_ref(pr, nu, t)
        assert np.abs(r.p - np.sqrt(2 / np.pi) * np.cos(nu * t)).max() <= 1e-12
        assert np.abs(r.q - np.sqrt(2 / np.pi) * np.sin(nu * t)).max() <= 1e-12


def test_routing():
    t = np.array([0.3, 2.0])
    assert np.array_equal(jr.ptilde_ref(PR, 26.0, t), jr.pq_recurrence(PR, 26.0, t).p)
    assert np.array_equal(jr.ptilde_ref(PR, 0.0, t), jr.pq_recurrence(PR, 0.0, t).p)
    with pytest.raises(ParameterError):
        jr.ptilde_ref(PR, -1.0, t)
    with pytest.raises(DomainError):
        jr.ptilde_ref(PR, 50.0, np.array([0.0]))


def test_branch_switch_is_continuous():
    nu = 1e4
    p = PR.p(nu)
    edge = jr.HAHN_MIN_PT / p
    t = np.linspace(0.5 * edge, 2 * edge, 41)
    ref = jr.ptilde_ref(PR, nu, t)
    assert np.abs(ref - jr.bg_asym(PR, nu, t).p).max() <= 1e-11
    t = np.linspace(0.2, 0.3, 21)
    assert np.abs(jr.hahn_asym(PR, nu, t).p - jr.bg_asym(PR, nu, t).p).max() <= 1e-11


@pytest.mark.parametrize("nu", [27.0, 150.0, 2000.0, 10000.0])
def test_cross_method_consistency(nu):
    t = np.array([0.3, 0.8, 1.4])
    rec = jr.pq_recurrence(PR, nu, t, want_q=True)
    bg = jr.bg_asym(PR, nu, t)
    hahn = jr.hahn_asym(PR, nu, t)
    assert np.abs(bg.p - rec.p).max() <= 1e-11
    assert np.abs(bg.q - rec.q).max() <= 1e-11
    overlap = PR.p(nu) * t >= jr.HAHN_MIN_PT
    if overlap.any():
        assert np.abs(hahn.p - rec.p)[overlap].max() <= 1e-11
        assert np.abs(hahn.q - rec.q)[overlap].max() <= 1e-11
    if nu <= 150:
        s = jr.series_pq(PR, nu, t)
        assert np.abs(s.p - rec.p).max() <= 1e-11


def _ode_residual(nu, h, stencil):
    t = np.linspace(0.3, 2.8, 9)
    offsets = np.arange(len(stencil)) - len(stencil) // 2
    y = [jr.ptilde_ref(PR, nu, t + s * h) for s in offsets]
    d2 = sum(c * yy for c, yy in zip(stencil, y)) / h ** 2
    q, _ = q_coefficient(PR, nu, t)
    return np.abs(d2 + q * y[len(y) // 2]).max() / np.abs(q).max()


@pytest.mark.xfail(strict=True, reason="three-point differences at h=1e-5 have a "
                   "rounding floor of about 4 eps |y| / h^2 = 1e-5, above 1e-8 q")
@pytest.mark.parametrize("nu", [5.0, 20.5, 27.5])
def test_ode_residual_three_point_step_1e5(nu):
    assert _ode_residual(nu, 1e-5, (1.0, -2.0, 1.0)) <= 1e-8


@pytest.mark.parametrize("nu", [5.0, 20.5, 27.5])
def test_ode_residual_five_point(nu):
    stencil = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12
    assert _ode_residual(nu, 1e-3, stencil) <= 1e-8


def test_gram_matrix_under_modified_rule():
    for n in (40, 200):
        rule = modified_gauss_jacobi(PR, n)
        V = jr.ptilde_table(PR, n - 1, rule.nodes) * np.sqrt(rule.weights)
        assert np.abs(V @ V.T - np.eye(n)).max() <= 1e-12


def test_norm_constant_normalizes():
    rule = modified_gauss_jacobi(PR, 256)
    for nu in (3.0, 10.0, 57.0, 100.0):
        vals = jr.ptilde_ref(PR, nu, rule.nodes)
        assert abs(np.dot(rule.weights, vals ** 2) - 1.0) <= 1e-10
