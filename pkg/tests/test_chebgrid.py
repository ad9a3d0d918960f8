import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fastjacobi import DomainError, ParameterError
from fastjacobi.chebgrid import (BivariateChebTable, PiecewiseChebGrid, bary_eval,
                                 bivar_eval, cheb_nodes, pw_eval, spectral_differentiate,
                                 spectral_integrate)
from fastjacobi.phasefn import build_grids


def test_cheb_nodes_small():
    assert np.array_equal(cheb_nodes(2, -1, 1), [-1.0, 1.0])
    assert np.array_equal(cheb_nodes(3, -1, 1), [-1.0, 0.0, 1.0])


def test_cheb_nodes_16_on_0_pi():
    x = cheb_nodes(16, 0, np.pi)
    assert x[0] == 0.0 and x[-1] == np.pi
    expect = np.pi / 2 * (1 - np.cos(np.pi * np.arange(16) / 15))
    assert np.abs(x - expect).max() <= 1e-15
    assert np.abs(x + x[::-1] - np.pi).max() <= 1e-15


def test_cheb_nodes_rejects_bad_input():
    with pytest.raises(ParameterError):
        cheb_nodes(1, 0, 1)
    with pytest.raises(ParameterError):
        cheb_nodes(4, 1, 0)


def test_bary_eval_examples():
    x3 = cheb_nodes(3, -1, 1)
    assert bary_eval(x3, x3, 0.5) == pytest.approx(0.5, abs=1e-16)
    x16 = cheb_nodes(16, -1, 1)
    assert abs(bary_eval(x16, x16 ** 15, 0.3) - 0.3 ** 15) <= 1e-14
    assert bary_eval(x16, np.ones(16), 0.123) == pytest.approx(1.0, abs=1e-15)


def test_bary_eval_at_node_returns_stored_value():
    x = cheb_nodes(9, 0, 2)
    f = np.exp(x)
    assert np.array_equal(bary_eval(x, f, x), f)


def _dyadic_sine_grid():
    bp = np.concatenate([[0.0], np.pi / 2 ** np.arange(7, -1, -1)])
    bp = np.unique(np.concatenate([bp[bp <= np.pi / 2], np.pi - bp[bp < np.pi / 2]]))
    return PiecewiseChebGrid(bp[:9], 16)


def test_pw_eval_sine_on_eight_intervals():
    g = PiecewiseChebGrid(np.linspace(0, np.pi, 9), 16)
    assert g.nintervals == 8
    assert abs(pw_eval(g, np.sin(g.nodes), 1.0) - np.sin(1.0)) <= 1e-13
    g2 = _dyadic_sine_grid()
    assert abs(pw_eval(g2, np.sin(g2.nodes), 1.0) - np.sin(1.0)) <= 1e-13


def test_pw_eval_constant_and_breakpoints():
    g = PiecewiseChebGrid([0.0, 0.3, 1.0, 2.5], 7)
    assert np.abs(pw_eval(g, np.ones(g.npoints), [0.0, 0.3, 0.7, 2.5]) - 1).max() <= 1e-15
    f = np.cos(g.nodes)
    vals = pw_eval(g, f, g.breakpoints)
    assert np.array_equal(vals, f[::g.k - 1])


def test_pw_eval_continuity_at_breakpoints():
    g = PiecewiseChebGrid(np.array([0.0, 0.5, 1.2, 2.0, 3.0]), 12)
    f = np.exp(np.sin(3 * g.nodes))
    for s in g.breakpoints[1:-1]:
        left = pw_eval(g, f, np.nextafter(s, -np.inf))
        right = pw_eval(g, f, np.nextafter(s, np.inf))
        assert abs(left - right) <= 1e-13


def test_pw_eval_domain_error():
    g = PiecewiseChebGrid([0.0, 1.0], 4)
    with pytest.raises(DomainError):
        pw_eval(g, np.zeros(4), 1.5)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), k=st.integers(2, 24))
def test_polynomial_reproduction(seed, k):
    r = np.random.default_rng(seed)
    bp = np.cumsum(r.uniform(0.1, 1.0, 4)) - 1.0
    g = PiecewiseChebGrid(bp, k)
    coef = r.uniform(-1, 1, k)
    p = np.polynomial.Polynomial(coef, domain=[bp[0], bp[-1]])
    t = r.uniform(bp[0], bp[-1], 50)
    exact = p(t)
    err = np.abs(pw_eval(g, p(g.nodes), t) - exact)
    assert err.max() <= 1e-13 * max(1.0, np.abs(coef).sum())


def test_spectral_integrate_examples():
    g = PiecewiseChebGrid(np.linspace(0, np.pi, 5), 16)
    assert np.abs(spectral_integrate(g, np.ones(g.npoints)) - g.nodes).max() <= 1e-14
    assert np.abs(spectral_integrate(g, np.cos(g.nodes)) - np.sin(g.nodes)).max() <= 1e-13
    g2 = PiecewiseChebGrid([0.0, 2.0], 5)
    assert np.abs(spectral_integrate(g2, 2 * g2.nodes) - g2.nodes ** 2).max() <= 1e-14


def test_integrate_then_differentiate_round_trip():
    tg, _ = build_grids(1024)
    f = np.cos(3 * tg.nodes) + tg.nodes ** 2
    back = spectral_differentiate(tg, spectral_integrate(tg, f))
    interior = np.ones(tg.npoints, bool)
    interior[::tg.k - 1] = False
    rel = np.abs(back - f)[interior] / np.abs(f).max()
    assert rel.max() <= 1e-10


def test_bivariate_examples():
    tg = PiecewiseChebGrid([0.0, 1.0, 3.0], 6)
    vg = PiecewiseChebGrid([27.0, 81.0, 243.0], 5)
    const = BivariateChebTable(tg, vg, np.full((tg.npoints, vg.npoints), 2.5))
    assert bivar_eval(const, 0.7, 100.0) == pytest.approx(2.5, abs=1e-14)
    prod = BivariateChebTable(tg, vg, np.outer(tg.nodes, vg.nodes))
    t, v = np.array([0.1, 2.9]), np.array([30.0, 200.0])
    assert np.abs(bivar_eval(prod, t, v) - t * v).max() <= 1e-12 * np.abs(t * v).max()
    with pytest.raises(DomainError):
        bivar_eval(prod, 3.5, 30.0)
    with pytest.raises(ParameterError):
        BivariateChebTable(tg, vg, np.zeros((3, 3)))


def test_bivariate_on_phase_grids():
    tg, vg = build_grids(4096)
    f = np.outer(np.cos(tg.nodes), np.exp(-vg.nodes / 100))
    tab = BivariateChebTable(tg, vg, f)
    t, v = 1.234, 150.5
    assert abs(bivar_eval(tab, t, v) - np.cos(t) * np.exp(-v / 100)) <= 1e-12
