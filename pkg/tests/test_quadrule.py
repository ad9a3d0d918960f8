import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fastjacobi import (JacobiParams, ParameterError, gauss_jacobi, gauss_jacobi_reference,
                        modified_gauss_jacobi)
from fastjacobi import jacobi_ref as jr
from fastjacobi.chebgrid import pw_eval
from fastjacobi.quadrule import invert_phase, phase_for_degree

from conftest import best_times


def mass(a, b):
    return 2 ** (a + b + 1) * math.gamma(a + 1) * math.gamma(b + 1) / math.gamma(a + b + 2)


@pytest.mark.parametrize("route", [gauss_jacobi, gauss_jacobi_reference])
def test_rules_vs_high_precision(oracles, route):
    for row in oracles["gauss_jacobi"]:
        rule = route(JacobiParams(row["a"], row["b"]), row["n"])
        x = np.array([float(v) for v in row["nodes"]])
        w = np.array([float(v) for v in row["weights"]])
        assert np.abs(rule.nodes - x).max() <= 2e-15
        assert (np.abs(rule.weights - w) / w).max() <= 1e-13


def test_classical_small_rules():
    r = gauss_jacobi(JacobiParams(0, 0), 1)
    assert r.nodes[0] == pytest.approx(0.0, abs=1e-15) and r.weights[0] == pytest.approx(2.0)
    r = gauss_jacobi(JacobiParams(0, 0), 2)
    assert np.allclose(r.nodes, [-1 / np.sqrt(3), 1 / np.sqrt(3)], rtol=0, atol=2e-16)
    assert np.allclose(r.weights, 1.0, rtol=1e-15)


@pytest.mark.parametrize("n", [10, 64, 500])
def test_chebyshev_rules(n):
    pr = JacobiParams(-0.5, -0.5)
    t = (2 * np.arange(1, n + 1) - 1) * np.pi / (2 * n)
    mod = modified_gauss_jacobi(pr, n)
    assert np.abs(mod.nodes - t).max() <= 1e-12
    assert np.abs(mod.weights / (np.pi / n) - 1).max() <= 1e-12
    std = gauss_jacobi(pr, n)
    assert np.abs(std.nodes - np.cos(t)[::-1]).max() <= 1e-12
    assert np.abs(std.weights / (np.pi / n) - 1).max() <= 1e-12


def test_fast_rule_vs_reference_rule():
    pr = JacobiParams(-0.49, 0.25)
    fast, ref = gauss_jacobi(pr, 500), gauss_jacobi_reference(pr, 500)
    assert np.abs(fast.nodes - ref.nodes).max() <= 1e-13
    assert (np.abs(fast.weights - ref.weights) / ref.weights).max() <= 1e-12


def test_nodes_are_zeros():
    pr = JacobiParams(-0.25, 1 / 3)
    rule = modified_gauss_jacobi(pr, 1000)
    val, _ = jr.ptilde_and_derivative(pr, 1000, rule.nodes, np.longdouble)
    assert np.abs(val).max() <= 1e-12 * np.sqrt(2 / np.pi)


def test_gram_matrix_n64():
    pr = JacobiParams(-0.25, 1 / 3)
    rule = modified_gauss_jacobi(pr, 64)
    V = jr.ptilde_table(pr, 63, rule.nodes, np.longdouble).astype(float) * np.sqrt(rule.weights)
    G = V @ V.T
    assert np.abs(G - np.diag(np.diag(G))).max() <= 1e-13
    assert np.abs(np.diag(G) - 1).max() <= 1e-13


def test_moments_vs_exact(oracles):
    m = oracles["moments"]
    pr = JacobiParams(float(m["a"]), float(m["b"]))
    exact = np.array([float(v) for v in m["values"]])
    rule = gauss_jacobi(pr, 64)
    got = np.array([np.dot(rule.weights, rule.nodes ** k) for k in range(exact.size)])
    assert (np.abs(got - exact) / np.abs(exact)).max() <= 1e-12


def test_exactness_n50_vs_oracle_rule():
    pr = JacobiParams(0.25, 0.40)
    rule, oracle = gauss_jacobi(pr, 50), gauss_jacobi_reference(pr, 200)
    for k in range(100):
        ref = np.dot(oracle.weights, oracle.nodes ** k)
        assert abs(np.dot(rule.weights, rule.nodes ** k) - ref) <= 1e-12 * abs(ref)


@settings(max_examples=6, deadline=None)
@given(a=st.floats(-0.49, 0.49), b=st.floats(-0.49, 0.49), n=st.sampled_from([28, 64, 200]))
def test_exactness_property(a, b, n):
    pr = JacobiParams(a, b)
    rule, oracle = gauss_jacobi(pr, n), gauss_jacobi_reference(pr, 2 * n)
    powers = rule.nodes[None, :] ** np.arange(2 * n)[:, None]
    opow = oracle.nodes[None, :] ** np.arange(2 * n)[:, None]
    scale = np.abs(opow) @ oracle.weights
    assert (np.abs(powers @ rule.weights - opow @ oracle.weights) / scale).max() <= 1e-12


@settings(max_examples=10, deadline=None)
@given(a=st.floats(-0.5, 0.5), b=st.floats(-0.5, 0.5), n=st.integers(1, 300))
def test_rule_structure(a, b, n):
    pr = JacobiParams(a, b)
    rule = gauss_jacobi(pr, n)
    assert np.all(np.diff(rule.nodes) > 0) and rule.nodes[0] > -1 and rule.nodes[-1] < 1
    assert np.all(rule.weights > 0)
    assert abs(rule.weights.sum() / mass(a, b) - 1) <= 1e-13
    nxt = gauss_jacobi(pr, n + 1)
    assert np.all(nxt.nodes[:-1] < rule.nodes) and np.all(rule.nodes < nxt.nodes[1:])


@pytest.mark.parametrize("n", [27, 28, 101, 1000])
def test_symmetric_parameters_give_symmetric_rules(n):
    rule = gauss_jacobi(JacobiParams(0.3, 0.3), n)
    assert np.abs(rule.nodes + rule.nodes[::-1]).max() <= 4e-15
    assert (np.abs(rule.weights - rule.weights[::-1]) / rule.weights).max() <= 5e-13


def test_swapping_parameters_reflects_rule():
    a, b = 0.2, -0.35
    r1, r2 = gauss_jacobi(JacobiParams(a, b), 300), gauss_jacobi(JacobiParams(b, a), 300)
    assert np.abs(r1.nodes + r2.nodes[::-1]).max() <= 4e-15
    assert (np.abs(r1.weights - r2.weights[::-1]) / r1.weights).max() <= 5e-13


def test_inverse_phase_chebyshev_is_linear():
    col = phase_for_degree(JacobiParams(-0.5, -0.5), 100)
    inv = invert_phase(col)
    xi = inv.grid.nodes
    C = col.psi[0] - 100 * col.tgrid.nodes[0]
    assert np.abs(inv.values - (xi - C) / 100).max() <= 1e-13


def test_inverse_phase_round_trip(rng):
    col = phase_for_degree(JacobiParams(0.1, -0.45), 777)
    inv = invert_phase(col)
    assert np.all(np.diff(inv.values) > 0)
    xi = rng.uniform(inv.grid.lo, inv.grid.hi, 200)
    back = pw_eval(col.tgrid, col.psi, inv(xi))
    assert (np.abs(back - xi) / np.abs(xi)).max() <= 1e-12
    stored = pw_eval(col.tgrid, col.psi, inv.values)
    assert np.abs(stored - inv.grid.nodes).max() <= 1e-12 * np.abs(inv.grid.nodes).max()


def test_invalid_sizes():
    pr = JacobiParams(0, 0)
    for bad in (0, -3, 2.5, True):
        with pytest.raises(ParameterError):
            gauss_jacobi(pr, bad)
    with pytest.raises(ParameterError):
        gauss_jacobi_reference(pr, 2001)
    with pytest.raises(ParameterError):
        gauss_jacobi_reference(pr, 10, kind="other")


def test_linear_cost():
    pr = JacobiParams(0.0, -0.4)
    small, large = best_times([lambda: gauss_jacobi(pr, 2 * 10 ** 4),
                               lambda: gauss_jacobi(pr, 10 ** 6)])
    assert large <= 40 * small
