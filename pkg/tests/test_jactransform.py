import numpy as np
import pytest

from fastjacobi import (FormatError, JacobiParams, ParameterError, build_transform_plan,
                        dense_jacobi_matrix, forward, inverse, modified_gauss_jacobi)
from fastjacobi import jacobi_ref as jr
from fastjacobi.jactransform import audit_reconstruction, read_vector, write_vector

from conftest import expansion

PAIRS = [(-0.25, 0.0), (0.25, -1 / 3)]


def test_dense_single_point():
    J = dense_jacobi_matrix(JacobiParams(0.1, -0.3), 1)
    assert J.shape == (1, 1) and abs(abs(J[0, 0]) - 1) <= 1e-15


def test_dense_is_orthogonal():
    J = dense_jacobi_matrix(JacobiParams(-0.25, 1 / 3), 64)
    assert np.abs(J.T @ J - np.eye(64)).max() <= 1e-13
    with pytest.raises(ParameterError):
        dense_jacobi_matrix(JacobiParams(0, 0), 4097)


@pytest.mark.parametrize("a,b", PAIRS)
@pytest.mark.parametrize("fold", [True, False])
@pytest.mark.parametrize("n", [20, 29, 512, 1024])
def test_plan_matches_dense(a, b, fold, n):
    pr = JacobiParams(a, b)
    plan = build_transform_plan(expansion(a, b, 1024), n, 1e-13, fold=fold)
    J = dense_jacobi_matrix(pr, n)
    r = np.random.default_rng(n)
    alpha, y = r.standard_normal(n), r.standard_normal(n)
    assert np.abs(forward(plan, alpha) - J @ alpha).max() <= 1e-11 * np.linalg.norm(alpha)
    assert np.abs(inverse(plan, y) - J.T @ y).max() <= 1e-11 * np.linalg.norm(y)


def test_first_unit_vector_gives_lowest_degree():
    pr = JacobiParams(-0.25, 0.0)
    plan = build_transform_plan(expansion(-0.25, 0.0, 1024), 300)
    e1 = np.zeros(300)
    e1[0] = 1.0
    rule = modified_gauss_jacobi(pr, 300)
    expect = jr.ptilde_table(pr, 0, rule.nodes)[0] * np.sqrt(rule.weights)
    assert np.abs(forward(plan, e1) - expect).max() <= 1e-14


def test_orthogonality_and_adjointness():
    plan = build_transform_plan(expansion(0.25, -1 / 3, 4096), 4000)
    r = np.random.default_rng(7)
    alpha, y = r.standard_normal(4000), r.standard_normal(4000)
    f = forward(plan, alpha)
    assert abs(np.linalg.norm(f) / np.linalg.norm(alpha) - 1) <= 1e-12
    assert abs(np.dot(f, y) - np.dot(alpha, inverse(plan, y))) <= 1e-11 * 4000


@pytest.mark.parametrize("fold", [True, False])
def test_factor_audit(fold):
    e = expansion(-0.25, 0.0, 2 ** 14)
    eps = 1e-12
    plan = build_transform_plan(e, 2 ** 14, eps, fold=fold)
    resid, gmax = audit_reconstruction(plan, e, m=200, seed=1)
    assert resid <= eps * gmax


def test_chebyshev_kernel_has_rank_two():
    e = expansion(-0.5, -0.5, 2048)
    for fold in (True, False):
        plan = build_transform_plan(e, 2000, 1e-12, fold=fold)
        assert plan.rank <= 2


def test_plan_errors():
    e = expansion(-0.25, 0.0, 1024)
    with pytest.raises(ParameterError):
        build_transform_plan(e, 1026)
    with pytest.raises(ParameterError):
        build_transform_plan(e, 100, eps=1e-16)
    with pytest.raises(ParameterError):
        build_transform_plan(e, 100, eps=1e-3)
    plan = build_transform_plan(e, 100)
    with pytest.raises(ParameterError):
        forward(plan, np.ones(99))
    with pytest.raises(ParameterError):
        inverse(plan, np.ones((100, 2)))


def test_vector_files(tmp_path):
    x = np.random.default_rng(0).standard_normal(17)
    p = tmp_path / "v.bin"
    write_vector(p, x)
    data = p.read_bytes()
    assert len(data) == 8 + 17 * 8 and int.from_bytes(data[:8], "little") == 17
    assert np.array_equal(read_vector(p), x)
    for bad in (b"", b"\x01\x00", data[:-1], data + b"\x00" * 8):
        p.write_bytes(bad)
        with pytest.raises(FormatError):
            read_vector(p)
