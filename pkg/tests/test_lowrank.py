import numpy as np
import pytest

from fastjacobi import JacobiParams, ParameterError
from fastjacobi.chebgrid import cheb_nodes
from fastjacobi.lowrank import interpolative_decomposition
from fastjacobi.phasefn import eval_phase

from conftest import expansion


def test_rank_one():
    r = np.random.default_rng(0)
    A = np.outer(r.standard_normal(30), r.standard_normal(20))
    f = interpolative_decomposition(A, 1e-12)
    assert f.rank == 1
    assert np.abs(f.reconstruct(A) - A).max() <= 1e-15 * np.abs(A).max()


def test_identity():
    f = interpolative_decomposition(np.eye(5), 1e-12)
    assert f.rank == 5
    assert sorted(f.skel) == list(range(5))
    assert np.array_equal(f.reconstruct(np.eye(5)), np.eye(5))


def test_zero_matrix_and_bad_input():
    f = interpolative_decomposition(np.zeros((4, 3)), 1e-12)
    assert f.rank == 0 and f.R.shape == (0, 3)
    with pytest.raises(ParameterError):
        interpolative_decomposition(np.eye(3), 0.0)
    with pytest.raises(ParameterError):
        interpolative_decomposition(np.ones(3), 1e-12)


def test_skeleton_columns_of_r_are_identity():
    r = np.random.default_rng(1)
    A = r.standard_normal((40, 8)) @ r.standard_normal((8, 60))
    f = interpolative_decomposition(A, 1e-10)
    assert np.array_equal(f.R[:, f.skel], np.eye(f.rank))


def test_planted_rank():
    r = np.random.default_rng(2)
    eps = 1e-12
    for _ in range(100):
        m, n = r.integers(20, 80, size=2)
        k = int(r.integers(1, min(m, n) // 2))
        s = np.logspace(0, -3, k)
        U = r.standard_normal((m, k))
        if r.random() < 0.5:
            U = U + 1j * r.standard_normal((m, k))
        A = (U * s) @ r.standard_normal((k, n))
        f = interpolative_decomposition(A, eps)
        assert k <= f.rank <= k + 2
        assert np.linalg.norm(A - f.reconstruct(A), 2) <= eps * np.linalg.norm(A, 2)


def test_phase_function_samples_have_low_rank():
    e = expansion(-0.25, 0.0, 2 ** 16)
    pr = JacobiParams(-0.25, 0.0)
    t = cheb_nodes(64, e.tgrid.lo, e.tgrid.hi)
    v = cheb_nodes(64, 27.0, 2.0 ** 16)
    T, V = np.meshgrid(t, v, indexing="ij")
    psi, _, _ = eval_phase(e, T, V)
    A = np.exp(1j * (psi - V * T))
    eps = 1e-12
    f = interpolative_decomposition(A, eps)
    assert f.rank <= 64
    assert np.linalg.norm(A - f.reconstruct(A), 2) <= eps * np.linalg.norm(A, 2)
    assert pr.p(0.0) == pytest.approx(0.375)
