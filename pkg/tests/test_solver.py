import numpy as np
import pytest
import scipy.sparse as sp

from wgiface import kernels
from wgiface.solver import ConvergenceError, DefinitenessError, solve_spd

METHODS = ["pcg", "cholesky", "direct"]


def laplacian(n):
    A = sp.diags([2 * np.ones(n), -np.ones(n - 1), -np.ones(n - 1)], [0, 1, -1])
    return sp.csr_matrix(A)


@pytest.mark.parametrize("method", METHODS)
def test_identity(method):
    b = np.arange(5.0)
    rep = solve_spd((sp.identity(5, format="csr"), b), method=method)
    np.testing.assert_allclose(rep.x, b, atol=1e-12)


@pytest.mark.parametrize("method", METHODS)
def test_two_by_two(method):
    A = sp.csr_matrix(np.array([[4.0, 1.0], [1.0, 3.0]]))
    rep = solve_spd((A, np.array([1.0, 2.0])), method=method)
    np.testing.assert_allclose(rep.x, [1 / 11, 7 / 11], atol=1e-12)


def test_pcg_matches_cholesky():
    rng = np.random.default_rng(0)
    A = laplacian(200) + sp.diags(rng.uniform(0, 1, 200))
    b = rng.standard_normal(200)
    x1 = solve_spd((A, b), method="pcg").x
    x2 = solve_spd((A, b), method="cholesky").x
    np.testing.assert_allclose(x1, x2, atol=1e-9)


def test_pcg_error_decreases_in_energy_norm():
    rng = np.random.default_rng(1)
    A = laplacian(60)
    b = rng.standard_normal(60)
    xs = solve_spd((A, b), method="cholesky").x
    errs = []
    for it in range(1, 40, 3):
        x, _, _, _ = kernels.pcg_csr(A, b, 1e-30, it)
        e = x - xs
        errs.append(e @ (A @ e))
    assert all(b2 <= b1 * (1 + 1e-12) for b1, b2 in zip(errs, errs[1:]))


def test_permutation_invariance():
    rng = np.random.default_rng(2)
    A = laplacian(50) + sp.diags(rng.uniform(0.1, 1, 50))
    b = rng.standard_normal(50)
    p = rng.permutation(50)
    P = sp.identity(50, format="csr")[p]
    x = solve_spd((A, b), method="pcg").x
    y = solve_spd((P @ A @ P.T, P @ b), method="pcg").x
    np.testing.assert_allclose(P.T @ y, x, atol=1e-9)


def test_indefinite_detected():
    A = sp.csr_matrix(np.diag([1.0, -1.0, 2.0]))
    b = np.ones(3)
    with pytest.raises(DefinitenessError):
        solve_spd((A, b), method="pcg")
    with pytest.raises(DefinitenessError):
        solve_spd((A, b), method="cholesky")
    with pytest.raises(DefinitenessError):
        solve_spd((A, b), method="direct")


def test_iteration_cap():
    A = laplacian(400)
    with pytest.raises(ConvergenceError):
        solve_spd((A, np.ones(400)), method="pcg", max_iter=5)


def test_backends_pcg_agree():
    A = laplacian(80) + sp.identity(80)
    b = np.linspace(-1, 1, 80)
    A = A.tocsr()
    outs = [m.pcg_csr(A.indptr.astype(np.int32), A.indices.astype(np.int32), A.data, b, 1e-12, 500)
            for m in kernels.backends().values()]
    for o in outs[1:]:
        np.testing.assert_allclose(o[0], outs[0][0], atol=1e-10)
        assert o[1] == outs[0][1] and o[3] == outs[0][3]


def test_unknown_method():
    with pytest.raises(ValueError):
        solve_spd((sp.identity(2, format="csr"), np.ones(2)), method="qr")
