"""Solvers for the assembled symmetric positive definite system."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import kernels

log = logging.getLogger(__name__)

DENSE_LIMIT = 2000


class SolverError(RuntimeError):
    pass


class DefinitenessError(SolverError):
    """Non-positive curvature met: the matrix is not SPD (an assembly bug)."""


class ConvergenceError(SolverError):
    pass


@dataclass
class SolveReport:
    x: np.ndarray
    iterations: int
    residual: float
    method: str
    history: list = field(default_factory=list, repr=False)


def _unpack(system):
    if isinstance(system, tuple):
        A, b = system
    else:
        A, b = system.A, system.b
    return sp.csr_matrix(A), np.asarray(b, dtype=float)


def _relres(A, x, b):
    bn = np.linalg.norm(b)
    return float(np.linalg.norm(A @ x - b) / bn) if bn > 0 else float(np.linalg.norm(A @ x))


def solve_spd(system, tol=1e-12, max_iter=None, method="auto"):
    """Solve A x = b for a symmetric positive definite A.

    Parameters
    ----------
    system : GlobalSystem or (A, b)
    tol : float
        Relative residual target ``|Ax - b| / |b|`` for PCG.
    max_iter : int, optional
        PCG iteration cap, default ``50 * sqrt(n)``.
    method : {"auto", "pcg", "cholesky", "direct"}
        ``auto`` uses dense Cholesky up to 2000 unknowns and sparse LU above.
    """
    A, b = _unpack(system)
    n = A.shape[0]
    if not np.all(np.isfinite(b)):
        raise SolverError("right-hand side is not finite")
    if method == "auto":
        method = "cholesky" if n <= DENSE_LIMIT else "direct"
    if method == "pcg":
        maxit = max_iter or int(50 * math.sqrt(max(n, 1))) + 10
        x, it, hist, status = kernels.pcg_csr(A, b, tol, maxit)
        if status == 2:
            raise DefinitenessError("PCG met non-positive curvature p^T A p <= 0")
        res = hist[-1] if hist else _relres(A, x, b)
        if status == 1:
            raise ConvergenceError(
                f"PCG did not reach {tol:g} in {maxit} iterations (residual {res:.3e}, n={n})"
            )
        return SolveReport(x, it, float(res), "pcg", list(hist))
    if method == "cholesky":
        try:
            c = sla.cho_factor(A.toarray(), lower=True)
        except np.linalg.LinAlgError as exc:
            raise DefinitenessError("dense Cholesky failed: matrix not positive definite") from exc
        x = sla.cho_solve(c, b)
        return SolveReport(x, 0, _relres(A, x, b), "cholesky")
    if method == "direct":
        lu = spla.splu(A.tocsc(), permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                       options={"SymmetricMode": True})
        x = lu.solve(b)
        diag = lu.U.diagonal()
        if np.any(diag <= 0.0):
            raise DefinitenessError("sparse factorization produced a non-positive pivot")
        res = _relres(A, x, b)
        if res > max(tol, 1e-8):
            # one step of iterative refinement
            x += lu.solve(b - A @ x)
            res = _relres(A, x, b)
        return SolveReport(x, 0, res, "direct")
    raise ValueError(f"unknown method {method!r}")
