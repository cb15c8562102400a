"""L2 projections onto P_k(T), [P_r(T)]^2 and P_q(e)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .basis import EdgeBasis, make_cell_basis
from .mesh import Cell
from .quadrature import cell_rule, edge_rule


class ProjectionError(np.linalg.LinAlgError):
    pass


@dataclass
class ProjectedFunction:
    """Coefficients of an L2 projection in a cell or edge basis.

    ``coeffs`` has shape ``(dim,)`` for scalar fields and ``(dim, 2)`` for
    vector fields. Instances are callable on ``(n, 2)`` point arrays.
    """

    basis: object
    coeffs: np.ndarray
    degree: int

    def __call__(self, x, y=None):
        pts = np.asarray(x, dtype=float) if y is None else np.column_stack([np.ravel(x), np.ravel(y)])
        vals = self.basis.eval(pts)
        if isinstance(vals, tuple):
            vals = vals[0]
        return vals @ self.coeffs


def _evaluate(f, points):
    if isinstance(f, ProjectedFunction):
        return f(points)
    return np.asarray(f(points[:, 0], points[:, 1]), dtype=float)


def cholesky_solve(M, rhs, what="Gram matrix"):
    try:
        factor = sla.cho_factor(M, lower=True)
    except np.linalg.LinAlgError as exc:
        raise ProjectionError(f"singular {what}") from exc
    return sla.cho_solve(factor, rhs)


def project_cell(f, cell, degree, rule=None, basis=None) -> ProjectedFunction:
    """L2 projection of ``f(x, y)`` (scalar, or ``(n, 2)`` vector) onto P_degree(cell)."""
    if not isinstance(cell, Cell):
        cell = Cell(cell)
    if basis is None:
        basis = make_cell_basis(cell, degree)
    if rule is None:
        rule = cell_rule(cell, 2 * degree + 8)
    phi = basis.eval(rule.points)[0]
    vals = _evaluate(f, rule.points)
    M = phi.T @ (rule.weights[:, None] * phi)
    rhs = phi.T @ (rule.weights[:, None] * vals.reshape(len(rule.weights), -1))
    c = cholesky_solve(M, rhs, f"Gram matrix on cell {cell.index}")
    if vals.ndim == 1:
        c = c[:, 0]
    return ProjectedFunction(basis, c, degree)


def project_edge(f, a, b, q, rule=None) -> ProjectedFunction:
    """L2 projection of ``f(x, y)`` onto P_q on the segment [a, b] (Legendre basis)."""
    basis = EdgeBasis(a, b, q)
    if rule is None:
        rule = edge_rule(a, b, 2 * q + 8)
    L = basis.at_parameter(rule.params, q)
    vals = _evaluate(f, rule.points)
    # Legendre mass matrix is diagonal: length / (2l + 1)
    c = (L.T @ (rule.weights * vals)) * (2 * np.arange(q + 1) + 1) / basis.length
    return ProjectedFunction(basis, c, q)


def l2_norm_on_cell(f, cell, rule=None):
    if rule is None:
        rule = cell_rule(cell, 12)
    v = _evaluate(f, rule.points)
    return float(np.sqrt(rule.weights @ (v * v).reshape(len(rule.weights), -1).sum(1)))
