"""Polynomial bases on cells (scaled monomials) and edges (mapped Legendre)."""

from __future__ import annotations

import numpy as np
from numpy.polynomial import legendre

from . import kernels

ORTHO_THRESHOLD = 6


def basis_dim(degree):
    if degree < 0:
        raise ValueError("degree must be non-negative")
    return (degree + 1) * (degree + 2) // 2


def exponents(degree):
    """(alpha, beta) pairs ordered by total degree, then alpha descending."""
    return [(a, d - a) for d in range(degree + 1) for a in range(d, -1, -1)]


class CellBasis:
    """Scaled monomials ((x - xc)/h)^a ((y - yc)/h)^b with a + b <= degree."""

    orthonormal = False

    def __init__(self, center, scale, degree):
        self.center = np.asarray(center, dtype=float)
        self.scale = float(scale)
        self.degree = int(degree)
        self.dim = basis_dim(self.degree)

    def eval(self, points):
        """Values ``(n, dim)`` and gradients ``(n, dim, 2)`` at ``points``."""
        v, dx, dy = kernels.monomials(points, self.center[0], self.center[1], self.scale, self.degree)
        return v, np.stack([dx, dy], axis=-1)

    def values(self, points):
        return self.eval(points)[0]


class OrthonormalCellBasis(CellBasis):
    """Scaled monomial space orthonormalized against a cell quadrature rule.

    Each new function is x or y times an earlier one, then modified
    Gram-Schmidt (two passes) against all previous functions. The recurrence
    coefficients are kept so the basis can be re-evaluated anywhere, which
    stays stable for degrees where the raw monomial Gram matrix is singular
    to working precision.
    """

    orthonormal = True

    def __init__(self, center, scale, degree, points, weights):
        super().__init__(center, scale, degree)
        exps = exponents(self.degree)
        where = {e: i for i, e in enumerate(exps)}
        self._steps = []
        w = np.asarray(weights, dtype=float)
        X, Y = self._scaled(points)
        Q = np.empty((len(w), self.dim))
        Q[:, 0] = 1.0 / np.sqrt(w.sum())
        self._c0 = Q[0, 0]
        for m in range(1, self.dim):
            a, b = exps[m]
            if a > 0:
                parent, var = where[(a - 1, b)], 0
            else:
                parent, var = where[(a, b - 1)], 1
            v = (X if var == 0 else Y) * Q[:, parent]
            coef = np.zeros(m)
            for _ in range(2):
                for j in range(m):
                    c = np.dot(w * Q[:, j], v)
                    v -= c * Q[:, j]
                    coef[j] += c
            nrm = np.sqrt(np.dot(w * v, v))
            if not nrm > 0.0:
                raise np.linalg.LinAlgError(f"orthonormalization broke down at function {m}")
            Q[:, m] = v / nrm
            self._steps.append((parent, var, coef, nrm))

    def _scaled(self, points):
        p = np.asarray(points, dtype=float).reshape(-1, 2)
        return (p[:, 0] - self.center[0]) / self.scale, (p[:, 1] - self.center[1]) / self.scale

    def eval(self, points):
        X, Y = self._scaled(points)
        n = len(X)
        V = np.empty((n, self.dim))
        G = np.empty((n, self.dim, 2))
        V[:, 0] = self._c0
        G[:, 0] = 0.0
        inv_h = 1.0 / self.scale
        for m, (parent, var, coef, nrm) in enumerate(self._steps, start=1):
            t = X if var == 0 else Y
            v = t * V[:, parent]
            g = t[:, None] * G[:, parent]
            g[:, var] += inv_h * V[:, parent]
            v -= V[:, :m] @ coef
            g -= np.einsum("nmd,m->nd", G[:, :m], coef)
            V[:, m] = v / nrm
            G[:, m] = g / nrm
        return V, G


def make_cell_basis(cell, degree, rule=None, ortho_threshold=ORTHO_THRESHOLD):
    """Basis of P_degree on ``cell``; orthonormalized above ``ortho_threshold``."""
    if degree > ortho_threshold:
        if rule is None:
            from .quadrature import cell_rule

            rule = cell_rule(cell, 2 * degree + 2)
        return OrthonormalCellBasis(cell.centroid, cell.diameter, degree, rule.points, rule.weights)
    return CellBasis(cell.centroid, cell.diameter, degree)


def vector_divergence(grads):
    """Divergence of the [P_r]^2 basis (phi_i, 0), then (0, phi_i).

    ``grads`` is the ``(n, m, 2)`` gradient table of the scalar basis; the
    result has shape ``(n, 2m)``.
    """
    return np.concatenate([grads[:, :, 0], grads[:, :, 1]], axis=1)


class EdgeBasis:
    """Legendre polynomials L_0..L_q composed with the affine map of [a, b] to [-1, 1]."""

    def __init__(self, a, b, degree):
        self.a = np.asarray(a, dtype=float)
        self.b = np.asarray(b, dtype=float)
        self.degree = int(degree)
        self.dim = self.degree + 1
        d = self.b - self.a
        self.length = float(np.hypot(*d))
        if self.length == 0.0:
            raise ValueError("zero-length edge")
        self._t = d / self.length

    def parameter(self, points, tol=1e-12):
        p = np.asarray(points, dtype=float).reshape(-1, 2) - self.a
        s = p @ self._t
        off = np.abs(p[:, 0] * self._t[1] - p[:, 1] * self._t[0])
        scale = max(1.0, self.length)
        if np.any(off > tol * scale) or np.any(s < -tol * scale) or np.any(s > self.length + tol * scale):
            raise ValueError("point does not lie on the edge")
        return 2.0 * s / self.length - 1.0

    def eval(self, points):
        return legendre.legvander(self.parameter(points), self.degree)

    @staticmethod
    def at_parameter(xi, degree):
        return legendre.legvander(np.asarray(xi, dtype=float), degree)
