"""Independent reference computations used by the tests."""

from fractions import Fraction
from math import comb

import numpy as np
from numpy.polynomial import legendre

from wgiface.basis import CellBasis
from wgiface.quadrature import cell_rule, edge_rule
from wgiface.weak_gradient import LocalElement


def _segment_power_integral(p0, p1, a, b):
    """Exact int_0^1 x(t)^a y(t)^b dt along p0 -> p1 with rational endpoints."""
    (x0, y0), (x1, y1) = p0, p1
    dx, dy = x1 - x0, y1 - y0
    total = Fraction(0)
    for i in range(a + 1):
        for j in range(b + 1):
            coef = comb(a, i) * comb(b, j) * x0 ** (a - i) * dx ** i * y0 ** (b - j) * dy ** j
            total += Fraction(coef) / (i + j + 1)
    return total


def polygon_monomial_integral(vertices, a, b):
    """Exact integral of x^a y^b over a CCW polygon (Green: x^(a+1) y^b / (a+1) dy)."""
    V = [(Fraction(x), Fraction(y)) for x, y in vertices]
    total = Fraction(0)
    n = len(V)
    for i in range(n):
        p0, p1 = V[i], V[(i + 1) % n]
        total += _segment_power_integral(p0, p1, a + 1, b) * (p1[1] - p0[1])
    return total / (a + 1)


def segment_monomial_integral(p0, p1, a, b):
    """Exact int over the segment of x^a y^b ds divided by the segment length."""
    P0 = (Fraction(p0[0]), Fraction(p0[1]))
    P1 = (Fraction(p1[0]), Fraction(p1[1]))
    return _segment_power_integral(P0, P1, a, b)


def defining_relation_residual(cell, k, q, r):
    """max |(G e_j, phi)_T + (v0_j, div phi)_T - <vb_j, phi.n>| over DOFs j and raw monomial phi."""
    el = LocalElement(cell, k, q, r)
    rule = cell_rule(cell, 2 * r + 6)
    raw = CellBasis(cell.centroid, 1.0, r)  # unscaled monomials, a different basis
    phi, dphi = raw.eval(rule.points)
    wg_basis = el.basis_r.eval(rule.points)[0]
    m = el.m
    v0 = el.basis_k.eval(rule.points)[0]
    normals, _ = cell.edge_normals()
    worst = 0.0
    for comp in range(2):
        # weak gradient component at quadrature points for every DOF: (npts, nloc)
        wg = wg_basis @ el.G[comp * m:(comp + 1) * m]
        lhs = phi.T @ (rule.weights[:, None] * wg)
        rhs = np.zeros_like(lhs)
        rhs[:, : el.nk] = -(dphi[:, :, comp].T @ (rule.weights[:, None] * v0))
        V = cell.vertices
        for i in range(cell.N):
            er = edge_rule(V[i], V[(i + 1) % cell.N], 2 * r + 4)
            xi = er.params * cell.edge_signs[i]
            L = legendre.legvander(xi, q)
            ph = raw.eval(er.points)[0]
            rhs[:, el.edge_slice(i)] = normals[i, comp] * ph.T @ (er.weights[:, None] * L)
        worst = max(worst, float(np.abs(lhs - rhs).max()))
    return worst
