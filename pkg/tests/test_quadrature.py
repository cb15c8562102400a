from fractions import Fraction

import numpy as np
import pytest

from oracles import polygon_monomial_integral, segment_monomial_integral
from wgiface.mesh import Cell, TriangulationError
from wgiface.quadrature import cell_rule, edge_rule, gauss_legendre, triangle_rule

TRIANGLE = [(Fraction(1, 3), Fraction(-1, 2)), (Fraction(2), Fraction(1, 4)), (Fraction(1, 2), Fraction(3, 2))]
ZIGZAG = [(0, 0), (6, 0), (6, 2), (6, 4), (3, 4), (3, 2), (0, 2)]
ZIGZAG = [(Fraction(x, 6) + Fraction(1, 7), Fraction(y, 6) - Fraction(2, 5)) for x, y in ZIGZAG]
LSHAPE = [(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)]


def _check_sweep(rule, exact_fn, D):
    x, y = rule.points[:, 0], rule.points[:, 1]
    for d in range(D + 1):
        for a in range(d + 1):
            b = d - a
            exact = float(exact_fn(a, b))
            got = rule.weights @ (x ** a * y ** b)
            assert abs(got - exact) <= 1e-11 * max(1.0, abs(exact)), (a, b, got, exact)


@pytest.mark.parametrize("D", [0, 1, 2, 5, 8, 13, 20])
def test_triangle_monomial_sweep(D):
    tri = np.array(TRIANGLE, dtype=float)
    _check_sweep(triangle_rule(tri, D), lambda a, b: polygon_monomial_integral(TRIANGLE, a, b), D)


@pytest.mark.parametrize("poly", [ZIGZAG, LSHAPE], ids=["zigzag", "lshape"])
@pytest.mark.parametrize("D", [2, 6, 12, 18])
def test_cell_monomial_sweep(poly, D):
    rule = cell_rule(Cell(np.array(poly, dtype=float)), D)
    _check_sweep(rule, lambda a, b: polygon_monomial_integral(poly, a, b), D)


@pytest.mark.parametrize("D", [0, 3, 7, 16])
def test_edge_monomial_sweep(D):
    p0 = (Fraction(-1, 3), Fraction(1, 5))
    p1 = (Fraction(2, 3), Fraction(7, 5))
    length = np.hypot(1.0, 1.2)
    rule = edge_rule(np.array(p0, float), np.array(p1, float), D)
    _check_sweep(rule, lambda a, b: float(segment_monomial_integral(p0, p1, a, b)) * length, D)
    np.testing.assert_allclose(rule.params, gauss_legendre(len(rule.weights))[0])


def test_weights_positive_and_sum_to_area():
    cell = Cell(np.array(ZIGZAG, dtype=float))
    rule = cell_rule(cell, 9)
    assert np.all(rule.weights > 0)
    assert rule.weights.sum() == pytest.approx(cell.area, rel=1e-14)
    assert rule.integrate(np.ones((len(rule.weights), 3))).shape == (3,)


def test_degenerate_triangle():
    with pytest.raises(TriangulationError):
        triangle_rule(np.array([[0, 0], [1, 1], [2, 2]], float), 3)
    with pytest.raises(ValueError):
        edge_rule(np.zeros(2), np.zeros(2), 2)


def test_oracle_self_check():
    # unit square: int x^2 y = 1/6
    sq = [(0, 0), (1, 0), (1, 1), (0, 1)]
    assert polygon_monomial_integral(sq, 2, 1) == Fraction(1, 6)
    assert polygon_monomial_integral(sq, 0, 0) == 1
