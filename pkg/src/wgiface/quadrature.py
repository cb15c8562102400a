"""Gauss rules on triangles (Duffy-collapsed), polygons and edges."""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .mesh import Cell, TriangulationError


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray
    weights: np.ndarray
    exactness: int
    params: np.ndarray | None = None

    def integrate(self, values):
        """Integrate tabulated values; the leading axis runs over the points."""
        return np.tensordot(self.weights, values, axes=(0, 0))


_lock = threading.Lock()


@lru_cache(maxsize=None)
def _gauss(n):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(n):
    with _lock:
        return _gauss(n)


@lru_cache(maxsize=None)
def _reference_triangle(D):
    n = math.ceil((D + 2) / 2)
    x, w = _gauss(n)
    u = 0.5 * (x + 1.0)
    wu = 0.5 * w
    U, V = np.meshgrid(u, u, indexing="ij")
    W = np.outer(wu, wu) * (1.0 - U)
    # collapse (u, v) in the unit square onto (u, v(1 - u)) in the unit triangle
    ref = np.column_stack([U.ravel(), (V * (1.0 - U)).ravel()])
    wts = W.ravel()
    ref.setflags(write=False)
    wts.setflags(write=False)
    return ref, wts


def triangle_rule(tri, exactness) -> QuadratureRule:
    """Rule on a physical triangle exact for total degree ``exactness``."""
    if exactness < 0:
        raise ValueError("exactness must be non-negative")
    tri = np.asarray(tri, dtype=float)
    J = np.column_stack([tri[1] - tri[0], tri[2] - tri[0]])
    det = float(np.linalg.det(J))
    span = np.ptp(tri, axis=0)
    if abs(det) <= 1e-14 * float(span @ span):
        raise TriangulationError("degenerate triangle")
    with _lock:
        ref, w = _reference_triangle(int(exactness))
    return QuadratureRule(tri[0] + ref @ J.T, w * abs(det), int(exactness))


def cell_rule(cell, exactness, triangles=None) -> QuadratureRule:
    """Union of triangle rules over the ear-clipping triangulation of ``cell``."""
    if not isinstance(cell, Cell):
        cell = Cell(cell)
    tris = cell.triangles() if triangles is None else triangles
    rules = [triangle_rule(t, exactness) for t in tris]
    return QuadratureRule(
        np.concatenate([r.points for r in rules]),
        np.concatenate([r.weights for r in rules]),
        int(exactness),
    )


def edge_rule(a, b, exactness) -> QuadratureRule:
    """Gauss-Legendre rule on the segment [a, b]; ``params`` holds the [-1, 1] abscissae."""
    if exactness < 0:
        raise ValueError("exactness must be non-negative")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    length = float(np.hypot(*(b - a)))
    if length == 0.0:
        raise ValueError("zero-length edge")
    x, w = gauss_legendre(math.ceil((exactness + 1) / 2))
    pts = 0.5 * (a + b) + np.outer(x, 0.5 * (b - a))
    return QuadratureRule(pts, w * 0.5 * length, int(exactness), np.array(x))
