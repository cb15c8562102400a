"""Discrete weak gradient on a polygon and the local stiffness matrix.

For a weak function v = {v0, vb} with v0 in P_k(T) and vb in P_q(e) on each
edge, the weak gradient is the element of [P_r(T)]^2 satisfying

    (grad_w v, phi)_T = -(v0, div phi)_T + <vb, phi . n>_{dT}

for every phi in [P_r(T)]^2. Local weak DOFs are ordered as the dim P_k
interior coefficients followed by q + 1 Legendre coefficients per edge in
cell-loop order. Edge Legendre polynomials follow the global edge
orientation, so a shared edge has one set of coefficients for both cells.
"""

from __future__ import annotations

import re
import threading
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .basis import EdgeBasis, basis_dim, make_cell_basis, vector_divergence
from .mesh import Cell
from .quadrature import cell_rule, edge_rule


class ConditioningError(np.linalg.LinAlgError):
    pass


def gradient_degree(cell, k, rule="theoretical"):
    """Degree r of the weak-gradient space on ``cell``.

    ``rule`` is ``"theoretical"`` (2N + k - 1 on nonconvex cells, N + k - 1 on
    convex ones), an integer offset m giving k + m, or a string ``"k+m"``.
    """
    if rule in ("theoretical", "theory"):
        N = cell.N
        return 2 * N + k - 1 if not cell.convex else N + k - 1
    if isinstance(rule, str):
        m = re.fullmatch(r"\s*k\s*\+\s*(\d+)\s*", rule)
        if m is None:
            raise ValueError(f"unknown r rule {rule!r}")
        rule = int(m.group(1))
    return k + int(rule)


def coefficient_tensor(a):
    """Coerce a scalar or 2x2 coefficient to an SPD tensor."""
    A = np.asarray(a, dtype=float)
    if A.ndim == 0:
        A = float(A) * np.eye(2)
    if A.shape != (2, 2) or not np.allclose(A, A.T, rtol=0, atol=1e-14 * np.abs(A).max()):
        raise ValueError("coefficient must be a scalar or a symmetric 2x2 tensor")
    if np.linalg.eigvalsh(A).min() <= 0.0:
        raise ValueError("coefficient tensor must be positive definite")
    return A


@dataclass
class WeakGradientOperator:
    """Matrix G mapping local weak DOFs to [P_r]^2 coefficients.

    Rows 0..m-1 hold the x-component coefficients, rows m..2m-1 the
    y-component, both in ``basis``.
    """

    cell_index: int
    r: int
    matrix: np.ndarray
    basis: object
    gram: np.ndarray

    @property
    def m(self):
        return self.basis.dim

    def evaluate(self, dofs, points):
        """Weak gradient of local DOF vector(s) at ``points``: shape (n, 2) or (n, 2, ncols)."""
        phi = self.basis.eval(points)[0]
        c = self.matrix @ dofs
        return np.stack([phi @ c[: self.m], phi @ c[self.m:]], axis=1)


class LocalElement:
    """All local WG data of one cell for degrees (k, q, r).

    Built in the coordinates of ``cell`` as given; the assembly caches one
    instance per congruent (translated) cell shape.
    """

    def __init__(self, cell: Cell, k, q, r, cell_exactness=None, edge_exactness=None):
        self.cell = cell
        self.k, self.q, self.r = int(k), int(q), int(r)
        if self.k < 0 or self.q < 0 or self.r < 0:
            raise ValueError("degrees must be non-negative")
        D = 2 * self.r + 2 if cell_exactness is None else cell_exactness
        De = self.r + max(self.k, self.q) + 2 if edge_exactness is None else edge_exactness
        self.rule = cell_rule(cell, max(D, 2 * self.k + 2))
        w = self.rule.weights
        self.basis_k = make_cell_basis(cell, self.k, self.rule)
        self.basis_r = make_cell_basis(cell, self.r, self.rule)
        self.psi, self.dpsi = self.basis_k.eval(self.rule.points)
        phi, dphi = self.basis_r.eval(self.rule.points)
        self.nk = self.basis_k.dim
        self.m = self.basis_r.dim
        self.n_edges = cell.N
        self.nloc = self.nk + self.n_edges * (self.q + 1)
        self.gram_k = self.psi.T @ (w[:, None] * self.psi)
        self.gram_r = phi.T @ (w[:, None] * phi)

        m, nk, nq = self.m, self.nk, self.q + 1
        B = np.zeros((2 * m, self.nloc))
        div = vector_divergence(dphi)
        B[:, :nk] = -div.T @ (w[:, None] * self.psi)
        normals, _ = cell.edge_normals()
        V = cell.vertices
        self.edge_rules = []
        self.edge_legendre = []
        for i in range(self.n_edges):
            a, b = V[i], V[(i + 1) % self.n_edges]
            er = edge_rule(a, b, De)
            xi = er.params if cell.edge_signs[i] > 0 else -er.params
            L = EdgeBasis.at_parameter(xi, self.q)
            ph = self.basis_r.eval(er.points)[0]
            wn = er.weights[:, None] * ph
            cols = slice(nk + i * nq, nk + (i + 1) * nq)
            B[:m, cols] = normals[i, 0] * wn.T @ L
            B[m:, cols] = normals[i, 1] * wn.T @ L
            self.edge_rules.append(er)
            self.edge_legendre.append(L)
        self.normals = normals
        self.rhs = B
        try:
            self._chol = sla.cho_factor(self.gram_r, lower=True)
        except np.linalg.LinAlgError as exc:
            raise ConditioningError(
                f"[P_{self.r}]^2 Gram matrix not positive definite on cell {cell.index}"
            ) from exc
        G = np.vstack([sla.cho_solve(self._chol, B[:m]), sla.cho_solve(self._chol, B[m:])])
        self.operator = WeakGradientOperator(cell.index, self.r, G, self.basis_r, self.gram_r)
        self._gram_grad = None
        self._data = None
        self._data_edges = None

    def data_rule(self, exactness=None):
        """``(points, weights, psi)`` of the rule used for source and solution data.

        Data such as f or an exact solution are not in P_r, so they get a rule
        a few degrees above the matrix budget.
        """
        if exactness is not None:
            rule = cell_rule(self.cell, exactness)
            return rule.points, rule.weights, self.basis_k.eval(rule.points)[0]
        if self._data is None:
            rule = cell_rule(self.cell, max(2 * self.r + 2, 2 * self.k + 12))
            self._data = (rule.points, rule.weights, self.basis_k.eval(rule.points)[0])
        return self._data

    @property
    def G(self):
        return self.operator.matrix

    def edge_slice(self, i):
        nq = self.q + 1
        return slice(self.nk + i * nq, self.nk + (i + 1) * nq)

    def stiffness(self, a=1.0):
        """K_T = G^T (a kron M_r) G for a scalar or SPD 2x2 coefficient."""
        A = coefficient_tensor(a)
        G, M, m = self.G, self.gram_r, self.m
        Gx, Gy = G[:m], G[m:]
        MGx, MGy = M @ Gx, M @ Gy
        K = (A[0, 0] * Gx.T @ MGx + A[0, 1] * Gx.T @ MGy
             + A[1, 0] * Gy.T @ MGx + A[1, 1] * Gy.T @ MGy)
        return 0.5 * (K + K.T)

    def gradient_gram(self):
        """Blocks S[a][b] = (d_a psi_i, d_b psi_j)_T for the P_k basis."""
        if self._gram_grad is None:
            w = self.rule.weights
            d = self.dpsi
            self._gram_grad = np.array(
                [[d[:, :, a].T @ (w[:, None] * d[:, :, b]) for b in range(2)] for a in range(2)]
            )
        return self._gram_grad

    def weak_gradient_of(self, v0, vb):
        """Weak gradient coefficients (length 2m) of arbitrary functions {v0, vb}.

        ``v0(x, y)`` is evaluated at cell quadrature points and ``vb(x, y)`` at
        edge quadrature points, both in this element's coordinates.
        """
        w = self.rule.weights
        _, dphi = self.basis_r.eval(self.rule.points)
        div = vector_divergence(dphi)
        pts = self.rule.points
        rhs = -div.T @ (w * np.asarray(v0(pts[:, 0], pts[:, 1]), dtype=float))
        m = self.m
        if self._data_edges is None:
            # vb is arbitrary data here, so use rules exact to degree 2r + 2
            V = self.cell.vertices
            self._data_edges = []
            for i in range(self.n_edges):
                er = edge_rule(V[i], V[(i + 1) % self.n_edges], 2 * self.r + 2)
                self._data_edges.append((er, self.basis_r.eval(er.points)[0]))
        for i, (er, ph) in enumerate(self._data_edges):
            vals = er.weights * np.asarray(vb(er.points[:, 0], er.points[:, 1]), dtype=float)
            rhs[:m] += self.normals[i, 0] * ph.T @ vals
            rhs[m:] += self.normals[i, 1] * ph.T @ vals
        return np.concatenate([sla.cho_solve(self._chol, rhs[:m]), sla.cho_solve(self._chol, rhs[m:])])

    def project_r(self, f):
        """Componentwise L2 projection of a vector field ``f(x, y) -> (n, 2)`` onto [P_r]^2."""
        w = self.rule.weights
        phi = self.basis_r.eval(self.rule.points)[0]
        vals = np.asarray(f(self.rule.points[:, 0], self.rule.points[:, 1]), dtype=float)
        rhs = phi.T @ (w[:, None] * vals)
        c = sla.cho_solve(self._chol, rhs)
        return np.concatenate([c[:, 0], c[:, 1]])

    def interpolate(self, u, edge_u=None):
        """Local DOFs of Q_h u = {Q_0 u, Q_b u}; ``edge_u`` overrides u on edges."""
        pts, w, psi = self.data_rule()
        c0 = sla.cho_solve(sla.cho_factor(self.gram_k, lower=True), psi.T @ (w * u(pts[:, 0], pts[:, 1])))
        g = u if edge_u is None else edge_u
        out = [c0]
        for i, er in enumerate(self.edge_rules):
            L = self.edge_legendre[i]
            length = er.weights.sum()
            vals = g(er.points[:, 0], er.points[:, 1])
            out.append((L.T @ (er.weights * vals)) * (2 * np.arange(self.q + 1) + 1) / length)
        return np.concatenate(out)


def weak_gradient_matrix(cell, k, q, r) -> WeakGradientOperator:
    return LocalElement(cell, k, q, r).operator


def local_stiffness(cell, a, G):
    """Local stiffness from a cell, coefficient and weak-gradient operator."""
    if isinstance(G, LocalElement):
        return G.stiffness(a)
    A = coefficient_tensor(a)
    m = G.m
    M = G.gram
    Ma = np.block([[A[0, 0] * M, A[0, 1] * M], [A[1, 0] * M, A[1, 1] * M]])
    K = G.matrix.T @ Ma @ G.matrix
    return 0.5 * (K + K.T)


def local_dof_count(k, q, n_edges):
    return basis_dim(k) + n_edges * (q + 1)


class ElementCache:
    """Local elements keyed by translated cell shape and degrees; thread-safe."""

    def __init__(self, enabled=True):
        self.enabled = enabled
        self._store = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    @staticmethod
    def shape_key(cell):
        rel = cell.vertices - cell.centroid
        # relative quantum makes the key scale invariant, so the size goes in too
        quantum = 1e-11 * cell.diameter
        size = float(np.format_float_positional(cell.diameter, precision=10, unique=False))
        return (size, np.round(rel / quantum).astype(np.int64).tobytes(),
                np.asarray(cell.edge_signs).tobytes())

    def get(self, cell, k, q, r):
        """Return ``(element, offset)``: element in coordinates relative to ``offset``."""
        offset = cell.centroid
        if not self.enabled:
            return LocalElement(cell.translated(offset), k, q, r), offset
        key = (self.shape_key(cell), k, q, r)
        with self._lock:
            el = self._store.get(key)
        if el is None:
            el = LocalElement(cell.translated(offset), k, q, r)
            with self._lock:
                self._store.setdefault(key, el)
                self.misses += 1
        else:
            self.hits += 1
        return el, offset

    def __len__(self):
        return len(self._store)
