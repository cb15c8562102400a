"""Global DOF numbering, constraint elimination and assembly of the WG system.

Unknowns are the interior coefficients of every cell followed by q + 1
Legendre coefficients on every interior or interface edge. Boundary edges
carry the known values Q_b g. On an interface edge the trial function is
two-valued: the region-1 side equals w_b + Q_b g_D and the region-2 side
equals w_b, with w_b the free unknown. Test functions are single-valued.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.io
import scipy.sparse as sp

from .basis import basis_dim
from .mesh import BOUNDARY, INTERFACE, AlignmentError, Mesh, check_interface_fitted
from .quadrature import gauss_legendre
from .weak_gradient import ElementCache, gradient_degree

DEFAULT_CACHE = ElementCache()


class AssemblyError(RuntimeError):
    pass


@dataclass
class DofMap:
    """Numbering of free unknowns.

    ``edge_offset[e]`` is the first global index of edge e's coefficients, or
    -1 for Dirichlet (boundary) edges. ``shifted[c]`` flags the local edges of
    cell c that carry the Q_b g_D offset (region-1 side of an interface).
    """

    k: int
    q: int
    nk: int
    nq: int
    n_cells: int
    edge_offset: np.ndarray
    edge_kind: np.ndarray
    n_free: int
    cell_local: list = field(repr=False)
    shifted: list = field(repr=False)

    @property
    def n_cell_dofs(self):
        return self.n_cells * self.nk


def build_dof_map(mesh: Mesh, k, q) -> DofMap:
    if not (k >= q >= 0):
        raise ValueError(f"degrees must satisfy k >= q >= 0, got k={k}, q={q}")
    nk, nq = basis_dim(k), q + 1
    kind = mesh.edge_tags.copy()
    edge_offset = np.full(mesh.n_edges, -1, dtype=np.intp)
    free = np.flatnonzero(kind != BOUNDARY)
    start = mesh.n_cells * nk
    edge_offset[free] = start + nq * np.arange(len(free))
    n_free = start + nq * len(free)
    cell_local, shifted = [], []
    ar = np.arange(nq)
    for c in range(mesh.n_cells):
        eids = mesh.cell_edges[c]
        off = edge_offset[eids]
        edge_part = np.where(off[:, None] >= 0, off[:, None] + ar, -1).ravel()
        cell_local.append(np.concatenate([c * nk + np.arange(nk), edge_part]))
        shifted.append((kind[eids] == INTERFACE) & (mesh.regions[c] == 1))
    return DofMap(k, q, nk, nq, mesh.n_cells, edge_offset, kind, n_free, cell_local, shifted)


def project_on_edges(mesh: Mesh, func, q, edges=None, npts=None):
    """Q_b coefficients of ``func(x, y)`` on the given edges, global orientation.

    Returns an array of shape (len(edges), q + 1).
    """
    edges = np.arange(mesh.n_edges) if edges is None else np.asarray(edges, dtype=np.intp)
    if len(edges) == 0:
        return np.zeros((0, q + 1))
    npts = npts or q + 8
    xi, w = gauss_legendre(npts)
    a = mesh.vertices[mesh.edges[edges, 0]]
    b = mesh.vertices[mesh.edges[edges, 1]]
    pts = 0.5 * (a + b)[:, None, :] + 0.5 * xi[None, :, None] * (b - a)[:, None, :]
    vals = np.asarray(func(pts[..., 0], pts[..., 1]), dtype=float).reshape(len(edges), npts)
    L = np.polynomial.legendre.legvander(xi, q)
    return (vals * w) @ L * (0.5 * (2 * np.arange(q + 1) + 1))


def edge_integrals(mesh: Mesh, func, q, edges, npts=None):
    """<func, L_l>_e for the given edges, shape (len(edges), q + 1)."""
    npts = npts or q + 8
    xi, w = gauss_legendre(npts)
    a = mesh.vertices[mesh.edges[edges, 0]]
    b = mesh.vertices[mesh.edges[edges, 1]]
    pts = 0.5 * (a + b)[:, None, :] + 0.5 * xi[None, :, None] * (b - a)[:, None, :]
    vals = np.asarray(func(pts[..., 0], pts[..., 1]), dtype=float).reshape(len(edges), npts)
    L = np.polynomial.legendre.legvander(xi, q)
    return (vals * w) @ L * (0.5 * mesh.edge_lengths[edges])[:, None]


@dataclass
class CellGroup:
    """Cells sharing one local element (same translated shape, degrees, region)."""

    element: object
    region: int
    cells: np.ndarray
    offsets: np.ndarray
    idx: np.ndarray
    lift: np.ndarray


@dataclass
class GlobalSystem:
    A: sp.csr_matrix
    b: np.ndarray
    dofmap: DofMap
    mesh: Mesh
    problem: object
    groups: list
    r: np.ndarray

    @property
    def n(self):
        return self.A.shape[0]

    def local_dofs(self, x, group):
        """Local DOF table (ncells, nloc) of a group, constraints restored."""
        idx = group.idx
        return np.where(idx >= 0, x[np.maximum(idx, 0)], 0.0) + group.lift

    def symmetry_error(self):
        d = abs(self.A - self.A.T)
        return (d.max() if d.nnz else 0.0) / abs(self.A).max()

    def export_matrix(self, path):
        scipy.io.mmwrite(path, self.A, comment="weak Galerkin stiffness matrix (free DOFs)")


def _region_func(func, region):
    return lambda x, y: func(x, y, region)


def assemble_system(mesh: Mesh, problem, k, q=None, r_rule="k+2", cache=None) -> GlobalSystem:
    """Assemble the symmetric positive definite WG system for ``problem`` on ``mesh``."""
    q = k if q is None else q
    cache = DEFAULT_CACHE if cache is None else cache
    try:
        check_interface_fitted(mesh, problem.interface)
    except AlignmentError as exc:
        raise AssemblyError(str(exc)) from exc
    dm = build_dof_map(mesh, k, q)
    nq = dm.nq

    bnd = np.flatnonzero(dm.edge_kind == BOUNDARY)
    itf = np.flatnonzero(dm.edge_kind == INTERFACE)
    edge_known = np.zeros((mesh.n_edges, nq))
    edge_known[bnd] = project_on_edges(mesh, problem.g, q, bnd)
    jump = np.zeros((mesh.n_edges, nq))
    jump[itf] = project_on_edges(mesh, problem.g_D, q, itf)

    buckets = {}
    r_cells = np.empty(mesh.n_cells, dtype=int)
    for c in range(mesh.n_cells):
        cell = mesh.cell(c)
        r = gradient_degree(cell, k, r_rule)
        r_cells[c] = r
        el, offset = cache.get(cell, k, q, r)
        buckets.setdefault((id(el), cell.region), (el, []))[1].append(c)

    rows, cols, vals = [], [], []
    b = np.zeros(dm.n_free)
    groups = []
    for (_, region), (el, cells) in buckets.items():
        cells = np.array(cells, dtype=np.intp)
        idx = np.array([dm.cell_local[c] for c in cells])
        lift = np.zeros(idx.shape)
        for j, c in enumerate(cells):
            eids = mesh.cell_edges[c]
            for i, e in enumerate(eids):
                sl = el.edge_slice(i)
                if dm.edge_kind[e] == BOUNDARY:
                    lift[j, sl] = edge_known[e]
                elif dm.shifted[c][i]:
                    lift[j, sl] = jump[e]
        offsets = mesh.centroids[cells]
        groups.append(CellGroup(el, region, cells, offsets, idx, lift))

        K = el.stiffness(problem.a(region))
        asym = np.abs(K - K.T).max()
        if asym > 1e-10 * np.abs(K).max():
            raise AssemblyError(f"local stiffness asymmetric ({asym:.2e}) on cell {cells[0]}")
        free = idx >= 0
        R = np.broadcast_to(idx[:, :, None], (len(cells),) + K.shape)
        C = np.broadcast_to(idx[:, None, :], (len(cells),) + K.shape)
        mask = free[:, :, None] & free[:, None, :]
        rows.append(R[mask])
        cols.append(C[mask])
        vals.append(np.broadcast_to(K, R.shape)[mask])

        # load (f, v0)_T on the data rule
        pts, w, psi = el.data_rule()
        phys = pts[None, :, :] + offsets[:, None, :]
        fv = np.asarray(problem.f(phys[..., 0], phys[..., 1], region), dtype=float)
        fv = np.broadcast_to(fv, phys.shape[:2])
        load = (fv * w) @ psi
        np.add.at(b, idx[:, : el.nk], load)
        # move known constraint values to the right-hand side
        known = lift @ K.T
        np.add.at(b, idx[free], -known[free])

    if len(itf):
        np.add.at(b, dm.edge_offset[itf][:, None] + np.arange(nq), edge_integrals(mesh, problem.g_N, q, itf))

    n = dm.n_free
    A = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    ).tocsr()
    A.sum_duplicates()
    A.sort_indices()
    return GlobalSystem(A, b, dm, mesh, problem, groups, r_cells)
