"""Polygonal meshes: data model, structured generators and cell triangulation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import kernels

INTERIOR, BOUNDARY, INTERFACE = 0, 1, 2
TAG_NAMES = {INTERIOR: "interior", BOUNDARY: "boundary", INTERFACE: "interface"}

FAMILIES = ("uniform_triangle", "uniform_square", "zigzag_hexagon")
INTERFACES = ("line_x0", "square_third")


class MeshError(ValueError):
    pass


class OrientationError(MeshError):
    pass


class TopologyError(MeshError):
    pass


class ConformityError(MeshError):
    pass


class AlignmentError(MeshError):
    pass


class TriangulationError(MeshError):
    pass


def signed_area(xy):
    x, y = xy[:, 0], xy[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


@dataclass(frozen=True)
class CellMetrics:
    area: float
    centroid: np.ndarray
    diameter: float
    N: int
    convex: bool


def cell_metrics(xy) -> CellMetrics:
    """Area, centroid, diameter, edge count and convexity of a CCW polygon."""
    xy = np.asarray(xy, dtype=float)
    x, y = xy[:, 0], xy[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cr = x * yn - xn * y
    area = 0.5 * cr.sum()
    if area <= 0.0:
        raise OrientationError(f"polygon has non-positive signed area {area:g}")
    cx = ((x + xn) * cr).sum() / (6.0 * area)
    cy = ((y + yn) * cr).sum() / (6.0 * area)
    diff = xy[:, None, :] - xy[None, :, :]
    diameter = float(np.sqrt((diff ** 2).sum(-1).max()))
    e = np.roll(xy, -1, axis=0) - xy
    turn = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
    convex = bool(np.all(turn >= -1e-14 * diameter ** 2))
    return CellMetrics(float(area), np.array([cx, cy]), diameter, len(xy), convex)


def triangulate_polygon(xy):
    """Ear-clip a simple CCW polygon into ``N - 2`` positively oriented triangles.

    Returns an ``(N - 2, 3)`` array of local vertex indices.
    """
    xy = np.asarray(xy, dtype=float)
    if signed_area(xy) <= 0.0:
        raise OrientationError("polygon must be counterclockwise")
    tris = kernels.ear_clip(xy)
    if tris is None:
        raise TriangulationError(f"ear clipping failed on polygon with {len(xy)} vertices")
    return tris


@dataclass
class Cell:
    """One polygonal element.

    ``edge_signs[i]`` is +1 when local edge i (vertex i to i+1) runs along the
    orientation of the global edge it belongs to, -1 otherwise.
    """

    vertices: np.ndarray
    region: int = 1
    index: int = -1
    edge_signs: np.ndarray | None = None
    _metrics: CellMetrics | None = field(default=None, repr=False)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float)
        if self.edge_signs is None:
            self.edge_signs = np.ones(len(self.vertices), dtype=int)

    @property
    def metrics(self) -> CellMetrics:
        if self._metrics is None:
            self._metrics = cell_metrics(self.vertices)
        return self._metrics

    area = property(lambda self: self.metrics.area)
    centroid = property(lambda self: self.metrics.centroid)
    diameter = property(lambda self: self.metrics.diameter)
    N = property(lambda self: self.metrics.N)
    convex = property(lambda self: self.metrics.convex)

    def triangles(self):
        """Triangles of the cell as an array of shape (N-2, 3, 2)."""
        return self.vertices[triangulate_polygon(self.vertices)]

    def translated(self, offset):
        return Cell(self.vertices - offset, self.region, self.index, self.edge_signs.copy())

    def edge_normals(self):
        """Outward unit normals and lengths of the local edges."""
        d = np.roll(self.vertices, -1, axis=0) - self.vertices
        length = np.hypot(d[:, 0], d[:, 1])
        return np.column_stack([d[:, 1], -d[:, 0]]) / length[:, None], length


def triangulate_cell(cell: Cell):
    """Triangles of ``cell`` as vertex triples (coordinates), CCW oriented."""
    return cell.triangles()


class Mesh:
    """Immutable polygonal partition with derived edges and tags.

    Parameters
    ----------
    vertices : (nv, 2) array
    cells : sequence of CCW vertex-index loops
    regions : sequence of region ids (1 or 2), one per cell
    """

    def __init__(self, vertices, cells, regions):
        self.vertices = np.asarray(vertices, dtype=float).reshape(-1, 2)
        self.cells = [np.asarray(c, dtype=np.intp) for c in cells]
        self.regions = np.asarray(regions, dtype=int)
        if len(self.regions) != len(self.cells):
            raise MeshError("one region id per cell required")
        if not np.all(np.isin(self.regions, (1, 2))):
            raise MeshError("region ids must be 1 or 2")
        self._derive_edges()
        self._check_conformity()
        for a in (self.vertices, self.regions, self.edges, self.edge_cells, self.edge_tags):
            a.setflags(write=False)

    def _derive_edges(self):
        table = {}
        edges, owners = [], []
        cell_edges, cell_signs = [], []
        for c, loop in enumerate(self.cells):
            if len(loop) < 3:
                raise TopologyError(f"cell {c} has fewer than 3 vertices")
            if signed_area(self.vertices[loop]) <= 0.0:
                raise OrientationError(f"cell {c} is not counterclockwise")
            ids, signs = [], []
            for i in range(len(loop)):
                a, b = int(loop[i]), int(loop[(i + 1) % len(loop)])
                if a == b:
                    raise TopologyError(f"cell {c} repeats vertex {a}")
                key = (a, b) if a < b else (b, a)
                e = table.get(key)
                if e is None:
                    e = table[key] = len(edges)
                    edges.append((a, b))
                    owners.append([c])
                    signs.append(1)
                else:
                    if len(owners[e]) >= 2:
                        raise TopologyError(f"edge {key} shared by more than two cells")
                    if edges[e] == (a, b):
                        raise OrientationError(f"edge {key} traversed in the same direction by two cells")
                    owners[e].append(c)
                    signs.append(-1)
                ids.append(e)
            cell_edges.append(np.array(ids, dtype=np.intp))
            cell_signs.append(np.array(signs, dtype=int))
        self.edges = np.array(edges, dtype=np.intp).reshape(-1, 2)
        self.edge_cells = np.full((len(edges), 2), -1, dtype=np.intp)
        for e, own in enumerate(owners):
            self.edge_cells[e, : len(own)] = own
        self.cell_edges = cell_edges
        self.cell_edge_signs = cell_signs
        tags = np.full(len(edges), INTERIOR, dtype=int)
        tags[self.edge_cells[:, 1] < 0] = BOUNDARY
        both = self.edge_cells[:, 1] >= 0
        r0 = self.regions[self.edge_cells[:, 0]]
        r1 = np.where(both, self.regions[np.maximum(self.edge_cells[:, 1], 0)], r0)
        tags[both & (r0 != r1)] = INTERFACE
        self.edge_tags = tags

    def _check_conformity(self):
        # a vertex strictly inside a boundary edge is a hanging node
        bnd = np.flatnonzero(self.edge_tags == BOUNDARY)
        if len(bnd) == 0:
            return
        p = self.vertices[self.edges[bnd, 0]]
        d = self.vertices[self.edges[bnd, 1]] - p
        L2 = (d ** 2).sum(1)
        used = np.unique(np.concatenate(self.cells))
        V = self.vertices[used]
        for chunk in np.array_split(np.arange(len(bnd)), max(1, len(bnd) // 32)):
            w = V[None, :, :] - p[chunk, None, :]
            t = (w * d[chunk, None, :]).sum(-1) / L2[chunk, None]
            cross = w[..., 0] * d[chunk, None, 1] - w[..., 1] * d[chunk, None, 0]
            off = np.abs(cross) / np.sqrt(L2[chunk, None])
            hit = (t > 1e-9) & (t < 1 - 1e-9) & (off < 1e-10 * np.sqrt(L2[chunk, None]))
            if hit.any():
                i, j = np.argwhere(hit)[0]
                e = bnd[chunk[i]]
                raise ConformityError(
                    f"vertex {used[j]} lies inside edge {tuple(self.edges[e])}: "
                    "shared boundaries must list the same vertex chain in both cells"
                )

    @property
    def n_cells(self):
        return len(self.cells)

    @property
    def n_edges(self):
        return len(self.edges)

    def cell(self, c) -> Cell:
        return Cell(self.vertices[self.cells[c]], int(self.regions[c]), c, self.cell_edge_signs[c])

    @cached_property
    def _metrics(self):
        return [cell_metrics(self.vertices[loop]) for loop in self.cells]

    @cached_property
    def areas(self):
        return np.array([m.area for m in self._metrics])

    @cached_property
    def centroids(self):
        return np.array([m.centroid for m in self._metrics])

    @cached_property
    def diameters(self):
        return np.array([m.diameter for m in self._metrics])

    @cached_property
    def convex(self):
        return np.array([m.convex for m in self._metrics])

    @property
    def h(self):
        return float(self.diameters.max())

    @cached_property
    def edge_lengths(self):
        d = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        return np.hypot(d[:, 0], d[:, 1])

    def edge_normal(self, e, side=0):
        """Unit normal of edge ``e`` pointing out of its ``side``-th incident cell."""
        a, b = self.vertices[self.edges[e]]
        d = b - a
        n = np.array([d[1], -d[0]]) / np.hypot(*d)
        c = self.edge_cells[e, side]
        if c < 0:
            raise MeshError(f"edge {e} has no cell on side {side}")
        k = int(np.flatnonzero(self.cell_edges[c] == e)[0])
        return n * self.cell_edge_signs[c][k]

    def tag_counts(self):
        return {name: int((self.edge_tags == t).sum()) for t, name in TAG_NAMES.items()}

    def to_json(self):
        return json.dumps(
            {
                "vertices": self.vertices.tolist(),
                "cells": [loop.tolist() for loop in self.cells],
                "regions": self.regions.tolist(),
            }
        )

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        return cls(data["vertices"], data["cells"], data["regions"])

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_json(fh.read())


def build_mesh(vertices, cell_loops, regions) -> Mesh:
    return Mesh(vertices, cell_loops, regions)


def in_region_one(x, y, interface):
    """Membership of points in the inner subdomain for a named interface."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if interface == "line_x0":
        return x < 0.0
    if interface == "square_third":
        return (np.abs(x) < 1.0 / 3.0) & (np.abs(y) < 1.0 / 3.0)
    raise ValueError(f"unknown interface {interface!r}")


def check_interface_fitted(mesh: Mesh, interface):
    """Raise AlignmentError when a cell straddles the interface."""
    for c in range(mesh.n_cells):
        tri = mesh.cell(c).triangles()
        # probe sub-triangle centroids and points pulled slightly inside each vertex
        probes = np.concatenate([tri.mean(1), (0.9 * tri + 0.1 * tri.mean(1, keepdims=True)).reshape(-1, 2)])
        inside = in_region_one(probes[:, 0], probes[:, 1], interface)
        want = mesh.regions[c] == 1
        if np.any(inside != want):
            raise AlignmentError(f"cell {c} is not fitted to interface {interface!r}")


def grid_count(level, interface, n=None):
    if level < 1:
        raise ValueError("level must be >= 1")
    if n is None:
        n = 2 ** level if interface == "line_x0" else 3 * 2 ** level
    if interface == "line_x0" and n % 2:
        raise AlignmentError(f"line_x0 needs an even grid count, got {n}")
    if interface == "square_third" and n % 6:
        raise AlignmentError(f"square_third needs a grid count divisible by 6, got {n}")
    if interface not in INTERFACES:
        raise ValueError(f"unknown interface {interface!r}")
    return n


def generate_mesh(family, level, interface="line_x0", n=None) -> Mesh:
    """Structured mesh of (-1, 1)^2 fitted to ``interface``.

    ``n`` squares per axis defaults to ``2**level`` (line_x0) or
    ``3 * 2**level`` (square_third).
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown mesh family {family!r}")
    n = grid_count(level, interface, n)
    # integer lattice in units of one sixth of a square side keeps vertices exact
    m = 6 * n
    index = {}
    coords = []

    def vid(ix, iy):
        key = (ix, iy)
        v = index.get(key)
        if v is None:
            v = index[key] = len(coords)
            coords.append((-1.0 + 2.0 * ix / m, -1.0 + 2.0 * iy / m))
        return v

    loops = []
    for j in range(n):
        for i in range(n):
            x0, y0 = 6 * i, 6 * j
            if family == "uniform_square":
                loops.append([vid(x0, y0), vid(x0 + 6, y0), vid(x0 + 6, y0 + 6), vid(x0, y0 + 6)])
            elif family == "uniform_triangle":
                loops.append([vid(x0, y0), vid(x0 + 6, y0), vid(x0 + 6, y0 + 6)])
                loops.append([vid(x0, y0), vid(x0 + 6, y0 + 6), vid(x0, y0 + 6)])
            else:
                lower = [(x0, y0), (x0 + 6, y0), (x0 + 6, y0 + 2), (x0 + 6, y0 + 4),
                         (x0 + 3, y0 + 4), (x0 + 3, y0 + 2), (x0, y0 + 2)]
                upper = [(x0, y0 + 2), (x0 + 3, y0 + 2), (x0 + 3, y0 + 4), (x0 + 6, y0 + 4),
                         (x0 + 6, y0 + 6), (x0, y0 + 6), (x0, y0 + 4)]
                loops.append([vid(*p) for p in lower])
                loops.append([vid(*p) for p in upper])
    verts = np.array(coords)
    cent = np.array([cell_metrics(verts[lp]).centroid for lp in loops])
    regions = np.where(in_region_one(cent[:, 0], cent[:, 1], interface), 1, 2)
    mesh = Mesh(verts, loops, regions)
    check_interface_fitted(mesh, interface)
    return mesh
