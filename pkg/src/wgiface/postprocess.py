"""Error functionals, convergence rates, point evaluation and table output."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .assembly import GlobalSystem, project_on_edges
from .mesh import Mesh


class RateError(ValueError):
    pass


def exact_interpolant(system: GlobalSystem, u=None):
    """Q_h u as a list of local DOF tables, one per cell group.

    Each cell uses the exact solution of its own region, so an interface edge
    carries a different Q_b u on each side.
    """
    problem = system.problem
    u = problem.u if u is None else u
    if u is None:
        raise ValueError(f"problem {problem.name} has no exact solution")
    mesh, q = system.mesh, system.dofmap.q
    side = {}
    for region in (1, 2):
        side[region] = project_on_edges(mesh, lambda x, y: u(x, y, region), q)
    out = []
    for g in system.groups:
        el = g.element
        pts, w, psi = el.data_rule()
        phys = pts[None] + g.offsets[:, None, :]
        uv = np.broadcast_to(np.asarray(u(phys[..., 0], phys[..., 1], g.region), dtype=float), phys.shape[:2])
        c0 = np.linalg.solve(el.gram_k, ((uv * w) @ psi).T).T
        cols = [c0]
        for i in range(el.n_edges):
            eids = np.array([mesh.cell_edges[c][i] for c in g.cells])
            cols.append(side[g.region][eids])
        out.append(np.concatenate(cols, axis=1))
    return out


def interpolant_dofs(system: GlobalSystem, u=None):
    """Free DOF vector whose reconstruction is Q_h u (constraints subtracted)."""
    x = np.zeros(system.n)
    for g, ex in zip(system.groups, exact_interpolant(system, u)):
        free = g.idx >= 0
        x[g.idx[free]] = (ex - g.lift)[free]
    return x


def compute_errors(system: GlobalSystem, x, u=None):
    """Discrete errors between Q_h u and the WG solution with free DOFs ``x``.

    Returns a dict with ``e_l2`` (interior L2), ``e_h1`` (broken gradient
    of the interior part weighted by a), ``e_h1_sqrt`` (weighted by a^1/2)
    and ``e_energy`` (weak-gradient energy norm).
    """
    exact = exact_interpolant(system, u)
    s_l2 = s_h1 = s_h1s = s_en = 0.0
    for g, ex in zip(system.groups, exact):
        el = g.element
        d = ex - system.local_dofs(x, g)
        d0 = d[:, : el.nk]
        s_l2 += np.einsum("ci,ij,cj->", d0, el.gram_k, d0)
        A = system.problem.a(g.region)
        S = el.gradient_gram()
        A2 = A @ A
        s_h1 += sum(A2[a, b] * np.einsum("ci,ij,cj->", d0, S[a, b], d0) for a in range(2) for b in range(2))
        s_h1s += sum(A[a, b] * np.einsum("ci,ij,cj->", d0, S[a, b], d0) for a in range(2) for b in range(2))
        K = el.stiffness(A)
        s_en += np.einsum("ci,ij,cj->", d, K, d)
    return {
        "e_l2": math.sqrt(max(s_l2, 0.0)),
        "e_h1": math.sqrt(max(s_h1, 0.0)),
        "e_h1_sqrt": math.sqrt(max(s_h1s, 0.0)),
        "e_energy": math.sqrt(max(s_en, 0.0)),
    }


def energy_norm(system: GlobalSystem, local):
    """|||v||| for local DOF tables ``local`` (one per group)."""
    s = 0.0
    for g, d in zip(system.groups, local):
        s += np.einsum("ci,ij,cj->", d, g.element.stiffness(system.problem.a(g.region)), d)
    return math.sqrt(max(s, 0.0))


def discrete_h1_norm(system: GlobalSystem, local):
    """||v||_{1,h}: (a grad v0, grad v0)_T + h_T^-1 ||v0 - vb||^2_dT summed over cells."""
    s = 0.0
    for g, d in zip(system.groups, local):
        el = g.element
        A = system.problem.a(g.region)
        S = el.gradient_gram()
        d0 = d[:, : el.nk]
        s += sum(A[a, b] * np.einsum("ci,ij,cj->", d0, S[a, b], d0) for a in range(2) for b in range(2))
        hT = el.cell.diameter
        for i, er in enumerate(el.edge_rules):
            v0 = el.basis_k.eval(er.points)[0] @ d0.T
            vb = el.edge_legendre[i] @ d[:, el.edge_slice(i)].T
            s += (er.weights @ (v0 - vb) ** 2).sum() / hT
    return math.sqrt(max(s, 0.0))


def convergence_rates(errors, h, rtol=1e-6):
    """Observed orders log(e_{i-1}/e_i) / log(h_{i-1}/h_i); h must halve each step."""
    errors = np.asarray(errors, dtype=float)
    h = np.asarray(h, dtype=float)
    if len(errors) != len(h):
        raise RateError("errors and h differ in length")
    ratio = h[:-1] / h[1:]
    if np.any(np.abs(ratio - 2.0) > rtol * 2.0):
        raise RateError(f"mesh sizes must halve between levels, got ratios {ratio}")
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.log(errors[:-1] / errors[1:]) / np.log(ratio)


def locate_cell(mesh: Mesh, point, tol=1e-12):
    """Lowest-id cell containing ``point`` (closed cells)."""
    p = np.asarray(point, dtype=float)
    verts = mesh.vertices
    lo = np.array([verts[c].min(0) for c in mesh.cells])
    hi = np.array([verts[c].max(0) for c in mesh.cells])
    cand = np.flatnonzero(np.all((lo - tol <= p) & (p <= hi + tol), axis=1))
    for c in cand:
        for t in mesh.cell(c).triangles():
            a, b, cc = t
            scale = max(1.0, np.abs(t).max()) ** 2
            d1 = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
            d2 = (cc[0] - b[0]) * (p[1] - b[1]) - (cc[1] - b[1]) * (p[0] - b[0])
            d3 = (a[0] - cc[0]) * (p[1] - cc[1]) - (a[1] - cc[1]) * (p[0] - cc[0])
            if min(d1, d2, d3) >= -tol * scale:
                return int(c)
    raise ValueError(f"point {tuple(p)} lies outside the mesh")


def point_eval(system: GlobalSystem, x, point, approach=None):
    """Value of the interior polynomial u_0 of the cell containing ``point``.

    On shared cell boundaries the lowest cell id wins, unless ``approach``
    gives a direction: then the cell entered when moving from ``point``
    along it is used.
    """
    p = np.asarray(point, dtype=float)
    probe = p
    if approach is not None:
        d = np.asarray(approach, dtype=float)
        probe = p + 1e-6 * system.mesh.h * d / np.linalg.norm(d)
    c = locate_cell(system.mesh, probe)
    for g in system.groups:
        hit = np.flatnonzero(g.cells == c)
        if len(hit):
            j = hit[0]
            d = system.local_dofs(x, g)[j, : g.element.nk]
            rel = np.asarray(point, dtype=float) - g.offsets[j]
            return float(g.element.basis_k.eval(rel[None])[0][0] @ d)
    raise AssertionError("cell missing from groups")


@dataclass
class LevelRecord:
    level: int
    h: float
    dofs: int
    errors: dict


@dataclass
class StudyResult:
    """Per-level errors of one (problem, lambda, k, r rule, mesh) study."""

    metadata: dict
    records: list = field(default_factory=list)
    columns: tuple = ("e_l2", "e_h1", "e_energy")

    def series(self, key):
        return np.array([r.errors[key] for r in self.records])

    @property
    def h(self):
        return np.array([r.h for r in self.records])

    def rates(self, key):
        if len(self.records) < 2:
            return np.array([])
        return convergence_rates(self.series(key), self.h)

    def final_rate(self, key):
        return float(self.rates(key)[-1])

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        head = ["level", "h", "dofs"]
        for c in self.columns:
            head += [c, "rate_" + c[2:] if c.startswith("e_") else "rate_" + c]
        w.writerow(head)
        rates = {c: self.rates(c) if len(self.records) > 1 else [] for c in self.columns}
        for i, r in enumerate(self.records):
            row = [r.level, f"{r.h:.6e}", r.dofs]
            for c in self.columns:
                row.append(f"{r.errors[c]:.6e}")
                row.append(f"{rates[c][i - 1]:.6e}" if i > 0 else "")
            w.writerow(row)
        return buf.getvalue()

    def to_markdown(self):
        md = self.metadata
        title = ", ".join(f"{k}={v}" for k, v in md.items())
        head = "| level | " + " | ".join(f"{c} | O(h^r)" for c in self.columns) + " |"
        sep = "|---|" + "---|---|" * len(self.columns)
        lines = [f"**{title}**", "", head, sep]
        rates = {c: self.rates(c) if len(self.records) > 1 else [] for c in self.columns}
        for i, r in enumerate(self.records):
            cells = []
            for c in self.columns:
                cells.append(f"{r.errors[c]:.3E}")
                cells.append(f"{rates[c][i - 1]:.1f}" if i > 0 else "")
            lines.append(f"| {r.level} | " + " | ".join(cells) + " |")
        return "\n".join(lines) + "\n"
