"""Convergence study configuration, presets and the run loop."""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, replace

from .assembly import AssemblyError, assemble_system
from .mesh import FAMILIES, generate_mesh
from .postprocess import LevelRecord, StudyResult, compute_errors, point_eval
from .problems import PROBLEMS, problem_library
from .solver import SolverError, solve_spd

log = logging.getLogger(__name__)

LAMBDAS = (1e-3, 1.0, 1e3)
PROBE_POINTS = ((0.0, 0.0), (2.0 / 3.0, 2.0 / 3.0))
R_RULES = ("theory", "k+1", "k+2", "k+3")


class ConfigError(ValueError):
    pass


class StudyError(RuntimeError):
    pass


@dataclass
class StudyConfig:
    problem: str = "test1"
    lambdas: tuple = (1.0,)
    k: int = 1
    q: int = None
    r_rule: str = "k+2"
    mesh: str = "zigzag_hexagon"
    levels: tuple = (2, 3, 4)
    tol: float = 1e-12
    solver: str = "auto"
    out: str = None
    export_mesh: bool = False
    export_matrix: bool = False
    problem_spec: object = None  # a ProblemSpec overriding ``problem``
    reference_k: int = 4  # degree of the reference solution for point studies
    approach: tuple = None  # tie-break direction for point values on cell boundaries
    name: str = ""

    def __post_init__(self):
        if self.q is None:
            self.q = self.k

    def validate(self):
        if self.problem_spec is None and self.problem not in PROBLEMS:
            raise ConfigError(f"unknown problem {self.problem!r}; choose from {sorted(PROBLEMS)}")
        if not (self.k >= self.q >= 0):
            raise ConfigError(f"degrees must satisfy k >= q >= 0, got k={self.k}, q={self.q}")
        if self.r_rule not in R_RULES and self.r_rule != "theoretical":
            raise ConfigError(f"unknown r rule {self.r_rule!r}; choose from {R_RULES}")
        if self.mesh not in FAMILIES:
            raise ConfigError(f"unknown mesh family {self.mesh!r}; choose from {FAMILIES}")
        levels = list(self.levels)
        if not levels:
            raise ConfigError("level list is empty")
        if any(b <= a for a, b in zip(levels, levels[1:])) or levels[0] < 1:
            raise ConfigError(f"levels must be positive and strictly ascending, got {levels}")
        if not self.lambdas or any(not lam > 0 for lam in self.lambdas):
            raise ConfigError("lambda values must be positive and nonempty")
        if not self.tol > 0:
            raise ConfigError("tolerance must be positive")
        return self

    def problem_for(self, lam):
        if self.problem_spec is not None:
            return self.problem_spec
        return problem_library(self.problem, lam)


# preset number -> (problem, k, r rule, mesh, reference level labels).
# square_third grids are labelled one higher in the reference tables: their
# G_i has 3 * 2**(i-1) squares per side, so level = label - 1 there.
_TABLES = {}
for _n, (_k, _r) in enumerate([(1, "k+2"), (2, "k+2"), (3, "k+2"), (1, "k+3"), (2, "k+3"), (3, "k+3")]):
    _TABLES[_n + 1] = ("test1", _k, _r, "zigzag_hexagon", [(4, 5, 6), (3, 4, 5), (2, 3, 4)][_k - 1])
    _TABLES[_n + 7] = ("test2", _k, _r, "zigzag_hexagon", [(3, 4, 5), (2, 3, 4), (2, 3, 4)][_k - 1])
for _k in (1, 2, 3):
    _TABLES[12 + _k] = ("test3", _k, "k+1", "uniform_triangle", (3, 4, 5))

LABEL_OFFSET = {"line_x0": 0, "square_third": 1}


def preset(name) -> StudyConfig:
    """StudyConfig for ``table1`` ... ``table15``."""
    try:
        n = int(str(name).lower().removeprefix("table"))
        prob, k, r, mesh, labels = _TABLES[n]
    except (ValueError, KeyError):
        raise ConfigError(f"unknown preset {name!r}; use table1 .. table15") from None
    off = LABEL_OFFSET[problem_library(prob).interface]
    return StudyConfig(
        problem=prob, lambdas=LAMBDAS, k=k, r_rule=r, mesh=mesh,
        levels=tuple(lv - off for lv in labels), name=f"table{n}",
        approach=(1.0, 1.0) if prob == "test3" else None,
    )


def _solve(cfg, problem, level, k, tag):
    mesh = generate_mesh(cfg.mesh, level, problem.interface)
    try:
        system = assemble_system(mesh, problem, k, k if k != cfg.k else cfg.q, cfg.r_rule)
        report = solve_spd(system, tol=cfg.tol, method=cfg.solver)
    except (SolverError, AssemblyError) as exc:
        raise StudyError(f"{tag}: level {level}: {exc}") from exc
    return mesh, system, report


def run_single(cfg: StudyConfig, lam, inspect=None) -> StudyResult:
    """Run all levels of ``cfg`` for one lambda.

    ``inspect(system, report)`` is called for every solved system when given.
    """
    problem = cfg.problem_for(lam)
    tag = f"{problem.name} lambda={lam:g} k={cfg.k} r={cfg.r_rule} mesh={cfg.mesh}"
    meta = {"problem": problem.name, "lambda": f"{lam:g}", "k": cfg.k, "q": cfg.q,
            "r": cfg.r_rule, "mesh": cfg.mesh}
    pointwise = problem.u is None
    if pointwise:
        # differences against a higher-degree solution on the finest level
        ref_level = cfg.levels[-1]
        _, rsys, rrep = _solve(cfg, problem, ref_level, cfg.reference_k, tag)
        if inspect is not None:
            inspect(rsys, rrep)
        reference = [point_eval(rsys, rrep.x, p, cfg.approach) for p in PROBE_POINTS]
        meta["reference"] = f"k={cfg.reference_k} level {ref_level}"
        result = StudyResult(meta, columns=("e_p0", "e_p1"))
    else:
        result = StudyResult(meta)
    for level in cfg.levels:
        mesh, system, report = _solve(cfg, problem, level, cfg.k, tag)
        if inspect is not None:
            inspect(system, report)
        if pointwise:
            vals = [point_eval(system, report.x, p, cfg.approach) for p in PROBE_POINTS]
            errors = {"e_p0": abs(vals[0] - reference[0]), "e_p1": abs(vals[1] - reference[1])}
        else:
            errors = compute_errors(system, report.x)
        result.records.append(LevelRecord(level, mesh.h, system.n, errors))
        log.info("%s level %d: n=%d %s", tag, level, system.n, errors)
        if cfg.out:
            stem = os.path.join(cfg.out, _stem(cfg, lam) + f"_L{level}")
            if cfg.export_mesh:
                mesh.save(stem + "_mesh.json")
            if cfg.export_matrix:
                system.export_matrix(stem + "_matrix.mtx")
    return result


def _stem(cfg, lam):
    base = cfg.name or (cfg.problem if cfg.problem_spec is None else "custom")
    return f"{base}_k{cfg.k}_{cfg.r_rule.replace('+', 'p')}_{cfg.mesh}_lam{lam:g}"


def run_study(cfg: StudyConfig, inspect=None):
    """Run every lambda of ``cfg``; writes CSV and markdown when ``cfg.out`` is set."""
    cfg.validate()
    if cfg.out:
        os.makedirs(cfg.out, exist_ok=True)
    results = []
    for lam in cfg.lambdas:
        res = run_single(cfg, lam, inspect)
        results.append(res)
        if cfg.out:
            stem = os.path.join(cfg.out, _stem(cfg, lam))
            with open(stem + ".csv", "w") as fh:
                fh.write(res.to_csv())
    if cfg.out:
        with open(os.path.join(cfg.out, (cfg.name or "study") + ".md"), "w") as fh:
            fh.write("\n".join(r.to_markdown() for r in results))
    return results


def with_levels(cfg: StudyConfig, levels) -> StudyConfig:
    return replace(cfg, levels=tuple(levels))


def final_rates(results, keys):
    """{lambda: {key: final rate}} for a list of StudyResults."""
    return {r.metadata["lambda"]: {k: r.final_rate(k) for k in keys} for r in results}


__all__ = ["ConfigError", "StudyConfig", "StudyError", "preset", "run_study", "run_single",
           "final_rates", "with_levels", "LAMBDAS", "PROBE_POINTS"]
