import numpy as np
import pytest

from wgiface.assembly import assemble_system
from wgiface.mesh import FAMILIES, generate_mesh
from wgiface.postprocess import (
    LevelRecord,
    RateError,
    StudyResult,
    compute_errors,
    convergence_rates,
    discrete_h1_norm,
    energy_norm,
    exact_interpolant,
    interpolant_dofs,
    locate_cell,
    point_eval,
)
from wgiface.problems import ProblemSpec, problem_library
from wgiface.solver import solve_spd


def linear_problem():
    return ProblemSpec("lin", "line_x0", {1: 1.0, 2: 1.0}, f=lambda x, y, r: 0 * x,
                       g=lambda x, y: x + y, u=lambda x, y, r: x + y + 0 * x)


@pytest.mark.parametrize(
    "errors,h,expected",
    [([4.0, 1.0], [1.0, 0.5], [2.0]), ([1.0, 1.0], [1.0, 0.5], [0.0]), ([8, 4, 2], [1, 0.5, 0.25], [1, 1])],
)
def test_rates(errors, h, expected):
    np.testing.assert_allclose(convergence_rates(errors, h), expected, atol=1e-14)


def test_rates_reject_non_halving():
    with pytest.raises(RateError):
        convergence_rates([1.0, 0.5], [1.0, 0.6])
    with pytest.raises(RateError):
        convergence_rates([1.0, 0.5, 0.1], [1.0, 0.5])


def test_rates_on_reference_column():
    # a reference P3 column (lambda = 1) with printed orders 2.9 / 3.0
    r = convergence_rates([0.898e-02, 0.115e-02, 0.145e-03], [1, 0.5, 0.25])
    np.testing.assert_allclose(r, [2.965, 2.988], atol=5e-3)


@pytest.mark.parametrize("name,lam", [("test1", 1e-3), ("test1", 1e3), ("test2", 1.0)])
def test_interpolant_has_zero_error(name, lam):
    prob = problem_library(name, lam)
    system = assemble_system(generate_mesh("zigzag_hexagon", 2, prob.interface), prob, 1)
    e = compute_errors(system, interpolant_dofs(system))
    assert max(e.values()) < 1e-11


def test_error_of_zero_vector_is_norm_of_interpolant():
    system = assemble_system(generate_mesh("uniform_square", 2), linear_problem(), 1)
    e = compute_errors(system, np.zeros(system.n))
    # interior part of zero free DOFs is 0, so e_l2 = ||Q_0 u|| = ||x + y|| on [-1, 1]^2
    assert e["e_l2"] == pytest.approx(np.sqrt(8.0 / 3.0), rel=1e-12)


@pytest.mark.parametrize("family", FAMILIES)
def test_point_eval_patch(family):
    system = assemble_system(generate_mesh(family, 2), linear_problem(), 1)
    x = solve_spd(system).x
    assert point_eval(system, x, (0.3, 0.4)) == pytest.approx(0.7, abs=1e-10)
    assert point_eval(system, x, (0.0, 0.0), approach=(1, 1)) == pytest.approx(0.0, abs=1e-10)


def test_locate_cell_lowest_id_and_outside():
    mesh = generate_mesh("uniform_square", 1)
    c = locate_cell(mesh, (0.0, 0.0))
    hits = [i for i in range(mesh.n_cells) if np.any(np.all(np.isclose(mesh.vertices[mesh.cells[i]], 0), axis=1))]
    assert c == min(hits)
    with pytest.raises(ValueError):
        locate_cell(mesh, (2.0, 0.0))


def test_norms_vanish_on_constants_only():
    system = assemble_system(generate_mesh("zigzag_hexagon", 1), linear_problem(), 1)
    const = exact_interpolant(system, lambda x, y, r: 1.0 + 0 * x)
    # norms are square roots, so 1e-14 rounding shows up as 1e-7
    assert energy_norm(system, const) < 1e-6
    assert discrete_h1_norm(system, const) < 1e-6
    lin = exact_interpolant(system, lambda x, y, r: x + 0 * y)
    assert energy_norm(system, lin) == pytest.approx(2.0, rel=1e-12)
    assert discrete_h1_norm(system, lin) == pytest.approx(2.0, rel=1e-12)


def _result():
    res = StudyResult({"problem": "p", "lambda": "1"})
    for i, h in enumerate([0.5, 0.25, 0.125]):
        e = 0.1 * h ** 2
        res.records.append(LevelRecord(i + 1, h, 10 * 4 ** i, {"e_l2": e, "e_h1": h, "e_energy": h}))
    return res


def test_study_result_tables():
    res = _result()
    assert res.final_rate("e_l2") == pytest.approx(2.0)
    csv = res.to_csv()
    lines = csv.splitlines()
    assert lines[0] == "level,h,dofs,e_l2,rate_l2,e_h1,rate_h1,e_energy,rate_energy"
    assert lines[2].split(",")[4] == "2.000000e+00"
    assert csv == _result().to_csv()
    md = res.to_markdown()
    assert "| 3 |" in md and "2.0" in md
