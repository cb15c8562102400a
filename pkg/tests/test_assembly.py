import numpy as np
import pytest

from wgiface.assembly import AssemblyError, assemble_system, build_dof_map
from wgiface.mesh import BOUNDARY, FAMILIES, generate_mesh
from wgiface.postprocess import compute_errors, interpolant_dofs
from wgiface.problems import ProblemSpec, problem_library
from wgiface.solver import solve_spd
from wgiface.weak_gradient import ElementCache


def linear_problem(lam=1.0):
    # u = x/lam + y left of x = 0 and x + y right of it: continuous, flux-continuous
    def u(x, y, r):
        return np.where(r == 1, x / lam + y, x + y) + 0 * y

    def g(x, y):
        return np.where(x < 0, x / lam + y, x + y)

    return ProblemSpec("linear", "line_x0", {1: lam, 2: 1.0}, f=lambda x, y, r: 0 * x, g=g, u=u)


@pytest.mark.parametrize("family", FAMILIES)
@pytest.mark.parametrize("k,q", [(1, 1), (2, 2), (2, 1), (1, 0)])
def test_dof_counts(family, k, q):
    mesh = generate_mesh(family, 2)
    dm = build_dof_map(mesh, k, q)
    n_edges_free = int((mesh.edge_tags != BOUNDARY).sum())
    assert dm.n_free == mesh.n_cells * (k + 1) * (k + 2) // 2 + n_edges_free * (q + 1)


def test_degree_order_enforced():
    with pytest.raises(ValueError):
        build_dof_map(generate_mesh("uniform_square", 1), 1, 2)


@pytest.mark.parametrize("family", FAMILIES)
def test_zero_data_gives_zero_solution(family):
    mesh = generate_mesh(family, 2)
    zero = ProblemSpec("zero", "line_x0", {1: 5.0, 2: 1.0}, f=lambda x, y, r: 0 * x)
    sys_ = assemble_system(mesh, zero, 2)
    assert np.all(sys_.b == 0)
    assert np.abs(solve_spd(sys_).x).max() == 0.0


@pytest.mark.parametrize("family", FAMILIES)
@pytest.mark.parametrize("lam", [1e-3, 1.0, 1e3])
def test_piecewise_linear_interface_patch(family, lam):
    mesh = generate_mesh(family, 2)
    system = assemble_system(mesh, linear_problem(lam), 1)
    e = compute_errors(system, solve_spd(system).x)
    assert e["e_l2"] < 1e-9 * max(1, 1 / lam)
    assert e["e_energy"] < 1e-8 * max(1, lam, 1 / lam)


def test_interface_jump_data():
    # u1 = x + y + 1 and u2 = x + y: value jump 1; u1 = 2x + y: flux jump 1
    mesh = generate_mesh("zigzag_hexagon", 2)
    cases = [
        (lambda x, y, r: x + y + (r == 1), lambda x, y: 1.0 + 0 * x, lambda x, y: 0 * x),
        (lambda x, y, r: np.where(r == 1, 2 * x, x) + y, lambda x, y: 0 * x, lambda x, y: 1.0 + 0 * x),
    ]
    for u, gD, gN in cases:
        prob = ProblemSpec(
            "jump", "line_x0", {1: 1.0, 2: 1.0}, f=lambda x, y, r: 0 * x,
            g=lambda x, y, u=u: u(x, y, np.where(x < 0, 1, 2)), g_D=gD, g_N=gN, u=u,
        )
        system = assemble_system(mesh, prob, 1)
        e = compute_errors(system, solve_spd(system).x)
        assert e["e_l2"] < 1e-10 and e["e_energy"] < 1e-9


@pytest.mark.parametrize("family", FAMILIES)
def test_quadratic_patch(family):
    prob = ProblemSpec("quad", "line_x0", {1: 1.0, 2: 1.0}, f=lambda x, y, r: -4.0 + 0 * x,
                       g=lambda x, y: x * x + y * y, u=lambda x, y, r: x * x + y * y)
    system = assemble_system(generate_mesh(family, 2), prob, 2)
    assert compute_errors(system, solve_spd(system).x)["e_l2"] < 1e-10


def test_interpolant_injected_has_zero_error():
    system = assemble_system(generate_mesh("zigzag_hexagon", 2), problem_library("test1", 1e3), 2)
    e = compute_errors(system, interpolant_dofs(system))
    assert max(e.values()) < 1e-11


def test_error_equation_residual_vanishes_for_linear_u():
    # A Q_h u = b when grad u lies in the weak-gradient space
    system = assemble_system(generate_mesh("zigzag_hexagon", 2), linear_problem(10.0), 1)
    x = interpolant_dofs(system)
    res = system.A @ x - system.b
    assert np.abs(res).max() < 1e-10 * np.abs(system.b).max() + 1e-12


@pytest.mark.parametrize("k", [1, 2])
def test_symmetry_and_definiteness(k):
    system = assemble_system(generate_mesh("zigzag_hexagon", 2), problem_library("test1", 1e-3), k)
    assert system.symmetry_error() < 1e-12
    assert np.linalg.eigvalsh(system.A.toarray()).min() > 0


def test_sparsity_pattern_independent_of_lambda():
    mesh = generate_mesh("zigzag_hexagon", 2)
    patterns = []
    for lam in (1e-3, 1.0, 1e3):
        A = assemble_system(mesh, problem_library("test1", lam), 1).A
        patterns.append((A.indptr.copy(), A.indices.copy()))
    for p in patterns[1:]:
        np.testing.assert_array_equal(p[0], patterns[0][0])
        np.testing.assert_array_equal(p[1], patterns[0][1])


def test_cache_does_not_change_system():
    mesh = generate_mesh("zigzag_hexagon", 2)
    prob = problem_library("test1", 1.0)
    a = assemble_system(mesh, prob, 2, cache=ElementCache(enabled=False))
    cache = ElementCache()
    b = assemble_system(mesh, prob, 2, cache=cache)
    assert abs(a.A - b.A).max() < 1e-11 * abs(a.A).max()
    np.testing.assert_allclose(a.b, b.b, atol=1e-12)
    assert len(cache) < mesh.n_cells


def test_unfitted_mesh_rejected():
    mesh = generate_mesh("uniform_square", 1, "line_x0")
    with pytest.raises(AssemblyError):
        assemble_system(mesh, problem_library("test2"), 1)


def test_matrix_export(tmp_path):
    import scipy.io

    system = assemble_system(generate_mesh("uniform_triangle", 1), problem_library("test1"), 1)
    system.export_matrix(tmp_path / "A.mtx")
    back = scipy.io.mmread(tmp_path / "A.mtx")
    assert abs(back - system.A).max() < 1e-14
