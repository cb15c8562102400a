"""Interface test problems, a generic problem container and a text config loader."""

from __future__ import annotations

import ast
import operator
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .mesh import in_region_one
from .weak_gradient import coefficient_tensor


class TranscriptionError(AssertionError):
    pass


def _zero(x, y):
    return np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape)


@dataclass
class ProblemSpec:
    """Data of -div(a grad u) = f with Dirichlet g and interface jumps g_D, g_N.

    Callables taking a region id receive it as an int and are evaluated on
    points of that region only.
    """

    name: str
    interface: str
    coefficients: dict
    f: Callable
    g: Callable = _zero
    g_D: Callable = _zero
    g_N: Callable = _zero
    u: Optional[Callable] = None
    grad_u: Optional[Callable] = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.coefficients = {int(r): coefficient_tensor(a) for r, a in self.coefficients.items()}

    @property
    def has_exact(self):
        return self.u is not None

    def a(self, region):
        return self.coefficients[int(region)]

    def region_of(self, x, y):
        return np.where(in_region_one(x, y, self.interface), 1, 2)

    def scaled(self, factor):
        """Same problem with solution and all data multiplied by ``factor``."""
        s = float(factor)
        p = self
        return ProblemSpec(
            p.name, p.interface, dict(p.coefficients),
            f=lambda x, y, r: s * p.f(x, y, r),
            g=lambda x, y: s * p.g(x, y),
            g_D=lambda x, y: s * p.g_D(x, y),
            g_N=lambda x, y: s * p.g_N(x, y),
            u=None if p.u is None else (lambda x, y, r: s * p.u(x, y, r)),
            grad_u=None if p.grad_u is None else (lambda x, y, r: s * p.grad_u(x, y, r)),
            params=dict(p.params, scale=s),
        )

    def with_source_shift(self, delta):
        """Copy with f + delta; keeps the (now wrong) exact solution. Negative control."""
        p = self
        return ProblemSpec(
            p.name + "+df", p.interface, dict(p.coefficients),
            f=lambda x, y, r: p.f(x, y, r) + delta,
            g=p.g, g_D=p.g_D, g_N=p.g_N, u=p.u, grad_u=p.grad_u,
            params=dict(p.params, source_shift=delta),
        )


def _test1(lam):
    def u(x, y, r):
        if r == 1:
            return (1 + x) * (1 - y ** 2) * (1 - x / lam)
        return (1 - x) * (1 - y ** 2) * (1 + lam * x)

    def grad_u(x, y, r):
        if r == 1:
            ux = (1 - y ** 2) * ((1 - x / lam) - (1 + x) / lam)
            uy = -2 * y * (1 + x) * (1 - x / lam)
        else:
            ux = (1 - y ** 2) * (-(1 + lam * x) + lam * (1 - x))
            uy = -2 * y * (1 - x) * (1 + lam * x)
        return np.stack(np.broadcast_arrays(ux, uy), axis=-1)

    def f(x, y, r):
        if r == 1:
            return -2 * x ** 2 + (2 * lam - 2) * x - 2 * y ** 2 + 2 * lam + 2
        return (-2 * x ** 2 - 2 * y ** 2 + 2 * x + 2) * lam - 2 * x + 2

    return ProblemSpec("test1", "line_x0", {1: lam, 2: 1.0}, f, u=u, grad_u=grad_u,
                       params={"lambda": lam})


def _bubble(x, y):
    return (1 - x ** 2) * (1 - y ** 2) * (1 - 9 * x ** 2) * (1 - 9 * y ** 2)


def _bubble_grad(x, y):
    px = (-2 * x * (1 - 9 * x ** 2) - 18 * x * (1 - x ** 2)) * (1 - y ** 2) * (1 - 9 * y ** 2)
    py = (-2 * y * (1 - 9 * y ** 2) - 18 * y * (1 - y ** 2)) * (1 - x ** 2) * (1 - 9 * x ** 2)
    return np.stack(np.broadcast_arrays(px, py), axis=-1)


def _test2(lam):
    def u(x, y, r):
        return _bubble(x, y) if r == 1 else _bubble(x, y) / lam

    def grad_u(x, y, r):
        return _bubble_grad(x, y) if r == 1 else _bubble_grad(x, y) / lam

    def f(x, y, r):
        return -4 * (243 * x ** 4 * y ** 2 + 243 * x ** 2 * y ** 4 - 45 * x ** 4 - 540 * x ** 2 * y ** 2
                     - 45 * y ** 4 + 77 * x ** 2 + 77 * y ** 2 - 10)

    return ProblemSpec("test2", "square_third", {1: 1.0, 2: lam}, f, u=u, grad_u=grad_u,
                       params={"lambda": lam})


def _test3(lam):
    def f(x, y, r):
        return np.ones(np.broadcast(np.asarray(x), np.asarray(y)).shape)

    return ProblemSpec("test3", "square_third", {1: 1.0, 2: lam}, f, params={"lambda": lam})


PROBLEMS = {"test1": _test1, "test2": _test2, "test3": _test3}


def problem_library(name, lam=1.0) -> ProblemSpec:
    """One of the built-in problems ``test1``, ``test2``, ``test3`` for contrast ``lam``."""
    if name not in PROBLEMS:
        raise KeyError(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}")
    if not lam > 0:
        raise ValueError("lambda must be positive")
    return PROBLEMS[name](float(lam))


def verify_exact_solution(problem: ProblemSpec, n_samples=128, step=1e-4, tol=1e-6, seed=0):
    """Check u against f, the interface jumps and g by sampling.

    The PDE residual uses a 5-point Laplacian with step ``step`` scaled by the
    local magnitude of u. Raises TranscriptionError on the first violation and
    returns a dict of maximum residuals otherwise.
    """
    if problem.u is None:
        raise ValueError(f"problem {problem.name} has no exact solution")
    rng = np.random.default_rng(seed)
    report = {}
    margin = 2 * step
    for region in (1, 2):
        pts = []
        while len(pts) < n_samples:
            cand = rng.uniform(-1 + margin, 1 - margin, size=(4 * n_samples, 2))
            keep = problem.region_of(cand[:, 0], cand[:, 1]) == region
            # stay a stencil away from the interface
            for sx, sy in ((margin, 0), (-margin, 0), (0, margin), (0, -margin)):
                keep &= problem.region_of(cand[:, 0] + sx, cand[:, 1] + sy) == region
            pts.extend(cand[keep].tolist())
        x, y = np.array(pts[:n_samples]).T
        A = problem.a(region)
        u = lambda xx, yy: problem.u(xx, yy, region)
        uxx = (u(x + step, y) - 2 * u(x, y) + u(x - step, y)) / step ** 2
        uyy = (u(x, y + step) - 2 * u(x, y) + u(x, y - step)) / step ** 2
        uxy = (u(x + step, y + step) - u(x + step, y - step) - u(x - step, y + step)
               + u(x - step, y - step)) / (4 * step ** 2)
        lhs = -(A[0, 0] * uxx + 2 * A[0, 1] * uxy + A[1, 1] * uyy)
        rhs = problem.f(x, y, region)
        # rounding in the stencil grows like |a| eps max|u| / step^2
        scale = max(1.0, np.abs(A).max() * max(1.0, float(np.abs(u(x, y)).max())))
        res = np.abs(lhs - rhs) / scale
        report[f"pde_region{region}"] = float(res.max())
        if res.max() > tol:
            i = int(res.argmax())
            raise TranscriptionError(
                f"{problem.name}: PDE residual {res[i]:.3e} at ({x[i]:.4f}, {y[i]:.4f}) in region {region}"
            )
    gamma = _interface_samples(problem.interface, n_samples, rng)
    jump_u, jump_flux = [], []
    for (px, py), n1 in gamma:
        u1 = problem.u(px, py, 1)
        u2 = problem.u(px, py, 2)
        jump_u.append(abs(u1 - u2 - problem.g_D(px, py)))
        if problem.grad_u is not None:
            fl1 = problem.a(1) @ problem.grad_u(px, py, 1) @ n1
            fl2 = problem.a(2) @ problem.grad_u(px, py, 2) @ (-n1)
            jump_flux.append(abs(fl1 + fl2 - problem.g_N(px, py)))
    report["jump_u"] = float(max(jump_u))
    report["jump_flux"] = float(max(jump_flux)) if jump_flux else 0.0
    if report["jump_u"] > 1e-9 or report["jump_flux"] > 1e-9:
        raise TranscriptionError(f"{problem.name}: interface conditions violated {report}")
    s = rng.uniform(-1, 1, n_samples)
    bx = np.concatenate([s, s, -np.ones_like(s), np.ones_like(s)])
    by = np.concatenate([-np.ones_like(s), np.ones_like(s), s, s])
    reg = problem.region_of(bx, by)
    bres = max(
        float(np.abs(problem.u(bx[reg == r], by[reg == r], r) - problem.g(bx[reg == r], by[reg == r])).max(initial=0.0))
        for r in (1, 2)
    )
    report["boundary"] = bres
    if bres > 1e-12:
        raise TranscriptionError(f"{problem.name}: boundary mismatch {bres:.3e}")
    return report


def _interface_samples(interface, n, rng):
    """Points on the interface with the unit normal pointing out of region 1."""
    out = []
    if interface == "line_x0":
        for y in rng.uniform(-1, 1, n):
            out.append(((0.0, float(y)), np.array([1.0, 0.0])))
        return out
    t = 1.0 / 3.0
    for s in rng.uniform(-t, t, n):
        s = float(s)
        out += [((t, s), np.array([1.0, 0.0])), ((-t, s), np.array([-1.0, 0.0])),
                ((s, t), np.array([0.0, 1.0])), ((s, -t), np.array([0.0, -1.0]))]
    return out


# ---------------------------------------------------------------- expressions

_BINOPS = {
    ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
    ast.Div: operator.truediv, ast.Pow: operator.pow,
}
_UNARY = {ast.UAdd: operator.pos, ast.USub: operator.neg}
_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "sqrt": np.sqrt, "abs": np.abs}
_CONSTS = {"pi": np.pi, "e": np.e}


class ExpressionError(ValueError):
    pass


def compile_expression(text, variables=("x", "y"), constants=None):
    """Compile an arithmetic expression string into a vectorized callable.

    Supports + - * / ^ (power), parentheses, numbers, the variables, named
    constants and a few elementary functions. Nothing else is evaluated.
    """
    consts = dict(_CONSTS, **(constants or {}))
    try:
        tree = ast.parse(str(text).replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {text!r}: {exc.msg}") from None

    def check(node):
        if isinstance(node, ast.Expression):
            return check(node.body)
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return check(node.left) and check(node.right)
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
            return check(node.operand)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return True
        if isinstance(node, ast.Name):
            if node.id in variables or node.id in consts:
                return True
            raise ExpressionError(f"unknown name {node.id!r} in {text!r}")
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS
                and len(node.args) == 1 and not node.keywords):
            return check(node.args[0])
        raise ExpressionError(f"unsupported syntax in {text!r}")

    check(tree)

    def ev(node, env):
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](ev(node.left, env), ev(node.right, env))
        if isinstance(node, ast.UnaryOp):
            return _UNARY[type(node.op)](ev(node.operand, env))
        if isinstance(node, ast.Constant):
            return float(node.value)
        if isinstance(node, ast.Name):
            return env[node.id] if node.id in env else consts[node.id]
        return _FUNCS[node.func.id](ev(node.args[0], env))

    def fn(*args):
        env = {name: np.asarray(a, dtype=float) for name, a in zip(variables, args)}
        shape = np.broadcast(*env.values()).shape
        return np.broadcast_to(ev(tree.body, env), shape).astype(float)

    fn.source = text
    return fn


def _per_region(spec, what):
    """Expression or {region: expression} -> f(x, y, region)."""
    if isinstance(spec, dict):
        funcs = {int(r): compile_expression(s) for r, s in spec.items()}
        missing = {1, 2} - set(funcs)
        if missing:
            raise ExpressionError(f"{what}: missing region(s) {sorted(missing)}")
        return lambda x, y, r: funcs[int(r)](x, y)
    fn = compile_expression(spec)
    return lambda x, y, r: fn(x, y)


def problem_from_config(config: dict, name="custom") -> ProblemSpec:
    """Build a ProblemSpec from a parsed config mapping.

    Keys: ``interface`` (line_x0 | square_third), ``coefficients`` (region ->
    number or 2x2 list), ``f`` (expression or region -> expression), optional
    ``g``, ``g_D``, ``g_N`` expressions and optional ``u`` (exact solution).
    """
    try:
        interface = config["interface"]
        coeffs = {int(r): v for r, v in config["coefficients"].items()}
        f = _per_region(config["f"], "f")
    except KeyError as exc:
        raise ExpressionError(f"config is missing required key {exc.args[0]!r}") from None
    extra = {k: compile_expression(config[k]) for k in ("g", "g_D", "g_N") if k in config}
    u = _per_region(config["u"], "u") if "u" in config else None
    return ProblemSpec(config.get("name", name), interface, coeffs, f, u=u, **extra)


def load_problem(path) -> ProblemSpec:
    """Read a TOML problem description (see :func:`problem_from_config`)."""
    try:
        import tomllib
    except ImportError:  # Python < 3.11
        import tomli as tomllib
    with open(path, "rb") as fh:
        cfg = tomllib.load(fh)
    return problem_from_config(cfg, name=str(path))
