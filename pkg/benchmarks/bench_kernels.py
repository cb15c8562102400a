"""Compare the compiled and numpy kernel backends.

Run with ``python3 benchmarks/bench_kernels.py [--repeat N]``. Each kernel is
timed on both backends with identical inputs; results must agree before the
timing is reported.
"""

import argparse
import time

import numpy as np
import scipy.sparse as sp

from wgiface import kernels
from wgiface.assembly import assemble_system
from wgiface.mesh import generate_mesh
from wgiface.problems import problem_library
from wgiface.weak_gradient import ElementCache


def best_of(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def poisson_2d(n):
    main = 4 * np.ones(n * n)
    off = -np.ones(n * n - 1)
    off[np.arange(1, n * n) % n == 0] = 0
    A = sp.diags([main, off, off, -np.ones(n * n - n), -np.ones(n * n - n)], [0, 1, -1, n, -n])
    return sp.csr_matrix(A)


def star_polygon(n, rng):
    t = np.sort(rng.uniform(0, 2 * np.pi, n))
    r = rng.uniform(0.5, 1.0, n)
    return np.column_stack([r * np.cos(t), r * np.sin(t)])


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    found = kernels.backends()
    print(f"backends: {', '.join(found)} (active: {kernels.BACKEND})")

    pts = rng.uniform(-1, 1, (20000, 2))
    polys = [star_polygon(40, rng) for _ in range(200)]
    A = poisson_2d(150)
    b = rng.standard_normal(A.shape[0])
    A32 = (A.indptr.astype(np.int32), A.indices.astype(np.int32), A.data)

    cases = {
        "monomials deg 8, 20k pts": lambda m: m.monomials(pts, 0.1, -0.2, 0.7, 8),
        "ear_clip 200 x 40-gon": lambda m: [m.ear_clip(p, 1e-12) for p in polys],
        "pcg poisson 150^2": lambda m: m.pcg_csr(*A32, b, 1e-10, 5000),
    }
    print(f"{'kernel':28s}" + "".join(f"{name:>12s}" for name in found) + "     speedup")
    for label, fn in cases.items():
        times, outs = {}, {}
        for name, mod in found.items():
            times[name], outs[name] = best_of(lambda: fn(mod), args.repeat)
        if len(found) > 1:
            _check(label, outs["python"], outs["cython"])
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        print(f"{label:28s}" + "".join(f"{times[n] * 1e3:10.1f}ms" for n in found) + f"  {speed:8.1f}x")

    # end to end: assembly with the element cache off so every cell is rebuilt
    mesh = generate_mesh("zigzag_hexagon", 3)
    prob = problem_library("test1", 1.0)
    t, _ = best_of(lambda: assemble_system(mesh, prob, 2, cache=ElementCache(enabled=False)), 1)
    tc, _ = best_of(lambda: assemble_system(mesh, prob, 2, cache=ElementCache()), 1)
    print(f"assembly zigzag L3 k=2 ({kernels.BACKEND}): uncached {t:.2f}s, shape-cached {tc:.3f}s")


def _check(label, a, b):
    if label.startswith("ear_clip"):
        ok = all((x is None and y is None) or np.array_equal(x, y) for x, y in zip(a, b))
    elif label.startswith("pcg"):
        ok = np.allclose(a[0], b[0], atol=1e-8) and a[3] == b[3]
    else:
        ok = all(np.allclose(x, y, rtol=1e-12, atol=1e-12) for x, y in zip(a, b))
    if not ok:
        raise SystemExit(f"backends disagree on {label}")


if __name__ == "__main__":
    main()
