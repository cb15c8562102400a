"""Pure numpy fallback for the compiled kernels in ``_ckernels.pyx``.

Every function here has the same signature and return convention as its
compiled twin so :mod:`wgiface.kernels` can swap them freely.
"""

import numpy as np


def monomials(points, cx, cy, h, degree):
    points = np.asarray(points, dtype=float)
    X = (points[:, 0] - cx) / h
    Y = (points[:, 1] - cy) / h
    powx = np.ones((degree + 1, len(points)))
    powy = np.ones((degree + 1, len(points)))
    for d in range(1, degree + 1):
        powx[d] = powx[d - 1] * X
        powy[d] = powy[d - 1] * Y
    ax, by = [], []
    for d in range(degree + 1):
        for a in range(d, -1, -1):
            ax.append(a)
            by.append(d - a)
    ax = np.array(ax)
    by = np.array(by)
    val = (powx[ax] * powy[by]).T
    dx = (ax[:, None] * powx[np.maximum(ax - 1, 0)] * powy[by]).T / h
    dy = (by[:, None] * powx[ax] * powy[np.maximum(by - 1, 0)]).T / h
    return np.ascontiguousarray(val), np.ascontiguousarray(dx), np.ascontiguousarray(dy)


def _cross(a, b, c):
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def ear_clip(xy, rel_tol=1e-12):
    xy = np.asarray(xy, dtype=float)
    n = len(xy)
    if n < 3:
        raise ValueError("polygon needs at least 3 vertices")
    span = xy.max(axis=0) - xy.min(axis=0)
    tol = rel_tol * float(span @ span)
    ring = list(range(n))
    tris = []
    while len(ring) > 3:
        m = len(ring)
        for i in range(m):
            prev, cur, nxt = ring[i - 1], ring[i], ring[(i + 1) % m]
            if _cross(xy[prev], xy[cur], xy[nxt]) <= tol:
                continue
            blocked = False
            for j in ring:
                if j in (prev, cur, nxt):
                    continue
                p = xy[j]
                if (_cross(xy[prev], xy[cur], p) >= -tol and _cross(xy[cur], xy[nxt], p) >= -tol
                        and _cross(xy[nxt], xy[prev], p) >= -tol):
                    blocked = True
                    break
            if blocked:
                continue
            tris.append((prev, cur, nxt))
            del ring[i]
            break
        else:
            return None
    if _cross(xy[ring[0]], xy[ring[1]], xy[ring[2]]) <= tol:
        return None
    tris.append(tuple(ring))
    return np.array(tris, dtype=np.intp)


def pcg_csr(indptr, indices, data, b, tol, maxiter):
    import scipy.sparse as sp

    n = len(b)
    A = sp.csr_matrix((data, indices, indptr), shape=(n, n))
    diag = A.diagonal()
    x = np.zeros(n)
    if np.any(diag <= 0.0):
        return x, 0, [], 2
    dinv = 1.0 / diag
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return x, 0, [0.0], 0
    r = np.array(b, dtype=float)
    z = dinv * r
    p = z.copy()
    rz = r @ z
    history = [1.0]
    status, it = 1, 0
    while it < maxiter:
        ap = A @ p
        pap = p @ ap
        if pap <= 0.0:
            status = 2
            break
        alpha = rz / pap
        x += alpha * p
        r -= alpha * ap
        it += 1
        rel = np.linalg.norm(r) / bnorm
        history.append(rel)
        if rel <= tol:
            status = 0
            break
        z = dinv * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x, it, history, status
