# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: scaled-monomial tabulation, ear clipping, Jacobi PCG.

Signatures mirror :mod:`wgiface._pykernels` exactly.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


def monomials(const double[:, ::1] points, double cx, double cy, double h, int degree):
    cdef Py_ssize_t n = points.shape[0]
    cdef Py_ssize_t dim = (degree + 1) * (degree + 2) // 2
    cdef cnp.ndarray[double, ndim=2] val = np.empty((n, dim))
    cdef cnp.ndarray[double, ndim=2] dx = np.empty((n, dim))
    cdef cnp.ndarray[double, ndim=2] dy = np.empty((n, dim))
    cdef double[:, ::1] V = val
    cdef double[:, ::1] DX = dx
    cdef double[:, ::1] DY = dy
    cdef double[64] px
    cdef double[64] py
    cdef Py_ssize_t p, j
    cdef int d, a, b
    cdef double X, Y, inv_h = 1.0 / h
    if degree > 62:
        raise ValueError("degree too large for compiled tabulation")
    for p in range(n):
        X = (points[p, 0] - cx) * inv_h
        Y = (points[p, 1] - cy) * inv_h
        px[0] = 1.0
        py[0] = 1.0
        for d in range(1, degree + 1):
            px[d] = px[d - 1] * X
            py[d] = py[d - 1] * Y
        j = 0
        for d in range(degree + 1):
            for a in range(d, -1, -1):
                b = d - a
                V[p, j] = px[a] * py[b]
                DX[p, j] = a * px[a - 1] * py[b] * inv_h if a > 0 else 0.0
                DY[p, j] = b * px[a] * py[b - 1] * inv_h if b > 0 else 0.0
                j += 1
    return val, dx, dy


cdef inline double _cross(double ax, double ay, double bx, double by, double cx, double cy):
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def ear_clip(const double[:, ::1] xy, double rel_tol=1e-12):
    cdef Py_ssize_t n = xy.shape[0]
    cdef Py_ssize_t i, j, m, prev, nxt, cur, t = 0
    cdef double scale2, tol, c, c1, c2, c3
    cdef double xmin, xmax, ymin, ymax
    cdef bint ok, found
    if n < 3:
        raise ValueError("polygon needs at least 3 vertices")
    xmin = xmax = xy[0, 0]
    ymin = ymax = xy[0, 1]
    for i in range(n):
        xmin = min(xmin, xy[i, 0]); xmax = max(xmax, xy[i, 0])
        ymin = min(ymin, xy[i, 1]); ymax = max(ymax, xy[i, 1])
    scale2 = (xmax - xmin) ** 2 + (ymax - ymin) ** 2
    tol = rel_tol * scale2
    cdef cnp.ndarray[cnp.intp_t, ndim=1] ring_arr = np.arange(n, dtype=np.intp)
    cdef cnp.intp_t[::1] ring = ring_arr
    cdef cnp.ndarray[cnp.intp_t, ndim=2] tris = np.empty((n - 2, 3), dtype=np.intp)
    m = n
    while m > 3:
        found = False
        for i in range(m):
            prev = ring[(i + m - 1) % m]
            cur = ring[i]
            nxt = ring[(i + 1) % m]
            c = _cross(xy[prev, 0], xy[prev, 1], xy[cur, 0], xy[cur, 1], xy[nxt, 0], xy[nxt, 1])
            if c <= tol:
                continue
            ok = True
            for j in range(m):
                if ring[j] == prev or ring[j] == cur or ring[j] == nxt:
                    continue
                c1 = _cross(xy[prev, 0], xy[prev, 1], xy[cur, 0], xy[cur, 1], xy[ring[j], 0], xy[ring[j], 1])
                c2 = _cross(xy[cur, 0], xy[cur, 1], xy[nxt, 0], xy[nxt, 1], xy[ring[j], 0], xy[ring[j], 1])
                c3 = _cross(xy[nxt, 0], xy[nxt, 1], xy[prev, 0], xy[prev, 1], xy[ring[j], 0], xy[ring[j], 1])
                if c1 >= -tol and c2 >= -tol and c3 >= -tol:
                    ok = False
                    break
            if not ok:
                continue
            tris[t, 0] = prev; tris[t, 1] = cur; tris[t, 2] = nxt
            t += 1
            for j in range(i, m - 1):
                ring[j] = ring[j + 1]
            m -= 1
            found = True
            break
        if not found:
            return None
    c = _cross(xy[ring[0], 0], xy[ring[0], 1], xy[ring[1], 0], xy[ring[1], 1], xy[ring[2], 0], xy[ring[2], 1])
    if c <= tol:
        return None
    tris[t, 0] = ring[0]; tris[t, 1] = ring[1]; tris[t, 2] = ring[2]
    return tris


cdef void _csr_matvec(const int[::1] indptr, const int[::1] indices, const double[::1] data,
                      const double[::1] x, double[::1] y) nogil:
    cdef Py_ssize_t i, k
    cdef double s
    for i in range(y.shape[0]):
        s = 0.0
        for k in range(indptr[i], indptr[i + 1]):
            s += data[k] * x[indices[k]]
        y[i] = s


cdef double _dot(const double[::1] a, const double[::1] b) nogil:
    cdef Py_ssize_t i
    cdef double s = 0.0
    for i in range(a.shape[0]):
        s += a[i] * b[i]
    return s


def pcg_csr(const int[::1] indptr, const int[::1] indices, const double[::1] data,
            const double[::1] b, double tol, int maxiter):
    cdef Py_ssize_t n = b.shape[0], i, k
    cdef int it = 0, status = 1
    cdef double bnorm, rz, rz_new, alpha, beta, pap, rnorm
    x_arr = np.zeros(n)
    r_arr = np.array(b, dtype=np.float64, copy=True)
    z_arr = np.empty(n)
    p_arr = np.empty(n)
    ap_arr = np.empty(n)
    dinv_arr = np.empty(n)
    cdef double[::1] x = x_arr, r = r_arr, z = z_arr, p = p_arr, ap = ap_arr, dinv = dinv_arr
    history = []
    for i in range(n):
        dinv[i] = 0.0
        for k in range(indptr[i], indptr[i + 1]):
            if indices[k] == i:
                dinv[i] = data[k]
        if dinv[i] <= 0.0:
            return x_arr, 0, [], 2
        dinv[i] = 1.0 / dinv[i]
    bnorm = sqrt(_dot(b, b))
    if bnorm == 0.0:
        return x_arr, 0, [0.0], 0
    for i in range(n):
        z[i] = dinv[i] * r[i]
        p[i] = z[i]
    rz = _dot(r, z)
    history.append(1.0)
    while it < maxiter:
        _csr_matvec(indptr, indices, data, p, ap)
        pap = _dot(p, ap)
        if pap <= 0.0:
            status = 2
            break
        alpha = rz / pap
        for i in range(n):
            x[i] += alpha * p[i]
            r[i] -= alpha * ap[i]
        it += 1
        rnorm = sqrt(_dot(r, r)) / bnorm
        history.append(rnorm)
        if rnorm <= tol:
            status = 0
            break
        for i in range(n):
            z[i] = dinv[i] * r[i]
        rz_new = _dot(r, z)
        beta = rz_new / rz
        rz = rz_new
        for i in range(n):
            p[i] = z[i] + beta * p[i]
    return x_arr, it, history, status
