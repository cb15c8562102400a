"""Backend selection for the hot kernels.

The compiled extension is used when it imports cleanly; set
``WGIFACE_BACKEND=python`` to force the numpy fallback.
"""

import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("WGIFACE_BACKEND", "").lower() != "python":
    try:
        from . import _ckernels as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels


def backends():
    """Names of the kernel backends importable in this environment."""
    found = {"python": _pykernels}
    try:
        from . import _ckernels
        found["cython"] = _ckernels
    except ImportError:
        pass
    return found


def monomials(points, cx, cy, h, degree):
    """Tabulate scaled monomials and their gradients at ``points``.

    Returns ``(values, d_dx, d_dy)`` with shape ``(npoints, dim)`` each, the
    basis being ordered by total degree, then by x-exponent descending.
    """
    import numpy as np

    pts = np.ascontiguousarray(points, dtype=float).reshape(-1, 2)
    return _impl.monomials(pts, float(cx), float(cy), float(h), int(degree))


def ear_clip(xy, rel_tol=1e-12):
    """Ear-clipping triangulation of a simple CCW polygon, or None on failure."""
    import numpy as np

    return _impl.ear_clip(np.ascontiguousarray(xy, dtype=float), rel_tol)


def pcg_csr(A, b, tol, maxiter):
    """Jacobi-preconditioned CG on a CSR matrix.

    Returns ``(x, iterations, relative_residual_history, status)`` where status
    is 0 (converged), 1 (iteration cap) or 2 (non-positive curvature).
    """
    import numpy as np

    A = A.tocsr()
    return _impl.pcg_csr(
        np.ascontiguousarray(A.indptr, dtype=np.int32),
        np.ascontiguousarray(A.indices, dtype=np.int32),
        np.ascontiguousarray(A.data, dtype=float),
        np.ascontiguousarray(b, dtype=float),
        float(tol),
        int(maxiter),
    )
