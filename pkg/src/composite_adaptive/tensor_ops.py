"""Vectorization and Kronecker helpers used by the DNN Jacobian.

``vec`` stacks columns, so that ``vec(A @ B @ C) == kron(C.T, A) @ vec(B)``.
"""

import numpy as np


def _as_matrix(a, name="matrix"):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite entries")
    return a


def vec(a):
    """Column-stacked vector of a matrix, length ``rows * cols``."""
    return _as_matrix(a).reshape(-1, order="F")


def unvec(v, rows, cols):
    """Inverse of :func:`vec`."""
    v = np.asarray(v, dtype=float)
    if v.size != rows * cols:
        raise ValueError(f"cannot reshape {v.size} entries into {rows}x{cols}")
    return v.reshape((rows, cols), order="F")


def kron(a, b):
    """Kronecker product; block ``(i, j)`` of the result is ``a[i, j] * b``."""
    a = _as_matrix(a, "a")
    b = _as_matrix(b, "b")
    pa, qa = a.shape
    pb, qb = b.shape
    out = a[:, None, :, None] * b[None, :, None, :]
    return out.reshape(pa * pb, qa * qb)


def vec_product_identity_check(a, b, c):
    """Return ``||vec(ABC) - (C^T kron A) vec(B)||`` for conformable A, B, C."""
    a = _as_matrix(a, "A")
    b = _as_matrix(b, "B")
    c = _as_matrix(c, "C")
    if a.shape[1] != b.shape[0] or b.shape[1] != c.shape[0]:
        raise ValueError(
            f"non-conformable shapes {a.shape}, {b.shape}, {c.shape}"
        )
    lhs = vec(a @ b @ c)
    rhs = kron(c.T, a) @ vec(b)
    return float(np.linalg.norm(lhs - rhs))
