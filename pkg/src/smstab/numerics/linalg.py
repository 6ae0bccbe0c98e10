"""Small dense linear-algebra kernels (n <= ~20)."""

import numpy as np

from ..errors import NumericFailure


def lu_solve(A, b):
    """Solve ``A x = b`` by Gaussian elimination with partial pivoting.

    ``b`` may be a vector or a matrix of right-hand sides. Raises
    :class:`NumericFailure` when a pivot vanishes (singular to working
    precision).
    """
    A = np.array(A, dtype=float)
    x = np.array(b, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n) or x.shape[0] != n:
        raise ValueError("lu_solve: shape mismatch")
    scale = np.max(np.abs(A)) if A.size else 0.0
    for k in range(n):
        piv = k + int(np.argmax(np.abs(A[k:, k])))
        if abs(A[piv, k]) <= max(1e-300, 1e-18 * scale):
            raise NumericFailure("singular matrix in lu_solve")
        if piv != k:
            A[[k, piv]] = A[[piv, k]]
            x[[k, piv]] = x[[piv, k]]
        f = A[k + 1:, k] / A[k, k]
        A[k + 1:, k:] -= np.outer(f, A[k, k:])
        x[k + 1:] -= np.multiply.outer(f, x[k]) if x.ndim > 1 else f * x[k]
    for k in range(n - 1, -1, -1):
        x[k] = (x[k] - A[k, k + 1:] @ x[k + 1:]) / A[k, k]
    return x
