"""Small dense linear algebra on flat row-major arrays, plus the rolling queue.

Matrices are C-contiguous float64 numpy arrays, i.e. flat row-major storage
carrying a (rows, cols) view; :func:`mat2` coerces and validates. Everything
here is pure except :func:`roll`, which shifts a window of a 1-D queue in
place. All numerics are 64-bit: the finite-difference Hessians built on top
of this module are cancellation-sensitive.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, SingularMatrix

__all__ = [
    "mat2",
    "mat_mul",
    "hadamard",
    "LuFactors",
    "lu_factor",
    "lu_solve",
    "roll",
]


def mat2(data, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    """Coerce ``data`` into a validated 2-D float64 row-major matrix.

    When ``rows``/``cols`` are given, a flat buffer is reshaped to that
    size; otherwise ``data`` must already be 2-dimensional.
    """
    a = np.ascontiguousarray(data, dtype=np.float64)
    if rows is not None or cols is not None:
        if rows is None or cols is None:
            raise DimensionError("rows and cols must be given together")
        if a.size != rows * cols:
            raise DimensionError(
                f"flat data of length {a.size} cannot fill a {rows}x{cols} matrix"
            )
        a = a.reshape(rows, cols)
    if a.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got ndim={a.ndim}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise DimensionError(f"matrix dimensions must be >= 1, got {a.shape}")
    return a


def mat_mul(a, b) -> np.ndarray:
    """Matrix product with an explicit inner-dimension check."""
    a = mat2(a)
    b = mat2(b)
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def hadamard(a, b) -> np.ndarray:
    """Elementwise product of two identically shaped matrices."""
    a = mat2(a)
    b = mat2(b)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    return a * b


@dataclass(frozen=True)
class LuFactors:
    """Packed LU factorization with partial pivoting.

    ``lu`` stores U on and above the diagonal and the unit-diagonal L
    below it. ``perm[i]`` is the source row of A now sitting at row i,
    so ``A[perm] == L @ U``. ``parity`` is the permutation sign.
    """

    lu: np.ndarray
    perm: np.ndarray
    parity: int


def lu_factor(a) -> LuFactors:
    """Factor a square matrix as P*A = L*U with partial pivoting.

    Raises :class:`SingularMatrix` when a pivot column is exactly zero;
    near-singular matrices are factored as-is and left to the caller.
    """
    a = mat2(a)
    n, m = a.shape
    if n != m:
        raise DimensionError(f"LU factorization needs a square matrix, got {a.shape}")
    lu = a.copy()
    perm = np.arange(n)
    parity = 1
    for k in range(n):
        p = k + int(np.argmax(np.abs(lu[k:, k])))
        if lu[p, k] == 0.0:
            raise SingularMatrix(f"zero pivot in column {k}")
        if p != k:
            lu[[k, p]] = lu[[p, k]]
            perm[[k, p]] = perm[[p, k]]
            parity = -parity
        lu[k + 1 :, k] /= lu[k, k]
        if k + 1 < n:
            lu[k + 1 :, k + 1 :] -= np.outer(lu[k + 1 :, k], lu[k, k + 1 :])
    return LuFactors(lu=lu, perm=perm, parity=parity)


def lu_solve(f: LuFactors, b) -> np.ndarray:
    """Solve A x = b given the packed factorization of A."""
    b = np.asarray(b, dtype=np.float64)
    if b.ndim != 1:
        raise DimensionError(f"right-hand side must be a vector, got ndim={b.ndim}")
    n = f.lu.shape[0]
    if b.shape[0] != n:
        raise DimensionError(f"right-hand side length {b.shape[0]} != {n}")
    x = b[f.perm].copy()
    for i in range(1, n):
        x[i] -= f.lu[i, :i] @ x[:i]
    for i in range(n - 1, -1, -1):
        x[i] = (x[i] - f.lu[i, i + 1 :] @ x[i + 1 :]) / f.lu[i, i]
    return x


def roll(queue: np.ndarray, start: int, end: int, bsize: int) -> None:
    """Shift the inclusive window [start, end] of a 1-D queue in place.

    Equivalent to a simultaneous push and pop of a ``bsize`` block: every
    element moves ``bsize`` slots toward higher indices, the last ``bsize``
    elements of the window fall off, and the first ``bsize`` slots keep
    their prior values for the caller to overwrite. Index 0 of the window
    is therefore always the most recent block. Elements outside the window
    are never read or written.
    """
    queue = np.asarray(queue)
    if queue.ndim != 1:
        raise DimensionError(f"queue must be 1-D, got ndim={queue.ndim}")
    if not (0 <= start <= end < queue.shape[0]):
        raise IndexError(
            f"window [{start}, {end}] out of range for queue of length {queue.shape[0]}"
        )
    if not (0 <= bsize <= end - start + 1):
        raise IndexError(f"block size {bsize} exceeds window [{start}, {end}]")
    if bsize == 0:
        return
    queue[start + bsize : end + 1] = queue[start : end + 1 - bsize].copy()
