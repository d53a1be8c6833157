"""vec conventions and the two r^2 x r^2 index-pairing products.

``vec`` stacks columns, so entry ``A[i, j]`` (0-based) lives at vec index
``i + r * j``. A covariance matrix over ``vec`` of ``d x d`` random matrices
can equally be held as a 4-index tensor ``T[i, j, k, l] = Cov(A_ij, B_kl)``;
:func:`as_tensor` and :func:`as_matrix` convert between the two.
"""

from __future__ import annotations

import numpy as np


class DimensionMismatch(ValueError):
    pass


def vec(A) -> np.ndarray:
    return np.asarray(A).reshape(-1, order="F")


def unvec(v, d: int) -> np.ndarray:
    return np.asarray(v).reshape(d, d, order="F")


def vec_index(i: int, j: int, d: int) -> int:
    return i + d * j


def as_tensor(M, d1: int, d2: int | None = None) -> np.ndarray:
    """``(d1^2 x d2^2)`` vec-covariance -> tensor ``T[i, j, k, l]``."""
    d2 = d1 if d2 is None else d2
    M = np.asarray(M, dtype=float)
    if M.shape != (d1 * d1, d2 * d2):
        raise DimensionMismatch(f"expected {(d1 * d1, d2 * d2)}, got {M.shape}")
    # row = i + d1*j  ->  C-order reshape yields axes (j, i, l, k)
    return M.reshape(d1, d1, d2, d2).transpose(1, 0, 3, 2)


def as_matrix(T) -> np.ndarray:
    """Inverse of :func:`as_tensor`."""
    T = np.asarray(T)
    d1, _, d2, _ = T.shape
    return np.ascontiguousarray(T.transpose(1, 0, 3, 2)).reshape(d1 * d1, d2 * d2)


def _check_pair(A, B):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape != B.shape:
        raise DimensionMismatch(f"need equal square matrices, got {A.shape}, {B.shape}")
    return A, B


def tensor_product(A, B) -> np.ndarray:
    """Left tensor product: ``a_jk * b_lm`` at row ``r(l-1)+j``, column ``r(m-1)+k``.

    Indices in the formula are 1-based. Equivalently
    ``out[vec(j, l), vec(k, m)] = A[j, k] * B[l, m]``.
    """
    A, B = _check_pair(A, B)
    r = A.shape[0]
    out = np.empty((r * r, r * r))
    j, k, l, m = np.indices((r, r, r, r)).reshape(4, -1)
    out[r * l + j, r * m + k] = A[j, k] * B[l, m]
    return out


def star_product(A, B) -> np.ndarray:
    """Star product: ``a_jk * b_lm`` at row ``r(l-1)+j``, column ``r(k-1)+m``."""
    A, B = _check_pair(A, B)
    r = A.shape[0]
    out = np.empty((r * r, r * r))
    j, k, l, m = np.indices((r, r, r, r)).reshape(4, -1)
    out[r * l + j, r * k + m] = A[j, k] * B[l, m]
    return out


def symmetric_basis(d: int) -> np.ndarray:
    """Orthonormal basis (columns) of vec of symmetric ``d x d`` matrices."""
    cols = []
    for j in range(d):
        for i in range(j + 1):
            v = np.zeros(d * d)
            if i == j:
                v[vec_index(i, i, d)] = 1.0
            else:
                v[vec_index(i, j, d)] = v[vec_index(j, i, d)] = np.sqrt(0.5)
            cols.append(v)
    return np.array(cols).T


def conjugate(T, L1, L2=None, R1=None, R2=None) -> np.ndarray:
    """Apply coefficient matrices to both index pairs of a 4-index tensor.

    Returns ``out[i, j, m, n] = sum L1[i,a] L2[j,b] R1[m,c] R2[n,d] T[a,b,c,d]``
    (``L2`` defaults to ``L1``, ``R1`` to ``L1`` and ``R2`` to ``R1``).
    """
    L2 = L1 if L2 is None else L2
    R1 = L1 if R1 is None else R1
    R2 = R1 if R2 is None else R2
    out = np.tensordot(L1, T, axes=(1, 0))
    out = np.tensordot(L2, out, axes=(1, 1)).swapaxes(0, 1)
    out = np.tensordot(out, R1, axes=(2, 1)).transpose(0, 1, 3, 2)
    out = np.tensordot(out, R2, axes=(3, 1))
    return out
