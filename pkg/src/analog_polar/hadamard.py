"""Orthonormal Walsh-Hadamard transform in bit-reversed order.

``fwht(x)`` computes ``H_n x`` with ``H_n = B_n F^{(x)n}``, ``F = [[1, 1], [1, -1]]/sqrt(2)``
and ``B_n`` the bit-reversal permutation.  ``H_n`` is symmetric and orthogonal,
so the transform is its own inverse.  Index sets are 1-based.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from numba import njit

INV_SQRT2 = 1.0 / np.sqrt(2.0)


def log2_size(length: int) -> int:
    if length < 1 or length & (length - 1):
        raise ValueError(f"length must be a power of two, got {length}")
    return length.bit_length() - 1


@lru_cache(maxsize=None)
def bit_reversal(n: int) -> np.ndarray:
    """Permutation array p with p[i] = bit-reverse of i over n bits."""
    idx = np.arange(1 << n)
    rev = np.zeros_like(idx)
    for b in range(n):
        rev |= ((idx >> b) & 1) << (n - 1 - b)
    rev.setflags(write=False)
    return rev


@njit(cache=True)
def _butterflies(x, perm, out):
    # rows of x transformed in place (scaled per stage), then permuted into out
    rows, N = x.shape
    c = 1.0 / np.sqrt(2.0)
    for r in range(rows):
        h = 1
        while h < N:
            for start in range(0, N, 2 * h):
                for i in range(start, start + h):
                    a = x[r, i]
                    b = x[r, i + h]
                    x[r, i] = (a + b) * c
                    x[r, i + h] = (a - b) * c
            h *= 2
        for i in range(N):
            out[r, i] = x[r, perm[i]]


def fwht(x) -> np.ndarray:
    """Return H_n x for a vector (or the rows of an array) of length 2**n."""
    x = np.array(x, dtype=np.float64)
    n = log2_size(x.shape[-1])
    shape = x.shape
    work = np.ascontiguousarray(x.reshape(-1, shape[-1]))
    out = np.empty_like(work)
    _butterflies(work, bit_reversal(n), out)
    return out.reshape(shape)


inverse = fwht


def dense_hadamard(n: int) -> np.ndarray:
    """H_n as an explicit matrix (for checks; O(N^2))."""
    F = np.array([[1.0, 1.0], [1.0, -1.0]]) * INV_SQRT2
    H = np.ones((1, 1))
    for _ in range(n):
        H = np.kron(H, F)
    return H[bit_reversal(n), :]


def as_index_set(indices, N: int) -> np.ndarray:
    """Validate a 1-based index set and return it sorted and unique."""
    a = np.unique(np.asarray(list(indices) if not isinstance(indices, np.ndarray) else indices, dtype=np.int64))
    if a.size and (a[0] < 1 or a[-1] > N):
        raise IndexError(f"index set outside [1, {N}]")
    return a


def project_rows(y, A, N: int | None = None) -> np.ndarray:
    """Entries of y at the 1-based indices A, in increasing order."""
    y = np.asarray(y, dtype=np.float64)
    A = as_index_set(A, y.size if N is None else N)
    return y[A - 1]


def embed_rows_transpose(z, A, N: int) -> np.ndarray:
    """H_A^T z: zero-fill z into positions A and transform."""
    z = np.asarray(z, dtype=np.float64).reshape(-1)
    A = as_index_set(A, N)
    if z.size != A.size:
        raise ValueError(f"measurement length {z.size} does not match |A| = {A.size}")
    log2_size(N)
    full = np.zeros(N)
    full[A - 1] = z
    return fwht(full)
