"""Compiled inner loops."""
import numba
import numpy as np


@numba.njit(cache=True)
def ball_max(indptr, indices, avg, n):
    """out[x, k] = max of avg[b, k] over balls b containing x (CSR membership)."""
    nb, k = avg.shape
    out = np.zeros((n, k))
    for b in range(nb):
        for t in range(indptr[b], indptr[b + 1]):
            x = indices[t]
            for j in range(k):
                v = avg[b, j]
                if v > out[x, j]:
                    out[x, j] = v
    return out


def csr(members: np.ndarray):
    rows, cols = np.nonzero(members)
    indptr = np.zeros(members.shape[0] + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=members.shape[0]), out=indptr[1:])
    return indptr, cols.astype(np.int64)
