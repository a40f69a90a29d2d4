"""Small GF(2) linear algebra on 0/1 numpy matrices and int bitsets."""

from __future__ import annotations

import numpy as np


def rows_to_ints(mat: np.ndarray) -> list[int]:
    """Pack each 0/1 row into an int, column 0 as the most significant bit."""
    mat = np.asarray(mat, dtype=np.uint8)
    n = mat.shape[1]
    weights = [1 << (n - 1 - j) for j in range(n)]
    return [sum(w for w, b in zip(weights, row) if b) for row in mat.tolist()]


def ints_to_rows(values: list[int], n: int) -> np.ndarray:
    out = np.zeros((len(values), n), dtype=np.uint8)
    for i, v in enumerate(values):
        for j in range(n):
            out[i, j] = (v >> (n - 1 - j)) & 1
    return out


def rank_ints(rows: list[int]) -> int:
    """Rank over GF(2) of bitset rows (xor basis insertion)."""
    basis: list[int] = []
    for r in rows:
        for b in basis:
            r = min(r, r ^ b)
        if r:
            basis.append(r)
            basis.sort(reverse=True)
    return len(basis)


def rank(mat: np.ndarray) -> int:
    mat = np.asarray(mat)
    if mat.size == 0:
        return 0
    return rank_ints(rows_to_ints(mat))


def row_reduce(mat: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form over GF(2) and the pivot columns."""
    a = np.asarray(mat, dtype=np.uint8).copy() % 2
    m, n = a.shape
    pivots = []
    r = 0
    for c in range(n):
        if r == m:
            break
        hits = np.nonzero(a[r:, c])[0]
        if hits.size == 0:
            continue
        p = r + hits[0]
        if p != r:
            a[[r, p]] = a[[p, r]]
        for i in range(m):
            if i != r and a[i, c]:
                a[i] ^= a[r]
        pivots.append(c)
        r += 1
    return a, pivots


def nullspace(mat: np.ndarray) -> np.ndarray:
    """Basis of {x : mat @ x = 0} as rows."""
    mat = np.asarray(mat, dtype=np.uint8)
    n = mat.shape[1]
    red, pivots = row_reduce(mat)
    free = [c for c in range(n) if c not in pivots]
    basis = np.zeros((len(free), n), dtype=np.uint8)
    for i, f in enumerate(free):
        basis[i, f] = 1
        for r, p in enumerate(pivots):
            basis[i, p] = red[r, f]
    return basis


def solve(mat: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """One solution x of mat @ x = rhs (free variables set to 0)."""
    mat = np.asarray(mat, dtype=np.uint8)
    rhs = np.asarray(rhs, dtype=np.uint8).reshape(-1, 1)
    m, n = mat.shape
    red, pivots = row_reduce(np.hstack([mat, rhs]))
    if n in pivots:
        raise ValueError("system is inconsistent")
    x = np.zeros(n, dtype=np.uint8)
    for r, p in enumerate(pivots):
        x[p] = red[r, n]
    return x


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return (np.asarray(a, dtype=np.int64) @ np.asarray(b, dtype=np.int64) % 2).astype(np.uint8)
