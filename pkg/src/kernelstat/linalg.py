"""Rank, null space and linear solves over the rationals (and a float path).

The exact routines run Gauss-Jordan elimination on :class:`Fraction`
matrices, so every rank decision is exact. The float routines use the SVD
with a threshold relative to the largest singular value.
"""

from __future__ import annotations

import warnings
from fractions import Fraction

import numpy as np

from .spaces import EXACT, backend_of, frozen

SVD_RELATIVE_THRESHOLD = 1e-9


class RankToleranceWarning(UserWarning):
    """Float rank decisions depend on the singular-value threshold."""


def rref(matrix) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form of a rational matrix.

    Returns the reduced rows and the list of pivot columns.
    """
    m = [[Fraction(x) for x in row] for row in matrix]
    n_rows = len(m)
    n_cols = len(m[0]) if n_rows else 0
    pivots = []
    r = 0
    for c in range(n_cols):
        if r == n_rows:
            break
        pivot = next((i for i in range(r, n_rows) if m[i][c] != 0), None)
        if pivot is None:
            continue
        m[r], m[pivot] = m[pivot], m[r]
        inv = 1 / m[r][c]
        m[r] = [x * inv for x in m[r]]
        for i in range(n_rows):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
    return m, pivots


def exact_rank(matrix) -> int:
    return len(rref(matrix)[1])


def exact_nullspace(matrix) -> list[list[Fraction]]:
    """Basis of ``{x : A x = 0}``, one vector per free column."""
    m, pivots = rref(matrix)
    n_cols = len(m[0]) if m else 0
    free = [c for c in range(n_cols) if c not in pivots]
    basis = []
    for f in free:
        x = [Fraction(0)] * n_cols
        x[f] = Fraction(1)
        for row, p in zip(m, pivots):
            x[p] = -row[f]
        basis.append(x)
    return basis


def exact_solve(A, b) -> list[Fraction] | None:
    """One solution of ``A x = b`` (free variables set to 0), or None."""
    aug = [list(row) + [rhs] for row, rhs in zip(A, b)]
    m, pivots = rref(aug)
    n = len(aug[0]) - 1
    if n in pivots:
        return None
    x = [Fraction(0)] * n
    for row, p in zip(m, pivots):
        x[p] = row[n]
    return x


def float_rank(matrix, threshold: float = SVD_RELATIVE_THRESHOLD, warn: bool = True) -> int:
    a = np.asarray(matrix, dtype=float)
    if a.size == 0:
        return 0
    s = np.linalg.svd(a, compute_uv=False)
    if warn:
        warnings.warn("float-backend rank is tolerance-dependent; use the exact backend "
                      "for a certified decision", RankToleranceWarning, stacklevel=2)
    if s[0] == 0:
        return 0
    return int(np.sum(s > threshold * s[0]))


def float_nullspace(matrix, threshold: float = SVD_RELATIVE_THRESHOLD) -> np.ndarray:
    """Null-space basis as columns of the returned array."""
    a = np.asarray(matrix, dtype=float)
    _, s, vt = np.linalg.svd(a)
    rank = int(np.sum(s > threshold * s[0])) if s.size and s[0] > 0 else 0
    return vt[rank:].T.copy()


def rank(matrix: np.ndarray) -> int:
    """Backend-dispatching rank."""
    if backend_of(np.asarray(matrix)) == EXACT:
        return exact_rank(np.asarray(matrix).tolist())
    return float_rank(matrix)


def nullspace_vector(matrix: np.ndarray) -> np.ndarray | None:
    """A nonzero null-space vector in the matrix's backend, or None."""
    arr = np.asarray(matrix)
    if backend_of(arr) == EXACT:
        basis = exact_nullspace(arr.tolist())
        if not basis:
            return None
        return frozen(np.array(basis[0], dtype=object))
    ns = float_nullspace(arr)
    if ns.shape[1] == 0:
        return None
    v = ns[:, 0]
    return frozen(v / np.max(np.abs(v)))
