"""Sampling the polytope of unbiased randomized estimators on a fixed grid.

A randomized estimator with output grid ``g_1..g_m`` is a row-stochastic
matrix ``q[w, j]``; it is unbiased when ``sum_w P_theta(w) sum_j q[w, j] g_j
= f(theta)`` for every theta. Vertices are found with a simplex solver on
a random objective; in the exact backend each vertex is then re-solved in
rationals from its support so that unbiasedness holds without rounding.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np
from scipy.optimize import linprog

from . import linalg
from .conditioning import RealKernel
from .experiment import Experiment
from .spaces import EXACT, KernelStatError, ValueGrid, frozen, make_kernel, tolerance

SUPPORT_THRESHOLD = 1e-9
MAX_ATTEMPTS = 25


class EmptyPolytope(KernelStatError):
    """No unbiased estimator exists on the requested output grid."""


def derived_rng(seed: int, counter: int) -> np.random.Generator:
    """Independent generator for replication ``counter`` of master ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(counter),)))


def unbiasedness_constraints(E: Experiment, grid: ValueGrid):
    """Equality system ``A q = b`` over the flattened ``q`` (row-major)."""
    n, m, k = len(E.space), len(grid.space), grid.dim
    rows, rhs = [], []
    zero, one = (Fraction(0), Fraction(1)) if E.backend == EXACT else (0.0, 1.0)
    for i in range(n):
        r = [zero] * (n * m)
        r[i * m:(i + 1) * m] = [one] * m
        rows.append(r)
        rhs.append(one)
    for t in E.thetas:
        P, f = E.P(t), E.f(t)
        for c in range(k):
            r = [zero] * (n * m)
            for i in range(n):
                for j in range(m):
                    r[i * m + j] = P.mass[i] * grid.values[j, c]
            rows.append(r)
            rhs.append(f[c])
    return rows, rhs


def _vertex(A_float, b_float, rng, n_vars):
    for _ in range(MAX_ATTEMPTS):
        c = rng.standard_normal(n_vars)
        res = linprog(c, A_eq=A_float, b_eq=b_float, bounds=(0, None), method="highs-ds")
        if res.status == 2:
            raise EmptyPolytope("no unbiased estimator takes values in this grid")
        if res.status == 0:
            return res.x
    raise KernelStatError("simplex solver failed repeatedly on the unbiasedness polytope")


def _exact_vertex(A, b, x_float):
    support = [j for j, v in enumerate(x_float) if v > SUPPORT_THRESHOLD]
    sub = [[row[j] for j in support] for row in A]
    sol = linalg.exact_solve(sub, b)
    if sol is None or any(v < 0 for v in sol):
        return None
    x = [Fraction(0)] * len(x_float)
    for j, v in zip(support, sol):
        x[j] = v
    # independent columns at a vertex make the solve unique; verify anyway
    if any(sum(a * v for a, v in zip(row, x)) != rhs for row, rhs in zip(A, b)):
        return None
    return x


def sample_vertex(E: Experiment, grid: ValueGrid, rng: np.random.Generator) -> np.ndarray:
    """One vertex of the unbiasedness polytope, shaped ``(|space|, |grid|)``."""
    A, b = unbiasedness_constraints(E, grid)
    A_float = np.array(A, dtype=float)
    b_float = np.array(b, dtype=float)
    n, m = len(E.space), len(grid.space)
    for _ in range(MAX_ATTEMPTS):
        x = _vertex(A_float, b_float, rng, n * m)
        if E.backend != EXACT:
            x = np.where(x < tolerance(), 0.0, x)
            return x.reshape(n, m)
        exact = _exact_vertex(A, b, x)
        if exact is not None:
            return np.array(exact, dtype=object).reshape(n, m)
    raise KernelStatError("could not recover an exact vertex from the simplex solution")


def sample_unbiased_estimator(E: Experiment, grid: ValueGrid, rng: np.random.Generator) -> RealKernel:
    """A vertex, or with probability 1/2 a random mixture of two vertices."""
    q = sample_vertex(E, grid, rng)
    if rng.random() < 0.5:
        q2 = sample_vertex(E, grid, rng)
        if E.backend == EXACT:
            w = Fraction(int(rng.integers(1, 100)), 100)
        else:
            w = float(rng.uniform(0.01, 0.99))
        q = w * q + (1 - w) * q2
    kernel = make_kernel(E.space, grid.space, frozen(q), E.backend)
    return RealKernel(kernel, grid)


def sample_unbiased_estimators(E: Experiment, grid: ValueGrid, count: int, seed: int) -> list[RealKernel]:
    return [sample_unbiased_estimator(E, grid, derived_rng(seed, i)) for i in range(count)]
