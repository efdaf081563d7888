"""Kernel calculus on finite spaces: images, compositions, products, lifts."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .spaces import (
    EXACT,
    Distribution,
    FiniteSpace,
    Kernel,
    SpaceMismatch,
    Statistic,
    ValueGrid,
    common_backend,
    frozen,
    zeros,
)

PAIR_SEPARATOR = "|"


@dataclass(frozen=True, repr=False)
class ProductSpace(FiniteSpace):
    """Cartesian product in row-major order; points are labelled ``"(l|r)"``."""

    left: FiniteSpace = None
    right: FiniteSpace = None

    def pair(self, i: int) -> tuple[str, str]:
        n = len(self.right)
        return self.left.points[i // n], self.right.points[i % n]

    def label(self, left: str, right: str) -> str:
        return pair_label(left, right)

    def __repr__(self):
        return f"ProductSpace({self.left.id!r} x {self.right.id!r}, {len(self)} points)"


def pair_label(left: str, right: str) -> str:
    return f"({left}{PAIR_SEPARATOR}{right})"


def product_space(left: FiniteSpace, right: FiniteSpace) -> ProductSpace:
    points = tuple(pair_label(a, b) for a in left.points for b in right.points)
    return ProductSpace(f"{left.id}x{right.id}", points, left, right)


def left_projection(space: ProductSpace) -> Statistic:
    n = len(space.right)
    return Statistic(space, space.left, tuple(i // n for i in range(len(space))))


def right_projection(space: ProductSpace) -> Statistic:
    n = len(space.right)
    return Statistic(space, space.right, tuple(i % n for i in range(len(space))))


def _check(a: FiniteSpace, b: FiniteSpace, what: str):
    if a != b:
        raise SpaceMismatch(f"{what}: {a.id!r} does not match {b.id!r}")


def image(P: Distribution, M: Kernel) -> Distribution:
    """Distribution of the kernel's output when its input is drawn from ``P``."""
    _check(M.source, P.space, "image")
    common_backend(P.mass, M.rows)
    return Distribution(M.target, frozen(P.mass @ M.rows))


def compose(M1: Kernel, M2: Kernel) -> Kernel:
    """Run ``M1`` then ``M2``; the matrix product ``M1 @ M2``."""
    _check(M1.target, M2.source, "compose")
    common_backend(M1.rows, M2.rows)
    return Kernel(M1.source, M2.target, frozen(M1.rows @ M2.rows))


def dirac_kernel(T: Statistic, backend: str = EXACT) -> Kernel:
    """0/1 kernel of a statistic: row ``w`` is the point mass at ``T(w)``."""
    rows = zeros((len(T.source), len(T.target)), backend)
    one = Fraction(1) if backend == EXACT else 1.0
    for i, j in enumerate(T.map):
        rows[i, j] = one
    return Kernel(T.source, T.target, frozen(rows))


def identity_kernel(space: FiniteSpace, backend: str = EXACT) -> Kernel:
    return dirac_kernel(Statistic.identity(space), backend)


def compose_with_statistic(X: Statistic, M: Kernel) -> Kernel:
    """Kernel whose row at ``w`` is the row of ``M`` at ``X(w)``."""
    _check(X.target, M.source, "compose_with_statistic")
    return Kernel(X.source, M.target, frozen(M.rows[list(X.map)].copy()))


def product_measure(P: Distribution, M: Kernel) -> Distribution:
    """Joint law of (input, output) on ``P.space x M.target``."""
    _check(M.source, P.space, "product_measure")
    common_backend(P.mass, M.rows)
    space = product_space(P.space, M.target)
    mass = (P.mass[:, None] * M.rows).reshape(-1)
    return Distribution(space, frozen(mass))


def pair_kernel(M2: Kernel, M1: Kernel) -> Kernel:
    """Independent pairing: row ``w`` is the outer product of both rows."""
    _check(M1.source, M2.source, "pair_kernel")
    common_backend(M1.rows, M2.rows)
    space = product_space(M2.target, M1.target)
    rows = (M2.rows[:, :, None] * M1.rows[:, None, :]).reshape(len(M1.source), -1)
    return Kernel(M1.source, space, frozen(rows))


def pushforward(f, M: Kernel) -> Kernel:
    """Aggregate the columns of ``M`` along the fibers of ``f``.

    ``f`` is a :class:`Statistic` on ``M.target`` or a :class:`ValueGrid`
    on it; a grid acts through the map sending each point to its value
    vector, with equal vectors merged.
    """
    if isinstance(f, ValueGrid):
        f = f.collapse()[0]
    _check(f.source, M.target, "pushforward")
    rows = zeros((len(M.source), len(f.target)), M.backend)
    for j, t in enumerate(f.map):
        rows[:, t] = rows[:, t] + M.rows[:, j]
    return Kernel(M.source, f.target, frozen(rows))


def extend_kernel(M: Kernel, right: FiniteSpace) -> Kernel:
    """Lift ``M`` to ``M.source x right`` ignoring the right coordinate."""
    space = product_space(M.source, right)
    rows = np.repeat(M.rows, len(right), axis=0)
    return Kernel(space, M.target, frozen(rows))


def marginal_left(d: Distribution) -> Distribution:
    return image(d, dirac_kernel(left_projection(d.space), d.backend))


def marginal_right(d: Distribution) -> Distribution:
    return image(d, dirac_kernel(right_projection(d.space), d.backend))
