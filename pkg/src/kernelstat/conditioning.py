"""Expectations and conditioning of real-valued kernels.

Conditional objects are only determined almost surely. A
:class:`RealFunction` therefore carries the set of points where its value
is meaningful (``defined_on``), and comparisons only look there. Off the
support, conditional distributions fall back to the uniform row and
conditional expectations are left undefined.
"""

from __future__ import annotations

from typing import Iterable

import numpy as np

from .algebra import compose, dirac_kernel, product_measure, right_projection
from .spaces import (
    EXACT,
    Distribution,
    FiniteSpace,
    Kernel,
    SpaceMismatch,
    Statistic,
    ValueGrid,
    arrays_equal,
    backend_of,
    common_backend,
    convert,
    format_vector,
    frozen,
    is_positive,
    numeric_space,
    uniform,
    zeros,
)


class RealKernel:
    """A kernel into a numeric grid: a (possibly randomized) estimator."""

    __slots__ = ("kernel", "grid")

    def __init__(self, kernel: Kernel, grid: ValueGrid):
        if kernel.target != grid.space:
            raise SpaceMismatch(f"grid lives on {grid.space.id!r}, kernel targets {kernel.target.id!r}")
        common_backend(kernel.rows, grid.values)
        object.__setattr__(self, "kernel", kernel)
        object.__setattr__(self, "grid", grid)

    def __setattr__(self, name, value):
        raise AttributeError("RealKernel is immutable")

    @property
    def source(self) -> FiniteSpace:
        return self.kernel.source

    @property
    def dim(self) -> int:
        return self.grid.dim

    @property
    def backend(self) -> str:
        return self.kernel.backend

    def to_backend(self, backend: str) -> "RealKernel":
        return RealKernel(self.kernel.to_backend(backend), self.grid.to_backend(backend))

    def __eq__(self, other):
        if not isinstance(other, RealKernel):
            return NotImplemented
        return self.kernel == other.kernel and self.grid == other.grid

    __hash__ = None

    def __repr__(self):
        return f"RealKernel({self.kernel.source.id} -> R^{self.dim} via {self.grid.space.id})"


class RealFunction:
    """R^k-valued function on a space, meaningful on ``defined_on`` only."""

    __slots__ = ("space", "values", "defined_on")

    def __init__(self, space: FiniteSpace, values: np.ndarray, defined_on: Iterable[str] | None = None):
        if values.ndim != 2 or values.shape[0] != len(space):
            raise ValueError(f"values for {space.id!r} need shape ({len(space)}, k)")
        dom = frozenset(space.points if defined_on is None else defined_on)
        for p in dom:
            space.index(p)
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "defined_on", dom)

    def __setattr__(self, name, value):
        raise AttributeError("RealFunction is immutable")

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def backend(self) -> str:
        return backend_of(self.values)

    def __call__(self, label: str) -> np.ndarray:
        return self.values[self.space.index(label)]

    def scalar(self, label: str):
        """Value at ``label`` for a one-dimensional function."""
        if self.dim != 1:
            raise ValueError("scalar() needs a one-dimensional function")
        return self.values[self.space.index(label), 0]

    def support_points(self) -> list[str]:
        return [p for p in self.space.points if p in self.defined_on]

    def equals(self, other: "RealFunction", on: Iterable[str] | None = None) -> bool:
        """Equality on the common domain (optionally narrowed to ``on``)."""
        if self.space != other.space or self.dim != other.dim:
            return False
        pts = self.defined_on & other.defined_on
        if on is not None:
            pts &= frozenset(on)
        idx = sorted(self.space.index(p) for p in pts)
        return arrays_equal(self.values[idx], convert(other.values, self.backend)[idx])

    def to_backend(self, backend: str) -> "RealFunction":
        return RealFunction(self.space, convert(self.values, backend), self.defined_on)

    def as_dict(self) -> dict:
        return {p: self.values[i] for i, p in enumerate(self.space.points) if p in self.defined_on}

    def __repr__(self):
        body = ", ".join(f"{p}: {format_vector(self(p))}" for p in self.support_points())
        return f"RealFunction({self.space.id}; {body})"


class SignedMeasure:
    """R^k-valued additive set function given by its point masses."""

    __slots__ = ("space", "mass")

    def __init__(self, space: FiniteSpace, mass: np.ndarray):
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "mass", mass)

    def __setattr__(self, name, value):
        raise AttributeError("SignedMeasure is immutable")

    def __call__(self, event: Iterable[str]) -> np.ndarray:
        idx = sorted({self.space.index(p) for p in event})
        return self.mass[idx].sum(axis=0) if idx else zeros(self.mass.shape[1], backend_of(self.mass))

    def total(self) -> np.ndarray:
        return self.mass.sum(axis=0)


def _check(a: FiniteSpace, b: FiniteSpace, what: str):
    if a != b:
        raise SpaceMismatch(f"{what}: {a.id!r} does not match {b.id!r}")


def _divide(num: np.ndarray, den: np.ndarray, backend: str):
    """Row-wise ``num / den`` where ``den`` is positive; zeros elsewhere."""
    out = zeros(num.shape, backend)
    ok = np.array([is_positive(d, backend) for d in den], dtype=bool)
    for i in np.flatnonzero(ok):
        out[i] = num[i] / den[i]
    return out, ok


def mean_function(M: RealKernel) -> RealFunction:
    """``w -> sum_j M(w, g_j) * value(g_j)``, defined everywhere."""
    return RealFunction(M.source, frozen(M.kernel.rows @ M.grid.values))


def expectation(P: Distribution, M: RealKernel) -> np.ndarray:
    """Mean output of the randomized estimator ``M`` under ``P`` (a k-vector)."""
    _check(M.source, P.space, "expectation")
    common_backend(P.mass, M.kernel.rows)
    return frozen(P.mass @ mean_function(M).values)


def weighted_measure(P: Distribution, M: RealKernel) -> SignedMeasure:
    """Signed measure with density ``mean_function(M)`` relative to ``P``."""
    _check(M.source, P.space, "weighted_measure")
    common_backend(P.mass, M.kernel.rows)
    return SignedMeasure(P.space, frozen(P.mass[:, None] * mean_function(M).values))


def conditional_probability(P: Distribution, event: Iterable[str], M: Kernel) -> RealFunction:
    """``P(A | M)`` as a function on the kernel's target.

    Built from singleton columns: the value at ``w1`` is the share of the
    image mass ``P^M({w1})`` that comes from inputs inside ``A``.
    """
    _check(M.source, P.space, "conditional_probability")
    backend = common_backend(P.mass, M.rows)
    mask = P.space.mask(event)
    joint = P.mass[:, None] * M.rows
    num = joint[mask].sum(axis=0) if mask.any() else zeros(len(M.target), backend)
    den = P.mass @ M.rows
    vals, ok = _divide(num[:, None], den, backend)
    return RealFunction(M.target, frozen(vals), np.asarray(M.target.points)[ok].tolist())


def conditional_distribution(P: Distribution, M1: Kernel, M2: Kernel) -> Kernel:
    """Conditional law of ``M1``'s output given ``M2``'s output, as a kernel.

    Rows outside the support of ``P^{M2}`` are uniform on ``M1.target``.
    """
    _check(M1.source, P.space, "conditional_distribution")
    _check(M2.source, P.space, "conditional_distribution")
    backend = common_backend(P.mass, M1.rows, M2.rows)
    joint = M2.rows.T @ (P.mass[:, None] * M1.rows)
    den = P.mass @ M2.rows
    rows, ok = _divide(joint, den, backend)
    fallback = uniform(M1.target, backend).mass
    for i in np.flatnonzero(~ok):
        rows[i] = fallback
    return Kernel(M2.target, M1.target, frozen(rows))


def image_support(P: Distribution, M: Kernel) -> list[str]:
    den = P.mass @ M.rows
    return [p for p, d in zip(M.target.points, den) if is_positive(d, backend_of(den))]


def conditional_expectation(P: Distribution, M1: RealKernel, M2: Kernel) -> RealFunction:
    """Conditional expectation of the estimator ``M1`` given ``M2``.

    Computed as the grid mean of each row of the conditional distribution
    of ``M1`` given ``M2``; defined on the support of ``P^{M2}``.
    """
    L = conditional_distribution(P, M1.kernel, M2)
    vals = L.rows @ M1.grid.values
    return RealFunction(M2.target, frozen(vals), image_support(P, M2))


def classical_conditional_expectation(Q: Distribution, values: np.ndarray, T: Statistic) -> RealFunction:
    """``E_Q(f | T)`` for a function ``f`` on ``Q.space`` given by ``values``.

    Plain fiber averaging over the preimages of ``T``.
    """
    _check(T.source, Q.space, "classical_conditional_expectation")
    backend = common_backend(Q.mass, values)
    k = values.shape[1]
    num = zeros((len(T.target), k), backend)
    den = zeros(len(T.target), backend)
    for i, t in enumerate(T.map):
        num[t] = num[t] + Q.mass[i] * values[i]
        den[t] = den[t] + Q.mass[i]
    vals, ok = _divide(num, den, backend)
    return RealFunction(T.target, frozen(vals), np.asarray(T.target.points)[ok].tolist())


def conditional_expectation_via_product(P: Distribution, M1: RealKernel, M2: Kernel) -> RealFunction:
    """Same object as :func:`conditional_expectation`, by the product route.

    Lift the mean of ``M1`` to ``P.space x M2.target`` (constant in the
    second coordinate) and average it over the fibers of the right
    projection under ``P (x) M2``.
    """
    _check(M1.source, P.space, "conditional_expectation_via_product")
    Q = product_measure(P, M2)
    means = mean_function(M1).values
    lifted = np.repeat(means, len(M2.target), axis=0)
    return classical_conditional_expectation(Q, lifted, right_projection(Q.space))


def real_statistic(T: Statistic, grid: ValueGrid, backend: str | None = None) -> RealKernel:
    """Non-randomized estimator: the Dirac kernel of ``T`` read through ``grid``."""
    backend = backend or grid.backend
    return RealKernel(dirac_kernel(T, backend), grid.to_backend(backend))


def function_as_estimator(S: RealFunction, via: Kernel, space_id: str | None = None) -> RealKernel:
    """The randomized estimator "draw ``w2 ~ via(w, .)``, report ``S(w2)``"."""
    _check(via.target, S.space, "function_as_estimator")
    grid = ValueGrid(S.space, S.values)
    stat, values = grid.collapse(space_id or f"S({S.space.id})")
    kernel = compose(via, dirac_kernel(stat, S.backend))
    return RealKernel(kernel, values)


def constant_real_kernel(space: FiniteSpace, value, backend: str = EXACT) -> RealKernel:
    target, grid = numeric_space("const", [value], backend)
    return RealKernel(dirac_kernel(Statistic(space, target, (0,) * len(space)), backend), grid)
