"""Finite statistical experiments: sufficiency, completeness, unbiasedness.

Sufficiency is decided on singleton events only (conditional probabilities
are additive in the event), completeness as a rank condition on the
moment matrix ``D[theta, w1] = P_theta^M({w1})``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import numpy as np

from . import linalg
from .algebra import compose, dirac_kernel, image, product_measure, right_projection
from .conditioning import RealFunction, RealKernel, conditional_probability, expectation
from .spaces import (
    EXACT,
    Distribution,
    FiniteSpace,
    Kernel,
    KernelStatError,
    SpaceMismatch,
    Statistic,
    as_array,
    arrays_equal,
    backend_of,
    frozen,
    is_positive,
    is_zero,
    make_distribution,
    scalars_equal,
    zeros,
)


class NoEstimand(KernelStatError):
    pass


class UnknownTheta(KernelStatError):
    pass


class NoFactorization(KernelStatError):
    def __init__(self, message, conflict=None):
        super().__init__(message)
        self.conflict = conflict


class Experiment:
    """An ordered family ``{P_theta}`` on one space, with an optional estimand."""

    __slots__ = ("space", "family", "estimand")

    def __init__(self, space: FiniteSpace, family: Mapping[str, Distribution],
                 estimand: Mapping[str, np.ndarray] | None = None):
        if not family:
            raise ValueError("an experiment needs at least one distribution")
        family = dict(family)
        backends = set()
        for theta, P in family.items():
            if P.space != space:
                raise SpaceMismatch(f"family member {theta!r} lives on {P.space.id!r}, not {space.id!r}")
            backends.add(P.backend)
        if len(backends) != 1:
            raise ValueError("family members mix backends")
        if estimand is not None:
            estimand = {str(t): v for t, v in estimand.items()}
            if set(estimand) != set(family):
                raise ValueError("estimand must be given for exactly the family's theta labels")
            dims = {len(v) for v in estimand.values()}
            if len(dims) != 1:
                raise ValueError("estimand values must share one dimension")
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "family", family)
        object.__setattr__(self, "estimand", estimand)

    def __setattr__(self, name, value):
        raise AttributeError("Experiment is immutable")

    @property
    def thetas(self) -> list[str]:
        return list(self.family)

    @property
    def backend(self) -> str:
        return next(iter(self.family.values())).backend

    @property
    def dim(self) -> int | None:
        return None if self.estimand is None else len(next(iter(self.estimand.values())))

    def P(self, theta: str) -> Distribution:
        try:
            return self.family[theta]
        except KeyError:
            raise UnknownTheta(f"no family member labelled {theta!r}") from None

    def f(self, theta: str) -> np.ndarray:
        if self.estimand is None:
            raise NoEstimand("experiment has no estimand")
        self.P(theta)
        return self.estimand[theta]

    def to_backend(self, backend: str) -> "Experiment":
        fam = {t: P.to_backend(backend) for t, P in self.family.items()}
        est = None
        if self.estimand is not None:
            est = {t: as_array(list(v), backend) for t, v in self.estimand.items()}
        return Experiment(self.space, fam, est)

    def restrict(self, thetas) -> "Experiment":
        thetas = list(thetas)
        est = None if self.estimand is None else {t: self.estimand[t] for t in thetas}
        return Experiment(self.space, {t: self.P(t) for t in thetas}, est)

    def __eq__(self, other):
        if not isinstance(other, Experiment):
            return NotImplemented
        if self.space != other.space or self.thetas != other.thetas or self.family != other.family:
            return False
        if (self.estimand is None) != (other.estimand is None):
            return False
        return self.estimand is None or all(arrays_equal(self.estimand[t], other.estimand[t]) for t in self.thetas)

    __hash__ = None

    def __repr__(self):
        return f"Experiment({self.space.id}, thetas={self.thetas})"


def make_experiment(space: FiniteSpace, family: Mapping[str, list], estimand: Mapping[str, object] | None = None,
                    backend: str = EXACT) -> Experiment:
    fam = {str(t): make_distribution(space, m, backend) for t, m in family.items()}
    est = None
    if estimand is not None:
        est = {str(t): as_array(v if isinstance(v, (list, tuple)) else [v], backend) for t, v in estimand.items()}
    return Experiment(space, fam, est)


def _check_source(E: Experiment, M: Kernel, what: str):
    if M.source != E.space:
        raise SpaceMismatch(f"{what}: kernel source {M.source.id!r} is not the sample space {E.space.id!r}")


# ---------------------------------------------------------------------------
# sufficiency
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SufficiencyWitness:
    point: str
    target_point: str
    theta_a: str
    theta_b: str
    value_a: object
    value_b: object

    @property
    def event(self) -> frozenset:
        return frozenset({self.point})


@dataclass(frozen=True)
class SufficiencyReport:
    sufficient: bool
    common_version: dict | None = None
    witness: SufficiencyWitness | None = None

    def __bool__(self):
        return self.sufficient


def check_sufficiency(E: Experiment, M: Kernel) -> SufficiencyReport:
    """Decide whether ``M`` is sufficient for the family of ``E``.

    For each singleton event ``{w}`` the conditional probability given
    ``M`` is computed under every ``P_theta``; sufficiency holds iff these
    agree wherever two members both charge the target point. On success
    the patched common versions are returned (value 0 where no member
    charges the point); otherwise a witness with two disagreeing values.
    """
    _check_source(E, M, "check_sufficiency")
    backend = E.backend
    common = {}
    for w in E.space.points:
        per_theta = [(t, conditional_probability(E.P(t), {w}, M)) for t in E.thetas]
        vals = zeros((len(M.target), 1), backend)
        charged = set()
        for j, w1 in enumerate(M.target.points):
            first = None
            for t, fn in per_theta:
                if w1 not in fn.defined_on:
                    continue
                v = fn.values[j, 0]
                if first is None:
                    first = (t, v)
                    vals[j, 0] = v
                    charged.add(w1)
                elif not scalars_equal(v, first[1], backend):
                    return SufficiencyReport(False, witness=SufficiencyWitness(w, w1, first[0], t, first[1], v))
        common[w] = RealFunction(M.target, frozen(vals), charged)
    return SufficiencyReport(True, common_version=common)


def sufficiency_witnesses(E: Experiment, M: Kernel) -> list[SufficiencyWitness]:
    """Every disagreement: for each singleton event and charged target point,
    the first charging theta paired with each theta whose value differs."""
    _check_source(E, M, "sufficiency_witnesses")
    out = []
    for w in E.space.points:
        per_theta = [(t, conditional_probability(E.P(t), {w}, M)) for t in E.thetas]
        for j, w1 in enumerate(M.target.points):
            charged = [(t, fn.values[j, 0]) for t, fn in per_theta if w1 in fn.defined_on]
            for t, v in charged[1:]:
                if not scalars_equal(v, charged[0][1], E.backend):
                    out.append(SufficiencyWitness(w, w1, charged[0][0], t, charged[0][1], v))
    return out


def statistic_is_sufficient(family: Mapping[str, Distribution], T: Statistic) -> bool:
    """Classical test for a statistic: ``P_theta(x | T = t)`` is theta-free.

    Works directly on the fibers of ``T``, with no kernel machinery.
    """
    family = list(family.values())
    backend = family[0].backend
    fiber_mass = []
    for P in family:
        fm = [Fraction(0) if backend == EXACT else 0.0] * len(T.target)
        for i, t in enumerate(T.map):
            fm[t] += P.mass[i]
        fiber_mass.append(fm)
    for i, t in enumerate(T.map):
        ref = None
        for P, fm in zip(family, fiber_mass):
            if not is_positive(fm[t], backend):
                continue
            v = P.mass[i] / fm[t]
            if ref is None:
                ref = v
            elif not scalars_equal(v, ref, backend):
                return False
    return True


def product_experiment(E: Experiment, M: Kernel) -> Experiment:
    """The family ``{P_theta (x) M}`` on ``E.space x M.target``."""
    _check_source(E, M, "product_experiment")
    fam = {t: product_measure(P, M) for t, P in E.family.items()}
    space = next(iter(fam.values())).space
    return Experiment(space, fam, E.estimand)


def check_sufficiency_via_product(E: Experiment, M: Kernel) -> bool:
    """Sufficiency of ``M`` read off the right projection of the product experiment."""
    PE = product_experiment(E, M)
    return statistic_is_sufficient(PE.family, right_projection(PE.space))


# ---------------------------------------------------------------------------
# completeness
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CompletenessReport:
    complete: bool
    support_union: tuple
    rank: int
    moment_matrix: np.ndarray = field(repr=False, compare=False)
    witness: RealFunction | None = None

    def __bool__(self):
        return self.complete

    @property
    def columns(self) -> int:
        return len(self.support_union)


def moment_matrix(E: Experiment, M: Kernel) -> np.ndarray:
    """Rows ``theta``, columns target points: ``P_theta^M({w1})``."""
    _check_source(E, M, "moment_matrix")
    return frozen(np.vstack([image(P, M).mass for P in E.family.values()]))


def _rank_report(D: np.ndarray, target: FiniteSpace) -> CompletenessReport:
    backend = backend_of(D)
    charged = [j for j in range(D.shape[1]) if any(is_positive(x, backend) for x in D[:, j])]
    support = tuple(target.points[j] for j in charged)
    restricted = D[:, charged]
    r = linalg.rank(restricted)
    if r == len(charged):
        return CompletenessReport(True, support, r, D)
    null = linalg.nullspace_vector(restricted)
    vals = zeros((len(target), 1), backend)
    for j, v in zip(charged, null):
        vals[j, 0] = v
    witness = RealFunction(target, frozen(vals), support)
    return CompletenessReport(False, support, r, D, witness)


def check_completeness(E: Experiment, M: Kernel) -> CompletenessReport:
    """Completeness of ``M`` for the family of ``E``.

    ``M`` is complete iff the moment matrix restricted to the points
    charged by some ``P_theta^M`` has full column rank. On finite spaces
    every function is bounded, so bounded completeness is the same
    condition. When incomplete, ``witness`` is a nonzero function on the
    support union with zero expectation under every member.
    """
    return _rank_report(moment_matrix(E, M), M.target)


def statistic_is_complete(family: Mapping[str, Distribution], T: Statistic) -> CompletenessReport:
    """Classical completeness of a statistic from fiber sums."""
    family = list(family.values())
    backend = family[0].backend
    D = zeros((len(family), len(T.target)), backend)
    for r, P in enumerate(family):
        for i, t in enumerate(T.map):
            D[r, t] = D[r, t] + P.mass[i]
    return _rank_report(frozen(D), T.target)


def check_completeness_via_product(E: Experiment, M: Kernel) -> CompletenessReport:
    PE = product_experiment(E, M)
    return statistic_is_complete(PE.family, right_projection(PE.space))


# ---------------------------------------------------------------------------
# unbiasedness and factorization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UnbiasednessReport:
    unbiased: bool
    bias: dict

    def __bool__(self):
        return self.unbiased


def check_unbiased(E: Experiment, M: RealKernel) -> UnbiasednessReport:
    """Compare ``E_theta(M)`` with the estimand at every theta."""
    if E.estimand is None:
        raise NoEstimand("unbiasedness needs an estimand")
    if M.source != E.space:
        raise SpaceMismatch("estimator does not act on the sample space")
    if M.dim != E.dim:
        raise ValueError(f"estimator has dimension {M.dim}, estimand {E.dim}")
    bias = {t: frozen(expectation(P, M) - E.f(t)) for t, P in E.family.items()}
    ok = all(all(is_zero(x, E.backend) for x in b) for b in bias.values())
    return UnbiasednessReport(ok, bias)


def factor_through(T: Statistic, M1: Kernel) -> Statistic:
    """Find ``S`` on ``M1.target`` with ``dirac(T) == compose(M1, dirac(S))``.

    Every target point charged by the row at ``w`` must map to ``T(w)``.
    Points charged by no row map to the first point of ``T.target``.

    Raises
    ------
    NoFactorization
        With ``conflict = (w, w', w1)`` when rows ``w`` and ``w'`` both
        charge ``w1`` but ``T(w) != T(w')``.
    """
    if T.source != M1.source:
        raise SpaceMismatch("factor_through: T and M1 must share their source")
    backend = M1.backend
    owner: dict[int, int] = {}
    for i, row in enumerate(M1.rows):
        for j, x in enumerate(row):
            if not is_positive(x, backend):
                continue
            if j in owner and T.map[owner[j]] != T.map[i]:
                w, w2 = M1.source.points[owner[j]], M1.source.points[i]
                w1 = M1.target.points[j]
                raise NoFactorization(
                    f"{w!r} and {w2!r} both reach {w1!r} but T sends them to "
                    f"{T(w)!r} and {T(w2)!r}", (w, w2, w1))
            owner.setdefault(j, i)
    S = Statistic(M1.target, T.target,
                  tuple(T.map[owner[j]] if j in owner else 0 for j in range(len(M1.target))))
    if compose(M1, dirac_kernel(S, backend)) != dirac_kernel(T, backend):
        raise NoFactorization("constructed factor fails verification")
    return S
