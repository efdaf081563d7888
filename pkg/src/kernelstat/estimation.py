"""Risk of randomized estimators, Rao-Blackwellization and UMVUE certificates."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .algebra import compose, dirac_kernel
from .conditioning import (
    RealFunction,
    RealKernel,
    conditional_distribution,
    conditional_expectation,
    function_as_estimator,
    image_support,
    mean_function,
    real_statistic,
)
from .experiment import (
    Experiment,
    KernelStatError,
    check_completeness,
    check_sufficiency,
    check_unbiased,
    factor_through,
)
from .polytope import sample_unbiased_estimators
from .spaces import (
    Kernel,
    SpaceMismatch,
    Statistic,
    ValueGrid,
    frozen,
    is_positive,
    numeric_space,
    scalars_equal,
    to_scalar,
    zeros,
)


class NotSufficient(KernelStatError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class NotComplete(KernelStatError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class NotUnbiased(KernelStatError):
    def __init__(self, message, bias=None):
        super().__init__(message)
        self.bias = bias


class ConvexityWarning(UserWarning):
    pass


# ---------------------------------------------------------------------------
# losses
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LossFunction:
    """``W(theta, x)``: nonnegative and convex in ``x``.

    ``fn`` receives the theta label, the point ``x`` (a k-vector) and the
    experiment, so the loss may depend on the family member.
    """

    kind: str
    fn: Callable
    strictly_convex: bool
    _checked: set = field(default_factory=set, repr=False, compare=False)

    def __call__(self, theta: str, x, E: Experiment):
        if self.kind == "custom-convex" and id(E) not in self._checked:
            self._checked.add(id(E))
            _spot_check_convexity(self, E)
        return to_scalar(self.fn(theta, np.asarray(x), E), E.backend)

    @classmethod
    def squared(cls) -> "LossFunction":
        return cls("squared-error", _squared, True)

    @classmethod
    def absolute(cls) -> "LossFunction":
        return cls("absolute-error", _absolute, False)

    @classmethod
    def custom(cls, fn: Callable, strictly_convex: bool = False) -> "LossFunction":
        return cls("custom-convex", fn, strictly_convex)


def _squared(theta, x, E):
    d = x - E.f(theta)
    return sum(v * v for v in d)


def _absolute(theta, x, E):
    return sum(abs(v) for v in x - E.f(theta))


def _spot_check_convexity(W: LossFunction, E: Experiment, triples: int = 1000, seed: int = 0):
    rng = np.random.default_rng(seed)
    k = E.dim or 1
    for _ in range(triples):
        theta = E.thetas[int(rng.integers(len(E.thetas)))]
        centre = np.asarray(E.f(theta), dtype=float) if E.estimand is not None else np.zeros(k)
        x = centre + rng.normal(scale=10.0, size=k)
        y = centre + rng.normal(scale=10.0, size=k)
        mid = float(W.fn(theta, (x + y) / 2, E))
        ends = (float(W.fn(theta, x, E)) + float(W.fn(theta, y, E))) / 2
        if mid > ends + 1e-9 * max(1.0, abs(ends)):
            warnings.warn(f"loss {W.kind!r} fails midpoint convexity at theta={theta!r}",
                          ConvexityWarning, stacklevel=3)
            return False
    return True


squared_error = LossFunction.squared
absolute_error = LossFunction.absolute


# ---------------------------------------------------------------------------
# risk
# ---------------------------------------------------------------------------

def _check(E: Experiment, M: RealKernel):
    if M.source != E.space:
        raise SpaceMismatch(f"estimator acts on {M.source.id!r}, experiment on {E.space.id!r}")


def loss_vector(E: Experiment, theta: str, W: LossFunction, M: RealKernel) -> np.ndarray:
    vals = zeros(len(M.grid.space), E.backend)
    for j, g in enumerate(M.grid.values):
        vals[j] = W(theta, g, E)
    return vals


def risk(E: Experiment, theta: str, W: LossFunction, M: RealKernel):
    """Expected loss of the randomized estimator ``M`` under ``P_theta``."""
    _check(E, M)
    P = E.P(theta)
    return (P.mass @ M.kernel.rows) @ loss_vector(E, theta, W, M)


def risks(E: Experiment, W: LossFunction, M: RealKernel) -> dict:
    return {t: risk(E, t, W, M) for t in E.thetas}


def mse_matrix(E: Experiment, theta: str, M: RealKernel) -> np.ndarray:
    """``E_theta[(X - f)(X - f)^T]`` for the estimator's output ``X``."""
    _check(E, M)
    out_law = E.P(theta).mass @ M.kernel.rows
    d = M.grid.values - E.f(theta)
    k = M.dim
    acc = zeros((k, k), E.backend)
    for p, row in zip(out_law, d):
        acc = acc + p * np.outer(row, row)
    return frozen(acc)


# ---------------------------------------------------------------------------
# Rao-Blackwell
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RaoBlackwellResult:
    """``function`` lives on the conditioning kernel's target; ``estimator``
    is the randomized estimator "draw from M2, report the function"."""

    function: RealFunction
    estimator: RealKernel

    def __iter__(self):
        return iter((self.function, self.estimator))


def rao_blackwellize(E: Experiment, M1: RealKernel, M2: Kernel) -> RaoBlackwellResult:
    """Condition the estimator ``M1`` on the sufficient kernel ``M2``.

    The per-theta conditional expectations are patched into one
    theta-free function; their agreement on common supports is asserted.
    Points charged by no member take the value at the first charged point.
    """
    _check(E, M1)
    if M2.source != E.space:
        raise SpaceMismatch("conditioning kernel must act on the sample space")
    rep = check_sufficiency(E, M2)
    if not rep:
        raise NotSufficient(f"kernel to {M2.target.id!r} is not sufficient", rep.witness)
    backend = E.backend
    vals = zeros((len(M2.target), M1.dim), backend)
    seen: dict[int, str] = {}
    for t, P in E.family.items():
        ce = conditional_expectation(P, M1, M2)
        for j, w2 in enumerate(M2.target.points):
            if w2 not in ce.defined_on:
                continue
            if j in seen:
                if not all(scalars_equal(a, b, backend) for a, b in zip(vals[j], ce.values[j])):
                    raise AssertionError(f"conditional expectations under {seen[j]!r} and {t!r} "
                                         f"disagree at {w2!r} despite sufficiency")
            else:
                seen[j] = t
                vals[j] = ce.values[j]
    first = min(seen)
    for j in range(len(M2.target)):
        if j not in seen:
            vals[j] = vals[first]
    charged = [M2.target.points[j] for j in sorted(seen)]
    S = RealFunction(M2.target, frozen(vals), charged)
    return RaoBlackwellResult(S, function_as_estimator(S, M2))


def jensen_equality(P, M1: RealKernel, M2: Kernel, S: RealFunction) -> bool:
    """True when, ``P^{M2}``-a.s., the conditional law of ``M1``'s output
    given ``M2`` sits entirely on points whose value equals ``S``.

    For a strictly convex loss this is exactly when conditioning leaves the
    risk at ``P`` unchanged.
    """
    backend = P.backend
    L = conditional_distribution(P, M1.kernel, M2)
    for w2 in image_support(P, M2):
        j = M2.target.index(w2)
        for g, p in zip(M1.grid.values, L.rows[j]):
            if is_positive(p, backend) and not all(scalars_equal(a, b, backend) for a, b in zip(g, S.values[j])):
                return False
    return True


def mean_lift_agrees(P, M1: RealKernel, M2: Kernel, S: RealFunction) -> bool:
    """``S(w2) == mean of M1's row at w`` on the support of ``P (x) M2``."""
    backend = P.backend
    means = mean_function(M1).values
    for i, pw in enumerate(P.mass):
        if not is_positive(pw, backend):
            continue
        for j, m in enumerate(M2.rows[i]):
            if is_positive(m, backend) and not all(
                    scalars_equal(a, b, backend) for a, b in zip(means[i], S.values[j])):
                return False
    return True


@dataclass(frozen=True)
class RiskReport:
    candidate: dict
    reference: dict
    dominates: bool
    strict_at: tuple
    equality_diagnosis: dict | None = None
    mean_lift: dict | None = None

    @property
    def per_theta(self) -> dict:
        return self.candidate


def compare_risks(E: Experiment, W: LossFunction, candidate: RealKernel, reference: RealKernel,
                  given: Kernel | None = None) -> RiskReport:
    """Per-theta risks of ``candidate`` against ``reference``.

    When ``given`` is the kernel that ``candidate`` was conditioned on,
    ``equality_diagnosis[theta]`` says whether the Jensen step is an
    equality at theta; under a strictly convex loss this holds exactly when
    the two risks coincide.
    """
    backend = E.backend
    cand = risks(E, W, candidate)
    ref = risks(E, W, reference)
    dominated = all(c <= r or scalars_equal(c, r, backend) for c, r in zip(cand.values(), ref.values()))
    strict = tuple(t for t in E.thetas if cand[t] < ref[t] and not scalars_equal(cand[t], ref[t], backend))
    diag = lift = None
    if given is not None:
        S = rao_blackwellize(E, reference, given).function
        diag = {t: jensen_equality(P, reference, given, S) for t, P in E.family.items()}
        lift = {t: mean_lift_agrees(P, reference, given, S) for t, P in E.family.items()}
    return RiskReport(cand, ref, dominated, strict, diag, lift)


# ---------------------------------------------------------------------------
# Lehmann-Scheffe
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrialRecord:
    index: int
    competitor: RealKernel = field(repr=False)
    function_matches: bool
    competitor_unbiased: bool
    risk_best: dict
    risk_conditioned: dict
    risk_competitor: dict
    violations: tuple


@dataclass(frozen=True)
class UMVUECertificate:
    best: RaoBlackwellResult
    support: tuple
    trials: tuple
    seed: int
    loss: str

    @property
    def violations(self) -> list:
        return [v for tr in self.trials for v in tr.violations]

    @property
    def passed(self) -> bool:
        return not self.violations


def _le(a, b, backend):
    return a <= b or scalars_equal(a, b, backend)


def output_grid(E: Experiment, M1: RealKernel) -> ValueGrid:
    """Union of ``M1``'s grid values and the estimand values, first-seen order."""
    seen, values = set(), []
    for v in list(M1.grid.values) + [E.f(t) for t in E.thetas]:
        key = tuple(v)
        if key not in seen:
            seen.add(key)
            values.append(list(v))
    return numeric_space("unbiased-grid", values, E.backend)[1]


def _require_umvue_hypotheses(E: Experiment, M1: RealKernel, M2: Kernel):
    suff = check_sufficiency(E, M2)
    if not suff:
        raise NotSufficient(f"kernel to {M2.target.id!r} is not sufficient", suff.witness)
    comp = check_completeness(E, M2)
    if not comp:
        raise NotComplete(f"kernel to {M2.target.id!r} is not complete "
                          f"(rank {comp.rank}/{comp.columns})", comp.witness)
    unb = check_unbiased(E, M1)
    if not unb:
        raise NotUnbiased("estimator is biased", unb.bias)
    return comp


def certify_umvue(E: Experiment, W: LossFunction, M1: RealKernel, M2: Kernel,
                  trials: int = 100, seed: int = 0) -> UMVUECertificate:
    """Check the conditioned estimator against sampled unbiased competitors.

    For every competitor ``M'`` drawn from the unbiasedness polytope, its
    conditioned version must coincide with the best estimator on the
    support union, and ``risk(best) <= risk(E(M'|M2)) <= risk(M')`` must
    hold at every theta.
    """
    comp = _require_umvue_hypotheses(E, M1, M2)
    backend = E.backend
    best = rao_blackwellize(E, M1, M2)
    best_risk = risks(E, W, best.estimator)
    grid = output_grid(E, M1)
    records = []
    for i, competitor in enumerate(sample_unbiased_estimators(E, grid, trials, seed)):
        rb = rao_blackwellize(E, competitor, M2)
        r_rb = risks(E, W, rb.estimator)
        r_comp = risks(E, W, competitor)
        matches = rb.function.equals(best.function, on=comp.support_union)
        unbiased = bool(check_unbiased(E, competitor))
        bad = []
        if not matches:
            bad.append(f"trial {i}: conditioned competitor differs from the best estimator")
        if not unbiased:
            bad.append(f"trial {i}: sampled competitor is biased")
        for t in E.thetas:
            if not _le(best_risk[t], r_rb[t], backend):
                bad.append(f"trial {i}: best risk exceeds conditioned competitor at theta={t}")
            if not _le(r_rb[t], r_comp[t], backend):
                bad.append(f"trial {i}: conditioning increased the risk at theta={t}")
            if W.kind == "squared-error" and M1.dim > 1:
                a = np.diag(mse_matrix(E, t, best.estimator))
                b = np.diag(mse_matrix(E, t, competitor))
                if not all(_le(x, y, backend) for x, y in zip(a, b)):
                    bad.append(f"trial {i}: coordinate variance exceeds competitor at theta={t}")
        records.append(TrialRecord(i, competitor, matches, unbiased, best_risk, r_rb, r_comp, tuple(bad)))
    return UMVUECertificate(best, comp.support_union, tuple(records), seed, W.kind)


@dataclass(frozen=True)
class LSCertificate:
    factor: Statistic
    factor_verified: bool
    conditional_matches_factor: bool
    umvue: UMVUECertificate

    @property
    def passed(self) -> bool:
        return self.factor_verified and self.conditional_matches_factor and self.umvue.passed


def ls_for_statistics(E: Experiment, T: Statistic, grid: ValueGrid, M1: Kernel,
                      W: LossFunction | None = None, trials: int = 100, seed: int = 0) -> LSCertificate:
    """Certify the statistic ``T`` (values read through ``grid``) as UMVUE.

    Requires ``T`` to factor through the sufficient and complete kernel
    ``M1``: ``dirac(T) == compose(M1, dirac(S))``.
    """
    W = W or LossFunction.squared()
    S = factor_through(T, M1)
    verified = compose(M1, dirac_kernel(S, M1.backend)) == dirac_kernel(T, M1.backend)
    estimator = real_statistic(T, grid, E.backend)
    comp = _require_umvue_hypotheses(E, estimator, M1)
    rb = rao_blackwellize(E, estimator, M1)
    factor_values = RealFunction(M1.target, frozen(estimator.grid.values[list(S.map)].copy()))
    matches = rb.function.equals(factor_values, on=comp.support_union)
    cert = certify_umvue(E, W, estimator, M1, trials, seed)
    return LSCertificate(S, verified, matches, cert)

