"""Seeded simulation of distributions and randomized estimators.

Draws use inverse-CDF search over the fixed point order. The search loops
come from the compiled ``_sampling`` extension when it is importable and
from ``_sampling_py`` otherwise (or when ``KERNELSTAT_PURE_PYTHON`` is set);
both consume the same uniforms and return identical indices.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .conditioning import RealKernel, expectation
from .estimation import LossFunction, loss_vector, risk
from .experiment import Experiment
from .spaces import Distribution, SpaceMismatch, backend_of, is_positive

if os.environ.get("KERNELSTAT_PURE_PYTHON"):
    from . import _sampling_py as _core
    SAMPLING_BACKEND = "python"
else:
    try:
        from . import _sampling as _core
        SAMPLING_BACKEND = "cython"
    except ImportError:
        from . import _sampling_py as _core
        SAMPLING_BACKEND = "python"

Z_BAND = 4.0


@dataclass(frozen=True)
class SampleStream:
    """Generator for replication ``counter`` of master ``seed``.

    Equal ``(seed, counter)`` pairs replay the same draws; distinct counters
    give independent streams (``SeedSequence`` spawn keys).
    """

    seed: int
    counter: int = 0
    generator: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        ss = np.random.SeedSequence(int(self.seed) & (2**64 - 1), spawn_key=(int(self.counter),))
        object.__setattr__(self, "generator", np.random.default_rng(ss))

    def uniforms(self, n: int) -> np.ndarray:
        return self.generator.random(n)


def cdf(mass: np.ndarray) -> np.ndarray:
    """Float CDF whose tail past the last charged point is exactly 1."""
    if backend_of(mass) == "exact":
        acc, out = Fraction(0), []
        for m in mass:
            acc += m
            out.append(float(acc))
        c = np.array(out, dtype=float)
    else:
        c = np.cumsum(np.asarray(mass, dtype=float))
    charged = [i for i, m in enumerate(mass) if is_positive(m, backend_of(mass))]
    c[charged[-1]:] = 1.0
    return np.ascontiguousarray(c)


def row_cdfs(rows: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(np.vstack([cdf(r) for r in rows]))


def sample_indices(d: Distribution, s: SampleStream, n: int) -> np.ndarray:
    return _core.inverse_cdf(cdf(d.mass), s.uniforms(n))


def sample_point(d: Distribution, s: SampleStream) -> str:
    """One point of ``d``'s space drawn from ``d``."""
    return d.space.points[int(sample_indices(d, s, 1)[0])]


def sample_two_stage(P: Distribution, rows: np.ndarray, s: SampleStream, n: int):
    """Draw ``w ~ P`` then a column from row ``w``; returns both index arrays."""
    u1 = s.uniforms(n)
    u2 = s.uniforms(n)
    return _core.two_stage(cdf(P.mass), row_cdfs(rows), u1, u2)


def sample_estimator(P: Distribution, M: RealKernel, s: SampleStream, n: int = 1) -> np.ndarray:
    """``n`` draws of the estimator's output under ``P``, shape ``(n, k)``."""
    if M.source != P.space:
        raise SpaceMismatch("estimator does not act on the distribution's space")
    _, j = sample_two_stage(P, M.kernel.rows, s, n)
    return np.asarray(M.grid.values, dtype=float)[j]


@dataclass(frozen=True)
class EmpiricalReport:
    theta: str
    n: int
    seed: int
    mean: np.ndarray
    mean_se: np.ndarray | None
    exact_mean: np.ndarray
    mean_z: np.ndarray | None
    risk: float
    risk_se: float | None
    exact_risk: float
    risk_z: float | None

    @property
    def se_defined(self) -> bool:
        return self.mean_se is not None

    @property
    def discrepancy(self) -> bool:
        """True when some z-score leaves the +-4 band."""
        if not self.se_defined:
            return False
        return bool(np.any(np.abs(self.mean_z) > Z_BAND) or abs(self.risk_z) > Z_BAND)


def _z(observed, exact, se):
    if se > 0:
        return (observed - exact) / se
    return 0.0 if observed == exact else math.copysign(math.inf, observed - exact)


def empirical_report(E: Experiment, W: LossFunction, M: RealKernel, theta: str, n: int,
                     seed: int, counter: int = 0) -> EmpiricalReport:
    """Simulate ``n`` outputs under ``P_theta`` and score them against exact values."""
    if M.source != E.space:
        raise SpaceMismatch("estimator does not act on the experiment's space")
    P = E.P(theta)
    s = SampleStream(seed, counter)
    _, j = sample_two_stage(P, M.kernel.rows, s, n)
    draws = np.asarray(M.grid.values, dtype=float)[j]
    losses = np.asarray(loss_vector(E, theta, W, M), dtype=float)[j]
    exact_mean = np.asarray(expectation(P, M), dtype=float)
    exact_risk = float(risk(E, theta, W, M))
    mean = draws.mean(axis=0)
    emp_risk = float(losses.mean())
    if n < 2:
        return EmpiricalReport(theta, n, seed, mean, None, exact_mean, None, emp_risk, None, exact_risk, None)
    mean_se = draws.std(axis=0, ddof=1) / math.sqrt(n)
    risk_se = float(losses.std(ddof=1) / math.sqrt(n))
    mean_z = np.array([_z(m, e, s_) for m, e, s_ in zip(mean, exact_mean, mean_se)])
    return EmpiricalReport(theta, n, seed, mean, mean_se, exact_mean, mean_z,
                           emp_risk, risk_se, exact_risk, _z(emp_risk, exact_risk, risk_se))
