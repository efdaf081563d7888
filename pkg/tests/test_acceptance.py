"""The ten acceptance criteria, each at its stated size and tolerance.

Run alone with ``pytest tests/test_acceptance.py -v``; a PASS/FAIL line per
criterion is printed in the terminal summary.
"""

import math
import random
import time
from fractions import Fraction

import pytest
import sympy

import kernelstat as ks
import oracles
from conftest import bernoulli
from instances import (
    Instance,
    SufficientInstance,
    fiber_sufficient_family,
    random_family,
    random_statistic,
    space,
)

pytestmark = pytest.mark.acceptance

SQ = ks.LossFunction.squared()
RESULTS = {}
TITLES = {
    1: "tower identity, 200 exact instances, < 5 s",
    2: "dual-route conditional expectation, 200 instances",
    3: "sufficiency route equivalence, 100 experiments",
    4: "completeness oracle on the Bernoulli fixture",
    5: "Rao-Blackwell values and domination on 100 instances",
    6: "strict-convexity equality diagnosis",
    7: "UMVUE certificate, 100 competitors, < 30 s",
    8: "first Lehmann-Scheffe theorem with factorization",
    9: "Monte Carlo consistency, N = 10^5, 4 sigma",
    10: "reciprocal representation, 100 instances",
}

INSTANCES = [Instance(seed) for seed in range(200)]


def record(number):
    def wrap(fn):
        def test(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException:
                RESULTS[number] = False
                print(f"criterion {number:2d}: FAIL  {TITLES[number]}")
                raise
            RESULTS[number] = True
            print(f"criterion {number:2d}: PASS  {TITLES[number]}")
        test.__name__ = fn.__name__
        test.__doc__ = fn.__doc__
        return test
    return wrap


@record(1)
def test_criterion_01_tower_identity():
    start = time.perf_counter()
    for inst in INSTANCES:
        assert len(inst.omega) <= 6 and len(inst.K1.target) <= 4 and len(inst.omega2) <= 4
        ce = ks.conditional_expectation(inst.P, inst.M1, inst.M2)
        img = ks.image(inst.P, inst.M2)
        total = [sum((img[p] * ce(p)[c] for p in ce.defined_on), Fraction(0)) for c in range(inst.M1.dim)]
        assert total == oracles.expectation(inst.p, inst.rows1, inst.values)
        assert total == list(ks.expectation(inst.P, inst.M1))
    assert time.perf_counter() - start < 5.0


@record(2)
def test_criterion_02_dual_route():
    for inst in INSTANCES:
        direct = ks.conditional_expectation(inst.P, inst.M1, inst.M2)
        product = ks.conditional_expectation_via_product(inst.P, inst.M1, inst.M2)
        support = set(ks.image_support(inst.P, inst.M2))
        assert direct.defined_on == product.defined_on == support
        for p in support:
            assert list(direct(p)) == list(product(p))


def sufficiency_case(seed):
    rng = random.Random(seed)
    omega = space("W", rng.randint(2, 6))
    T = random_statistic(rng, omega, rng.randint(1, 3))
    kind = seed % 4
    if kind in (0, 1):
        E = ks.Experiment(omega, fiber_sufficient_family(rng, omega, T, rng.randint(2, 3)))
        if kind == 0:
            return E, ks.dirac_kernel(T), True
        z = rng.randint(1, 3)
        noise = ks.make_kernel(omega, space("Z", z), oracles.random_rows(rng, len(omega), z))
        return E, ks.pair_kernel(ks.dirac_kernel(T), noise), True
    E = ks.Experiment(omega, random_family(rng, omega, rng.randint(2, 3)))
    if kind == 2:
        return E, ks.dirac_kernel(T), None
    v = rng.randint(1, 3)
    return E, ks.make_kernel(omega, space("V", v), oracles.random_rows(rng, len(omega), v)), None


@record(3)
def test_criterion_03_sufficiency_routes():
    seen = {True: 0, False: 0}
    for seed in range(100):
        E, M, expected = sufficiency_case(seed)
        direct = ks.check_sufficiency(E, M).sufficient
        assert direct == ks.check_sufficiency_via_product(E, M)
        if expected is not None:
            assert direct == expected
        seen[direct] += 1
    model = bernoulli()[1]
    for name, expected in (("sumT", True), ("X1only", False)):
        E, M = model.experiment, model.kernel(name)
        assert ks.check_sufficiency(E, M).sufficient == ks.check_sufficiency_via_product(E, M) == expected
    assert seen[True] >= 50 and seen[False] >= 10


@record(4)
def test_criterion_04_completeness_oracle():
    E, m = bernoulli()
    rep = ks.check_completeness(E, m.kernel("sumT"))
    D = sympy.Matrix([[sympy.Rational(x.numerator, x.denominator) for x in row] for row in rep.moment_matrix])
    assert rep.complete and (rep.rank, rep.columns) == (3, 3) == (D.rank(), 3)
    E2, m2 = bernoulli(("0.2", "0.8"))
    rep2 = ks.check_completeness(E2, m2.kernel("sumT"))
    assert not rep2.complete and (rep2.rank, rep2.columns) == (2, 3)
    f = rep2.witness
    assert any(f.scalar(t) != 0 for t in "012")
    for theta in (Fraction(1, 5), Fraction(4, 5)):
        p = oracles.bernoulli_mass(theta)
        fiber = [p[0], p[1] + p[2], p[3]]
        assert sum((q * f.scalar(t) for q, t in zip(fiber, "012")), Fraction(0)) == 0


@record(5)
def test_criterion_05_rao_blackwell():
    E, m = bernoulli()
    S, improved = ks.rao_blackwellize(E, m.estimator("coinflip"), m.kernel("sumT"))
    assert [S.scalar(t) for t in "012"] == [0, Fraction(1, 2), 1]
    for t, theta in zip(E.thetas, oracles.BERNOULLI_THETAS):
        assert ks.risk(E, t, SQ, m.estimator("coinflip")) == theta * (1 - theta)
        assert ks.risk(E, t, SQ, improved) == theta * (1 - theta) / 2
    assert [ks.risk(E, t, SQ, improved) for t in E.thetas] == [Fraction(2, 25), Fraction(1, 8), Fraction(2, 25)]
    randomized = 0
    for seed in range(100):
        inst = SufficientInstance(seed, k=1 + seed % 2)
        randomized += not inst.M2.is_deterministic()
        _, better = ks.rao_blackwellize(inst.E, inst.M1, inst.M2)
        assert ks.compare_risks(inst.E, SQ, better, inst.M1).dominates
    assert randomized >= 20


@record(6)
def test_criterion_06_strict_convexity_clause():
    E, m = bernoulli()
    M2 = m.kernel("sumT")
    for name, strict in (("coinflip", True), ("sumT", False)):
        M1 = m.estimator(name)
        _, improved = ks.rao_blackwellize(E, M1, M2)
        rep = ks.compare_risks(E, SQ, improved, M1, given=M2)
        for t in E.thetas:
            equal = rep.candidate[t] == rep.reference[t]
            assert rep.equality_diagnosis[t] == equal
            assert equal != strict
    for seed in range(100):
        inst = SufficientInstance(seed)
        _, improved = ks.rao_blackwellize(inst.E, inst.M1, inst.M2)
        rep = ks.compare_risks(inst.E, SQ, improved, inst.M1, given=inst.M2)
        for t in inst.E.thetas:
            assert rep.equality_diagnosis[t] == (rep.candidate[t] == rep.reference[t])


@record(7)
def test_criterion_07_umvue_certificate():
    E, m = bernoulli()
    start = time.perf_counter()
    cert = ks.certify_umvue(E, SQ, m.estimator("coinflip"), m.kernel("sumT"), trials=100, seed=20240601)
    elapsed = time.perf_counter() - start
    assert len(cert.trials) == 100 and cert.passed
    half = [0, Fraction(1, 2), 1]
    for tr in cert.trials:
        assert tr.competitor_unbiased and tr.function_matches
        for t in E.thetas:
            assert tr.risk_competitor[t] >= cert.trials[0].risk_best[t]
    assert [cert.best.function.scalar(t) for t in "012"] == half
    assert elapsed < 30.0


@record(8)
def test_criterion_08_first_lehmann_scheffe():
    E, m = bernoulli()
    T, grid = m.real_statistic("sumT")
    M1 = m.kernel("sumT")
    cert = ks.ls_for_statistics(E, T, grid, M1, trials=20, seed=1)
    assert cert.passed and cert.factor_verified and cert.conditional_matches_factor
    # independent check of the factorization identity
    MS = ks.dirac_kernel(cert.factor)
    assert oracles.compose(M1.rows.tolist(), MS.rows.tolist()) == ks.dirac_kernel(T).rows.tolist()
    assert [grid.values[j, 0] for j in cert.factor.map] == [0, Fraction(1, 2), 1]


@record(9)
def test_criterion_09_monte_carlo():
    E, m = bernoulli()
    n = 10**5
    for name in ("coinflip", "sumT"):
        M = m.estimator(name)
        for counter, t in enumerate(E.thetas):
            rep = ks.empirical_report(E, SQ, M, t, n, seed=987654321, counter=counter)
            assert abs(rep.mean[0] - rep.exact_mean[0]) <= 4 * rep.mean_se[0] + 1e-15
            assert abs(rep.risk - rep.exact_risk) <= 4 * rep.risk_se + 1e-15
            assert not rep.discrepancy
    rep = ks.empirical_report(E, SQ, m.estimator("coinflip"), "0.5", n, seed=987654321)
    assert abs(rep.mean[0] - 0.5) <= 4 * 0.5 / math.sqrt(n)
    assert abs(rep.risk - 0.25) <= 4 * rep.risk_se + 1e-15


@record(10)
def test_criterion_10_reciprocal_representation():
    for seed in range(100):
        inst = INSTANCES[seed]
        Q = ks.product_measure(inst.P, inst.K1)
        L = ks.conditional_distribution(Q, ks.dirac_kernel(ks.right_projection(Q.space)),
                                        ks.dirac_kernel(ks.left_projection(Q.space)))
        for w in inst.P.support():
            assert list(L.row(w).mass) == inst.rows1[inst.omega.index(w)]
