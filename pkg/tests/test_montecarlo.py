import importlib
import math
import os
import subprocess
import sys
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

import kernelstat as ks
from kernelstat import _sampling_py, montecarlo

try:
    from kernelstat import _sampling
except ImportError:
    _sampling = None

SQ = ks.LossFunction.squared()
AB = ks.FiniteSpace("AB", ("a", "b"))


def test_point_mass_always_drawn():
    d = ks.point_mass(ks.FiniteSpace("S", ("x", "y", "z")), "y")
    s = ks.SampleStream(5)
    assert {ks.sample_point(d, s) for _ in range(200)} == {"y"}


def test_zero_mass_points_never_drawn():
    d = ks.make_distribution(ks.FiniteSpace("S", ("x", "y", "z")), [Fraction(1, 2), 0, Fraction(1, 2)])
    idx = montecarlo.sample_indices(d, ks.SampleStream(0), 20000)
    assert 1 not in set(idx.tolist())


def test_uniform_frequency_within_four_sigma():
    n = 10**5
    idx = montecarlo.sample_indices(ks.uniform(AB), ks.SampleStream(42), n)
    freq = float(np.mean(idx == 0))
    assert abs(freq - 0.5) <= 4 * 0.5 / math.sqrt(n)


def test_streams_replay_and_differ():
    a = ks.SampleStream(7, 3).uniforms(10)
    b = ks.SampleStream(7, 3).uniforms(10)
    c = ks.SampleStream(7, 4).uniforms(10)
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def test_constant_estimator_draws():
    M = ks.constant_real_kernel(AB, 3)
    draws = ks.sample_estimator(ks.uniform(AB), M, ks.SampleStream(0), 50)
    assert draws.shape == (50, 1) and set(draws[:, 0]) == {3.0}


def test_estimator_space_mismatch(model):
    with pytest.raises(ks.SpaceMismatch):
        ks.sample_estimator(ks.uniform(AB), model.estimator("coinflip"), ks.SampleStream(0))


def test_coinflip_mean_and_risk_at_half(model):
    n = 10**5
    rep = ks.empirical_report(model.experiment, SQ, model.estimator("coinflip"), "0.5", n, seed=2024)
    assert abs(rep.mean[0] - 0.5) <= 4 * 0.5 / math.sqrt(n)
    assert rep.exact_risk == 0.25 and not rep.discrepancy


def test_rao_blackwell_pair_risks(model):
    n = 10**5
    for name, exact in (("coinflip", 0.25), ("sumT", 0.125)):
        rep = ks.empirical_report(model.experiment, SQ, model.estimator(name), "0.5", n, seed=11)
        assert rep.exact_risk == exact
        if rep.risk_se:
            assert abs(rep.risk - exact) <= 4 * rep.risk_se
        assert not rep.discrepancy


def test_single_draw_has_no_standard_error(model):
    rep = ks.empirical_report(model.experiment, SQ, model.estimator("coinflip"), "0.2", 1, seed=0)
    assert not rep.se_defined and rep.mean_z is None and not rep.discrepancy


def test_reports_are_bit_identical(model):
    a = ks.empirical_report(model.experiment, SQ, model.estimator("coinflip"), "0.8", 5000, seed=3)
    b = ks.empirical_report(model.experiment, SQ, model.estimator("coinflip"), "0.8", 5000, seed=3)
    assert a.mean.tobytes() == b.mean.tobytes() and a.risk == b.risk and a.risk_se == b.risk_se


def test_cdf_tail_is_one():
    c = montecarlo.cdf(np.array([Fraction(1, 3), Fraction(2, 3), Fraction(0)], dtype=object))
    assert c.tolist() == [pytest.approx(1 / 3), 1.0, 1.0]
    c = montecarlo.cdf(np.array([0.1, 0.2, 0.7 - 1e-12, 0.0]))
    assert c[2] == 1.0 and c[3] == 1.0


@pytest.mark.skipif(_sampling is None, reason="compiled sampler not built")
def test_compiled_and_fallback_agree():
    rng = np.random.default_rng(0)
    outer = np.cumsum(rng.dirichlet(np.ones(7)))
    outer[-1] = 1.0
    rows = np.cumsum(rng.dirichlet(np.ones(5), size=7), axis=1)
    rows[:, -1] = 1.0
    u1, u2 = rng.random(5000), rng.random(5000)
    u1[:3] = [0.0, outer[2], np.nextafter(1.0, 0)]
    assert np.array_equal(_sampling.inverse_cdf(outer, u1), _sampling_py.inverse_cdf(outer, u1))
    a, b = _sampling.two_stage(outer, rows, u1, u2), _sampling_py.two_stage(outer, rows, u1, u2)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_fallback_selected_by_environment(fixture_path):
    code = ("from kernelstat import montecarlo as m, io, LossFunction;"
            "mod = io.load(%r);"
            "r = m.empirical_report(mod.experiment, LossFunction.squared(), mod.estimator('coinflip'), '0.2', 2000, 5);"
            "print(m.SAMPLING_BACKEND, repr(float(r.mean[0])), repr(r.risk))") % fixture_path
    env = dict(os.environ, KERNELSTAT_PURE_PYTHON="1")
    pure = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True).stdout.split()
    env.pop("KERNELSTAT_PURE_PYTHON")
    default = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True).stdout.split()
    assert pure[0] == "python"
    assert pure[1:] == default[1:]


def test_two_stage_matches_composed_law(model):
    """Drawing w then a grid point equals drawing once from the image law."""
    P = model.experiment.P("0.2")
    K = model.kernel("coinflip")
    n = 40000
    _, j = montecarlo.sample_two_stage(P, K.rows, ks.SampleStream(8), n)
    observed = np.bincount(j, minlength=len(K.target))
    expected = np.array([float(x) for x in ks.image(P, K).mass]) * n
    assert stats.chisquare(observed, expected).pvalue > 1e-4
