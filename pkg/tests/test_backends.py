"""The float backend agrees with the exact backend within 1e-9."""

import numpy as np
from hypothesis import given

import kernelstat as ks
from instances import Instance, SufficientInstance, seeds

SQ = ks.LossFunction.squared()
TOL = 1e-9


def close(a, b):
    return np.allclose(np.asarray(a, dtype=float), np.asarray(b, dtype=float), atol=TOL, rtol=0)


@given(seeds)
def test_conditioning_agrees(seed):
    ex, fl = Instance(seed), Instance(seed, backend="float")
    a = ks.conditional_expectation(ex.P, ex.M1, ex.M2)
    b = ks.conditional_expectation(fl.P, fl.M1, fl.M2)
    assert a.defined_on == b.defined_on
    idx = [ex.omega2.index(p) for p in sorted(a.defined_on)]
    assert close(a.values[idx], b.values[idx])
    assert close(ks.image(ex.P, ex.M2).mass, ks.image(fl.P, fl.M2).mass)
    assert close(ks.conditional_distribution(ex.P, ex.K1, ex.M2).rows,
                 ks.conditional_distribution(fl.P, fl.K1, fl.M2).rows)


@given(seeds)
def test_estimation_agrees(seed):
    inst = SufficientInstance(seed)
    E_f = inst.E.to_backend("float")
    M1_f, M2_f = inst.M1.to_backend("float"), inst.M2.to_backend("float")
    assert ks.check_sufficiency(inst.E, inst.M2).sufficient == ks.check_sufficiency(E_f, M2_f).sufficient
    _, ex = ks.rao_blackwellize(inst.E, inst.M1, inst.M2)
    _, fl = ks.rao_blackwellize(E_f, M1_f, M2_f)
    for t in inst.E.thetas:
        assert close(ks.risk(inst.E, t, SQ, ex), ks.risk(E_f, t, SQ, fl))
        assert close(ks.risk(inst.E, t, SQ, inst.M1), ks.risk(E_f, t, SQ, M1_f))


def test_fixture_completeness_agrees(model, model_float):
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ks.RankToleranceWarning)
        f = ks.check_completeness(model_float.experiment, model_float.kernel("sumT"))
    e = ks.check_completeness(model.experiment, model.kernel("sumT"))
    assert (e.complete, e.rank) == (f.complete, f.rank)
    assert close(e.moment_matrix, f.moment_matrix)
