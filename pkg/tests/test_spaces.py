from decimal import Decimal
from fractions import Fraction

import numpy as np
import pytest

import kernelstat as ks
from kernelstat.spaces import format_scalar, format_vector, to_fraction, to_scalar

AB = ks.FiniteSpace("AB", ("a", "b"))
XY = ks.FiniteSpace("XY", ("x", "y"))


def test_uniform_two_points():
    d = ks.make_distribution(AB, ["1/2", "1/2"])
    assert d["a"] == d["b"] == Fraction(1, 2)
    assert d == ks.uniform(AB)


def test_point_mass():
    d = ks.make_distribution(AB, [1, 0])
    assert d.support() == ("a",)
    assert d == ks.point_mass(AB, "a")


def test_mass_not_one():
    with pytest.raises(ks.MassNotOne):
        ks.make_distribution(AB, [0.7, 0.4])
    with pytest.raises(ks.MassNotOne):
        ks.make_distribution(AB, [0.7, 0.4], "float")


def test_negative_mass():
    with pytest.raises(ks.NegativeMass):
        ks.make_distribution(AB, [Fraction(3, 2), Fraction(-1, 2)])


def test_relabeling_kernel():
    K = ks.make_kernel(AB, XY, [[1, 0], [0, 1]])
    assert K.is_deterministic()
    assert K.row("b") == ks.point_mass(XY, "y")


def test_constant_kernel():
    K = ks.make_kernel(AB, XY, [["1/2", "1/2"], ["1/2", "1/2"]])
    assert K == ks.constant_kernel(AB, ks.uniform(XY))
    assert not K.is_deterministic()


def test_row_not_stochastic_names_row():
    with pytest.raises(ks.RowNotStochastic) as err:
        ks.make_kernel(AB, XY, [[0.6, 0.6], [1, 0]])
    assert err.value.row == "a"


def test_event_mass():
    abcd = ks.FiniteSpace("S", tuple("abcd"))
    u = ks.uniform(abcd)
    assert ks.event_mass(u, {"a", "b"}) == Fraction(1, 2)
    assert ks.event_mass(u, set()) == 0
    assert ks.event_mass(u, abcd.points) == 1


def test_space_rejects_duplicates_and_empty():
    with pytest.raises(ValueError):
        ks.FiniteSpace("S", ("a", "a"))
    with pytest.raises(ValueError):
        ks.FiniteSpace("S", ())


def test_unknown_point():
    with pytest.raises(ks.UnknownPoint):
        AB.index("z")


@pytest.mark.parametrize("raw, expected", [
    ("3/4", Fraction(3, 4)), ("0.2", Fraction(1, 5)), (Decimal("0.125"), Fraction(1, 8)),
    (0.5, Fraction(1, 2)), (2, Fraction(2)), (Fraction(1, 3), Fraction(1, 3)),
])
def test_to_fraction(raw, expected):
    assert to_fraction(raw) == expected


def test_to_scalar_rejects_bool():
    with pytest.raises(TypeError):
        to_scalar(True)


def test_float_tolerance_context():
    d = ks.make_distribution(AB, [0.5, 0.5], "float")
    e = ks.make_distribution(AB, [0.5 + 1e-12, 0.5 - 1e-12], "float")
    assert d == e
    with ks.using_tolerance(1e-15):
        assert d != e
    assert ks.tolerance() == 1e-9


def test_backend_mismatch():
    P = ks.uniform(AB)
    K = ks.make_kernel(AB, XY, [[1, 0], [0, 1]], "float")
    with pytest.raises(ks.BackendMismatch):
        ks.image(P, K)


def test_collapse_merges_duplicate_values():
    S = ks.FiniteSpace("S", ("p", "q", "r"))
    g = ks.make_grid(S, [1, 2, 1])
    T, grid = g.collapse()
    assert [T(p) for p in S.points] == ["1", "2", "1"]
    assert list(grid.values[:, 0]) == [1, 2]


def test_statistic_composition():
    S = ks.FiniteSpace("S", ("p", "q", "r"))
    T = ks.Statistic.from_mapping(S, AB, {"p": "a", "q": "b", "r": "a"})
    U = ks.Statistic.from_mapping(AB, XY, {"a": "y", "b": "x"})
    assert T.then(U).as_dict() == {"p": "y", "q": "x", "r": "y"}
    with pytest.raises(ValueError):
        ks.Statistic.from_mapping(S, AB, {"p": "a"})


def test_formatting():
    assert format_scalar(Fraction(1, 2)) == "1/2"
    assert format_scalar(0.1 + 0.2) == "0.3"
    assert format_scalar(np.float64(1) / 3) == "0.333333333333"
    assert format_vector([Fraction(1), Fraction(-2, 3)]) == "[1, -2/3]"


def test_immutability():
    d = ks.uniform(AB)
    with pytest.raises(AttributeError):
        d.mass = None
    with pytest.raises(ValueError):
        d.mass[0] = 1
