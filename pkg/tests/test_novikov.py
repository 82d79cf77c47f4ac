import json
from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from novmorse.errors import InsufficientPrecision, NonSquare, SingularMatrix, ZeroInversion
from novmorse.novikov import (
    NovikovMatrix,
    NovikovScalar,
    mat_det,
    mat_invert,
    mat_lemma22_check,
    nov_add,
    nov_invert,
    nov_mul,
    nov_valuation,
)
from strategies import exact_scalars, nonzero_scalars, triangular_matrices

T = NovikovScalar.monomial


def S(*pairs, cutoff=None):
    return NovikovScalar(list(pairs), cutoff)


# -- scalars ------------------------------------------------------------------


def test_add_examples():
    assert nov_add(S((0, 1)), S((0, -1))).terms == ()
    assert nov_add(S((0, 1), ("3/2", 2)), S(("3/2", 1))) == S((0, 1), ("3/2", 3))
    assert nov_add(S((0, 1), cutoff=5), S((1, 1))).cutoff == 5


def test_mul_examples():
    assert nov_mul(S((0, 1), (1, 1)), S((0, 1), (1, -1))) == S((0, 1), (2, -1))
    assert nov_mul(T(2, "1/2"), T(3, "1/2")) == T(6, 1)
    geo = S((0, 1), (1, 1), (2, 1), cutoff=2)
    prod = nov_mul(geo, S((0, 1), (1, -1)))
    assert prod.terms == ((F(0), F(1)),) and prod.cutoff == 2


def test_valuation_examples():
    assert nov_valuation(S((-1, 3), (0, 1))) == -1
    assert nov_valuation(NovikovScalar.zero()) is None
    assert nov_valuation(T(5, "2/3")) == F(2, 3)


def test_invert_examples():
    assert nov_invert(NovikovScalar.one(), 10) == NovikovScalar.one()
    assert nov_invert(S((0, 1), (1, -1)), 3) == S((0, 1), (1, 1), (2, 1), (3, 1), cutoff=3)
    assert nov_invert(T(2, -1), 2) == T(F(1, 2), 1)


def test_invert_errors():
    with pytest.raises(ZeroInversion):
        nov_invert(NovikovScalar.zero(), 3)
    with pytest.raises(InsufficientPrecision):
        nov_invert(S((0, 1), (1, 1), cutoff=2), 5)
    with pytest.raises(InsufficientPrecision):
        nov_invert(NovikovScalar.zero(4), 1)


def test_zero_under_truncation_is_not_asserted_zero():
    z = NovikovScalar.zero(3)
    assert z.is_zero_upto(3) and not z.is_zero()


def test_stored_terms_respect_cutoff_and_drop_zeros():
    x = S((0, 1), (1, 0), (4, 2), cutoff=3)
    assert x.terms == ((F(0), F(1)),)


def test_json_round_trip_and_lowest_terms():
    x = S(("-2/4", "6/4"), (2, -1), cutoff="10/4")
    doc = x.to_json()
    assert doc == {"terms": [{"exp": "-1/2", "coeff": "3/2"}, {"exp": "2", "coeff": "-1"}], "cutoff": "5/2"}
    assert NovikovScalar.from_json(json.loads(x.dumps())) == x
    assert NovikovScalar.from_json([{"exp": "−1", "coeff": "2"}]) == T(2, -1)


@given(exact_scalars(), exact_scalars(), exact_scalars())
def test_field_axioms(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert a + b == b + a
    assert (a * b) * c == a * (b * c)
    assert a * b == b * a
    assert a * (b + c) == a * b + a * c
    assert a + NovikovScalar.zero() == a
    assert a * NovikovScalar.one() == a
    assert (a - a).is_zero()


@given(nonzero_scalars, st.integers(0, 12).map(lambda k: F(k, 2)))
def test_inverse_property(a, c):
    b = nov_invert(a, c)
    assert (a * b - 1).is_zero_upto(c)
    assert (a * b).cutoff is None or (a * b).cutoff >= c + min(a.valuation(), 0)


@given(nonzero_scalars, st.integers(0, 8))
def test_cutoff_soundness(a, c):
    lo, hi = nov_invert(a, c), nov_invert(a, c + 3)
    assert (hi - lo).is_zero_upto(c)


# -- matrices ------------------------------------------------------------------------


def test_det_examples():
    m = NovikovMatrix([[1, T(1, 1)], [T(1, 1), 1]])
    assert mat_det(m) == S((0, 1), (2, -1))
    assert mat_det(NovikovMatrix.identity(4)) == NovikovScalar.one()
    with pytest.raises(NonSquare):
        mat_det(NovikovMatrix([[1, 2]]))


def test_triangular_check_examples():
    assert mat_lemma22_check(NovikovMatrix([[S((0, 1), (1, 1)), T(1, 1)], [T(1, 2), 2]])).holds
    bad = mat_lemma22_check(NovikovMatrix([[T(1, 1), 0], [0, 1]]))
    assert not bad.holds and bad.violations[0][:2] == (0, 0)
    bad = mat_lemma22_check(NovikovMatrix([[1, 1], [0, 1]]))
    assert not bad.holds and bad.violations[0][:2] == (0, 1)
    assert not mat_lemma22_check(NovikovMatrix([[S((-1, 1), (0, 1))]])).holds


def test_invert_matrix_examples():
    m = NovikovMatrix([[1, T(1, 1)], [T(1, 1), 1]])
    inv = mat_invert(m, 4)
    diag = S((0, 1), (2, 1), (4, 1))
    off = S((1, -1), (3, -1))
    for (i, j), want in {(0, 0): diag, (1, 1): diag, (0, 1): off, (1, 0): off}.items():
        assert inv[i, j].agrees_upto(want, 4)
    assert (m @ inv - NovikovMatrix.identity(2)).is_zero_upto(4)
    assert mat_invert(NovikovMatrix.identity(3), 5) == NovikovMatrix.identity(3)
    assert mat_invert(NovikovMatrix.diagonal([2, F(1, 3)]), 0) == NovikovMatrix.diagonal([F(1, 2), 3])


def test_invert_singular():
    with pytest.raises(SingularMatrix):
        mat_invert(NovikovMatrix([[1, T(1, 1)], [T(1, 1), T(1, 2)]]), 3)


def test_invert_uses_valuation_pivot():
    # no constant terms on the diagonal: still invertible over the field
    m = NovikovMatrix([[T(1, 1), 1], [1, 0]])
    inv = mat_invert(m, 3)
    assert (m @ inv - NovikovMatrix.identity(2)).is_zero_upto(3)


@given(triangular_matrices(n=3))
def test_triangular_det_constant_term(m):
    assert mat_lemma22_check(m).holds
    prod = F(1)
    for i in range(3):
        prod *= m[i, i].coeff(0)
    assert mat_det(m).coeff(0) == prod != 0
    assert mat_det(m).valuation() == 0


@given(triangular_matrices(n=3))
def test_double_inverse(m):
    inv2 = mat_invert(mat_invert(m, 4), 4)
    assert inv2.agrees_upto(m, 4)
    assert (mat_invert(m, 4) @ m - NovikovMatrix.identity(3)).is_zero_upto(4)


def test_matrix_json_round_trip():
    m = NovikovMatrix([[1, T(F(1, 2), F(3, 2))], [0, S((0, 1), (1, 1))]])
    assert NovikovMatrix.from_json(json.loads(json.dumps(m.to_json()))) == m
