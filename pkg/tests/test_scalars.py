from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bivect.scalars import (
    EXACT,
    I,
    ONE,
    ZERO,
    DomainError,
    ExactComplex,
    ScalarMode,
    cpow,
    exact_array,
    exact_det,
    exact_inv,
    exact_identity,
    scalar_from_json,
    scalar_to_json,
)

fractions = st.fractions(min_value=-20, max_value=20, max_denominator=12)
exacts = st.builds(ExactComplex, fractions, fractions)
nonzero = exacts.filter(lambda z: not z.is_zero())


@given(exacts, exacts, exacts)
def test_field_laws(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert a * (b + c) == a * b + a * c
    assert a * b == b * a
    assert a - a == ZERO


@given(nonzero)
def test_inverse(a):
    assert a * a.inverse() == ONE
    assert ONE / a == a.inverse()


@given(nonzero, st.integers(-6, 6))
def test_cpow_matches_repeated_product(a, k):
    expected = ONE
    base = a if k >= 0 else a.inverse()
    for _ in range(abs(k)):
        expected = expected * base
    assert cpow(a, k) == expected


def test_cpow_zero():
    assert cpow(ZERO, 3) == ZERO
    with pytest.raises(DomainError):
        cpow(ZERO, 0)
    with pytest.raises(DomainError):
        cpow(0j, -1)


def test_i_squared():
    assert I * I == -ONE
    assert cpow(I, 4) == ONE
    assert complex(ExactComplex(Fraction(1, 2), -3)) == complex(0.5, -3)


def test_int_interop_and_hash():
    assert ExactComplex(3) == 3
    assert hash(ExactComplex(Fraction(1, 2))) == hash(Fraction(1, 2))
    assert 2 * ExactComplex(1, 1) == ExactComplex(2, 2)
    assert 1 - ExactComplex(0, 1) == ExactComplex(1, -1)


def test_immutable():
    with pytest.raises(AttributeError):
        ONE.re = Fraction(2)


@given(exacts)
def test_json_round_trip(a):
    assert scalar_from_json(scalar_to_json(a)) == a


def test_json_approx():
    assert scalar_from_json(scalar_to_json(1.5 - 2j)) == 1.5 - 2j
    with pytest.raises(DomainError):
        scalar_from_json("1")


def test_mode():
    assert EXACT.exact
    m = ScalarMode.approx(1e-6)
    assert m.close(1.0, 1.0 + 1e-7) and not m.close(1.0, 1.1)
    with pytest.raises(DomainError):
        ScalarMode(0.0)


def test_exact_det_and_inverse(rng):
    for n in range(1, 5):
        rows = rng.integers(-3, 4, size=(n, n)).tolist()
        m = exact_array(rows)
        d = exact_det(m)
        assert complex(d) == pytest.approx(np.linalg.det(np.array(rows, float)), abs=1e-9)
        if not d.is_zero():
            inv = exact_inv(m)
            assert (m.dot(inv) == exact_identity(n)).all()


def test_singular_inverse():
    with pytest.raises(DomainError):
        exact_inv(exact_array([[1, 2], [2, 4]]))
