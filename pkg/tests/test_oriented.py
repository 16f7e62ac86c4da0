import pytest

from bivect.biperm import Lv1Mor, LvStarMor
from bivect.generate import NONMOI_TRIPLE, random_exact_gl, random_exact_scalar, random_weakly_invertible
from bivect.matrix_cat import DimMatrix, MorMatrix, associator
from bivect.oriented import (
    OrientedMor,
    dger,
    dger_via_p,
    forget,
    gerbe_include,
    o_associator,
    o_big_det,
    o_block_sum,
    o_compose,
    o_det,
    o_lambda,
    o_product,
)
from bivect.scalars import DomainError, ExactComplex


def random_oriented(rng, dims, sign=None):
    base = MorMatrix(dims, [[random_exact_gl(rng, d, 1) for d in row] for row in dims.rows])
    return OrientedMor(base, sign if sign is not None else int(rng.choice([1, -1])))


def test_golden_lift_has_trivial_determinant():
    x = o_associator(*NONMOI_TRIPLE, cat="LV")
    assert x.sign == -1
    assert o_det(x) == LvStarMor(-1, ExactComplex(1))
    assert o_big_det(o_associator(*NONMOI_TRIPLE)) == LvStarMor(-1, ExactComplex(1))
    assert dger(x) == Lv1Mor(ExactComplex(1))


def test_oriented_associators_are_killed(rng):
    for _ in range(60):
        n = int(rng.integers(1, 4))
        X, Y, Z = (random_weakly_invertible(rng, n, 2) for _ in range(3))
        assert dger(o_associator(X, Y, Z)) == Lv1Mor(ExactComplex(1))
        assert dger(o_associator(X, Y, Z, cat="LV")) == Lv1Mor(ExactComplex(1))


def test_gerbe_include_retraction(rng):
    for n in range(1, 5):
        for _ in range(10):
            a = random_exact_scalar(rng)
            for cat in ("V", "LV"):
                x = gerbe_include(a, n, cat)
                assert x.dims == DimMatrix.identity(n)
                assert dger(x) == Lv1Mor(a)
    with pytest.raises(DomainError):
        gerbe_include(ExactComplex(2), 0)


def test_dger_routes_agree(rng):
    for _ in range(40):
        n = int(rng.integers(1, 4))
        x = random_oriented(rng, random_weakly_invertible(rng, n, 2))
        assert dger(x) == dger_via_p(x)
        assert dger(o_lambda(x)) == dger(x)


def test_dger_is_monoidal(rng):
    for _ in range(30):
        n = int(rng.integers(1, 3))
        D1, D2 = random_weakly_invertible(rng, n, 2), random_weakly_invertible(rng, n, 2)
        x, y = random_oriented(rng, D1), random_oriented(rng, D1)
        z = random_oriented(rng, D2)
        assert dger(o_compose(x, y)) == Lv1Mor(dger(x).scale * dger(y).scale)
        assert dger(o_product(x, z)) == Lv1Mor(dger(x).scale * dger(z).scale)
        assert dger(o_block_sum(x, z)) == Lv1Mor(dger(x).scale * dger(z).scale)


def test_forget_and_validation():
    ua = associator(*NONMOI_TRIPLE)
    assert forget(o_associator(*NONMOI_TRIPLE)) == ua
    with pytest.raises(DomainError):
        OrientedMor(ua, 0)
    with pytest.raises(DomainError):
        OrientedMor.identity(DimMatrix([[2]]))
    with pytest.raises(DomainError):
        o_det(o_associator(*NONMOI_TRIPLE))
