"""Oriented matrix categories: morphisms decorated with a sign.

Only the associators are lifted, to ``(ua, sgn(ua))``; that choice makes the
oriented determinant functors, and the determinant gerbe functor built on
them, strict monoidal.
"""

from __future__ import annotations

from dataclasses import dataclass

from .biperm import Lv1Mor, LvMor, LvStarMor, VMor, lv_tensor, p_projection
from .matrix_cat import (
    DimMatrix,
    MorMatrix,
    assoc_sign,
    associator,
    big_det,
    entrywise_lambda,
    lv_det,
    mor_block_sum,
    mor_compose,
    mor_product,
)
from .scalars import ONE, DomainError, Scalar, cpow


@dataclass(frozen=True, eq=False)
class OrientedMor:
    base: MorMatrix
    sign: int

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise DomainError(f"orientation sign must be +-1, got {self.sign}")
        if not self.base.dims.weakly_invertible():
            raise DomainError(f"oriented morphisms need weakly invertible dims, got {self.base.dims}")

    @classmethod
    def identity(cls, dims: DimMatrix, cat="V", exact: bool = True) -> "OrientedMor":
        return cls(MorMatrix.identity(dims, cat, exact), 1)

    @property
    def dims(self) -> DimMatrix:
        return self.base.dims

    def __eq__(self, other):
        if not isinstance(other, OrientedMor):
            return NotImplemented
        return self.sign == other.sign and self.base == other.base

    __hash__ = None


def o_compose(x: OrientedMor, y: OrientedMor) -> OrientedMor:
    return OrientedMor(mor_compose(x.base, y.base), x.sign * y.sign)


def o_product(x: OrientedMor, y: OrientedMor) -> OrientedMor:
    return OrientedMor(mor_product(x.base, y.base), x.sign * y.sign)


def o_associator(a: DimMatrix, b: DimMatrix, c: DimMatrix, cat="V", exact: bool = True) -> OrientedMor:
    return OrientedMor(associator(a, b, c, cat, exact), assoc_sign(a, b, c))


def forget(x: OrientedMor) -> MorMatrix:
    """The forgetful functor P."""
    return x.base


def o_lambda(x: OrientedMor) -> OrientedMor:
    """Entrywise Lambda on the first factor, sign unchanged."""
    return OrientedMor(entrywise_lambda(x.base), x.sign)


def _star(d: LvMor, s: int) -> LvStarMor:
    if d.degree not in (1, -1):
        raise DomainError(f"determinant degree {d.degree} is not a unit")
    unit = ONE if d.exact else 1 + 0j
    return LvStarMor.from_lv(lv_tensor(d, LvMor(1, unit * s)))


def o_det(x: OrientedMor) -> LvStarMor:
    """``det(f) (x) (1, s)`` for an oriented LV morphism matrix."""
    if x.base.cat != "LV":
        raise DomainError("o_det needs an LV morphism matrix; use o_big_det for V")
    return _star(lv_det(x.base), x.sign)


def o_big_det(x: OrientedMor) -> LvStarMor:
    """``Det(g) (x) (1, s)`` for an oriented V morphism matrix."""
    return _star(big_det(x.base), x.sign)


def dger(x: OrientedMor) -> Lv1Mor:
    """The determinant gerbe functor ``p o oDet``.

    With ``Det(base) = (d, a)`` and ``d = +-1`` this is ``a^d * s``.
    """
    d = lv_det(x.base) if x.base.cat == "LV" else big_det(x.base)
    if d.degree not in (1, -1):
        raise DomainError(f"determinant degree {d.degree} is not a unit")
    return Lv1Mor(cpow(d.scale, d.degree) * x.sign)


def dger_via_p(x: OrientedMor) -> Lv1Mor:
    star = o_det(x) if x.base.cat == "LV" else o_big_det(x)
    return p_projection(star)


def o_block_sum(x: OrientedMor, y: OrientedMor) -> OrientedMor:
    return OrientedMor(mor_block_sum(x.base, y.base), x.sign * y.sign)


def gerbe_include(a: Lv1Mor | Scalar, n: int, cat="V") -> OrientedMor:
    """Include ``a`` in C* as an oriented rank-n morphism: ``a`` on the
    (1,1) copy of C, identities elsewhere, sign +1."""
    if n < 1:
        raise DomainError("gerbe inclusion needs rank >= 1")
    scale = a.scale if isinstance(a, Lv1Mor) else a
    exact = not isinstance(scale, complex)
    if cat == "V":
        first = MorMatrix(DimMatrix([[1]]), [[VMor([[scale]], exact=exact)]])
    elif cat == "LV":
        first = MorMatrix(DimMatrix([[1]]), [[LvMor(1, scale)]])
    else:
        raise DomainError(f"gerbe inclusion into {cat!r} is not defined")
    x = OrientedMor(first, 1)
    if n > 1:
        x = o_block_sum(x, OrientedMor.identity(DimMatrix.identity(n - 1), cat, exact))
    return x


__all__ = [
    "OrientedMor",
    "o_compose",
    "o_product",
    "o_associator",
    "forget",
    "o_lambda",
    "o_det",
    "o_big_det",
    "dger",
    "dger_via_p",
    "o_block_sum",
    "gerbe_include",
]
