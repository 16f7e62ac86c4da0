"""Exact and floating scalar fields.

Exact scalars are Gaussian rationals built on :class:`fractions.Fraction`;
approximate scalars are plain Python ``complex``.  Everything that takes a
"scalar" in this package accepts either kind, and the arithmetic helpers
here dispatch on the type.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Union

import numpy as np


class DomainError(ValueError):
    """Raised when an operation is applied outside its domain."""


class ExactComplex:
    """A Gaussian rational ``re + im*i`` with canonical Fraction parts.

    Instances are immutable.  Mixed arithmetic with ``int`` and ``Fraction``
    is supported on both sides, which lets numpy object arrays mix the
    shared ``ZERO``/``ONE`` constants with integer literals.
    """

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        object.__setattr__(self, "re", re if type(re) is Fraction else Fraction(re))
        object.__setattr__(self, "im", im if type(im) is Fraction else Fraction(im))

    def __setattr__(self, name, value):
        raise AttributeError("ExactComplex is immutable")

    @classmethod
    def _raw(cls, re: Fraction, im: Fraction) -> "ExactComplex":
        obj = object.__new__(cls)
        object.__setattr__(obj, "re", re)
        object.__setattr__(obj, "im", im)
        return obj

    @classmethod
    def coerce(cls, x) -> "ExactComplex":
        if isinstance(x, ExactComplex):
            return x
        if isinstance(x, (int, Fraction)):
            return cls._raw(Fraction(x), Fraction(0))
        if isinstance(x, Rational):
            return cls._raw(Fraction(int(x.numerator), int(x.denominator)), Fraction(0))
        if isinstance(x, (float, np.floating)):
            return cls._raw(Fraction(x), Fraction(0))
        if isinstance(x, (complex, np.complexfloating)):
            return cls._raw(Fraction(float(x.real)), Fraction(float(x.imag)))
        raise TypeError(f"cannot coerce {type(x).__name__} to ExactComplex")

    @classmethod
    def parse(cls, re: str, im: str = "0") -> "ExactComplex":
        return cls(Fraction(re), Fraction(im))

    # -- predicates -----------------------------------------------------

    def is_zero(self) -> bool:
        return not self.re and not self.im

    def __bool__(self) -> bool:
        return not self.is_zero()

    def norm2(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    def conjugate(self) -> "ExactComplex":
        return ExactComplex._raw(self.re, -self.im)

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    # -- arithmetic -----------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, ExactComplex):
            if isinstance(other, (int, Fraction)):
                if not other:
                    return self
                return ExactComplex._raw(self.re + other, self.im)
            return NotImplemented
        if other.is_zero():
            return self
        if self.is_zero():
            return other
        return ExactComplex._raw(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __neg__(self):
        return ExactComplex._raw(-self.re, -self.im)

    def __sub__(self, other):
        if not isinstance(other, ExactComplex):
            if isinstance(other, (int, Fraction)):
                return ExactComplex._raw(self.re - other, self.im)
            return NotImplemented
        return ExactComplex._raw(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        if isinstance(other, (int, Fraction)):
            return ExactComplex._raw(other - self.re, -self.im)
        return NotImplemented

    def __mul__(self, other):
        if not isinstance(other, ExactComplex):
            if isinstance(other, (int, Fraction)):
                if other == 1:
                    return self
                return ExactComplex._raw(self.re * other, self.im * other)
            return NotImplemented
        # fast paths: permutation matrices are mostly ZERO/ONE
        if self.is_zero() or other.is_zero():
            return ZERO
        if not self.im and not other.im:
            if self.re == 1:
                return other
            if other.re == 1:
                return self
            return ExactComplex._raw(self.re * other.re, Fraction(0))
        a, b, c, d = self.re, self.im, other.re, other.im
        return ExactComplex._raw(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def inverse(self) -> "ExactComplex":
        if self.is_zero():
            raise DomainError("inverse of zero")
        if not self.im:
            return ExactComplex._raw(1 / self.re, Fraction(0))
        n = self.norm2()
        return ExactComplex._raw(self.re / n, -self.im / n)

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            other = ExactComplex.coerce(other)
        if not isinstance(other, ExactComplex):
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return ExactComplex.coerce(other) * self.inverse()
        return NotImplemented

    def __pow__(self, k):
        if not isinstance(k, int):
            return NotImplemented
        return cpow(self, k)

    # -- comparison -----------------------------------------------------

    def __eq__(self, other):
        if isinstance(other, ExactComplex):
            return self.re == other.re and self.im == other.im
        if isinstance(other, (int, Fraction)):
            return not self.im and self.re == other
        return NotImplemented

    def __hash__(self):
        if not self.im:
            return hash(self.re)
        return hash((self.re, self.im))

    def __repr__(self):
        if not self.im:
            return f"ExactComplex({self.re})"
        return f"ExactComplex({self.re}, {self.im})"

    def __str__(self):
        if not self.im:
            return str(self.re)
        sign = "+" if self.im >= 0 else "-"
        return f"{self.re}{sign}{abs(self.im)}i"


ZERO = ExactComplex(0)
ONE = ExactComplex(1)
I = ExactComplex(0, 1)

Scalar = Union[ExactComplex, complex]


@dataclass(frozen=True)
class ScalarMode:
    """Exact arithmetic (``tolerance is None``) or floating with one tolerance."""

    tolerance: float | None = None

    def __post_init__(self):
        if self.tolerance is not None and not self.tolerance > 0:
            raise DomainError("approx tolerance must be > 0")

    @property
    def exact(self) -> bool:
        return self.tolerance is None

    @classmethod
    def approx(cls, tolerance: float = 1e-9) -> "ScalarMode":
        return cls(tolerance)

    def close(self, a, b) -> bool:
        if self.exact:
            return a == b
        return abs(complex(a) - complex(b)) <= self.tolerance


EXACT = ScalarMode()


def is_exact(x) -> bool:
    return isinstance(x, (ExactComplex, int, Fraction))


def as_scalar(x, exact: bool = True) -> Scalar:
    """Normalise ``x`` to ExactComplex (exact) or complex (approx)."""
    if exact:
        return ExactComplex.coerce(x)
    z = complex(x)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise DomainError(f"non-finite scalar {z!r}")
    return z


def scalar_is_zero(x) -> bool:
    if isinstance(x, ExactComplex):
        return x.is_zero()
    return x == 0


def cpow(a: Scalar, k: int) -> Scalar:
    """Integer power ``a**k``, exact for ExactComplex, including ``k < 0``."""
    if not isinstance(k, (int, np.integer)):
        raise TypeError("exponent must be an integer")
    k = int(k)
    if not isinstance(a, ExactComplex):
        if isinstance(a, (int, Fraction)):
            a = ExactComplex.coerce(a)
        else:
            if a == 0 and k <= 0:
                raise DomainError("zero base with non-positive exponent")
            return complex(a) ** k
    if a.is_zero():
        if k <= 0:
            raise DomainError("zero base with non-positive exponent")
        return ZERO
    if k < 0:
        a, k = a.inverse(), -k
    if not a.im:
        return ExactComplex._raw(a.re**k, Fraction(0))
    result = ONE
    base = a
    while k:
        if k & 1:
            result = result * base
        k >>= 1
        if k:
            base = base * base
    return result


def scalar_inverse(a: Scalar) -> Scalar:
    if isinstance(a, ExactComplex):
        return a.inverse()
    if a == 0:
        raise DomainError("inverse of zero")
    return 1 / a


def one_like(a: Scalar) -> Scalar:
    return ONE if isinstance(a, ExactComplex) else 1 + 0j


# -- exact dense linear algebra ---------------------------------------------


def exact_array(rows) -> np.ndarray:
    """Object array of ExactComplex from nested rows of ints/Fractions/etc."""
    arr = np.array(rows, dtype=object)
    if arr.ndim == 1 and arr.size == 0:
        arr = arr.reshape(0, 0)
    out = np.empty(arr.shape, dtype=object)
    for idx, v in np.ndenumerate(arr):
        out[idx] = ExactComplex.coerce(v)
    return out


def exact_identity(n: int) -> np.ndarray:
    out = np.full((n, n), ZERO, dtype=object)
    for i in range(n):
        out[i, i] = ONE
    return out


def _row_lists(m: np.ndarray) -> list[list[ExactComplex]]:
    return [[ExactComplex.coerce(v) for v in row] for row in m]


def exact_det(m: np.ndarray) -> ExactComplex:
    """Determinant by fraction-exact Gaussian elimination (sparse aware)."""
    n = m.shape[0]
    if n == 0:
        return ONE
    a = _row_lists(m)
    det = ONE
    for col in range(n):
        piv = None
        for r in range(col, n):
            if not a[r][col].is_zero():
                piv = r
                break
        if piv is None:
            return ZERO
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            det = -det
        p = a[col][col]
        det = det * p
        pinv = None
        for r in range(col + 1, n):
            x = a[r][col]
            if x.is_zero():
                continue
            if pinv is None:
                pinv = p.inverse()
            f = x * pinv
            row, prow = a[r], a[col]
            for c in range(col + 1, n):
                if not prow[c].is_zero():
                    row[c] = row[c] - f * prow[c]
    return det


def exact_inv(m: np.ndarray) -> np.ndarray:
    """Inverse by Gauss-Jordan elimination; raises DomainError if singular."""
    n = m.shape[0]
    a = _row_lists(m)
    inv = [[ONE if i == j else ZERO for j in range(n)] for i in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if not a[r][col].is_zero()), None)
        if piv is None:
            raise DomainError("singular matrix")
        a[col], a[piv] = a[piv], a[col]
        inv[col], inv[piv] = inv[piv], inv[col]
        pinv = a[col][col].inverse()
        a[col] = [x * pinv for x in a[col]]
        inv[col] = [x * pinv for x in inv[col]]
        for r in range(n):
            if r == col or a[r][col].is_zero():
                continue
            f = a[r][col]
            a[r] = [x - f * y for x, y in zip(a[r], a[col])]
            inv[r] = [x - f * y for x, y in zip(inv[r], inv[col])]
    out = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            out[i, j] = inv[i][j]
    return out


# -- JSON forms ---------------------------------------------------------------


def _frac_str(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


def scalar_to_json(x: Scalar):
    if isinstance(x, ExactComplex):
        return {"re": _frac_str(x.re), "im": _frac_str(x.im)}
    z = complex(x)
    return [z.real, z.imag]


def scalar_from_json(obj) -> Scalar:
    if isinstance(obj, dict):
        return ExactComplex.parse(obj["re"], obj.get("im", "0"))
    if isinstance(obj, (list, tuple)) and len(obj) == 2:
        return as_scalar(complex(obj[0], obj[1]), exact=False)
    raise DomainError(f"unrecognised scalar encoding {obj!r}")


__all__ = [
    "DomainError",
    "ExactComplex",
    "ZERO",
    "ONE",
    "I",
    "Scalar",
    "ScalarMode",
    "EXACT",
    "is_exact",
    "as_scalar",
    "cpow",
    "scalar_inverse",
    "scalar_is_zero",
    "one_like",
    "exact_array",
    "exact_identity",
    "exact_det",
    "exact_inv",
    "scalar_to_json",
    "scalar_from_json",
]
