"""The bipermutative categories Sigma, V and LV and the functors between them.

Conventions
-----------
* A :class:`Perm` stores 1-based images, and composition is
  ``(p @ q)(i) = p(q(i))``.
* ``n (x) m`` is identified with ``n x m`` by lexicographic rank: the pair
  ``(i, j)`` sits at position ``(i - 1) * m + j``.
* ``s_functor(p)`` is the matrix sending ``e_k`` to ``e_{p(k)}``, so it is a
  homomorphism for the composition above and intertwines ``perm_tensor``
  with the Kronecker product.
* An LV morphism ``(n, a)`` is an automorphism of ``C_n`` with scale ``a``.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterable, Sequence

import numpy as np

from .scalars import (
    ONE,
    ZERO,
    DomainError,
    ExactComplex,
    Scalar,
    as_scalar,
    cpow,
    exact_det,
    scalar_inverse,
    scalar_is_zero,
)


def _binom2(n: int) -> int:
    return n * (n - 1) // 2


def _parity_sign(k: int) -> int:
    return -1 if k % 2 else 1


# ---------------------------------------------------------------------------
# Sigma


class Perm:
    """A permutation of ``{1..n}`` given by its list of images."""

    __slots__ = ("images",)

    def __init__(self, images: Iterable[int]):
        images = tuple(int(i) for i in images)
        if sorted(images) != list(range(1, len(images) + 1)):
            raise DomainError(f"{images} is not a permutation of 1..{len(images)}")
        object.__setattr__(self, "images", images)

    def __setattr__(self, name, value):
        raise AttributeError("Perm is immutable")

    @classmethod
    def _fast(cls, images) -> "Perm":
        obj = object.__new__(cls)
        object.__setattr__(obj, "images", tuple(images))
        return obj

    @classmethod
    def identity(cls, n: int) -> "Perm":
        return cls._fast(range(1, n + 1))

    @classmethod
    def from_zero_based(cls, images: Sequence[int]) -> "Perm":
        return cls(i + 1 for i in images)

    @property
    def n(self) -> int:
        return len(self.images)

    def __len__(self) -> int:
        return len(self.images)

    def __call__(self, i: int) -> int:
        return self.images[i - 1]

    def __matmul__(self, other: "Perm") -> "Perm":
        if other.n != self.n:
            raise DomainError("composing permutations of different sizes")
        return Perm._fast(self.images[j - 1] for j in other.images)

    def compose(self, other: "Perm") -> "Perm":
        return self @ other

    def inverse(self) -> "Perm":
        inv = [0] * self.n
        for k, img in enumerate(self.images, start=1):
            inv[img - 1] = k
        return Perm(inv)

    def inversions(self) -> int:
        im = self.images
        return sum(1 for a in range(len(im)) for b in range(a + 1, len(im)) if im[a] > im[b])

    def sign(self) -> int:
        # cycle decomposition: O(n) instead of counting inversions
        seen = [False] * self.n
        transpositions = 0
        for start in range(self.n):
            if seen[start]:
                continue
            length = 0
            j = start
            while not seen[j]:
                seen[j] = True
                j = self.images[j] - 1
                length += 1
            transpositions += length - 1
        return _parity_sign(transpositions)

    def is_identity(self) -> bool:
        return all(img == k for k, img in enumerate(self.images, start=1))

    def __eq__(self, other):
        return isinstance(other, Perm) and self.images == other.images

    def __hash__(self):
        return hash(self.images)

    def __repr__(self):
        return f"Perm({list(self.images)})"


def perm_sum(p: Perm, q: Perm) -> Perm:
    n = p.n
    return Perm._fast(list(p.images) + [n + j for j in q.images])


def perm_tensor(p: Perm, q: Perm) -> Perm:
    m = q.n
    return Perm._fast((pi - 1) * m + qj for pi in p.images for qj in q.images)


def rank_map(source: Sequence, target: Sequence) -> Perm:
    """The permutation taking the position of each item in ``source`` to its
    position in ``target`` (both sequences list the same distinct items)."""
    pos = {x: k for k, x in enumerate(target, start=1)}
    if len(pos) != len(source):
        raise DomainError("rank map between different index sets")
    return Perm(pos[x] for x in source)


def sigma_twist_sum(n: int, m: int) -> Perm:
    """Block shuffle ``n + m -> m + n``."""
    src = [(0, a) for a in range(n)] + [(1, b) for b in range(m)]
    tgt = [(1, b) for b in range(m)] + [(0, a) for a in range(n)]
    return rank_map(src, tgt)


def sigma_twist_tensor(n: int, m: int) -> Perm:
    """Lex-order transposition ``n x m -> m x n``."""
    src = [(a, b) for a in range(n) for b in range(m)]
    tgt = [(a, b) for b in range(m) for a in range(n)]
    return rank_map(src, tgt)


def sigma_left_distributor(k: int, parts: Sequence[int]) -> Perm:
    """``(k (x) x_1) + ... + (k (x) x_r) -> k (x) (x_1 + ... + x_r)``.

    Right distributivity is strict in Sigma; this is the non-trivial one.
    """
    src = [(a, l, j) for l, x in enumerate(parts) for a in range(k) for j in range(x)]
    tgt = [(a, l, j) for a in range(k) for l, x in enumerate(parts) for j in range(x)]
    return rank_map(src, tgt)


# ---------------------------------------------------------------------------
# V


def _as_matrix(matrix, exact: bool | None) -> np.ndarray:
    arr = np.asarray(matrix)
    if exact is None:
        exact = arr.dtype == object or np.issubdtype(arr.dtype, np.integer)
    if exact:
        out = np.empty(arr.shape, dtype=object)
        for idx, v in np.ndenumerate(arr):
            out[idx] = ExactComplex.coerce(v)
    else:
        out = np.array(arr, dtype=complex)
        if not np.all(np.isfinite(out)):
            raise DomainError("non-finite entries in approximate matrix")
    if out.ndim != 2 or out.shape[0] != out.shape[1]:
        if out.size == 0:
            out = out.reshape(0, 0)
        else:
            raise DomainError(f"expected a square matrix, got shape {out.shape}")
    return out


class VMor:
    """An automorphism of ``C^dim``: a square matrix, exact (object dtype)
    or approximate (complex128).  Invertibility is checked on request with
    :meth:`check_invertible`; ``lambda_`` raises on singular input."""

    __slots__ = ("matrix",)

    def __init__(self, matrix, exact: bool | None = None):
        m = _as_matrix(matrix, exact)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def __setattr__(self, name, value):
        raise AttributeError("VMor is immutable")

    @classmethod
    def _wrap(cls, m: np.ndarray) -> "VMor":
        obj = object.__new__(cls)
        m.setflags(write=False)
        object.__setattr__(obj, "matrix", m)
        return obj

    @classmethod
    def identity(cls, n: int, exact: bool = True) -> "VMor":
        if exact:
            m = np.full((n, n), ZERO, dtype=object)
            for i in range(n):
                m[i, i] = ONE
            return cls._wrap(m)
        return cls._wrap(np.eye(n, dtype=complex))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def exact(self) -> bool:
        return self.matrix.dtype == object

    def det(self) -> Scalar:
        if self.exact:
            return exact_det(self.matrix)
        if self.dim == 0:
            return 1 + 0j
        return complex(np.linalg.det(self.matrix))

    def check_invertible(self, tolerance: float = 1e-9) -> None:
        d = self.det()
        if scalar_is_zero(d) if self.exact else abs(d) <= tolerance:
            raise DomainError("matrix is not invertible")

    def __matmul__(self, other: "VMor") -> "VMor":
        if self.dim != other.dim:
            raise DomainError("composing automorphisms of different dimensions")
        if self.exact != other.exact:
            raise DomainError("mixing exact and approximate matrices")
        return VMor._wrap(self.matrix @ other.matrix)

    def compose(self, other: "VMor") -> "VMor":
        return self @ other

    def inverse(self) -> "VMor":
        if self.exact:
            from .scalars import exact_inv

            return VMor._wrap(exact_inv(self.matrix))
        return VMor._wrap(np.linalg.inv(self.matrix))

    def to_approx(self) -> "VMor":
        if not self.exact:
            return self
        return VMor._wrap(np.array([[complex(v) for v in row] for row in self.matrix], dtype=complex).reshape(self.dim, self.dim))

    def __eq__(self, other):
        if not isinstance(other, VMor):
            return NotImplemented
        return self.matrix.shape == other.matrix.shape and bool(np.all(self.matrix == other.matrix))

    __hash__ = None

    def __repr__(self):
        return f"VMor(dim={self.dim}, exact={self.exact})"


def _block_diag(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n, m = a.shape[0], b.shape[0]
    if a.dtype == object or b.dtype == object:
        out = np.full((n + m, n + m), ZERO, dtype=object)
    else:
        out = np.zeros((n + m, n + m), dtype=complex)
    out[:n, :n] = a
    out[n:, n:] = b
    return out


def block_diag(*mats: np.ndarray, exact: bool = True) -> np.ndarray:
    if not mats:
        return np.empty((0, 0), dtype=object if exact else complex)
    out = mats[0]
    for m in mats[1:]:
        out = _block_diag(out, m)
    return out


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with the left factor as the outer (slow) index."""
    n, m = a.shape[0], b.shape[0]
    if a.dtype == object or b.dtype == object:
        out = np.full((n * m, n * m), ZERO, dtype=object)
        for i in range(n):
            for k in range(n):
                x = a[i, k]
                if isinstance(x, ExactComplex) and x.is_zero():
                    continue
                out[i * m:(i + 1) * m, k * m:(k + 1) * m] = [[x * y for y in row] for row in b]
        return out
    return np.kron(a, b)


def v_sum(f: VMor, g: VMor) -> VMor:
    if f.exact != g.exact:
        raise DomainError("mixing exact and approximate matrices")
    return VMor._wrap(_block_diag(f.matrix, g.matrix))


def v_tensor(f: VMor, g: VMor) -> VMor:
    if f.exact != g.exact:
        raise DomainError("mixing exact and approximate matrices")
    return VMor._wrap(kron(f.matrix, g.matrix))


def s_functor(p: Perm, exact: bool = True) -> VMor:
    n = p.n
    if exact:
        m = np.full((n, n), ZERO, dtype=object)
        for k in range(1, n + 1):
            m[p(k) - 1, k - 1] = ONE
    else:
        m = np.zeros((n, n), dtype=complex)
        for k in range(1, n + 1):
            m[p(k) - 1, k - 1] = 1
    return VMor._wrap(m)


# ---------------------------------------------------------------------------
# LV and its subcategories


@dataclass(frozen=True)
class LvMor:
    """Automorphism ``(degree, scale)`` of the object ``C_degree`` in LV."""

    degree: int
    scale: Scalar

    def __post_init__(self):
        object.__setattr__(self, "degree", int(self.degree))
        s = self.scale
        if not isinstance(s, (ExactComplex, complex)):
            s = as_scalar(s, exact=not isinstance(s, float))
            object.__setattr__(self, "scale", s)
        if scalar_is_zero(s):
            raise DomainError("LV morphism scale must be non-zero")

    @classmethod
    def identity(cls, degree: int, exact: bool = True) -> "LvMor":
        return cls(degree, ONE if exact else 1 + 0j)

    @property
    def exact(self) -> bool:
        return isinstance(self.scale, ExactComplex)

    def __matmul__(self, other: "LvMor") -> "LvMor":
        return lv_compose(self, other)

    def inverse(self) -> "LvMor":
        return LvMor(self.degree, scalar_inverse(self.scale))

    def close(self, other: "LvMor", tol: float) -> bool:
        return self.degree == other.degree and abs(complex(self.scale) - complex(other.scale)) <= tol


def lv_sum(x: LvMor, y: LvMor) -> LvMor:
    return LvMor(x.degree + y.degree, x.scale * y.scale)


def lv_tensor(x: LvMor, y: LvMor) -> LvMor:
    n, a = x.degree, x.scale
    m, b = y.degree, y.scale
    return LvMor(n * m, cpow(a, m) * cpow(b, n))


def lv_compose(x: LvMor, y: LvMor) -> LvMor:
    if x.degree != y.degree:
        raise DomainError(f"cannot compose LV morphisms of degrees {x.degree} and {y.degree}")
    return LvMor(x.degree, x.scale * y.scale)


def lv_twist_sum(n: int, m: int, exact: bool = True) -> LvMor:
    s = _parity_sign(n * m)
    return LvMor(n + m, ExactComplex(s) if exact else complex(s))


def lv_twist_tensor(n: int, m: int, exact: bool = True) -> LvMor:
    # n(n-1)m(m-1)/4 = C(n,2) * C(m,2), always an integer
    s = _parity_sign(_binom2(n) * _binom2(m))
    return LvMor(n * m, ExactComplex(s) if exact else complex(s))


def lv_left_distributor(k: int, parts: Sequence[int], exact: bool = True) -> LvMor:
    """Value of the left distributor ``sum_l k x_l -> k (x) sum_l x_l``."""
    cross = sum(parts[i] * parts[j] for i in range(len(parts)) for j in range(i + 1, len(parts)))
    s = _parity_sign(_binom2(k) * cross)
    return LvMor(k * sum(parts), ExactComplex(s) if exact else complex(s))


def lambda_(f: VMor) -> LvMor:
    """Lambda: V -> LV, ``f |-> (dim f, det f)``."""
    d = f.det()
    if scalar_is_zero(d):
        raise DomainError("lambda of a singular matrix")
    return LvMor(f.dim, d)


def sgn_functor(p: Perm) -> LvMor:
    return LvMor(p.n, ExactComplex(p.sign()))


def i_inverse(x: LvMor) -> LvMor:
    """The weakly strict inverse ``(n, a) |-> (-n, 1/a)``."""
    return LvMor(-x.degree, scalar_inverse(x.scale))


@dataclass(frozen=True)
class LvStarMor:
    """Morphism of LV*: degree +-1 and a non-zero scale."""

    degree: int
    scale: Scalar

    def __post_init__(self):
        if self.degree not in (1, -1):
            raise DomainError(f"LV* degree must be +-1, got {self.degree}")
        if scalar_is_zero(self.scale):
            raise DomainError("LV* scale must be non-zero")

    @classmethod
    def from_lv(cls, x: LvMor) -> "LvStarMor":
        return cls(x.degree, x.scale)

    def as_lv(self) -> LvMor:
        return LvMor(self.degree, self.scale)

    def tensor(self, other: "LvStarMor") -> "LvStarMor":
        return LvStarMor.from_lv(lv_tensor(self.as_lv(), other.as_lv()))


@dataclass(frozen=True)
class Lv1Mor:
    """Morphism of LV_1, the one-object category with automorphisms C*."""

    scale: Scalar

    def __post_init__(self):
        if scalar_is_zero(self.scale):
            raise DomainError("LV_1 scale must be non-zero")

    def tensor(self, other: "Lv1Mor") -> "Lv1Mor":
        return Lv1Mor(self.scale * other.scale)

    def as_lv_star(self) -> LvStarMor:
        return LvStarMor(1, self.scale)


def p_projection(x: LvStarMor | LvMor) -> Lv1Mor:
    """``p(d, a) = (1, a^d)``, the strict monoidal retraction LV* -> LV_1."""
    if x.degree not in (1, -1):
        raise DomainError(f"p is only defined on degrees +-1, got {x.degree}")
    return Lv1Mor(cpow(x.scale, x.degree))


def lv1_include(a: Lv1Mor) -> LvStarMor:
    return LvStarMor(1, a.scale)


def lv_axiom_violations(bound: int = 4) -> list[str]:
    """Check the LV coherence laws at value level for all ``|n|,|m|,|k| <= bound``.

    Returns a list of human-readable failures (empty when everything holds).
    """
    failures = []
    rng = range(-bound, bound + 1)
    for n, m in product(rng, rng):
        ts, tt = lv_twist_sum(n, m), lv_twist_tensor(n, m)
        if lv_compose(lv_twist_sum(m, n), ts) != LvMor.identity(n + m):
            failures.append(f"sum twist not involutive at {(n, m)}")
        if lv_compose(lv_twist_tensor(m, n), tt) != LvMor.identity(n * m):
            failures.append(f"tensor twist not involutive at {(n, m)}")
        if lv_twist_sum(n + 4, m) != LvMor(n + m + 4, ts.scale) or lv_twist_tensor(n + 4, m).scale != tt.scale:
            failures.append(f"twist not 4-periodic at {(n, m)}")
        # naturality of both twists against non-trivial scales
        f, g = LvMor(n, ExactComplex(2)), LvMor(m, ExactComplex(1, 3))
        if lv_compose(ts, lv_sum(f, g)) != lv_compose(lv_sum(g, f), ts):
            failures.append(f"sum twist not natural at {(n, m)}")
        if lv_compose(tt, lv_tensor(f, g)) != lv_compose(lv_tensor(g, f), tt):
            failures.append(f"tensor twist not natural at {(n, m)}")
    for n, m, k in product(rng, rng, rng):
        idn, idm, idk = LvMor.identity(n), LvMor.identity(m), LvMor.identity(k)
        # distributors are natural: d o ((f (x) g) + (f (x) h)) = (f (x) (g + h)) o d
        f, g, h = LvMor(k, ExactComplex(3)), LvMor(n, ExactComplex(-1, 2)), LvMor(m, ExactComplex(1, 5))
        d = lv_left_distributor(k, (n, m))
        if lv_compose(d, lv_sum(lv_tensor(f, g), lv_tensor(f, h))) != lv_compose(lv_tensor(f, lv_sum(g, h)), d):
            failures.append(f"left distributor not natural at {(k, n, m)}")
        if lv_sum(lv_tensor(g, f), lv_tensor(h, f)) != lv_tensor(lv_sum(g, h), f):
            failures.append(f"right distributivity not strict at {(n, m, k)}")
        # hexagons: tau_{n, m+k} = (id_m + tau_{n,k}) o (tau_{n,m} + id_k)
        lhs = lv_twist_sum(n, m + k)
        rhs = lv_compose(lv_sum(idm, lv_twist_sum(n, k)), lv_sum(lv_twist_sum(n, m), idk))
        if lhs != rhs:
            failures.append(f"sum hexagon at {(n, m, k)}")
        lhs = lv_twist_tensor(n, m * k)
        rhs = lv_compose(lv_tensor(idm, lv_twist_tensor(n, k)), lv_tensor(lv_twist_tensor(n, m), idk))
        if lhs != rhs:
            failures.append(f"tensor hexagon at {(n, m, k)}")
        # left distributor built from twists and the strict right one
        dl = lv_compose(
            lv_twist_tensor(n + m, k),
            lv_sum(lv_twist_tensor(k, n), lv_twist_tensor(k, m)),
        )
        if dl != lv_left_distributor(k, (n, m)):
            failures.append(f"left distributor at {(k, n, m)}")
        # twist compatibility: (id_k (x) tau_{n,m}) o d_l = d_l o tau_{kn,km}
        lhs = lv_compose(lv_tensor(idk, lv_twist_sum(n, m)), lv_left_distributor(k, (n, m)))
        rhs = lv_compose(lv_left_distributor(k, (m, n)), lv_twist_sum(k * n, k * m))
        if lhs != rhs:
            failures.append(f"distributor/twist compatibility at {(k, n, m)}")
    return failures


__all__ = [
    "Perm",
    "perm_sum",
    "perm_tensor",
    "rank_map",
    "sigma_twist_sum",
    "sigma_twist_tensor",
    "sigma_left_distributor",
    "VMor",
    "v_sum",
    "v_tensor",
    "block_diag",
    "kron",
    "s_functor",
    "LvMor",
    "LvStarMor",
    "Lv1Mor",
    "lv_sum",
    "lv_tensor",
    "lv_compose",
    "lv_twist_sum",
    "lv_twist_tensor",
    "lv_left_distributor",
    "lambda_",
    "sgn_functor",
    "i_inverse",
    "p_projection",
    "lv1_include",
    "lv_axiom_violations",
]
