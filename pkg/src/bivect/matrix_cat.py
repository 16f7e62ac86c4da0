"""Matrix categories M_n(B) for B in {Sigma, V, LV} and their determinants.

Objects are integer matrices (:class:`DimMatrix`); since every object is the
only one in its isomorphism class, every morphism is an automorphism and a
:class:`MorMatrix` just records the common source/target ``dims`` together
with an ``n x n`` grid of entry morphisms.

The product is ``(E.F)_ik = (+)_j E_ij (x) F_jk`` with ``j`` ascending.  The
associator goes ``(A.B).C -> A.(B.C)``; on entry ``(i, k)`` it is the rank map
between the lexicographic orders ``(l, p, a, b, c)`` and ``(p, a, l, b, c)``
of the multi-index set ``{a < A_ip, b < B_pl, c < C_lk}``.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from itertools import permutations, product
from typing import Iterable, Literal, Sequence

from .biperm import (
    LvMor,
    Perm,
    VMor,
    block_diag,
    i_inverse,
    kron,
    lambda_,
    lv_compose,
    lv_sum,
    lv_tensor,
    perm_sum,
    perm_tensor,
    s_functor,
    sgn_functor,
)
from .scalars import ONE, DomainError, cpow

Cat = Literal["Sigma", "V", "LV"]
MAX_DET_RANK = 8


class DimMatrix:
    """Square integer matrix of objects (dimensions)."""

    __slots__ = ("rows",)

    def __init__(self, rows: Iterable[Iterable[int]]):
        rows = tuple(tuple(int(v) for v in r) for r in rows)
        n = len(rows)
        if n == 0 or any(len(r) != n for r in rows):
            raise DomainError("DimMatrix must be square and non-empty")
        object.__setattr__(self, "rows", rows)

    def __setattr__(self, name, value):
        raise AttributeError("DimMatrix is immutable")

    @classmethod
    def identity(cls, n: int) -> "DimMatrix":
        return cls([[int(i == j) for j in range(n)] for i in range(n)])

    @property
    def n(self) -> int:
        return len(self.rows)

    def __getitem__(self, ij: tuple[int, int]) -> int:
        i, j = ij
        return self.rows[i][j]

    def __matmul__(self, other: "DimMatrix") -> "DimMatrix":
        return obj_product(self, other)

    def nonnegative(self) -> bool:
        return all(v >= 0 for r in self.rows for v in r)

    def det(self) -> int:
        return int_det(self.rows)

    def weakly_invertible(self) -> bool:
        return self.det() in (1, -1)

    def tolist(self) -> list[list[int]]:
        return [list(r) for r in self.rows]

    def __eq__(self, other):
        return isinstance(other, DimMatrix) and self.rows == other.rows

    def __hash__(self):
        return hash(self.rows)

    def __repr__(self):
        return f"DimMatrix({self.tolist()})"


def int_det(rows: Sequence[Sequence[int]]) -> int:
    """Integer determinant (Bareiss fraction-free elimination)."""
    a = [list(r) for r in rows]
    n = len(a)
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            swap = next((r for r in range(k + 1, n) if a[r][k] != 0), None)
            if swap is None:
                return 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1] if n else 1


@dataclass(frozen=True)
class WeakInvCert:
    dims: DimMatrix
    detdim: int

    @property
    def weakly_invertible(self) -> bool:
        return self.detdim in (1, -1)


def weak_inv_cert(d: DimMatrix) -> WeakInvCert:
    return WeakInvCert(d, d.det())


def obj_product(a: DimMatrix, b: DimMatrix) -> DimMatrix:
    if a.n != b.n:
        raise DomainError(f"size mismatch: {a.n} vs {b.n}")
    n = a.n
    return DimMatrix(
        [[sum(a.rows[i][j] * b.rows[j][k] for j in range(n)) for k in range(n)] for i in range(n)]
    )


def dims_block_sum(a: DimMatrix, b: DimMatrix) -> DimMatrix:
    n, m = a.n, b.n
    rows = [list(r) + [0] * m for r in a.rows] + [[0] * n + list(r) for r in b.rows]
    return DimMatrix(rows)


# ---------------------------------------------------------------------------
# entry-level operations, dispatched on the entry type


def _entry_cat(x) -> Cat:
    if isinstance(x, Perm):
        return "Sigma"
    if isinstance(x, VMor):
        return "V"
    if isinstance(x, LvMor):
        return "LV"
    raise TypeError(f"not a morphism of Sigma, V or LV: {type(x).__name__}")


def _entry_dim(x) -> int:
    if isinstance(x, Perm):
        return x.n
    if isinstance(x, VMor):
        return x.dim
    return x.degree


def _entry_identity(cat: Cat, d: int, exact: bool = True):
    if cat == "Sigma":
        return Perm.identity(d)
    if cat == "V":
        return VMor.identity(d, exact)
    return LvMor.identity(d, exact)


def _entry_compose(x, y):
    if isinstance(x, LvMor):
        return lv_compose(x, y)
    return x @ y


def _entry_inverse(x):
    return x.inverse()


def _entry_tensor(x, y):
    if isinstance(x, Perm):
        return perm_tensor(x, y)
    if isinstance(x, VMor):
        return kron(x.matrix, y.matrix)
    return lv_tensor(x, y)


def _entry_sum(cat: Cat, parts: list, exact: bool):
    if cat == "Sigma":
        out = Perm.identity(0)
        for p in parts:
            out = perm_sum(out, p)
        return out
    if cat == "V":
        return VMor._wrap(block_diag(*parts, exact=exact))
    out = LvMor.identity(0, exact)
    for p in parts:
        out = lv_sum(out, p)
    return out


def _entry_exact(x) -> bool:
    if isinstance(x, Perm):
        return True
    return x.exact


# ---------------------------------------------------------------------------


class MorMatrix:
    """An automorphism of ``dims`` in M_n(Sigma), M_n(V) or M_n(LV)."""

    __slots__ = ("dims", "entries")

    def __init__(self, dims: DimMatrix, entries: Sequence[Sequence]):
        entries = tuple(tuple(r) for r in entries)
        n = dims.n
        if len(entries) != n or any(len(r) != n for r in entries):
            raise DomainError("entry grid does not match dims")
        cats = {_entry_cat(x) for r in entries for x in r}
        if len(cats) != 1:
            raise DomainError(f"mixed entry categories {sorted(cats)}")
        for i in range(n):
            for j in range(n):
                if _entry_dim(entries[i][j]) != dims.rows[i][j]:
                    raise DomainError(
                        f"entry ({i},{j}) has size {_entry_dim(entries[i][j])}, expected {dims.rows[i][j]}"
                    )
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "entries", entries)

    def __setattr__(self, name, value):
        raise AttributeError("MorMatrix is immutable")

    @classmethod
    def _raw(cls, dims: DimMatrix, entries) -> "MorMatrix":
        obj = object.__new__(cls)
        object.__setattr__(obj, "dims", dims)
        object.__setattr__(obj, "entries", tuple(tuple(r) for r in entries))
        return obj

    @classmethod
    def identity(cls, dims: DimMatrix, cat: Cat = "V", exact: bool = True) -> "MorMatrix":
        return cls._raw(dims, [[_entry_identity(cat, d, exact) for d in r] for r in dims.rows])

    @property
    def n(self) -> int:
        return self.dims.n

    @property
    def cat(self) -> Cat:
        return _entry_cat(self.entries[0][0])

    @property
    def exact(self) -> bool:
        return all(_entry_exact(x) for r in self.entries for x in r)

    def __getitem__(self, ij: tuple[int, int]):
        i, j = ij
        return self.entries[i][j]

    def __matmul__(self, other: "MorMatrix") -> "MorMatrix":
        return mor_compose(self, other)

    def inverse(self) -> "MorMatrix":
        return MorMatrix._raw(self.dims, [[_entry_inverse(x) for x in r] for r in self.entries])

    def map_entries(self, fn) -> "MorMatrix":
        return MorMatrix(self.dims, [[fn(x) for x in r] for r in self.entries])

    def is_identity(self) -> bool:
        cat = self.cat
        exact = self.exact
        return self == MorMatrix.identity(self.dims, cat, exact)

    def __eq__(self, other):
        if not isinstance(other, MorMatrix):
            return NotImplemented
        return self.dims == other.dims and all(
            x == y for rx, ry in zip(self.entries, other.entries) for x, y in zip(rx, ry)
        )

    __hash__ = None

    def __repr__(self):
        return f"MorMatrix({self.cat}, dims={self.dims.tolist()})"


def mor_compose(f: MorMatrix, g: MorMatrix) -> MorMatrix:
    """Entrywise composition ``f o g`` (apply ``g`` first)."""
    if f.dims != g.dims:
        raise DomainError("composing morphisms of different objects")
    return MorMatrix._raw(
        f.dims, [[_entry_compose(x, y) for x, y in zip(rf, rg)] for rf, rg in zip(f.entries, g.entries)]
    )


def mor_product(f: MorMatrix, g: MorMatrix) -> MorMatrix:
    """The monoidal product ``f . g`` on the object ``dims(f) . dims(g)``."""
    if f.n != g.n:
        raise DomainError(f"size mismatch: {f.n} vs {g.n}")
    cat = f.cat
    if g.cat != cat:
        raise DomainError("mixing entry categories")
    exact = f.exact and g.exact
    if cat == "V" and (f.exact != g.exact):
        raise DomainError("mixing exact and approximate matrices")
    n = f.n
    dims = obj_product(f.dims, g.dims)
    rows = []
    for i in range(n):
        row = []
        for k in range(n):
            parts = [_entry_tensor(f.entries[i][j], g.entries[j][k]) for j in range(n)]
            row.append(_entry_sum(cat, parts, exact))
        rows.append(row)
    return MorMatrix._raw(dims, rows)


def mor_block_sum(f: MorMatrix, g: MorMatrix) -> MorMatrix:
    cat = f.cat
    if g.cat != cat:
        raise DomainError("mixing entry categories")
    exact = f.exact and g.exact
    n, m = f.n, g.n
    dims = dims_block_sum(f.dims, g.dims)
    zero = _entry_identity(cat, 0, exact)
    rows = [list(r) + [zero] * m for r in f.entries] + [[zero] * n + list(r) for r in g.entries]
    return MorMatrix._raw(dims, rows)


# ---------------------------------------------------------------------------
# associators


@functools.lru_cache(maxsize=65536)
def _assoc_entry_perm(a_row: tuple, b: tuple, c_col: tuple) -> Perm:
    """Entry (i, k) of the associator from row i of A, B, and column k of C."""
    n = len(a_row)
    src = [
        (l, p, x, y, z)
        for l in range(n)
        for p in range(n)
        for x in range(a_row[p])
        for y in range(b[p][l])
        for z in range(c_col[l])
    ]
    tgt = sorted(src, key=lambda t: (t[1], t[2], t[0], t[3], t[4]))
    pos = {t: r for r, t in enumerate(tgt, start=1)}
    return Perm._fast(pos[t] for t in src)


def _check_same_n(*ms: DimMatrix) -> int:
    n = ms[0].n
    if any(m.n != n for m in ms):
        raise DomainError("size mismatch among DimMatrices")
    return n


def _binom2(n: int) -> int:
    return n * (n - 1) // 2


def associator_sign_closed_form(a: DimMatrix, b: DimMatrix, c: DimMatrix, i: int, k: int) -> int:
    """Parity of the associator entry (i, k) as an integer polynomial.

    Block shuffle ``(l, p) -> (p, l)`` of blocks of size ``A_ip B_pl C_lk``,
    followed for each ``p`` by the left distributor of ``A_ip`` over the
    summands ``B_pl C_lk``.  Valid for negative entries as well, where it
    defines the LV associator.
    """
    n = _check_same_n(a, b, c)
    size = {(p, l): a.rows[i][p] * b.rows[p][l] * c.rows[l][k] for p in range(n) for l in range(n)}
    parity = 0
    for l, p, l2, p2 in product(range(n), repeat=4):
        if l < l2 and p > p2:
            parity += size[p, l] * size[p2, l2]
    for p in range(n):
        y = [b.rows[p][l] * c.rows[l][k] for l in range(n)]
        cross = sum(y[l] * y[l2] for l in range(n) for l2 in range(l + 1, n))
        parity += _binom2(a.rows[i][p]) * cross
    return -1 if parity % 2 else 1


def associator(a: DimMatrix, b: DimMatrix, c: DimMatrix, cat: Cat = "V", exact: bool = True) -> MorMatrix:
    """The associator ``(A.B).C -> A.(B.C)`` in M_n(cat)."""
    n = _check_same_n(a, b, c)
    dims = obj_product(obj_product(a, b), c)
    if cat == "LV" and not (a.nonnegative() and b.nonnegative() and c.nonnegative()):
        unit = ONE if exact else 1 + 0j
        rows = [
            [LvMor(dims.rows[i][k], unit * associator_sign_closed_form(a, b, c, i, k)) for k in range(n)]
            for i in range(n)
        ]
        return MorMatrix._raw(dims, rows)
    if not (a.nonnegative() and b.nonnegative() and c.nonnegative()):
        raise DomainError(f"{cat} objects must have non-negative dimensions")
    cols = [tuple(c.rows[l][k] for l in range(n)) for k in range(n)]
    perms = [[_assoc_entry_perm(a.rows[i], b.rows, cols[k]) for k in range(n)] for i in range(n)]
    if cat == "Sigma":
        return MorMatrix._raw(dims, perms)
    if cat == "V":
        return MorMatrix._raw(dims, [[s_functor(p, exact) for p in r] for r in perms])
    if cat == "LV":
        one = ONE if exact else 1 + 0j
        return MorMatrix._raw(dims, [[LvMor(p.n, one if p.sign() == 1 else -one) for p in r] for r in perms])
    raise DomainError(f"unknown category {cat!r}")


def associator_inverse(a: DimMatrix, b: DimMatrix, c: DimMatrix, cat: Cat = "V", exact: bool = True) -> MorMatrix:
    """``A.(B.C) -> (A.B).C``; same signs as :func:`associator`."""
    return associator(a, b, c, cat, exact).inverse()


def pentagon_composites(a, b, c, d, cat: Cat = "Sigma", exact: bool = True) -> tuple[MorMatrix, MorMatrix]:
    """The two composites ``((AB)C)D -> A(B(CD))`` around the pentagon."""
    ab, bc, cd = a @ b, b @ c, c @ d
    idd = MorMatrix.identity(d, cat, exact)
    ida = MorMatrix.identity(a, cat, exact)
    top = mor_compose(
        mor_product(ida, associator(b, c, d, cat, exact)),
        mor_compose(
            associator(a, bc, d, cat, exact),
            mor_product(associator(a, b, c, cat, exact), idd),
        ),
    )
    bottom = mor_compose(associator(a, b, cd, cat, exact), associator(ab, c, d, cat, exact))
    return top, bottom


# ---------------------------------------------------------------------------
# determinants


def entrywise_lambda(f: MorMatrix) -> MorMatrix:
    if f.cat == "V":
        return f.map_entries(lambda_)
    if f.cat == "Sigma":
        return f.map_entries(sgn_functor)
    return f


def entrywise_s(f: MorMatrix, exact: bool = True) -> MorMatrix:
    if f.cat != "Sigma":
        raise DomainError("entrywise S needs a Sigma morphism matrix")
    return f.map_entries(lambda p: s_functor(p, exact))


def lv_det(f: MorMatrix) -> LvMor:
    """Determinant with coefficients in LV (Leibniz expansion).

    Each permutation contributes the LV tensor product of its entries, the
    odd ones passed through the weakly strict inverse, and the contributions
    are summed with the LV sum.  Evaluated in closed form: the degree is the
    integer determinant of ``dims``; the scale of a term is
    ``prod_k a_k^(prod_{k' != k} d_k')``, inverted for odd permutations.
    """
    if f.cat != "LV":
        raise DomainError("lv_det needs an LV morphism matrix")
    n = f.n
    if n > MAX_DET_RANK:
        raise DomainError(f"lv_det limited to n <= {MAX_DET_RANK}")
    exact = f.exact
    degree = 0
    scale = ONE if exact else 1 + 0j
    for sigma in permutations(range(n)):
        ds = [f.dims.rows[k][sigma[k]] for k in range(n)]
        term_deg = 1
        for d in ds:
            term_deg *= d
        term = ONE if exact else 1 + 0j
        for k in range(n):
            expo = 1
            for k2 in range(n):
                if k2 != k:
                    expo *= ds[k2]
            if expo:
                term = term * cpow(f.entries[k][sigma[k]].scale, expo)
        if _perm_parity(sigma):
            degree -= term_deg
            term = i_inverse(LvMor(term_deg, term)).scale
        else:
            degree += term_deg
        scale = scale * term
    return LvMor(degree, scale)


def _perm_parity(sigma: Sequence[int]) -> int:
    return sum(1 for a in range(len(sigma)) for b in range(a + 1, len(sigma)) if sigma[a] > sigma[b]) % 2


def big_det(f: MorMatrix) -> LvMor:
    """``Det = det o M_n(Lambda)`` on M_n(V) (or M_n(Sigma) via sgn)."""
    if f.cat == "LV":
        raise DomainError("big_det needs a V (or Sigma) morphism matrix")
    return lv_det(entrywise_lambda(f))


def assoc_sign(a: DimMatrix, b: DimMatrix, c: DimMatrix) -> int:
    """The sign s with ``det(associator) = (+-1, s)``; needs weakly invertible input."""
    for m in (a, b, c):
        if not m.weakly_invertible():
            raise DomainError(f"{m} is not weakly invertible")
    d = lv_det(associator(a, b, c, "LV"))
    if d.scale == 1:
        return 1
    if d.scale == -1:
        return -1
    raise AssertionError(f"associator determinant {d} is not a sign")


def sgn_stability(a: DimMatrix, b: DimMatrix, c: DimMatrix, d: DimMatrix) -> bool:
    """``sgn(ua . id_D) = sgn(ua) = sgn(id_D . ua)`` for weakly invertible D."""
    s = assoc_sign(a, b, c)
    if not d.weakly_invertible():
        raise DomainError(f"{d} is not weakly invertible")
    ua = associator(a, b, c, "LV")
    idd = MorMatrix.identity(d, "LV")
    right = lv_det(mor_product(ua, idd))
    left = lv_det(mor_product(idd, ua))
    return right.scale == s and left.scale == s


def check_sgn_stability(instances: Iterable[tuple[DimMatrix, DimMatrix, DimMatrix, DimMatrix]]):
    """Run :func:`sgn_stability` over instances; ``(True, None)`` or the first
    counterexample as ``(False, instance)``."""
    for inst in instances:
        if not sgn_stability(*inst):
            return False, inst
    return True, None


__all__ = [
    "Cat",
    "DimMatrix",
    "WeakInvCert",
    "weak_inv_cert",
    "int_det",
    "obj_product",
    "dims_block_sum",
    "MorMatrix",
    "mor_compose",
    "mor_product",
    "mor_block_sum",
    "associator",
    "associator_inverse",
    "associator_sign_closed_form",
    "pentagon_composites",
    "entrywise_lambda",
    "entrywise_s",
    "lv_det",
    "big_det",
    "assoc_sign",
    "sgn_stability",
    "check_sgn_stability",
    "MAX_DET_RANK",
]
