"""Charted 2-vector bundles over finite ordered covers.

A bundle assigns a weakly invertible dimension matrix to every pair
``a < b`` of the nerve and a coherency automorphism ``phi^{abc}`` of
``E^{ac}`` to every triple, sampled at the triple's points.  The coherency
maps must make the cocycle square

    phi^{abd} o (id . phi^{bcd}) = phi^{acd} o (phi^{abc} . id) o ua^{-1}

commute at every sample point of every quadruple, where ``ua`` is the
associator ``(E^ab E^bc) E^cd -> E^ab (E^bc E^cd)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Mapping, Sequence

import numpy as np

from .biperm import Lv1Mor
from .matrix_cat import (
    DimMatrix,
    MorMatrix,
    assoc_sign,
    associator_inverse,
    mor_compose,
    mor_product,
)
from .oriented import OrientedMor, dger, gerbe_include
from .scalars import EXACT, DomainError, ExactComplex, Scalar, ScalarMode

Simplex = tuple[int, ...]


class InvalidBundle(DomainError):
    def __init__(self, report: "ValidationReport"):
        self.report = report
        first = report.violations[0] if report.violations else None
        super().__init__(f"invalid bundle: {first.message if first else 'unknown'}")


class InternalConsistencyError(AssertionError):
    """A mathematical identity that must hold was violated (a bug)."""


# ---------------------------------------------------------------------------
# covers


@dataclass(frozen=True, eq=False)
class OrderedCover:
    """Finite globally ordered cover, described by its nerve.

    ``points`` maps each simplex (a strictly increasing index tuple with 2 to
    5 entries) to the ids of its sample points.  An empty tuple marks a
    simplex whose intersection carries no samples.
    """

    indices: tuple[int, ...]
    points: Mapping[Simplex, tuple[int, ...]]

    def __post_init__(self):
        idx = tuple(self.indices)
        if list(idx) != sorted(set(idx)):
            raise DomainError("cover indices must be strictly increasing")
        pts = {tuple(s): tuple(p) for s, p in self.points.items()}
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "points", dict(sorted(pts.items(), key=lambda kv: (len(kv[0]), kv[0]))))
        jset = set(idx)
        for s, p in self.points.items():
            if not 2 <= len(s) <= 5:
                raise DomainError(f"simplex {s} must have 2..5 vertices")
            if list(s) != sorted(set(s)) or not set(s) <= jset:
                raise DomainError(f"simplex {s} is not an increasing tuple of cover indices")
            if len(s) > 2:
                for face in combinations(s, len(s) - 1):
                    if face not in self.points:
                        raise DomainError(f"face {face} of {s} missing from the nerve")
                    if not set(p) <= set(self.points[face]):
                        raise DomainError(f"sample points of {s} are not contained in face {face}")

    @classmethod
    def from_simplices(cls, indices: Iterable[int], simplices: Iterable[Sequence[int]], points=(0,)) -> "OrderedCover":
        """All given simplices plus their faces, each sampled at ``points``."""
        pts: dict[Simplex, tuple[int, ...]] = {}
        for s in simplices:
            s = tuple(sorted(s))
            for k in range(2, len(s) + 1):
                for face in combinations(s, k):
                    pts[face] = tuple(points)
        return cls(tuple(sorted(indices)), pts)

    @classmethod
    def full_simplex(cls, k: int, points=(0,)) -> "OrderedCover":
        """Nerve of ``k+1`` charts that all intersect (faces up to quintuples)."""
        idx = tuple(range(k + 1))
        top = [c for c in combinations(idx, min(k + 1, 5))]
        return cls.from_simplices(idx, top, points)

    @classmethod
    def boundary_of_simplex(cls, k: int = 4, points=(0,)) -> "OrderedCover":
        """Nerve equal to the boundary of the k-simplex (all proper faces)."""
        idx = tuple(range(k + 1))
        return cls.from_simplices(idx, combinations(idx, k), points)

    def simplices(self, size: int) -> list[Simplex]:
        return [s for s in self.points if len(s) == size]

    @property
    def pairs(self) -> list[Simplex]:
        return self.simplices(2)

    @property
    def triples(self) -> list[Simplex]:
        return self.simplices(3)

    @property
    def quadruples(self) -> list[Simplex]:
        return self.simplices(4)

    @property
    def quintuples(self) -> list[Simplex]:
        return self.simplices(5)

    def restrict(self, keep: Iterable[int]) -> "OrderedCover":
        keep = set(keep)
        return OrderedCover(self.indices, {s: tuple(x for x in p if x in keep) for s, p in self.points.items()})


# ---------------------------------------------------------------------------
# bundles


@dataclass(frozen=True, eq=False)
class ChartedBundle:
    cover: OrderedCover
    rank: int
    dims: Mapping[Simplex, DimMatrix]
    phis: Mapping[Simplex, Mapping[int, MorMatrix]]
    mode: ScalarMode = EXACT
    # optional exact first derivatives of phi, one V matrix per coordinate
    # direction; used by the connective layer instead of finite differences
    jets: Mapping[Simplex, Mapping[int, tuple[MorMatrix, ...]]] | None = None

    def phi(self, triple: Simplex, point: int) -> MorMatrix:
        return self.phis[triple][point]

    def restrict(self, keep: Iterable[int]) -> "ChartedBundle":
        keep = set(keep)
        cover = self.cover.restrict(keep)
        phis = {t: {x: m for x, m in pts.items() if x in keep} for t, pts in self.phis.items()}
        jets = None
        if self.jets is not None:
            jets = {t: {x: j for x, j in pts.items() if x in keep} for t, pts in self.jets.items()}
        return ChartedBundle(cover, self.rank, dict(self.dims), phis, self.mode, jets)


@dataclass(frozen=True)
class Violation:
    kind: str
    simplex: Simplex
    point: int | None
    message: str
    residual: float | None = None

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "simplex": list(self.simplex),
            "point": self.point,
            "message": self.message,
            "residual": self.residual,
        }


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)
    max_residual: float = 0.0
    checked: int = 0

    @property
    def valid(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {
            "valid": self.valid,
            "checked_squares": self.checked,
            "max_residual": self.max_residual,
            "violations": [v.to_json() for v in self.violations],
        }


def mor_residual(f: MorMatrix, g: MorMatrix) -> float:
    """Largest absolute entry difference between two V morphism matrices."""
    worst = 0.0
    for rf, rg in zip(f.entries, g.entries):
        for x, y in zip(rf, rg):
            if x.dim == 0:
                continue
            a = x.matrix if not x.exact else x.to_approx().matrix
            b = y.matrix if not y.exact else y.to_approx().matrix
            worst = max(worst, float(np.max(np.abs(a - b))))
    return worst


def _entries_invertible(phi: MorMatrix, mode: ScalarMode) -> bool:
    for row in phi.entries:
        for v in row:
            if v.dim == 0:
                continue
            if mode.exact:
                if v.det().is_zero():
                    return False
            elif np.linalg.cond(v.matrix) > 1.0 / mode.tolerance:
                return False
    return True


def _check_dims(E: ChartedBundle, report: ValidationReport) -> set[Simplex]:
    bad: set[Simplex] = set()
    for pair in E.cover.pairs:
        d = E.dims.get(pair)
        if d is None:
            report.violations.append(Violation("dimension", pair, None, f"no dimension matrix for {pair}"))
            bad.add(pair)
            continue
        if d.n != E.rank or not d.nonnegative():
            report.violations.append(Violation("dimension", pair, None, f"{d} is not a rank-{E.rank} V object"))
            bad.add(pair)
        elif not d.weakly_invertible():
            report.violations.append(Violation("dimension", pair, None, f"{d} is not weakly invertible"))
            bad.add(pair)
    for a, b, c in E.cover.triples:
        if {(a, b), (b, c), (a, c)} & bad:
            bad.add((a, b, c))
            continue
        if E.dims[(a, b)] @ E.dims[(b, c)] != E.dims[(a, c)]:
            report.violations.append(
                Violation("object", (a, b, c), None, f"E^{a}{b} . E^{b}{c} != E^{a}{c}")
            )
            bad.add((a, b, c))
    return bad


def validate_bundle(E: ChartedBundle) -> ValidationReport:
    report = ValidationReport()
    bad = _check_dims(E, report)
    exact = E.mode.exact
    for t in E.cover.triples:
        if t in bad:
            continue
        a, _, c = t
        samples = E.phis.get(t, {})
        for x in E.cover.points[t]:
            phi = samples.get(x)
            if phi is None:
                report.violations.append(Violation("dimension", t, x, f"coherency map {t} missing at point {x}"))
                bad.add(t)
                continue
            if phi.cat != "V" or phi.dims != E.dims[(a, c)]:
                report.violations.append(
                    Violation("dimension", t, x, f"coherency map {t} at {x} is not an automorphism of E^{a}{c}")
                )
                bad.add(t)
            elif phi.exact != exact:
                report.violations.append(Violation("dimension", t, x, f"coherency map {t} at {x} has the wrong scalar mode"))
                bad.add(t)
            elif not _entries_invertible(phi, E.mode):
                report.violations.append(Violation("dimension", t, x, f"coherency map {t} at {x} has a singular entry"))
                bad.add(t)
    for q in E.cover.quadruples:
        a, b, c, d = q
        faces = [(b, c, d), (a, c, d), (a, b, d), (a, b, c)]
        if any(f in bad for f in faces):
            continue
        eab, ebc, ecd = E.dims[(a, b)], E.dims[(b, c)], E.dims[(c, d)]
        ua_inv = associator_inverse(eab, ebc, ecd, "V", exact)
        id_ab = MorMatrix.identity(eab, "V", exact)
        id_cd = MorMatrix.identity(ecd, "V", exact)
        for x in E.cover.points[q]:
            lhs = mor_compose(E.phis[(a, b, d)][x], mor_product(id_ab, E.phis[(b, c, d)][x]))
            rhs = mor_compose(
                E.phis[(a, c, d)][x], mor_compose(mor_product(E.phis[(a, b, c)][x], id_cd), ua_inv)
            )
            report.checked += 1
            if exact:
                if lhs != rhs:
                    res = mor_residual(lhs, rhs)
                    report.max_residual = max(report.max_residual, res)
                    report.violations.append(
                        Violation("cocycle", q, x, f"cocycle square fails on {q} at point {x}", res)
                    )
            else:
                res = mor_residual(lhs, rhs)
                report.max_residual = max(report.max_residual, res)
                if res > E.mode.tolerance:
                    report.violations.append(
                        Violation("cocycle", q, x, f"cocycle residual {res:.3e} on {q} at point {x}", res)
                    )
    return report


def require_valid(E: ChartedBundle) -> None:
    report = validate_bundle(E)
    if not report.valid:
        raise InvalidBundle(report)


# ---------------------------------------------------------------------------
# sign cochains


@dataclass(frozen=True, eq=False)
class SignCochain:
    degree: int
    values: Mapping[Simplex, int]

    def __post_init__(self):
        vals = {tuple(s): int(v) for s, v in self.values.items()}
        for s, v in vals.items():
            if len(s) != self.degree + 1:
                raise DomainError(f"simplex {s} does not have degree {self.degree}")
            if v not in (1, -1):
                raise DomainError(f"sign cochain value {v} on {s} is not +-1")
        object.__setattr__(self, "values", dict(sorted(vals.items())))

    @classmethod
    def constant(cls, cover: OrderedCover, degree: int, value: int = 1) -> "SignCochain":
        return cls(degree, {s: value for s in cover.simplices(degree + 1)})

    def is_trivial(self) -> bool:
        return all(v == 1 for v in self.values.values())

    def __eq__(self, other):
        return isinstance(other, SignCochain) and self.degree == other.degree and self.values == other.values

    __hash__ = None


def cech_coboundary(c: SignCochain, cover: OrderedCover) -> SignCochain:
    """Multiplicative Cech coboundary: the product of ``c`` over all faces."""
    out = {}
    for s in cover.simplices(c.degree + 2):
        v = 1
        for face in combinations(s, len(s) - 1):
            if face not in c.values:
                raise DomainError(f"cochain has no value on face {face}")
            v *= c.values[face]
        out[s] = v
    return SignCochain(c.degree + 1, out)


def sign_cocycle_of_dims(cover: OrderedCover, dims: Mapping[Simplex, DimMatrix]) -> SignCochain:
    vals = {}
    for a, b, c, d in cover.quadruples:
        vals[(a, b, c, d)] = assoc_sign(dims[(a, b)], dims[(b, c)], dims[(c, d)])
    cochain = SignCochain(3, vals)
    for a, b, c, d, e in cover.quintuples:
        # sgn(acde) sgn(abce) = sgn(abcd) sgn(abde) sgn(bcde)
        lhs = vals[(a, c, d, e)] * vals[(a, b, c, e)]
        rhs = vals[(a, b, c, d)] * vals[(a, b, d, e)] * vals[(b, c, d, e)]
        if lhs != rhs:
            raise InternalConsistencyError(f"sign cocycle identity fails on {(a, b, c, d, e)}")
    return cochain


def sign_cocycle(E: ChartedBundle) -> SignCochain:
    """The associator-sign 3-cocycle; it depends only on the dimension matrices."""
    report = ValidationReport()
    if _check_dims(E, report):
        raise InvalidBundle(report)
    return sign_cocycle_of_dims(E.cover, E.dims)


# ---------------------------------------------------------------------------
# GF(2) lifting


@dataclass(frozen=True)
class ObstructionWitness:
    """A set of quadruple equations whose left-hand sides cancel mod 2 while
    the right-hand sides sum to 1, so no lift exists."""

    quadruples: tuple[Simplex, ...]

    def verify(self, cover: OrderedCover, cocycle: SignCochain) -> bool:
        count: dict[Simplex, int] = {}
        rhs = 0
        for q in self.quadruples:
            for face in combinations(q, 3):
                count[face] = count.get(face, 0) ^ 1
            rhs ^= int(cocycle.values[q] == -1)
        return rhs == 1 and not any(count.values())

    def to_json(self) -> dict:
        return {"quadruples": [list(q) for q in self.quadruples]}


def solve_orientation(cover: OrderedCover, cocycle: SignCochain) -> dict[Simplex, int] | ObstructionWitness:
    """Solve ``a(bcd) a(acd) a(abd) a(abc) = cocycle(abcd)`` over GF(2).

    Dense Gaussian elimination on bit-packed rows; free variables are set to
    +1 (bit 0).  When inconsistent, the row combination that reduces to
    ``0 = 1`` is returned as the witness.
    """
    if cocycle.degree != 3:
        raise DomainError("orientation lifting needs a degree-3 cochain")
    triples = cover.triples
    quads = cover.quadruples
    col = {t: i for i, t in enumerate(triples)}
    rows = []
    for r, q in enumerate(quads):
        if q not in cocycle.values:
            raise DomainError(f"cochain has no value on {q}")
        mask = 0
        for face in combinations(q, 3):
            mask ^= 1 << col[face]
        rows.append([mask, int(cocycle.values[q] == -1), 1 << r])
    pivots = []
    r = 0
    for c in range(len(triples)):
        bit = 1 << c
        piv = next((i for i in range(r, len(rows)) if rows[i][0] & bit), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        for i in range(len(rows)):
            if i != r and rows[i][0] & bit:
                rows[i][0] ^= rows[r][0]
                rows[i][1] ^= rows[r][1]
                rows[i][2] ^= rows[r][2]
        pivots.append((c, r))
        r += 1
    for mask, rhs, combo in rows[r:]:
        if rhs:
            used = tuple(q for i, q in enumerate(quads) if combo >> i & 1)
            return ObstructionWitness(used)
    lift = {t: 1 for t in triples}
    for c, i in pivots:
        if rows[i][1]:
            lift[triples[c]] = -1
    return lift


# ---------------------------------------------------------------------------
# oriented bundles


@dataclass(frozen=True, eq=False)
class OrientedChartedBundle:
    base: ChartedBundle
    lift: Mapping[Simplex, int]

    @property
    def cover(self) -> OrderedCover:
        return self.base.cover


def validate_oriented(O: OrientedChartedBundle, base_report: ValidationReport | None = None) -> ValidationReport:
    """The oriented cocycle square: the unoriented one plus the sign equation
    ``a(acd) a(abc) sgn(ua^{abcd}) = a(abd) a(bcd)`` on every quadruple."""
    report = base_report if base_report is not None else validate_bundle(O.base)
    if not report.valid:
        return report
    for t in O.cover.triples:
        if O.lift.get(t) not in (1, -1):
            report.violations.append(Violation("orientation", t, None, f"lift on {t} is not a sign"))
    if not report.valid:
        return report
    sgn = sign_cocycle(O.base)
    for q in O.cover.quadruples:
        a, b, c, d = q
        lhs = O.lift[(a, c, d)] * O.lift[(a, b, c)] * sgn.values[q]
        rhs = O.lift[(a, b, d)] * O.lift[(b, c, d)]
        if lhs != rhs:
            report.violations.append(Violation("orientation", q, None, f"oriented square fails on {q}"))
    return report


def orient_lift(E: ChartedBundle) -> OrientedChartedBundle | ObstructionWitness:
    require_valid(E)
    cocycle = sign_cocycle(E)
    sol = solve_orientation(E.cover, cocycle)
    if isinstance(sol, ObstructionWitness):
        return sol
    O = OrientedChartedBundle(E, sol)
    report = validate_oriented(O)
    if not report.valid:
        raise InternalConsistencyError(f"solver lift does not re-validate: {report.violations[0].message}")
    return O


# ---------------------------------------------------------------------------
# gerbes


@dataclass(frozen=True, eq=False)
class ChartedGerbe:
    """A multiplicative C*-valued Cech 2-cocycle, sampled per triple and point."""

    cover: OrderedCover
    values: Mapping[Simplex, Mapping[int, Scalar]]
    mode: ScalarMode = EXACT

    def residuals(self) -> ValidationReport:
        report = ValidationReport()
        for q in self.cover.quadruples:
            a, b, c, d = q
            for x in self.cover.points[q]:
                lhs = self.values[(a, b, d)][x] * self.values[(b, c, d)][x]
                rhs = self.values[(a, c, d)][x] * self.values[(a, b, c)][x]
                report.checked += 1
                if self.mode.exact:
                    if lhs != rhs:
                        res = abs(complex(lhs) - complex(rhs))
                        report.max_residual = max(report.max_residual, res)
                        report.violations.append(Violation("gerbe", q, x, f"gerbe cocycle fails on {q} at {x}", res))
                else:
                    res = abs(complex(lhs) - complex(rhs))
                    report.max_residual = max(report.max_residual, res)
                    if res > self.mode.tolerance:
                        report.violations.append(
                            Violation("gerbe", q, x, f"gerbe cocycle residual {res:.3e} on {q} at {x}", res)
                        )
        return report


def det_gerbe(O: OrientedChartedBundle) -> ChartedGerbe:
    """Apply DGer pointwise to the oriented coherency maps."""
    E = O.base
    values = {}
    for t in E.cover.triples:
        values[t] = {x: dger(OrientedMor(E.phis[t][x], O.lift[t])).scale for x in E.cover.points[t]}
    gerbe = ChartedGerbe(E.cover, values, E.mode)
    report = gerbe.residuals()
    if not report.valid:
        raise DomainError(f"determinant gerbe fails the cocycle identity: {report.violations[0].message}")
    return gerbe


def gerbe_bundle(gerbe: ChartedGerbe, rank: int = 1) -> OrientedChartedBundle:
    """The oriented rank-n bundle obtained by including a charted gerbe."""
    cover = gerbe.cover
    ident = DimMatrix.identity(rank)
    dims = {p: ident for p in cover.pairs}
    phis = {
        t: {x: gerbe_include(Lv1Mor(v), rank).base for x, v in gerbe.values[t].items()}
        for t in cover.triples
    }
    E = ChartedBundle(cover, rank, dims, phis, gerbe.mode)
    return OrientedChartedBundle(E, {t: 1 for t in cover.triples})


def coboundary_gerbe(cover: OrderedCover, b: Mapping[Simplex, Mapping[int, Scalar]], mode: ScalarMode = EXACT) -> ChartedGerbe:
    """``c^{abc} = b^{ab} b^{bc} / b^{ac}`` from a C*-valued 1-cochain ``b``."""
    values = {}
    for a, bb, c in cover.triples:
        values[(a, bb, c)] = {
            x: b[(a, bb)][x] * b[(bb, c)][x] / b[(a, c)][x] for x in cover.points[(a, bb, c)]
        }
    return ChartedGerbe(cover, values, mode)


__all__ = [
    "Simplex",
    "OrderedCover",
    "ChartedBundle",
    "Violation",
    "ValidationReport",
    "InvalidBundle",
    "InternalConsistencyError",
    "validate_bundle",
    "require_valid",
    "mor_residual",
    "SignCochain",
    "cech_coboundary",
    "sign_cocycle",
    "sign_cocycle_of_dims",
    "ObstructionWitness",
    "solve_orientation",
    "OrientedChartedBundle",
    "validate_oriented",
    "orient_lift",
    "ChartedGerbe",
    "det_gerbe",
    "gerbe_bundle",
    "coboundary_gerbe",
]
