"""Connective structures on sampled charted 2-vector bundles.

Everything here is floating point and vectorised over sample points.  A
connection on ``E^{ab}`` is an n x n grid of ordinary connections, one per
entry; entry (i, j) stores the matrix-valued 1-form as an array of shape
``(P, m, d, d)`` (points, coordinate directions, fibre).  The convention is
``nabla = d + A`` acting on sections as ``ds + A s``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product
from typing import Iterable, Mapping, Sequence

import numpy as np

from .biperm import VMor
from .charted import ChartedBundle, OrderedCover, OrientedChartedBundle, Simplex, mor_residual
from .matrix_cat import DimMatrix, MorMatrix, mor_compose, mor_product
from .oriented import OrientedMor, dger
from .scalars import DomainError

_EPS = 1e-9


def _smoothstep(t: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.clip(t, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        b = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return a / (a + b)


# ---------------------------------------------------------------------------
# sampled base


@dataclass(frozen=True, eq=False)
class SampledBase:
    """A regular grid in a box of R^m with an ordered cover and bump functions.

    Point ids are C-order flat indices into the grid.  ``members[a]`` are the
    points of ``U_a``, ``shrunk[a]`` those of ``U'_a`` and ``psi[a]`` holds
    the bump values at every grid point.
    """

    h: float
    origin: tuple[float, ...]
    shape: tuple[int, ...]
    indices: tuple[int, ...]
    members: Mapping[int, np.ndarray]
    shrunk: Mapping[int, np.ndarray]
    psi: Mapping[int, np.ndarray]

    @property
    def m(self) -> int:
        return len(self.shape)

    @property
    def npoints(self) -> int:
        return int(np.prod(self.shape))

    @property
    def strides(self) -> tuple[int, ...]:
        out = []
        s = 1
        for n in reversed(self.shape):
            out.append(s)
            s *= n
        return tuple(reversed(out))

    def multi_index(self, ids) -> np.ndarray:
        return np.stack(np.unravel_index(np.asarray(ids, dtype=int), self.shape), axis=-1)

    def coords(self, ids) -> np.ndarray:
        return np.asarray(self.origin) + self.h * self.multi_index(ids)

    def neighbor(self, ids, mu: int, step: int) -> np.ndarray:
        """Grid neighbour ``x + step*h*e_mu``; -1 outside the grid."""
        ids = np.asarray(ids, dtype=int)
        mi = self.multi_index(ids)[..., mu] + step
        ok = (mi >= 0) & (mi < self.shape[mu])
        return np.where(ok, ids + step * self.strides[mu], -1)

    @classmethod
    def from_boxes(
        cls,
        boxes: Mapping[int, Sequence[tuple[float, float]]],
        h: float,
        domain: Sequence[tuple[float, float]],
        margin: float,
    ) -> "SampledBase":
        """Charts ``U_a`` are open boxes, ``U'_a`` the closed boxes shrunk by
        ``margin``; ``psi_a`` is a product of smooth steps across the margin."""
        if margin < h - _EPS:
            raise DomainError("margin must be at least one grid step")
        origin = tuple(float(lo) for lo, _ in domain)
        shape = tuple(int(round((hi - lo) / h)) + 1 for lo, hi in domain)
        npts = int(np.prod(shape))
        grid = np.asarray(origin) + h * np.stack(np.unravel_index(np.arange(npts), shape), axis=-1)
        members, shrunk, psi = {}, {}, {}
        for a in sorted(boxes):
            box = boxes[a]
            if len(box) != len(shape):
                raise DomainError(f"box for chart {a} has the wrong dimension")
            inside = np.ones(npts, bool)
            core = np.ones(npts, bool)
            bump = np.ones(npts)
            for mu, (lo, hi) in enumerate(box):
                x = grid[:, mu]
                inside &= (x > lo + _EPS) & (x < hi - _EPS)
                core &= (x >= lo + margin - _EPS) & (x <= hi - margin + _EPS)
                bump *= _smoothstep((x - lo) / margin) * _smoothstep((hi - x) / margin)
            bump = np.where(core, 1.0, np.where(inside, bump, 0.0))
            members[a] = np.flatnonzero(inside)
            shrunk[a] = np.flatnonzero(core)
            psi[a] = bump
        base = cls(float(h), origin, shape, tuple(sorted(boxes)), members, shrunk, psi)
        problems = base.validate()
        if problems:
            # e.g. margin == h with a box edge on a grid line
            raise DomainError(f"sampled base is not admissible: {problems[0]}")
        return base

    def validate(self) -> list[str]:
        problems = []
        for a in self.indices:
            u, up, p = set(self.members[a].tolist()), self.shrunk[a], self.psi[a]
            if p.shape != (self.npoints,) or np.any(p < 0) or np.any(p > 1):
                problems.append(f"psi_{a} must take values in [0, 1] at every grid point")
                continue
            if not set(up.tolist()) <= u:
                problems.append(f"U'_{a} is not contained in U_{a}")
            if np.any(p[up] != 1.0):
                problems.append(f"psi_{a} is not 1 on U'_{a}")
            off = np.setdiff1d(np.arange(self.npoints), self.members[a])
            if np.any(p[off] != 0.0):
                problems.append(f"psi_{a} is not 0 off U_{a}")
            for mu in range(self.m):
                for step in (-1, 1):
                    nb = self.neighbor(up, mu, step)
                    nb = nb[nb >= 0]
                    if not set(nb.tolist()) <= u:
                        problems.append(f"a neighbour of U'_{a} leaves U_{a}")
                        break
        return problems

    def active(self, x: int) -> tuple[int, ...]:
        return tuple(a for a in self.indices if x in set(self.members[a].tolist()))

    def intersect(self, simplex: Iterable[int], shrunk: bool = False) -> np.ndarray:
        sets = self.shrunk if shrunk else self.members
        out = None
        for a in simplex:
            out = sets[a] if out is None else np.intersect1d(out, sets[a], assume_unique=True)
        return out if out is not None else np.arange(0)

    def cover(self) -> OrderedCover:
        """The nerve of the U cover (non-empty intersections up to quintuples)."""
        pts = {}
        for k in range(2, min(5, len(self.indices)) + 1):
            for s in combinations(self.indices, k):
                ids = self.intersect(s)
                if len(ids):
                    pts[s] = tuple(int(x) for x in ids)
        return OrderedCover(self.indices, pts)


# ---------------------------------------------------------------------------
# fields


def _lookup(points: np.ndarray, npoints: int) -> np.ndarray:
    pos = np.full(npoints, -1, dtype=int)
    pos[points] = np.arange(len(points))
    return pos


@dataclass(frozen=True, eq=False)
class ConnectionField:
    pair: tuple[int, int]
    dims: DimMatrix
    points: np.ndarray
    blocks: tuple[tuple[np.ndarray, ...], ...]

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=int)
        object.__setattr__(self, "points", pts)
        n = self.dims.n
        if len(self.blocks) != n or any(len(r) != n for r in self.blocks):
            raise DomainError("connection block grid does not match dims")
        m = None
        for i, j in product(range(n), repeat=2):
            b = self.blocks[i][j]
            d = self.dims.rows[i][j]
            if b.ndim != 4 or b.shape[0] != len(pts) or b.shape[2:] != (d, d):
                raise DomainError(f"block ({i},{j}) has shape {b.shape}, expected (P, m, {d}, {d})")
            if m is None:
                m = b.shape[1]
            elif b.shape[1] != m:
                raise DomainError("blocks disagree on the number of directions")

    @property
    def m(self) -> int:
        return self.blocks[0][0].shape[1]

    @classmethod
    def zeros(cls, pair, dims: DimMatrix, points, m: int) -> "ConnectionField":
        P = len(points)
        return cls(
            tuple(pair),
            dims,
            np.asarray(points, dtype=int),
            tuple(tuple(np.zeros((P, m, d, d), complex) for d in row) for row in dims.rows),
        )

    def positions(self, ids) -> np.ndarray:
        ids = np.asarray(ids, dtype=int)
        idx = np.searchsorted(self.points, ids)
        idx = np.minimum(idx, max(len(self.points) - 1, 0))
        if len(ids) and (len(self.points) == 0 or np.any(self.points[idx] != ids)):
            raise DomainError(f"points outside the domain of the connection on {self.pair}")
        return idx

    def restrict(self, ids) -> "ConnectionField":
        idx = self.positions(ids)
        return ConnectionField(
            self.pair, self.dims, np.asarray(ids, dtype=int), tuple(tuple(b[idx] for b in row) for row in self.blocks)
        )

    def map_blocks(self, fn) -> "ConnectionField":
        return ConnectionField(self.pair, self.dims, self.points, tuple(tuple(fn(b) for b in row) for row in self.blocks))

    def max_diff(self, other: "ConnectionField") -> float:
        if self.dims != other.dims or not np.array_equal(self.points, other.points):
            raise DomainError("comparing connections on different objects or points")
        worst = 0.0
        for ra, rb in zip(self.blocks, other.blocks):
            for a, b in zip(ra, rb):
                if a.size:
                    worst = max(worst, float(np.max(np.abs(a - b))))
        return worst


def _lincomb(fields: Sequence[ConnectionField], weights: Sequence[np.ndarray]) -> ConnectionField:
    f0 = fields[0]
    n = f0.dims.n
    blocks = []
    for i in range(n):
        row = []
        for j in range(n):
            acc = np.zeros_like(f0.blocks[i][j])
            for f, w in zip(fields, weights):
                acc = acc + np.asarray(w)[:, None, None, None] * f.blocks[i][j]
            row.append(acc)
        blocks.append(tuple(row))
    return ConnectionField(f0.pair, f0.dims, f0.points, tuple(blocks))


def convex_combine(fields: Sequence[ConnectionField], weights: Sequence) -> ConnectionField:
    """Pointwise affine combination; weights are per point and sum to 1."""
    if not fields or len(fields) != len(weights):
        raise DomainError("need one weight table per field")
    f0 = fields[0]
    ws = []
    for f, w in zip(fields, weights):
        if f.pair != f0.pair or f.dims != f0.dims or not np.array_equal(f.points, f0.points):
            raise DomainError("convex combination of connections on different objects")
        w = np.broadcast_to(np.asarray(w, dtype=float), (len(f0.points),))
        if np.any(w < -1e-12):
            raise DomainError("negative convex weight")
        ws.append(w)
    total = np.sum(ws, axis=0) if ws else np.zeros(0)
    if len(total) and np.max(np.abs(total - 1.0)) > 1e-12:
        raise DomainError("convex weights do not sum to 1")
    return _lincomb(fields, ws)


def _bkron(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Batched Kronecker product over leading axes, left factor outer."""
    a, b = x.shape[-1], y.shape[-1]
    lead = np.broadcast_shapes(x.shape[:-2], y.shape[:-2])
    out = x[..., :, None, :, None] * y[..., None, :, None, :]
    return out.reshape(lead + (a * b, a * b))


def conn_product(A: ConnectionField, B: ConnectionField) -> ConnectionField:
    """The connection induced on ``E^{ab} . E^{bc}``: entry (i, k) is the block
    diagonal over ascending j of ``A_ij (x) I + I (x) B_jk``."""
    if A.pair[1] != B.pair[0]:
        raise DomainError(f"cannot multiply connections on {A.pair} and {B.pair}")
    if A.dims.n != B.dims.n or A.m != B.m:
        raise DomainError("connection size mismatch")
    if not np.array_equal(A.points, B.points):
        raise DomainError("connections must share sample points; restrict first")
    n, m, P = A.dims.n, A.m, len(A.points)
    dims = A.dims @ B.dims
    blocks = []
    for i in range(n):
        row = []
        for k in range(n):
            size = dims.rows[i][k]
            out = np.zeros((P, m, size, size), complex)
            off = 0
            for j in range(n):
                d, e = A.dims.rows[i][j], B.dims.rows[j][k]
                if d * e == 0:
                    continue
                blk = _bkron(A.blocks[i][j], np.eye(e)) + _bkron(np.eye(d), B.blocks[j][k])
                out[:, :, off:off + d * e, off:off + d * e] = blk
                off += d * e
            row.append(out)
        blocks.append(tuple(row))
    return ConnectionField((A.pair[0], B.pair[1]), dims, A.points, tuple(blocks))


# ---------------------------------------------------------------------------
# coherency samples


@dataclass(frozen=True, eq=False)
class PhiSamples:
    """A coherency map sampled on its triple's points, as per-entry arrays."""

    triple: Simplex
    dims: DimMatrix
    points: np.ndarray
    blocks: tuple[tuple[np.ndarray, ...], ...]  # (P, d, d)
    jets: tuple[tuple[np.ndarray, ...], ...] | None = None  # (P, m, d, d)

    @classmethod
    def from_bundle(cls, E: ChartedBundle, triple: Simplex, use_jets: bool = True) -> "PhiSamples":
        a, _, c = triple
        dims = E.dims[(a, c)]
        pts = np.array(sorted(E.phis[triple]), dtype=int)
        n = dims.n

        def grab(mor: MorMatrix, i, k):
            v = mor.entries[i][k]
            return v.to_approx().matrix if v.exact else v.matrix

        samples = [E.phis[triple][int(x)] for x in pts]
        blocks = tuple(
            tuple(
                np.array([grab(s, i, k) for s in samples], dtype=complex).reshape(len(pts), dims.rows[i][k], dims.rows[i][k])
                for k in range(n)
            )
            for i in range(n)
        )
        jets = None
        if use_jets and E.jets is not None and triple in E.jets:
            js = [E.jets[triple][int(x)] for x in pts]
            m = len(js[0]) if js else 0
            jets = tuple(
                tuple(
                    np.array([[grab(jm, i, k) for jm in j] for j in js], dtype=complex).reshape(
                        len(pts), m, dims.rows[i][k], dims.rows[i][k]
                    )
                    for k in range(n)
                )
                for i in range(n)
            )
        return cls(triple, dims, pts, blocks, jets)

    def gauge_term(self, ids: np.ndarray, base: SampledBase) -> list[list[np.ndarray]]:
        """``phi d(phi^{-1})`` at ``ids`` per entry, shape ``(P, m, d, d)``.

        Exact jets give ``-(d phi) phi^{-1}``; otherwise central differences of
        ``phi^{-1}`` on the grid, second-order one-sided at the boundary.
        """
        n = self.dims.n
        pos = _lookup(self.points, base.npoints)
        q = pos[ids]
        if np.any(q < 0):
            raise DomainError(f"coherency map {self.triple} is not sampled at every requested point")
        out = [[None] * n for _ in range(n)]
        for i, k in product(range(n), repeat=2):
            d = self.dims.rows[i][k]
            phi = self.blocks[i][k][q]
            if d == 0:
                out[i][k] = np.zeros((len(ids), base.m, 0, 0), complex)
                continue
            if self.jets is not None:
                inv = np.linalg.inv(phi)
                out[i][k] = -np.einsum("pmab,pbc->pmac", self.jets[i][k][q], inv)
                continue
            inv_all = np.linalg.inv(self.blocks[i][k])
            deriv = np.empty((len(ids), base.m, d, d), complex)
            for mu in range(base.m):
                fwd = base.neighbor(ids, mu, 1)
                bwd = base.neighbor(ids, mu, -1)
                pf = np.where(fwd >= 0, pos[np.maximum(fwd, 0)], -1)
                pb = np.where(bwd >= 0, pos[np.maximum(bwd, 0)], -1)
                for r in range(len(ids)):
                    if pf[r] >= 0 and pb[r] >= 0:
                        deriv[r, mu] = (inv_all[pf[r]] - inv_all[pb[r]]) / (2 * base.h)
                        continue
                    step = 1 if pf[r] >= 0 else -1
                    p1 = pf[r] if step == 1 else pb[r]
                    if p1 < 0:
                        raise DomainError(f"no difference neighbours for point {ids[r]} inside {self.triple}")
                    far = base.neighbor(ids[r:r + 1], mu, 2 * step)[0]
                    p2 = pos[far] if far >= 0 else -1
                    p0 = q[r]
                    if p2 >= 0:
                        deriv[r, mu] = step * (-3 * inv_all[p0] + 4 * inv_all[p1] - inv_all[p2]) / (2 * base.h)
                    else:
                        deriv[r, mu] = step * (inv_all[p1] - inv_all[p0]) / base.h
            out[i][k] = np.einsum("pab,pmbc->pmac", phi, deriv)
        return out


def circ_product(
    A: ConnectionField,
    B: ConnectionField,
    phi: PhiSamples,
    base: SampledBase,
    points: np.ndarray | None = None,
) -> ConnectionField:
    """``A o B``: the product connection pulled back along ``phi^{-1}``,
    ``A' = phi A phi^{-1} + phi d(phi^{-1})`` per direction and entry."""
    a, b, c = phi.triple
    if A.pair != (a, b) or B.pair != (b, c):
        raise DomainError(f"coherency map {phi.triple} does not match {A.pair} and {B.pair}")
    if points is None:
        points = np.intersect1d(np.intersect1d(A.points, B.points), phi.points)
    points = np.asarray(points, dtype=int)
    raw = conn_product(A.restrict(points), B.restrict(points))
    if raw.dims != phi.dims:
        raise DomainError("coherency map and product connection disagree on dims")
    term = phi.gauge_term(points, base)
    pos = _lookup(phi.points, base.npoints)[points]
    n = phi.dims.n
    blocks = []
    for i in range(n):
        row = []
        for k in range(n):
            if phi.dims.rows[i][k] == 0:
                row.append(raw.blocks[i][k])
                continue
            p = phi.blocks[i][k][pos]
            try:
                pinv = np.linalg.inv(p)
            except np.linalg.LinAlgError as exc:
                raise DomainError(f"singular coherency map on {phi.triple}") from exc
            row.append(np.einsum("pab,pmbc,pcd->pmad", p, raw.blocks[i][k], pinv) + term[i][k])
        blocks.append(tuple(row))
    return ConnectionField((a, c), phi.dims, points, tuple(blocks))


# ---------------------------------------------------------------------------
# chains and the existence construction


def chains(alpha: int, beta: int, indices: Sequence[int]) -> list[tuple[int, ...]]:
    """All increasing sequences from ``alpha`` to ``beta`` through ``indices``."""
    mid = [g for g in indices if alpha < g < beta]
    out = []
    for k in range(len(mid) + 1):
        for sub in combinations(mid, k):
            out.append((alpha,) + sub + (beta,))
    return out


def chain_weights(base: SampledBase, chain: Sequence[int], exact: bool = False):
    """``prod_i psi_{a_i} psi_{a_{i+1}} prod_{a_i < g < a_{i+1}} (1 - psi_g)``
    at every grid point; ``exact=True`` evaluates on the Fractions of the
    stored psi values and returns a list."""
    if len(chain) < 2 or list(chain) != sorted(set(chain)) or not set(chain) <= set(base.indices):
        raise DomainError(f"{chain} is not an increasing chain in the cover")
    if exact:
        tables = {a: [Fraction(float(v)) for v in base.psi[a]] for a in base.indices}
        out = [Fraction(1)] * base.npoints
        for lo, hi in zip(chain, chain[1:]):
            mids = [g for g in base.indices if lo < g < hi]
            for x in range(base.npoints):
                w = tables[lo][x] * tables[hi][x]
                for g in mids:
                    w *= 1 - tables[g][x]
                out[x] *= w
        return out
    out = np.ones(base.npoints)
    for lo, hi in zip(chain, chain[1:]):
        w = base.psi[lo] * base.psi[hi]
        for g in base.indices:
            if lo < g < hi:
                w = w * (1.0 - base.psi[g])
        out = out * w
    return out


@dataclass(frozen=True, eq=False)
class ConnectiveStructure:
    fields: Mapping[tuple[int, int], ConnectionField]

    def __getitem__(self, pair) -> ConnectionField:
        return self.fields[tuple(pair)]


class PhiCache:
    def __init__(self, E: ChartedBundle, use_jets: bool = True):
        self.E = E
        self.use_jets = use_jets
        self._cache: dict[Simplex, PhiSamples] = {}

    def __call__(self, triple: Simplex) -> PhiSamples:
        if triple not in self._cache:
            self._cache[triple] = PhiSamples.from_bundle(self.E, triple, self.use_jets)
        return self._cache[triple]


def build_connective(
    E: ChartedBundle,
    base: SampledBase,
    seeds: Mapping[tuple[int, int], ConnectionField],
    use_jets: bool = True,
    phis: PhiCache | None = None,
) -> ConnectiveStructure:
    """Partition-of-unity construction.  On ``U'_{ab}`` the connection is the
    chain-weighted average of the left-to-right o-folds of the seeds along
    every increasing chain from a to b."""
    phis = phis or PhiCache(E, use_jets)
    out = {}
    for pair in E.cover.pairs:
        a, b = pair
        pts = base.intersect(pair, shrunk=True)
        num = ConnectionField.zeros(pair, E.dims[pair], pts, base.m)
        den = np.zeros(len(pts))
        for ch in chains(a, b, base.indices):
            w = chain_weights(base, ch)[pts]
            live = np.flatnonzero(w > 0)
            if not len(live):
                continue
            sub = pts[live]
            fold = seeds[(ch[0], ch[1])].restrict(sub)
            for lo, hi in zip(ch[1:], ch[2:]):
                fold = circ_product(fold, seeds[(lo, hi)].restrict(sub), phis((a, lo, hi)), base, sub)
            contrib = ConnectionField.zeros(pair, E.dims[pair], pts, base.m)
            blocks = tuple(
                tuple(z.copy() for z in row) for row in contrib.blocks
            )
            for i, row in enumerate(fold.blocks):
                for j, blk in enumerate(row):
                    blocks[i][j][live] = w[live][:, None, None, None] * blk
            num = _lincomb([num, ConnectionField(pair, E.dims[pair], pts, blocks)], [np.ones(len(pts))] * 2)
            den[live] += w[live]
        if np.any(den <= 0):
            bad = int(pts[np.argmin(den)])
            raise DomainError(f"zero chain-weight denominator for {pair} at point {bad}")
        out[pair] = _lincomb([num], [1.0 / den]) if len(pts) else num
    return ConnectiveStructure(out)


@dataclass
class CocycleReport:
    residuals: dict[Simplex, float] = field(default_factory=dict)
    worst_points: dict[Simplex, int] = field(default_factory=dict)

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values(), default=0.0)

    def to_json(self) -> dict:
        return {
            "max_residual": self.max_residual,
            "triples": [
                {"triple": list(t), "residual": self.residuals[t], "worst_point": self.worst_points[t]}
                for t in sorted(self.residuals)
            ],
        }


def cocycle_residual(
    S: ConnectiveStructure, E: ChartedBundle, base: SampledBase, phis: PhiCache | None = None
) -> CocycleReport:
    """Max entry residual of ``nabla^{ab} o nabla^{bc} - nabla^{ac}`` on U' triple points."""
    phis = phis or PhiCache(E)
    report = CocycleReport()
    for t in E.cover.triples:
        a, b, c = t
        pts = base.intersect(t, shrunk=True)
        if not len(pts):
            continue
        lhs = circ_product(S[(a, b)].restrict(pts), S[(b, c)].restrict(pts), phis(t), base, pts)
        rhs = S[(a, c)].restrict(pts)
        per_point = np.zeros(len(pts))
        for ra, rb in zip(lhs.blocks, rhs.blocks):
            for x, y in zip(ra, rb):
                if x.size:
                    per_point = np.maximum(per_point, np.abs(x - y).reshape(len(pts), -1).max(axis=1))
        k = int(np.argmax(per_point))
        report.residuals[t] = float(per_point[k])
        report.worst_points[t] = int(pts[k])
    return report


def combine_structures(S1: ConnectiveStructure, S2: ConnectiveStructure, t: float) -> ConnectiveStructure:
    """``t S1 + (1 - t) S2`` pairwise."""
    if not 0.0 <= t <= 1.0:
        raise DomainError("t must lie in [0, 1]")
    if set(S1.fields) != set(S2.fields):
        raise DomainError("structures are defined on different pairs")
    out = {}
    for pair in S1.fields:
        f1, f2 = S1[pair], S2[pair]
        P = len(f1.points)
        out[pair] = convex_combine([f1, f2], [np.full(P, t), np.full(P, 1.0 - t)])
    return ConnectiveStructure(out)


def contractibility_check(
    S1: ConnectiveStructure,
    S2: ConnectiveStructure,
    t: float,
    E: ChartedBundle,
    base: SampledBase,
    tolerance: float = 1e-9,
    phis: PhiCache | None = None,
) -> tuple[ConnectiveStructure, CocycleReport]:
    S = combine_structures(S1, S2, t)
    report = cocycle_residual(S, E, base, phis)
    if report.max_residual > tolerance:
        raise DomainError(f"convex combination at t={t} has cocycle residual {report.max_residual:.3e}")
    return S, report


# ---------------------------------------------------------------------------
# transport


@dataclass(frozen=True)
class PathSpec:
    pair: tuple[int, int]
    points: tuple[int, ...]
    refine: int = 1

    def __post_init__(self):
        if self.refine < 1:
            raise DomainError("refinement factor must be >= 1")
        if len(self.points) < 1:
            raise DomainError("a path needs at least one point")

    def steps(self, base: SampledBase) -> list[tuple[int, int, int, int]]:
        """Unit grid steps ``(from, to, mu, sign)``; axis-aligned jumps are
        expanded, anything else is rejected."""
        out = []
        mi = base.multi_index(list(self.points))
        for (x, y), (u, v) in zip(zip(self.points, self.points[1:]), zip(mi, mi[1:])):
            diff = v - u
            nz = np.flatnonzero(diff)
            if len(nz) == 0:
                continue
            if len(nz) != 1:
                raise DomainError(f"path segment {x} -> {y} is not along a grid axis")
            mu = int(nz[0])
            sign = 1 if diff[mu] > 0 else -1
            cur = int(x)
            for _ in range(abs(int(diff[mu]))):
                nxt = int(base.neighbor([cur], mu, sign)[0])
                out.append((cur, nxt, mu, sign))
                cur = nxt
        return out


def parallel_transport(F: ConnectionField, path: PathSpec, base: SampledBase) -> MorMatrix:
    """Endpoint solution of ``dP/dt = -A(x') P`` by explicit midpoint steps.

    Along each unit grid step the form is interpolated linearly between the
    two nodes; each step is split into ``path.refine`` substeps.
    """
    if tuple(path.pair) != tuple(F.pair):
        raise DomainError(f"path is for {path.pair}, connection for {F.pair}")
    steps = path.steps(base)
    pos = _lookup(F.points, base.npoints)
    for x, y, _, _ in steps:
        if pos[x] < 0 or pos[y] < 0:
            raise DomainError(f"path leaves the domain of the connection on {F.pair}")
    if pos[path.points[0]] < 0:
        raise DomainError(f"path leaves the domain of the connection on {F.pair}")
    K = path.refine
    dt = base.h / K
    n = F.dims.n
    entries = []
    for i in range(n):
        row = []
        for j in range(n):
            d = F.dims.rows[i][j]
            P = np.eye(d, dtype=complex)
            blk = F.blocks[i][j]
            if d:
                for x, y, mu, sign in steps:
                    a0, a1 = -sign * blk[pos[x], mu], -sign * blk[pos[y], mu]
                    for s in range(K):
                        u0, um = s / K, (s + 0.5) / K
                        A0 = a0 + u0 * (a1 - a0)
                        Am = a0 + um * (a1 - a0)
                        k1 = A0 @ P
                        P = P + dt * (Am @ (P + 0.5 * dt * k1))
            row.append(VMor(P, exact=False))
        entries.append(row)
    return MorMatrix(F.dims, entries)


def _approx(m: MorMatrix) -> MorMatrix:
    return m if not m.exact else m.map_entries(lambda v: v.to_approx())


@dataclass
class TransportReport:
    triple: Simplex
    refine: int
    square_residual: float
    dger_residual: float
    dger_lhs: complex
    dger_rhs: complex

    @property
    def residual(self) -> float:
        return max(self.square_residual, self.dger_residual)

    def to_json(self) -> dict:
        return {
            "triple": list(self.triple),
            "refine": self.refine,
            "square_residual": self.square_residual,
            "dger_residual": self.dger_residual,
            "dger_lhs": [self.dger_lhs.real, self.dger_lhs.imag],
            "dger_rhs": [self.dger_rhs.real, self.dger_rhs.imag],
        }


def gerbe_transport_check(
    O: OrientedChartedBundle,
    S: ConnectiveStructure,
    base: SampledBase,
    triple: Simplex,
    points: Sequence[int],
    refine: int = 1,
    tolerance: float | None = None,
) -> TransportReport:
    """Compare ``P^{ac} o phi(start)`` with ``phi(end) o (P^{ab} . P^{bc})``
    along a path in ``U'_{abc}``, before and after applying DGer."""
    a, b, c = triple
    pts = tuple(int(x) for x in points)
    Pab = parallel_transport(S[(a, b)], PathSpec((a, b), pts, refine), base)
    Pbc = parallel_transport(S[(b, c)], PathSpec((b, c), pts, refine), base)
    Pac = parallel_transport(S[(a, c)], PathSpec((a, c), pts, refine), base)
    E = O.base
    phi0 = _approx(E.phis[triple][pts[0]])
    phi1 = _approx(E.phis[triple][pts[-1]])
    lhs = mor_compose(Pac, phi0)
    rhs = mor_compose(phi1, mor_product(Pab, Pbc))
    sq = mor_residual(lhs, rhs)
    s = O.lift[triple]
    g = lambda x, sign=1: complex(dger(OrientedMor(x, sign)).scale)
    dl = g(Pac) * g(phi0, s)
    dr = g(phi1, s) * g(Pab) * g(Pbc)
    rep = TransportReport(tuple(triple), refine, sq, abs(dl - dr), dl, dr)
    if tolerance is not None and rep.residual > tolerance:
        raise DomainError(
            f"transport square on {triple} off by {rep.residual:.3e} at refine={refine}; try a larger refinement"
        )
    return rep


def transport_convergence(
    O: OrientedChartedBundle,
    S: ConnectiveStructure,
    base: SampledBase,
    triple: Simplex,
    points: Sequence[int],
    refine: int = 1,
) -> dict:
    """Residuals at ``refine`` and ``2*refine`` and their ratio (about 4 for a
    second-order scheme)."""
    r1 = gerbe_transport_check(O, S, base, triple, points, refine)
    r2 = gerbe_transport_check(O, S, base, triple, points, 2 * refine)
    ratio = r1.residual / r2.residual if r2.residual > 0 else math.inf
    return {"coarse": r1.to_json(), "fine": r2.to_json(), "ratio": ratio}


__all__ = [
    "SampledBase",
    "ConnectionField",
    "ConnectiveStructure",
    "PathSpec",
    "PhiSamples",
    "PhiCache",
    "conn_product",
    "circ_product",
    "convex_combine",
    "chains",
    "chain_weights",
    "build_connective",
    "CocycleReport",
    "cocycle_residual",
    "combine_structures",
    "contractibility_check",
    "parallel_transport",
    "TransportReport",
    "gerbe_transport_check",
    "transport_convergence",
]
