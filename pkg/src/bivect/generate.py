"""Random and canonical test data: dimension matrices, scalars, coherent bundles.

Coherent bundles are built from a chain of generators ``T_i = E^{i,i+1}``:
``E^{ab}`` is the left-normed product ``T_a ... T_{b-1}`` and ``phi^{abc}``
is the canonical map ``kappa`` identifying ``E^{ab}.E^{bc}`` with it, built
from associators.  Coherence of the associators makes the cocycle square
commute; an optional gauge ``g^{ab}`` twists the maps without breaking it.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from typing import Callable, Mapping, Sequence

import numpy as np

from .biperm import VMor
from .charted import ChartedBundle, OrderedCover, Simplex
from .matrix_cat import DimMatrix, MorMatrix, associator_inverse, mor_compose, mor_product
from .scalars import EXACT, ExactComplex, ScalarMode


def random_weakly_invertible(rng: np.random.Generator, n: int, max_entry: int = 2, tries: int = 10_000) -> DimMatrix:
    """Rejection-sample a non-negative integer matrix with determinant +-1."""
    if n == 1:
        return DimMatrix([[1]])
    for _ in range(tries):
        m = DimMatrix(rng.integers(0, max_entry + 1, size=(n, n)).tolist())
        if m.weakly_invertible():
            return m
    raise RuntimeError("no weakly invertible matrix found")


def random_dims(rng: np.random.Generator, n: int, max_entry: int = 3) -> DimMatrix:
    return DimMatrix(rng.integers(0, max_entry + 1, size=(n, n)).tolist())


def random_exact_scalar(rng: np.random.Generator, nonzero: bool = True, bound: int = 5) -> ExactComplex:
    while True:
        re = Fraction(int(rng.integers(-bound, bound + 1)), int(rng.integers(1, 4)))
        im = Fraction(int(rng.integers(-bound, bound + 1)), int(rng.integers(1, 4)))
        z = ExactComplex(re, im)
        if not nonzero or not z.is_zero():
            return z


def random_exact_gl(rng: np.random.Generator, d: int, bound: int = 2) -> VMor:
    """A random exact invertible matrix (unit-triangular factors, so det = +-1-ish scale)."""
    while True:
        m = np.empty((d, d), dtype=object)
        for i in range(d):
            for j in range(d):
                m[i, j] = ExactComplex(int(rng.integers(-bound, bound + 1)), int(rng.integers(-1, 2)))
        v = VMor(m, exact=True)
        if d == 0 or not v.det().is_zero():
            return v


def random_approx_gl(rng: np.random.Generator, d: int, scale: float = 0.3) -> VMor:
    m = np.eye(d) + scale * (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)))
    return VMor(m, exact=False)


# ---------------------------------------------------------------------------
# canonical coherence maps


def left_normed(gens: Sequence[DimMatrix]) -> DimMatrix:
    out = gens[0]
    for g in gens[1:]:
        out = out @ g
    return out


def kappa(xs: Sequence[DimMatrix], ys: Sequence[DimMatrix], exact: bool = True) -> MorMatrix:
    """Canonical map ``LN(xs) . LN(ys) -> LN(xs + ys)`` in M_n(V)."""
    return _kappa(tuple(xs), tuple(ys), exact)


@lru_cache(maxsize=4096)
def _kappa(xs: tuple, ys: tuple, exact: bool) -> MorMatrix:
    lx = left_normed(xs)
    if len(ys) == 1:
        return MorMatrix.identity(lx @ ys[0], "V", exact)
    head, y = ys[:-1], ys[-1]
    inner = _kappa(xs, head, exact)
    step = mor_product(inner, MorMatrix.identity(y, "V", exact))
    return mor_compose(step, associator_inverse(lx, left_normed(head), y, "V", exact))


def chain_dims(gens: Sequence[DimMatrix]) -> dict[Simplex, DimMatrix]:
    k = len(gens) + 1
    return {(a, b): left_normed(gens[a:b]) for a, b in combinations(range(k), 2)}


def coherent_bundle(
    gens: Sequence[DimMatrix],
    cover: OrderedCover | None = None,
    gauge: Mapping[Simplex, Mapping[int, MorMatrix]] | None = None,
    mode: ScalarMode = EXACT,
) -> ChartedBundle:
    """Bundle on charts ``0..len(gens)`` with ``phi^{abc} = g^{ac} kappa (g^{ab}.g^{bc})^{-1}``."""
    k = len(gens) + 1
    if cover is None:
        cover = OrderedCover.full_simplex(k - 1)
    exact = mode.exact
    dims = chain_dims(gens)
    dims = {p: dims[p] for p in cover.pairs}
    phis: dict[Simplex, dict[int, MorMatrix]] = {}
    for a, b, c in cover.triples:
        base = kappa(gens[a:b], gens[b:c], exact)
        samples = {}
        for x in cover.points[(a, b, c)]:
            phi = base
            if gauge is not None:
                g_ab, g_bc, g_ac = gauge[(a, b)][x], gauge[(b, c)][x], gauge[(a, c)][x]
                phi = mor_compose(g_ac, mor_compose(phi, mor_product(g_ab, g_bc).inverse()))
            samples[x] = phi
        phis[(a, b, c)] = samples
    return ChartedBundle(cover, gens[0].n, dims, phis, mode)


def random_gauge(
    rng: np.random.Generator,
    cover: OrderedCover,
    dims: Mapping[Simplex, DimMatrix],
    exact: bool = True,
) -> dict[Simplex, dict[int, MorMatrix]]:
    out = {}
    for p in cover.pairs:
        d = dims[p]
        make: Callable = (lambda s: random_exact_gl(rng, s)) if exact else (lambda s: random_approx_gl(rng, s))
        out[p] = {x: MorMatrix(d, [[make(s) for s in row] for row in d.rows]) for x in cover.points[p]}
    return out


def random_chain_generators(rng: np.random.Generator, n: int, count: int, max_entry: int = 1) -> list[DimMatrix]:
    return [random_weakly_invertible(rng, n, max_entry) for _ in range(count)]


NONMOI_TRIPLE = (
    DimMatrix([[1, 1], [0, 1]]),
    DimMatrix([[0, 1], [1, 1]]),
    DimMatrix([[1, 0], [1, 1]]),
)


def nonmoi_bundle(points=(0,)) -> ChartedBundle:
    """Four charts whose consecutive transitions are the non-orientable-looking
    triple with associator determinant ``(-1, -1)``."""
    return coherent_bundle(list(NONMOI_TRIPLE), OrderedCover.full_simplex(3, points))


# ---------------------------------------------------------------------------
# sampled-base fixtures


def _mor_add(f: MorMatrix, g: MorMatrix) -> MorMatrix:
    return MorMatrix._raw(
        f.dims, [[VMor(x.matrix + y.matrix, exact=False) for x, y in zip(rf, rg)] for rf, rg in zip(f.entries, g.entries)]
    )


def _affine_mor(dims: DimMatrix, c0, cs, x: np.ndarray) -> MorMatrix:
    rows = []
    for i, row in enumerate(dims.rows):
        rows.append([VMor(c0[i][j] + sum(x[mu] * cs[mu][i][j] for mu in range(len(cs))), exact=False) for j in range(len(row))])
    return MorMatrix._raw(dims, rows)


def linear_gauge_bundle(
    rng: np.random.Generator,
    gens: Sequence[DimMatrix],
    base,
    strength: float = 0.25,
    slope: float = 0.3,
    tolerance: float = 1e-9,
) -> ChartedBundle:
    """Approximate bundle over a sampled base with ``g^{ab}(x) = C0 + sum_mu x_mu C_mu``.

    ``phi^{abc} = g^{ac} kappa (g^{ab}.g^{bc})^{-1}``; its derivative is
    recorded exactly in ``jets`` by the product rule.  ``slope=0`` gives
    spatially constant coherency maps.
    """
    cover = base.cover()
    m = base.m
    dims_all = chain_dims(gens)
    dims = {p: dims_all[p] for p in cover.pairs}
    coeffs = {}
    for p in cover.pairs:
        d = dims[p]
        noise = lambda s: rng.standard_normal((s, s)) + 1j * rng.standard_normal((s, s))
        c0 = [[np.eye(s) + strength * noise(s) / max(s, 1) for s in row] for row in d.rows]
        cs = [[[slope * noise(s) / max(s, 1) for s in row] for row in d.rows] for _ in range(m)]
        coeffs[p] = (c0, cs)
    phis, jets = {}, {}
    for t in cover.triples:
        a, b, c = t
        kap = kappa(gens[a:b], gens[b:c], exact=False)
        phis[t], jets[t] = {}, {}
        for x in cover.points[t]:
            xc = base.coords([x])[0]
            g = {p: _affine_mor(dims[p], coeffs[p][0], coeffs[p][1], xc) for p in ((a, b), (b, c), (a, c))}
            dg = {p: [_affine_mor(dims[p], coeffs[p][1][mu], [], xc) for mu in range(m)] for p in ((a, b), (b, c), (a, c))}
            G = mor_product(g[(a, b)], g[(b, c)])
            Ginv = G.inverse()
            phi = mor_compose(g[(a, c)], mor_compose(kap, Ginv))
            dphi = []
            for mu in range(m):
                dG = _mor_add(mor_product(dg[(a, b)][mu], g[(b, c)]), mor_product(g[(a, b)], dg[(b, c)][mu]))
                first = mor_compose(dg[(a, c)][mu], mor_compose(kap, Ginv))
                second = mor_compose(phi, mor_compose(dG, Ginv))
                dphi.append(_mor_add(first, second.map_entries(lambda v: VMor(-v.matrix, exact=False))))
            phis[t][x] = phi
            jets[t][x] = tuple(dphi)
    return ChartedBundle(cover, gens[0].n, dims, phis, ScalarMode.approx(tolerance), jets)


def random_seeds(rng: np.random.Generator, E: ChartedBundle, base, scale: float = 0.5, slope: float = 0.5):
    """Seed connections ``A_mu(x) = S_mu + sum_nu x_nu S_{mu nu}`` on every ``U_{ab}``."""
    from .connective import ConnectionField

    out = {}
    m = base.m
    for p in E.cover.pairs:
        pts = base.intersect(p)
        xs = base.coords(pts)
        d = E.dims[p]
        blocks = []
        for row in d.rows:
            brow = []
            for s in row:
                c0 = scale * (rng.standard_normal((m, s, s)) + 1j * rng.standard_normal((m, s, s)))
                c1 = slope * (rng.standard_normal((m, m, s, s)) + 1j * rng.standard_normal((m, m, s, s)))
                brow.append(c0[None] + np.einsum("pn,mnab->pmab", xs, c1))
            blocks.append(tuple(brow))
        out[p] = ConnectionField(p, d, pts, tuple(blocks))
    return out


def interval_boxes(m: int = 1):
    """Four overlapping charts on [0, 1]^m (all four meet in the middle)."""
    spans = {0: (-0.3, 0.6), 1: (0.1, 0.8), 2: (0.25, 1.3), 3: (0.4, 1.3)}
    return {a: [span] * m for a, span in spans.items()}


def four_chart_base(m: int = 1, h: float = 0.05, margin: float = 0.1):
    from .connective import SampledBase

    return SampledBase.from_boxes(interval_boxes(m), h, [(0.0, 1.0)] * m, margin)


__all__ = [
    "random_weakly_invertible",
    "random_dims",
    "random_exact_scalar",
    "random_exact_gl",
    "random_approx_gl",
    "left_normed",
    "kappa",
    "chain_dims",
    "coherent_bundle",
    "random_gauge",
    "random_chain_generators",
    "NONMOI_TRIPLE",
    "nonmoi_bundle",
    "linear_gauge_bundle",
    "random_seeds",
    "interval_boxes",
    "four_chart_base",
]
