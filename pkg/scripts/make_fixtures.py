"""Regenerate the JSON fixtures in docs/fixtures (deterministic seeds)."""

from __future__ import annotations

import shutil
from pathlib import Path

import numpy as np

from bivect.biperm import VMor
from bivect.charted import (
    ChartedBundle,
    OrderedCover,
    SignCochain,
    cech_coboundary,
    coboundary_gerbe,
    gerbe_bundle,
)
from bivect.connective import SampledBase
from bivect.generate import (
    coherent_bundle,
    four_chart_base,
    linear_gauge_bundle,
    nonmoi_bundle,
    random_exact_scalar,
    random_seeds,
)
from bivect.matrix_cat import DimMatrix, MorMatrix
from bivect.serialize import bundle_to_json, dumps, load_schema

ROOT = Path(__file__).resolve().parents[1]
OUT = ROOT / "docs" / "fixtures"


def write(name: str, obj: dict) -> None:
    (OUT / name).write_text(dumps(obj))
    print(f"wrote {name}")


def fundamental_cocycle(cover: OrderedCover) -> SignCochain:
    vals = {q: 1 for q in cover.quadruples}
    vals[cover.quadruples[0]] = -1
    return SignCochain(3, vals)


def broken(E: ChartedBundle, triple, point) -> ChartedBundle:
    phis = {t: dict(p) for t, p in E.phis.items()}
    f = phis[triple][point]
    phis[triple][point] = MorMatrix(f.dims, [[VMor(2 * v.matrix, exact=v.exact) for v in row] for row in f.entries])
    return ChartedBundle(E.cover, E.rank, E.dims, phis, E.mode)


def transport_path(base, triple):
    pts = base.intersect(triple, shrunk=True)
    return {"triple": triple, "points": (int(pts[0]), int(pts[-1])), "refine": 1}


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    shutil.copy(ROOT / "src" / "bivect" / "bundle.schema.json", ROOT / "docs" / "bundle.schema.json")
    load_schema()

    E = nonmoi_bundle()
    write("nonmoi.json", bundle_to_json(E))
    write("broken_phi.json", bundle_to_json(broken(nonmoi_bundle(points=(0, 1)), (0, 1, 3), 1)))

    I2 = DimMatrix.identity(2)
    write("identity.json", bundle_to_json(coherent_bundle([I2] * 3, OrderedCover.full_simplex(3, points=(0, 1)))))

    nerve = OrderedCover.boundary_of_simplex(4)
    write("obstruction_nerve.json", bundle_to_json(cover=nerve, sign_cocycle=fundamental_cocycle(nerve)))

    rng = np.random.default_rng(2024)
    c = SignCochain(2, {t: int(rng.choice([-1, 1])) for t in nerve.triples})
    write("coboundary_nerve.json", bundle_to_json(cover=nerve, sign_cocycle=cech_coboundary(c, nerve)))

    cover = OrderedCover.full_simplex(3, points=(0, 1))
    b = {p: {x: random_exact_scalar(rng) for x in cover.points[p]} for p in cover.pairs}
    O = gerbe_bundle(coboundary_gerbe(cover, b), rank=2)
    write("gerbe_include.json", bundle_to_json(O.base, lift=O.lift))

    gens = [DimMatrix([[1, 1], [0, 1]]), DimMatrix([[0, 1], [1, 1]]), DimMatrix([[1, 0], [1, 1]])]
    base = four_chart_base(m=1, h=0.05)
    E = linear_gauge_bundle(np.random.default_rng(7), gens, base)
    seeds = random_seeds(np.random.default_rng(8), E, base)
    write(
        "connective_base.json",
        bundle_to_json(E, base=base, seeds=seeds, paths=[transport_path(base, (0, 1, 2))]),
    )

    two = SampledBase.from_boxes({0: [(-0.3, 0.7)], 1: [(0.3, 1.3)]}, 0.05, [(0.0, 1.0)], 0.1)
    E = linear_gauge_bundle(np.random.default_rng(5), gens[:1], two)
    write("two_chart.json", bundle_to_json(E, base=two, seeds=random_seeds(np.random.default_rng(6), E, two)))

    E = linear_gauge_bundle(np.random.default_rng(9), gens, base, slope=0.0)
    seeds = random_seeds(np.random.default_rng(10), E, base)
    write(
        "transport.json",
        bundle_to_json(E, base=base, seeds=seeds, paths=[transport_path(base, (0, 1, 2)), transport_path(base, (1, 2, 3))]),
    )


if __name__ == "__main__":
    main()
