"""JSON job files: loading with schema and cross-reference checks, and dumping."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Any, Mapping

import jsonschema
import numpy as np

from .biperm import VMor
from .charted import ChartedBundle, OrderedCover, SignCochain, Simplex
from .connective import ConnectionField, ConnectiveStructure, SampledBase
from .matrix_cat import DimMatrix, MorMatrix
from .scalars import EXACT, DomainError, ScalarMode, as_scalar, scalar_from_json, scalar_to_json

VERSION = "bivect/1"


class InputError(Exception):
    """Malformed, schema-invalid or inconsistent job file."""


def load_schema() -> dict:
    return json.loads(resources.files("bivect").joinpath("bundle.schema.json").read_text())


@dataclass
class Job:
    mode: ScalarMode
    cover: OrderedCover
    rank: int | None = None
    bundle: ChartedBundle | None = None
    lift: dict[Simplex, int] | None = None
    sign_cocycle: SignCochain | None = None
    base: SampledBase | None = None
    seeds: dict[tuple[int, int], ConnectionField] | None = None
    paths: list[dict] = field(default_factory=list)


# -- matrices -----------------------------------------------------------------


def _matrix_from_json(rows, exact: bool) -> VMor:
    if exact:
        data = [[scalar_from_json(v) for v in row] for row in rows]
        for row in data:
            for v in row:
                if isinstance(v, complex):
                    raise InputError("approximate scalar in an exact file")
        return VMor(data if data else np.empty((0, 0), dtype=object), exact=True)
    data = np.array([[complex(as_scalar(scalar_from_json(v), exact=False)) for v in row] for row in rows], dtype=complex)
    return VMor(data.reshape(len(rows), len(rows)), exact=False)


def _matrix_to_json(v: VMor) -> list:
    return [[scalar_to_json(x if v.exact else complex(x)) for x in row] for row in v.matrix]


def _grid_from_json(dims: DimMatrix, grid, exact: bool, raw: bool = False) -> MorMatrix:
    n = dims.n
    if len(grid) != n or any(len(r) != n for r in grid):
        raise InputError("entry grid does not match the rank")
    entries = [[_matrix_from_json(grid[i][j], exact) for j in range(n)] for i in range(n)]
    for i in range(n):
        for j in range(n):
            if entries[i][j].dim != dims.rows[i][j]:
                raise InputError(f"entry ({i},{j}) has size {entries[i][j].dim}, expected {dims.rows[i][j]}")
    return MorMatrix._raw(dims, entries) if raw else MorMatrix(dims, entries)


def mor_to_json(f: MorMatrix) -> list:
    return [[_matrix_to_json(v) for v in row] for row in f.entries]


def _form_block_from_json(obj, P: int, m: int, d: int) -> np.ndarray:
    try:
        re = np.asarray(obj["re"], dtype=float).reshape(P, m, d, d)
        im = np.asarray(obj["im"], dtype=float).reshape(P, m, d, d)
    except ValueError as exc:
        raise InputError(f"connection block has the wrong shape (expected {(P, m, d, d)})") from exc
    return re + 1j * im


def field_to_json(F: ConnectionField) -> dict:
    return {
        "pair": list(F.pair),
        "points": [int(x) for x in F.points],
        "entries": [[{"re": b.real.tolist(), "im": b.imag.tolist()} for b in row] for row in F.blocks],
    }


# -- loading ----------------------------------------------------------------------


def _tuple(x) -> tuple[int, ...]:
    return tuple(int(v) for v in x)


def parse_job(obj: Any) -> Job:
    try:
        jsonschema.validate(obj, load_schema())
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path)
        raise InputError(f"schema violation at '{path}': {exc.message}") from exc
    try:
        return _build_job(obj)
    except DomainError as exc:
        raise InputError(str(exc)) from exc


def _build_job(obj: dict) -> Job:
    mode = EXACT
    if obj.get("mode", "exact") == "approx":
        mode = ScalarMode.approx(obj.get("tolerance", 1e-9))
    exact = mode.exact
    cov = obj["cover"]
    points = {}
    for s in cov["simplices"]:
        key = _tuple(s["simplex"])
        if key in points:
            raise InputError(f"simplex {list(key)} listed twice")
        points[key] = _tuple(s["points"])
    cover = OrderedCover(_tuple(cov["indices"]), points)
    job = Job(mode, cover)

    base = None
    if "base" in obj:
        b = obj["base"]
        shape = _tuple(b["shape"])
        if len(b["origin"]) != len(shape):
            raise InputError("base origin and shape disagree on dimension")
        npts = int(np.prod(shape))
        members, shrunk, psi = {}, {}, {}
        for ch in b["charts"]:
            a = int(ch["index"])
            if a not in cover.indices:
                raise InputError(f"base chart {a} is not a cover index")
            if len(ch["psi"]) != npts:
                raise InputError(f"psi table for chart {a} has {len(ch['psi'])} values, expected {npts}")
            for key in ("members", "shrunk"):
                if any(not 0 <= x < npts for x in ch[key]):
                    raise InputError(f"chart {a} lists a point outside the grid")
            members[a] = np.array(sorted(set(ch["members"])), dtype=int)
            shrunk[a] = np.array(sorted(set(ch["shrunk"])), dtype=int)
            psi[a] = np.asarray(ch["psi"], dtype=float)
        if set(members) != set(cover.indices):
            raise InputError("base must describe every cover index")
        base = SampledBase(float(b["h"]), tuple(float(x) for x in b["origin"]), shape, cover.indices, members, shrunk, psi)
        problems = base.validate()
        if problems:
            raise InputError(f"inconsistent base: {problems[0]}")
        job.base = base

    if "sign_cocycle" in obj:
        vals = {}
        for e in obj["sign_cocycle"]:
            q = _tuple(e["quadruple"])
            if q not in cover.points:
                raise InputError(f"sign cocycle on {list(q)}, which is not in the nerve")
            vals[q] = int(e["sign"])
        missing = set(cover.quadruples) - set(vals)
        if missing:
            raise InputError(f"sign cocycle missing on {list(min(missing))}")
        job.sign_cocycle = SignCochain(3, vals)

    if "dims" in obj:
        if "rank" not in obj:
            raise InputError("a file with dims needs a rank")
        rank = int(obj["rank"])
        job.rank = rank
        dims = {}
        for e in obj["dims"]:
            p = _tuple(e["pair"])
            if p not in cover.points:
                raise InputError(f"dims given for {list(p)}, which is not in the nerve")
            mat = e["matrix"]
            if len(mat) != rank or any(len(r) != rank for r in mat):
                raise InputError(f"dims for {list(p)} is not {rank}x{rank}")
            if p in dims:
                raise InputError(f"dims for {list(p)} listed twice")
            dims[p] = DimMatrix(mat)
        phis: dict[Simplex, dict[int, MorMatrix]] = {t: {} for t in cover.triples}
        for e in obj.get("phis", []):
            t = _tuple(e["triple"])
            x = int(e["point"])
            if t not in cover.points or len(t) != 3:
                raise InputError(f"coherency map for {list(t)}, which is not a triple of the nerve")
            if x not in cover.points[t]:
                raise InputError(f"coherency map for {list(t)} at point {x}, which is not a sample point")
            ac = (t[0], t[2])
            if ac not in dims:
                raise InputError(f"no dims for {list(ac)}")
            if x in phis[t]:
                raise InputError(f"coherency map for {list(t)} at point {x} listed twice")
            phis[t][x] = _grid_from_json(dims[ac], e["entries"], exact)
        jets = None
        if "jets" in obj:
            jets = {}
            for e in obj["jets"]:
                t = _tuple(e["triple"])
                x = int(e["point"])
                if t not in phis or x not in cover.points[t]:
                    raise InputError(f"jet for {list(t)} at {x} does not match a sample")
                ac = (t[0], t[2])
                jets.setdefault(t, {})[x] = tuple(_grid_from_json(dims[ac], g, exact, raw=True) for g in e["directions"])
        job.bundle = ChartedBundle(cover, rank, dims, phis, mode, jets)

    if "lift" in obj:
        lift = {}
        for e in obj["lift"]:
            t = _tuple(e["triple"])
            if t not in cover.points or len(t) != 3:
                raise InputError(f"lift on {list(t)}, which is not a triple of the nerve")
            lift[t] = int(e["sign"])
        job.lift = lift

    if "seeds" in obj:
        if base is None or job.bundle is None:
            raise InputError("seeds need a base and a bundle")
        seeds = {}
        for e in obj["seeds"]:
            p = _tuple(e["pair"])
            if p not in job.bundle.dims:
                raise InputError(f"seed for {list(p)}, which has no dims")
            pts = np.array(e["points"], dtype=int)
            d = job.bundle.dims[p]
            grid = e["entries"]
            if len(grid) != d.n or any(len(r) != d.n for r in grid):
                raise InputError(f"seed for {list(p)} does not match the rank")
            blocks = tuple(
                tuple(_form_block_from_json(grid[i][j], len(pts), base.m, d.rows[i][j]) for j in range(d.n))
                for i in range(d.n)
            )
            if list(pts) != sorted(set(pts.tolist())):
                raise InputError(f"seed points for {list(p)} must be strictly increasing")
            seeds[p] = ConnectionField(p, d, pts, blocks)
        job.seeds = seeds

    for e in obj.get("paths", []):
        t = _tuple(e["triple"])
        if t not in cover.points or len(t) != 3:
            raise InputError(f"path for {list(t)}, which is not a triple of the nerve")
        job.paths.append(
            {"triple": t, "points": _tuple(e["points"]), "refine": int(e.get("refine", 1)), "tolerance": e.get("tolerance")}
        )
    return job


def load_job(path: str) -> Job:
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON in {path}: {exc.msg} (line {exc.lineno})") from exc
    return parse_job(obj)


# -- dumping ------------------------------------------------------------------------


def cover_to_json(cover: OrderedCover) -> dict:
    return {
        "indices": list(cover.indices),
        "simplices": [{"simplex": list(s), "points": list(p)} for s, p in cover.points.items()],
    }


def base_to_json(base: SampledBase) -> dict:
    return {
        "h": base.h,
        "origin": list(base.origin),
        "shape": list(base.shape),
        "charts": [
            {
                "index": a,
                "members": [int(x) for x in base.members[a]],
                "shrunk": [int(x) for x in base.shrunk[a]],
                "psi": [float(v) for v in base.psi[a]],
            }
            for a in base.indices
        ],
    }


def bundle_to_json(
    E: ChartedBundle | None = None,
    cover: OrderedCover | None = None,
    lift: Mapping[Simplex, int] | None = None,
    sign_cocycle: SignCochain | None = None,
    base: SampledBase | None = None,
    seeds: Mapping[tuple[int, int], ConnectionField] | None = None,
    paths: list[dict] | None = None,
) -> dict:
    cover = E.cover if E is not None else cover
    out: dict = {"version": VERSION, "cover": cover_to_json(cover)}
    if E is not None:
        out["mode"] = "exact" if E.mode.exact else "approx"
        if not E.mode.exact:
            out["tolerance"] = E.mode.tolerance
        out["rank"] = E.rank
        out["dims"] = [{"pair": list(p), "matrix": E.dims[p].tolist()} for p in sorted(E.dims)]
        out["phis"] = [
            {"triple": list(t), "point": x, "entries": mor_to_json(E.phis[t][x])}
            for t in sorted(E.phis)
            for x in sorted(E.phis[t])
        ]
        if E.jets is not None:
            out["jets"] = [
                {"triple": list(t), "point": x, "directions": [mor_to_json(j) for j in E.jets[t][x]]}
                for t in sorted(E.jets)
                for x in sorted(E.jets[t])
            ]
    if lift is not None:
        out["lift"] = [{"triple": list(t), "sign": int(s)} for t, s in sorted(lift.items())]
    if sign_cocycle is not None:
        out["sign_cocycle"] = [{"quadruple": list(q), "sign": s} for q, s in sign_cocycle.values.items()]
    if base is not None:
        out["base"] = base_to_json(base)
    if seeds is not None:
        out["seeds"] = [field_to_json(seeds[p]) for p in sorted(seeds)]
    if paths:
        out["paths"] = [
            {k: (list(v) if isinstance(v, tuple) else v) for k, v in p.items() if v is not None} for p in paths
        ]
    return out


def structure_to_json(S: ConnectiveStructure) -> list:
    return [field_to_json(S[p]) for p in sorted(S.fields)]


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1) + "\n"


__all__ = [
    "VERSION",
    "InputError",
    "Job",
    "load_schema",
    "parse_job",
    "load_job",
    "bundle_to_json",
    "cover_to_json",
    "base_to_json",
    "field_to_json",
    "structure_to_json",
    "mor_to_json",
    "dumps",
]
