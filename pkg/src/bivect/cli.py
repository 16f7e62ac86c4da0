"""Command-line front end.

    bivect validate|obstruction|orient|gerbe|connect FILE [--tolerance T] [--refine K] [--out PATH]

Exit codes: 0 success, 1 mathematical failure (invalid bundle, unorientable,
residual too large), 2 input error.  Reports are JSON with sorted keys.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .charted import (
    InvalidBundle,
    ObstructionWitness,
    OrientedChartedBundle,
    det_gerbe,
    orient_lift,
    sign_cocycle,
    solve_orientation,
    validate_bundle,
    validate_oriented,
)
from .connective import PhiCache, build_connective, cocycle_residual, transport_convergence
from .scalars import DomainError, ScalarMode, scalar_to_json
from .serialize import InputError, Job, bundle_to_json, dumps, load_job, structure_to_json

OK, FAILED, BAD_INPUT = 0, 1, 2


def _need_bundle(job: Job):
    if job.bundle is None:
        raise InputError("this command needs dims and coherency maps")
    return job.bundle


def _cochain_json(c) -> list:
    return [{"quadruple": list(q), "sign": s} for q, s in c.values.items()]


def _lift_json(lift) -> list:
    return [{"triple": list(t), "sign": s} for t, s in sorted(lift.items())]


def cmd_validate(job: Job, args) -> tuple[int, dict]:
    E = _need_bundle(job)
    report = validate_bundle(E)
    out = {"command": "validate", "report": report.to_json()}
    if job.lift is not None and report.valid:
        oriented = validate_oriented(OrientedChartedBundle(E, job.lift))
        out["report"] = oriented.to_json()
        out["oriented"] = True
        report = oriented
    out["valid"] = report.valid
    return (OK if report.valid else FAILED), out


def cmd_obstruction(job: Job, args) -> tuple[int, dict]:
    out: dict = {"command": "obstruction"}
    if job.sign_cocycle is not None:
        cocycle = job.sign_cocycle
        out["cocycle_source"] = "supplied"
    else:
        E = _need_bundle(job)
        report = validate_bundle(E)
        if not report.valid:
            out["report"] = report.to_json()
            return FAILED, out
        cocycle = sign_cocycle(E)
        out["cocycle_source"] = "dims"
    out["cocycle"] = _cochain_json(cocycle)
    sol = solve_orientation(job.cover, cocycle)
    if isinstance(sol, ObstructionWitness):
        out["class_trivial"] = False
        out["witness"] = sol.to_json()
        out["witness_verified"] = sol.verify(job.cover, cocycle)
        return FAILED, out
    out["class_trivial"] = True
    out["lift"] = _lift_json(sol)
    return OK, out


def cmd_orient(job: Job, args) -> tuple[int, dict]:
    E = _need_bundle(job)
    out: dict = {"command": "orient"}
    try:
        res = orient_lift(E)
    except InvalidBundle as exc:
        out["report"] = exc.report.to_json()
        return FAILED, out
    if isinstance(res, ObstructionWitness):
        out["orientable"] = False
        out["witness"] = res.to_json()
        return FAILED, out
    out["orientable"] = True
    out["lift"] = _lift_json(res.lift)
    out["revalidated"] = validate_oriented(res).valid
    out["bundle"] = bundle_to_json(E, lift=res.lift, base=job.base, seeds=job.seeds, paths=job.paths)
    return OK, out


def _oriented(job: Job, out: dict):
    E = _need_bundle(job)
    if job.lift is not None:
        O = OrientedChartedBundle(E, job.lift)
        report = validate_oriented(O)
        out["lift_source"] = "supplied"
        if not report.valid:
            out["report"] = report.to_json()
            return None
        return O
    out["lift_source"] = "solved"
    try:
        res = orient_lift(E)
    except InvalidBundle as exc:
        out["report"] = exc.report.to_json()
        return None
    if isinstance(res, ObstructionWitness):
        out["orientable"] = False
        out["witness"] = res.to_json()
        return None
    return res


def cmd_gerbe(job: Job, args) -> tuple[int, dict]:
    out: dict = {"command": "gerbe"}
    O = _oriented(job, out)
    if O is None:
        return FAILED, out
    try:
        g = det_gerbe(O)
    except DomainError as exc:
        out["error"] = str(exc)
        return FAILED, out
    report = g.residuals()
    out["lift"] = _lift_json(O.lift)
    out["gerbe"] = [
        {"triple": list(t), "point": x, "value": scalar_to_json(v)}
        for t in sorted(g.values)
        for x, v in sorted(g.values[t].items())
    ]
    out["cocycle"] = {"valid": report.valid, "max_residual": report.max_residual, "checked": report.checked}
    return (OK if report.valid else FAILED), out


def cmd_connect(job: Job, args) -> tuple[int, dict]:
    E = _need_bundle(job)
    if job.base is None or job.seeds is None:
        raise InputError("connect needs a base and seeds")
    missing = [p for p in E.cover.pairs if p not in job.seeds]
    if missing:
        raise InputError(f"no seed for pair {list(missing[0])}")
    out: dict = {"command": "connect"}
    report = validate_bundle(E)
    if not report.valid:
        out["report"] = report.to_json()
        return FAILED, out
    tol = args.tolerance if args.tolerance is not None else (E.mode.tolerance or 1e-9)
    phis = PhiCache(E)
    try:
        S = build_connective(E, job.base, job.seeds, phis=phis)
    except DomainError as exc:
        out["error"] = str(exc)
        return FAILED, out
    coc = cocycle_residual(S, E, job.base, phis)
    out["tolerance"] = tol
    out["cocycle"] = coc.to_json()
    out["structure"] = structure_to_json(S)
    status = OK if coc.max_residual <= tol else FAILED
    if job.paths:
        O = _oriented(job, out)
        if O is None:
            return FAILED, out
        reports = []
        for p in job.paths:
            K = args.refine if args.refine is not None else p["refine"]
            conv = transport_convergence(O, S, job.base, p["triple"], p["points"], K)
            entry = {"triple": list(p["triple"]), "points": list(p["points"]), **conv}
            if p["tolerance"] is not None:
                entry["tolerance"] = p["tolerance"]
                entry["within_tolerance"] = conv["coarse"]["square_residual"] <= p["tolerance"] and conv["coarse"]["dger_residual"] <= p["tolerance"]
                if not entry["within_tolerance"]:
                    status = FAILED
            reports.append(entry)
        out["transport"] = reports
    out["valid"] = status == OK
    return status, out


COMMANDS = {
    "validate": cmd_validate,
    "obstruction": cmd_obstruction,
    "orient": cmd_orient,
    "gerbe": cmd_gerbe,
    "connect": cmd_connect,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bivect", description="Charted 2-vector bundle computations.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("file")
    p.add_argument("--tolerance", type=float, default=None, help="override the approximate tolerance")
    p.add_argument("--refine", type=int, default=None, help="transport substeps per grid step")
    p.add_argument("--out", default=None, help="write the JSON report here instead of stdout")
    return p


def run(argv=None) -> tuple[int, dict, str | None]:
    """Parse ``argv`` and run the command; returns (exit code, report, --out path)."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return (BAD_INPUT if exc.code else OK), {"error": "bad command line"}, None
    if args.tolerance is not None and not args.tolerance > 0:
        return BAD_INPUT, {"command": args.command, "error": "--tolerance must be > 0"}, args.out
    if args.refine is not None and args.refine < 1:
        return BAD_INPUT, {"command": args.command, "error": "--refine must be >= 1"}, args.out
    try:
        job = load_job(args.file)
        if args.tolerance is not None and job.bundle is not None and not job.mode.exact:
            job.bundle = dataclasses.replace(job.bundle, mode=ScalarMode.approx(args.tolerance))
        code, out = COMMANDS[args.command](job, args)
    except InputError as exc:
        return BAD_INPUT, {"command": args.command, "error": str(exc)}, args.out
    return code, out, args.out


def main(argv=None) -> int:
    code, out, out_path = run(argv)
    text = dumps(out)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if "error" in out:
        print(f"bivect: {out['error']}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
