"""Command line front end: analyze, generate, reconstruct, steer.

Exit codes: 0 analysis ran, 1 input error, 2 internal consistency
violation, 3 the operation's property precondition does not hold.
"""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import linalg as la
from .ctrb import CtrbTriple, min_energy_steering, simulate_lti
from .errors import (DefectiveDecompositionError, DimensionError, InputError, NotSplittingError,
                     PreconditionError, SignalError, SingularProjectionError)
from .generate import (ENSURE_CHOICES, InfeasibleError, format_jordan_spec, generate_system,
                       parse_jordan_spec, random_jordan_spec, spec_size)
from .obsv import ObsvTriple, Signal, reconstruct_target
from .report import analyze, render_text, report_to_dict, validate_report
from .sysfile import SystemFile, dump_system, load_system

EXIT_OK, EXIT_INPUT, EXIT_CONSISTENCY, EXIT_PRECONDITION = 0, 1, 2, 3
# batch runs report the most severe outcome
_SEVERITY = {EXIT_OK: 0, EXIT_PRECONDITION: 1, EXIT_INPUT: 2, EXIT_CONSISTENCY: 3}
INPUT_ERRORS = (InputError, DimensionError, SignalError, NotSplittingError,
                DefectiveDecompositionError, InfeasibleError, ValueError)


def _err(msg: str) -> None:
    print(f"functal: {msg}", file=sys.stderr)


def _vector(text: str, name: str) -> np.ndarray:
    try:
        return la.float_vector([x.strip() for x in text.split(",") if x.strip()])
    except (ValueError, ZeroDivisionError):
        raise InputError(f"{name} must be comma-separated numbers or p/q, got {text!r}") from None


# ---------------------------------------------------------------------------
# analyze

def _analyze_one(path: Path, sections, as_json: bool) -> tuple[int, str, str]:
    try:
        rep = analyze(load_system(path), sections)
    except INPUT_ERRORS as e:
        return EXIT_INPUT, "", str(e)
    data = report_to_dict(rep)
    validate_report(data)
    out = json.dumps(data, indent=2, sort_keys=True) if as_json else render_text(rep)
    if rep.violations:
        dump = json.dumps(data, indent=2, sort_keys=True)
        return EXIT_CONSISTENCY, out, f"{path}: consistency violation\n{dump}"
    return EXIT_OK, out, ""


def cmd_analyze(args) -> int:
    sections = [s for s in ("obsv", "ctrb", "duality", "detectability") if getattr(args, s)]
    target = Path(args.path)
    paths = sorted(target.glob("*.json")) if target.is_dir() else [target]
    if not paths:
        _err(f"{target}: no *.json system files")
        return EXIT_INPUT
    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        results = list(pool.map(lambda p: _analyze_one(p, sections, args.json), paths))
    outputs = []
    for code, out, err in results:
        if err:
            _err(err)
        if out:
            outputs.append(out)
    if args.json and outputs:
        docs = [json.loads(o) for o in outputs]
        print(json.dumps(docs[0] if len(paths) == 1 else docs, indent=2, sort_keys=True))
    elif outputs:
        print("\n".join(o.rstrip("\n") for o in outputs))
    return max((c for c, _, _ in results), key=_SEVERITY.__getitem__)


# ---------------------------------------------------------------------------
# generate

def cmd_generate(args) -> int:
    rng = np.random.default_rng(args.seed)
    if args.jordan_spec:
        spec = parse_jordan_spec(args.jordan_spec)
        if args.n is not None and args.n != spec_size(spec):
            raise InputError(f"--n {args.n} does not match the Jordan spec size {spec_size(spec)}")
    else:
        if args.n is None:
            raise InputError("give --n or --jordan-spec")
        spec = random_jordan_spec(rng, args.n)
    sys_ = generate_system(spec, args.q, args.r, args.ensure, seed=args.seed)
    name = args.name or f"generated-n{sys_.n}-seed{args.seed}"
    meta = {"seed": args.seed, "jordan_spec": format_jordan_spec(spec), "ensure": args.ensure}
    out = SystemFile(name, la.RATIONAL, sys_.A, sys_.F, sys_.B, sys_.C, 1.0,
                     extra={"generator": meta})
    sys.stdout.write(dump_system(out))
    return EXIT_OK


# ---------------------------------------------------------------------------
# reconstruct / steer

def _print(payload: dict, as_json: bool) -> None:
    if as_json:
        print(json.dumps(payload, indent=2, sort_keys=True))
        return
    for k, v in payload.items():
        if isinstance(v, list):
            v = "[" + ", ".join(f"{x:.12g}" for x in v) + "]"
        elif isinstance(v, float):
            v = f"{v:.6g}"
        print(f"{k}: {v}")


def _precondition(e: PreconditionError) -> int:
    _err(str(e))
    cert = getattr(e.report, "certificate", None)
    if cert is not None:
        vec = None if cert.vector is None else [la.frac_str(x) for x in cert.vector]
        _err(f"certificate: kind={cert.kind} index={cert.index} "
             f"eigenvalue={la.frac_str(cert.eigenvalue) if cert.eigenvalue is not None else None} "
             f"vector={vec}")
    return EXIT_PRECONDITION


def cmd_reconstruct(args) -> int:
    s = load_system(args.path)
    if s.C is None:
        raise InputError(f"{args.path}: reconstruct needs C")
    t1 = args.t1 if args.t1 is not None else s.horizon
    x0 = _vector(args.x0, "--x0")
    if x0.size != s.n:
        raise DimensionError(f"--x0 has {x0.size} entries, expected {s.n}")
    t = ObsvTriple(s.C, s.A, s.F, s.field)
    # u = 0, so the output is C e^{At} x0
    zero = Signal.zeros(t1, args.samples, 1)
    x = simulate_lti(s.A, np.zeros((s.n, 1)), x0, zero)
    y = Signal(t1, x.values @ la.as_float(t.C).T)
    try:
        z0, _ = reconstruct_target(t, None, None, y, t1)
    except PreconditionError as e:
        return _precondition(e)
    truth = la.as_float(t.F) @ x0
    err = float(np.linalg.norm(z0 - truth))
    scale = float(np.linalg.norm(truth))
    rel = err / scale if scale > 0 else err
    _print({"system": s.name, "t1": float(t1), "samples": args.samples, "z0_estimate": z0.tolist(),
            "F_x0": truth.tolist(), "relative_error": rel}, args.json)
    return EXIT_OK


def cmd_steer(args) -> int:
    s = load_system(args.path)
    if s.B is None:
        raise InputError(f"{args.path}: steer needs B")
    t1 = args.t1 if args.t1 is not None else s.horizon
    x0, z = _vector(args.x0, "--x0"), _vector(args.z_target, "--z-target")
    t = CtrbTriple(s.A, s.B, s.F, s.field)
    try:
        plan = min_energy_steering(t, x0, z, t1, args.samples)
    except PreconditionError as e:
        return _precondition(e)
    except SingularProjectionError as e:
        _err(str(e))
        return EXIT_PRECONDITION
    x = simulate_lti(t.A, t.B, x0, plan.u)
    achieved = la.as_float(t.F) @ x.values[-1]
    _print({"system": s.name, "t1": float(t1), "samples": args.samples,
            "z_target": z.tolist(), "achieved": achieved.tolist(),
            "residual": float(np.linalg.norm(achieved - z)), "energy": plan.energy,
            "projection_condition": plan.condition_number}, args.json)
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="functal", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="run the observability/controllability/duality tests")
    a.add_argument("path", help="system file, or a directory of *.json files")
    for flag in ("obsv", "ctrb", "duality", "detectability"):
        a.add_argument(f"--{flag}", action="store_true")
    a.add_argument("--json", action="store_true", help="emit the JSON report")
    a.add_argument("--jobs", type=int, default=1, help="files analyzed concurrently")
    a.set_defaults(func=cmd_analyze)

    g = sub.add_parser("generate", help="emit a random system file")
    g.add_argument("--n", type=int)
    g.add_argument("--q", type=int, default=1, help="outputs (rows of C) and inputs (columns of B)")
    g.add_argument("--r", type=int, default=1, help="rows of F")
    g.add_argument("--jordan-spec", help="e.g. '0:[3];1:[1,1]'")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--ensure", choices=ENSURE_CHOICES)
    g.add_argument("--name")
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("reconstruct", help="simulate y and recover F x(0)")
    r.add_argument("path")
    r.add_argument("--x0", required=True, help="comma-separated initial state")
    r.add_argument("--t1", type=float)
    r.add_argument("--samples", type=int, default=2048)
    r.add_argument("--json", action="store_true")
    r.set_defaults(func=cmd_reconstruct)

    s = sub.add_parser("steer", help="plan a minimum-energy input and simulate it")
    s.add_argument("path")
    s.add_argument("--x0", required=True)
    s.add_argument("--z-target", required=True)
    s.add_argument("--t1", type=float)
    s.add_argument("--samples", type=int, default=1024)
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_steer)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except INPUT_ERRORS as e:
        _err(str(e))
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
