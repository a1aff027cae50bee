"""Command line: ``leafflow analyze|verify|flow|mesh|brockett``.

Exit codes: 0 success, 1 usage or configuration error, 2 verification
failure, 3 numerical abort.  ``flow`` further reports 4 when it stops at a red
line and 5 when it reaches ``--t-max`` without converging.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .brockett import BrockettError, SymMatrixState, brockett_flow, random_symmetric, sorted_like
from .config import Config, ConfigError, Tolerances, build_checked, load_config
from .expr import EvaluationError, ParseError, parse_expression
from .family import PRESETS, FamilyError, FamilySpec, classify_level_set, critical_values, red_lines, singular_leaves
from .flows import FlowOptions, FlowStatus, integrate_db_flow
from .mesh import MeshWarning, leaf_mesh, red_zone_mesh, write_channels, write_obj
from .verify import run_suites

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VERIFY = 2
EXIT_ABORT = 3
EXIT_RED_ZONE = 4
EXIT_T_MAX = 5

FLOW_EXIT = {
    FlowStatus.CONVERGED: EXIT_OK,
    FlowStatus.RED_ZONE: EXIT_RED_ZONE,
    FlowStatus.T_MAX: EXIT_T_MAX,
    FlowStatus.CASIMIR_DRIFT: EXIT_ABORT,
    FlowStatus.STEP_UNDERFLOW: EXIT_ABORT,
    FlowStatus.MAX_STEPS: EXIT_ABORT,
}


class UsageError(Exception):
    pass


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=False) + "\n")


def _floats(text: str, what: str, n: int | None = None) -> list[float]:
    try:
        vals = [float(t) for t in text.replace(" ", "").split(",") if t != ""]
    except ValueError:
        raise UsageError(f"{what} must be comma separated numbers, got {text!r}") from None
    if n is not None and len(vals) != n:
        raise UsageError(f"{what} needs {n} values, got {len(vals)}")
    if not all(math.isfinite(v) for v in vals):
        raise UsageError(f"{what} must be finite")
    return vals


def _config(args, required: bool = True) -> Config | None:
    if args.config and args.preset:
        raise UsageError("--config and --preset are mutually exclusive")
    if args.config:
        cfg = load_config(args.config)
    elif args.preset:
        try:
            cfg = Config(FamilySpec(preset=args.preset, eta=args.eta))
        except FamilyError as exc:
            raise UsageError(str(exc)) from None
    elif required:
        raise UsageError("a family is required: pass --config PATH or --preset NAME")
    else:
        return None
    return cfg.with_output_dir(args.out)


def _out_dir(cfg: Config | None, args) -> Path:
    out = Path(args.out if args.out else (cfg.output_dir if cfg else "out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _parse_G(src: str):
    try:
        return parse_expression(src)
    except ParseError as exc:
        raise UsageError(f"cannot parse G: {exc}") from None


# ---------------------------------------------------------------------------
# analyze


def critical_value_note(family) -> str:
    note = "critical values are Q(z*) at the heights z* where U(z*) = 0"
    if family.spec.preset == "quadratic":
        note += "; for the quadratic preset z* = +-1/sqrt(3) gives Q(z*) = -+2*sqrt(3)/9 (about -+0.3849)"
    return note


def analyze_report(cfg: Config, family, c: float) -> dict:
    leaf = classify_level_set(family, c)
    zones = red_lines(family, c)
    return {
        "family": cfg.family.to_dict(),
        "z_interval": list(family.z_interval),
        "c": c,
        "singular_leaves": singular_leaves(family),
        "critical_values": critical_values(family),
        "critical_values_note": critical_value_note(family),
        "leaf": leaf.to_dict(),
        "zones": zones.to_dict(),
    }


def cmd_analyze(args) -> int:
    cfg = _config(args)
    family = build_checked(cfg, args.config)
    report = analyze_report(cfg, family, args.c)
    out = _out_dir(cfg, args)
    _write_json(out / "analyze.json", report)
    leaf, zones = report["leaf"], report["zones"]
    topo = leaf["topology"]
    if leaf["genus"] is not None:
        topo += f" (genus {leaf['genus']}, {leaf['punctures']} puncture{'s' if leaf['punctures'] != 1 else ''})"
    print(f"{family.name} c={_fmt(args.c)}: {topo}")
    red = ", ".join(_fmt(z) for z in zones["red_z"]) or "none"
    print(f"red lines: {red}; zones: " + ", ".join(z["signature"] for z in zones["zones"]))
    print(f"wrote {out / 'analyze.json'}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify


def cmd_verify(args) -> int:
    if args.points < 1:
        raise UsageError("--points must be at least 1")
    cfg = _config(args, required=False)
    families = [build_checked(cfg, args.config)] if cfg else [build_checked(Config(FamilySpec(preset=n))) for n in PRESETS]
    results = [run_suites(fam, args.points, args.seed) for fam in families]
    out = _out_dir(cfg, args)
    _write_json(out / "verify.json", {
        "seed": args.seed,
        "points": args.points,
        "passed": all(r.passed for r in results),
        "families": [r.to_dict() for r in results],
    })
    worst = None
    for r in results:
        for s in r.suites:
            mark = "PASS" if s.passed else "FAIL"
            print(f"{mark} {r.family:<28} {s.name:<20} n={s.n:<5} max={s.max_residual:.3e} (< {s.threshold:.0e})")
            if not s.passed:
                ratio = s.max_residual / s.threshold if s.n else math.inf
                if worst is None or ratio > worst[0]:
                    worst = (ratio, r.family, s)
    if worst is not None:
        _, fam, s = worst
        pt = ",".join(_fmt(v) for v in s.worst_point) if s.worst_point else "none (no sample points)"
        print(f"verification failed: worst offender {fam} {s.name} at ({pt})", file=sys.stderr)
        return EXIT_VERIFY
    print("all suites passed")
    return EXIT_OK


# ---------------------------------------------------------------------------
# flow


def cmd_flow(args) -> int:
    cfg = _config(args)
    family = build_checked(cfg, args.config)
    tol: Tolerances = cfg.tolerances
    G = _parse_G(args.G)
    start = np.array(_floats(args.start, "--start", 3))
    c_start = family.casimir(start)
    if args.c is not None and abs(c_start - args.c) > tol.casimir_tol:
        raise UsageError(
            f"start is not on the leaf c={_fmt(args.c)}: C(start) = {_fmt(c_start)}; "
            f"use --c {_fmt(c_start)} or move the start"
        )
    try:
        opts = FlowOptions(method=args.method, dt=args.dt, t_max=args.t_max, rtol=tol.rtol, atol=tol.atol,
                           eps_red=tol.eps_red, casimir_tol=tol.casimir_tol, direction=args.direction)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    traj = integrate_db_flow(family, G, start, opts)

    out = _out_dir(cfg, args)
    with open(out / "flow.csv", "w") as fh:
        fh.write("t,x,y,z,C,G,f\n")
        for row in traj.as_array():
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    _write_json(out / "flow_events.json", {
        "family": cfg.family.to_dict(),
        "G": G.to_string(),
        "start": start.tolist(),
        "c": traj.c,
        "method": opts.method,
        "direction": opts.direction,
        "status": traj.status.value,
        "samples": len(traj),
        "casimir_drift": traj.casimir_drift,
        "events": [{"kind": e.kind, "t": e.t, "value": e.value, "point": list(e.point)} for e in traj.events],
    })
    print(f"{traj.status.value} after {len(traj)} samples, t={_fmt(traj.t[-1])}, "
          f"Casimir drift {traj.casimir_drift:.3e}")
    return FLOW_EXIT[traj.status]


# ---------------------------------------------------------------------------
# mesh


def cmd_mesh(args) -> int:
    cfg = _config(args)
    family = build_checked(cfg, args.config)
    if args.resolution < 16:
        raise UsageError("--resolution must be at least 16")
    out = _out_dir(cfg, args)
    eps_f = cfg.tolerances.eps_f
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", MeshWarning)
        meshes = {
            "leaf": leaf_mesh(family, args.c, args.resolution, args.box, eps_f=eps_f),
            "red_zone": red_zone_mesh(family, args.resolution, args.box, eps_f=eps_f),
        }
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    for name, mesh in meshes.items():
        write_obj(mesh, out / f"{name}.obj")
        write_channels(mesh, out / f"{name}.csv")
        print(f"{name}: {len(mesh.vertices)} vertices, {len(mesh.faces)} faces -> {out / (name + '.obj')}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# brockett


def _read_matrix(path: str) -> np.ndarray:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read matrix file {path}: {exc.strerror}") from None
    rows = [ln.replace(",", " ").split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    try:
        A = np.array([[float(v) for v in r] for r in rows])
    except ValueError:
        raise UsageError(f"{path}: matrix entries must be numbers") from None
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise UsageError(f"{path}: matrix must be square")
    return A


def cmd_brockett(args) -> int:
    if args.matrix:
        L = _read_matrix(args.matrix)
        n = L.shape[0]
        if args.n is not None and args.n != n:
            raise UsageError(f"--n {args.n} does not match the {n}x{n} matrix file")
    else:
        if args.spectrum:
            lam = _floats(args.spectrum, "--spectrum")
        else:
            if args.n is None:
                raise UsageError("brockett needs --n, --spectrum or --matrix")
            lam = [float(k) for k in range(1, args.n + 1)]
        n = len(lam)
        if args.n is not None and args.n != n:
            raise UsageError(f"--n {args.n} does not match a spectrum of {n} values")
        if n < 2:
            raise UsageError("brockett needs n >= 2")
        L = random_symmetric(lam, args.seed)
    N = np.diag(_floats(args.N, "--N", n)) if args.N else np.diag(np.arange(n, 0, -1, dtype=float))
    try:
        state = SymMatrixState(L, N)
    except BrockettError as exc:
        raise UsageError(str(exc)) from None
    res = brockett_flow(state, t_max=args.t_max)

    out = _out_dir(None, args)
    with open(out / "brockett.csv", "w") as fh:
        fh.write("t,offdiag,eig_drift,trace_LN\n")
        for row in zip(res.t, res.offdiag, res.eig_drift, res.trace_LN):
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    diag = res.diagonal
    ok = sorted_like(diag, state.N)
    print(f"diagonal: [{', '.join(_fmt(v) for v in diag)}]; "
          f"sorted like N: {'yes' if ok else 'no'}; offdiag {res.offdiag[-1]:.3e}; "
          f"eigenvalue drift {max(res.eig_drift):.3e}; steps {res.steps}")
    if not res.converged:
        print(f"brockett flow did not converge by t={_fmt(args.t_max)}", file=sys.stderr)
        return EXIT_ABORT
    return EXIT_OK


# ---------------------------------------------------------------------------


def _family_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON configuration file")
    p.add_argument("--preset", choices=PRESETS, help="use a preset family instead of a config file")
    p.add_argument("--eta", type=float, default=1.0, help="deformation parameter of the group preset")
    p.add_argument("--out", help="output directory (overrides output_dir from the config)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="leafflow", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="topology, red lines and zone signatures of a level set")
    _family_options(p)
    p.add_argument("--c", type=float, required=True, help="Casimir value of the level set")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("verify", help="run the identity suites on seeded random points")
    _family_options(p)
    p.add_argument("--points", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("flow", help="integrate a double-bracket flow on a leaf")
    _family_options(p)
    p.add_argument("--c", type=float, help="expected leaf; the start must lie on it")
    p.add_argument("--start", required=True, help="X,Y,Z")
    p.add_argument("--G", required=True, help="function generating the flow, e.g. 'z'")
    p.add_argument("--t-max", type=float, default=10.0)
    p.add_argument("--direction", type=int, choices=(1, -1), default=1)
    p.add_argument("--method", choices=("rk4", "rkf45"), default="rkf45")
    p.add_argument("--dt", type=float, default=1e-2, help="step size for rk4")
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("mesh", help="meshes of a leaf and of the red zone")
    _family_options(p)
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--resolution", type=int, default=64)
    p.add_argument("--box", type=float, default=3.0, help="half width of the bounding box")
    p.set_defaults(func=cmd_mesh)

    p = sub.add_parser("brockett", help="Brockett double-bracket flow on symmetric matrices")
    p.add_argument("--n", type=int)
    p.add_argument("--spectrum", help="comma separated eigenvalues of a seeded random L")
    p.add_argument("--matrix", help="text file with a symmetric matrix, one row per line")
    p.add_argument("--N", help="comma separated diagonal of N (default n, ..., 1)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--t-max", type=float, default=200.0)
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_brockett)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors; that code means verification failure here
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"leafflow {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (EvaluationError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"leafflow {args.command}: numerical abort: {exc}", file=sys.stderr)
        return EXIT_ABORT


if __name__ == "__main__":
    sys.exit(main())
