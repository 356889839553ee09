"""Command line front end.

Subcommands: generate, analyze, check, bench. Exit codes:

* 0 success
* 1 I/O failure (unreadable file, malformed JSON)
* 2 invalid input (bad arguments, schema violations, unreachable alpha)
* 3 kinematically indeterminate model (rank-deficient stiffness)
* 4 violated numerical invariant (failed self-check, route disagreement)

Environment overrides: REDMAT_RANK_TOL (float, rank tolerance when no
--rank-tol flag is given) and REDMAT_MEMORY_CAP_GIB (float, bench memory
cap when no --memory-cap-gib flag is given).
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np
import scipy.sparse as sp
from scipy.io import mmwrite
from threadpoolctl import threadpool_limits

from . import __version__
from .assembly import assemble, dump_system
from .bench import (CSV_FORMAT_VERSION, DEFAULT_MEMORY_CAP_BYTES, BenchGrid, run_series,
                    write_csv, write_records_csv)
from .generators import FAMILIES, GeneratorSpec, generate, jitter_stiffness
from .model import SCHEMA_VERSION, build_dof_map, load_model, save_model, validate_model
from .redundancy import (InvariantViolation, KinematicallyIndeterminate, kernel_basis,
                         rank_and_indeterminacy, redundancy_canonical,
                         redundancy_diag_canonical, redundancy_diag_efficient,
                         redundancy_efficient, run_checks)

KERNEL_CHOICES = ("auto", "qr", "svd", "projected")


def _env_float(name: str) -> float | None:
    raw = os.environ.get(name)
    if raw is None or raw == "":
        return None
    try:
        return float(raw)
    except ValueError as exc:
        raise ValueError(f"environment variable {name} is not a number: {raw!r}") from exc


def _rank_tol(args) -> float | None:
    if getattr(args, "rank_tol", None) is not None:
        return args.rank_tol
    return _env_float("REDMAT_RANK_TOL")


def _parse_int_grid(text: str) -> tuple[int, ...]:
    """Sizes as 'a,b,c' or 'start:stop[:step]' (stop inclusive)."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) not in (2, 3):
            raise ValueError(f"bad size range {text!r}, expected start:stop[:step]")
        start, stop = int(parts[0]), int(parts[1])
        step = int(parts[2]) if len(parts) == 3 else 1
        if step <= 0 or stop < start:
            raise ValueError(f"bad size range {text!r}")
        return tuple(range(start, stop + 1, step))
    return tuple(int(tok) for tok in text.split(",") if tok.strip())


def _parse_float_list(text: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in text.split(",") if tok.strip())


def _load_checked(path: str):
    model = load_model(path)
    report = validate_model(model)
    for warning in report.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    if not report.ok:
        detail = "; ".join(report.errors)
        raise ValueError(f"invalid model: {detail}")
    return model


def _print_counts(cts, family: str | None = None) -> None:
    if family is not None:
        print(f"family = {family}")
    print(f"n = {cts.n}")
    print(f"n_q = {cts.n_q}")
    print(f"n_s = {cts.n_s}")
    print(f"alpha = {cts.alpha:.6f}")


def cmd_generate(args) -> int:
    if args.family == "cylinder":
        if args.alpha is None:
            raise ValueError("cylinder generator needs --alpha")
    elif args.alpha is not None:
        raise ValueError(f"--alpha applies only to the cylinder family, not {args.family}")
    model = generate(GeneratorSpec(args.family, args.n, alpha_target=args.alpha))
    if args.seed_stiffness_jitter is not None:
        model = jitter_stiffness(model, seed=args.seed_stiffness_jitter)
    report = validate_model(model)
    for warning in report.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    if not report.ok:
        raise ValueError("; ".join(report.errors))
    system = assemble(model, validate=False)
    cts = rank_and_indeterminacy(system, rank_tol=_rank_tol(args))
    _print_counts(cts, family=args.family)
    if args.out:
        save_model(model, args.out)
        print(f"model written to {args.out}")
    return 0


def cmd_analyze(args) -> int:
    model = _load_checked(args.model)
    system = assemble(model, validate=False)
    cts = rank_and_indeterminacy(system, rank_tol=_rank_tol(args))
    _print_counts(cts)
    results = {}
    with threadpool_limits(limits=args.threads):
        if args.method in ("canonical", "both"):
            if args.task == "full":
                results["canonical"] = redundancy_canonical(system)
            else:
                results["canonical"] = redundancy_diag_canonical(system)
        if args.method in ("efficient", "both"):
            basis = kernel_basis(system, method=args.kernel, rank_tol=_rank_tol(args))
            if args.task == "full":
                results["efficient"] = redundancy_efficient(system, basis=basis)
            else:
                results["efficient"] = redundancy_diag_efficient(system, basis=basis)
    primary = results.get("efficient", results.get("canonical"))
    print(f"trace = {primary.trace:.6f}")
    print(f"trace_residual = {abs(primary.trace - cts.n_s):.3e}")
    if len(results) == 2:
        pc = results["canonical"].payload
        pe = results["efficient"].payload
        gap = float(np.max(np.abs(pc - pe))) if np.asarray(pc).size else 0.0
        print(f"method_discrepancy = {gap:.3e}")
    for name, res in results.items():
        print(f"wall_time_{name}_s = {res.wall_time_s:.6f}")
    if args.dump_system:
        paths = dump_system(system, args.dump_system)
        print(f"system written to {', '.join(str(p) for p in paths)}")
    if args.out:
        if args.task == "diag":
            with open(args.out, "w") as fh:
                fh.write("element_id,mode_label,r_ii\n")
                for (eid, mode), value in zip(primary.row_index, primary.payload):
                    fh.write(f"{eid},{mode},{value:.12e}\n")
        else:
            mmwrite(args.out, sp.coo_matrix(primary.payload))
        print(f"result written to {args.out}")
    return 0


def cmd_check(args) -> int:
    model = _load_checked(args.model)
    report = run_checks(model, kernel_method=args.kernel, rank_tol=_rank_tol(args))
    for res in report.results:
        verdict = "PASS" if res.passed else "FAIL"
        note = f"  ({res.note})" if res.note else ""
        print(f"{res.name:<24s} residual {res.residual:9.3e}  tol {res.tol:9.3e}  {verdict}{note}")
    print(f"trace = {report.trace:.6f}")
    print(f"n_s = {report.counts.n_s}")
    if not report.ok:
        failed = ", ".join(r.name for r in report.results if not r.passed)
        raise InvariantViolation(f"checks failed: {failed}")
    print("all checks passed")
    return 0


def cmd_bench(args) -> int:
    cap_gib = args.memory_cap_gib
    if cap_gib is None:
        cap_gib = _env_float("REDMAT_MEMORY_CAP_GIB")
    cap_bytes = DEFAULT_MEMORY_CAP_BYTES if cap_gib is None else int(cap_gib * 2**30)
    if args.family == "cylinder" and not args.alpha:
        raise ValueError("cylinder series needs --alpha")
    grid = BenchGrid(family=args.family, ns=_parse_int_grid(args.n),
                     alphas=_parse_float_list(args.alpha) if args.alpha else None,
                     task=args.task, repetitions=args.repetitions, threads=args.threads,
                     memory_cap_bytes=cap_bytes, kernel_method=args.kernel)

    def progress(row):
        note = row["status"] if row["status"] != "ok" else f"speedup={row['speedup']}"
        print(f"{row['family']} n={row['n']} alpha={row['alpha']} "
              f"task={row['task']} {note}", flush=True)

    rows, records = run_series(grid, progress=progress)
    write_csv(rows, args.out)
    print(f"{len(rows)} rows written to {args.out}")
    if args.details:
        write_records_csv(records, args.details)
        print(f"raw timings written to {args.details}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="redmat",
        description="Redundancy matrices and statical indeterminacy distributions "
                    "for truss and frame models.")
    parser.add_argument(
        "--version", action="version",
        version=f"%(prog)s {__version__} (model schema {SCHEMA_VERSION}, "
                f"bench csv {CSV_FORMAT_VERSION})")
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("generate", help="build a parametric model")
    p_gen.add_argument("family", choices=FAMILIES)
    p_gen.add_argument("--n", type=int, required=True, help="family size parameter")
    p_gen.add_argument("--alpha", type=float, default=None,
                       help="target redundancy ratio (cylinder only)")
    p_gen.add_argument("--seed-stiffness-jitter", type=int, nargs="?", const=0,
                       default=None, metavar="SEED",
                       help="randomize element stiffness (PCG64, default seed 0)")
    p_gen.add_argument("--rank-tol", type=float, default=None)
    p_gen.add_argument("--out", default=None, help="write the model as JSON")
    p_gen.set_defaults(func=cmd_generate)

    p_an = sub.add_parser("analyze", help="compute redundancy distributions")
    p_an.add_argument("model", help="model JSON file")
    p_an.add_argument("--task", choices=("diag", "full"), default="diag")
    p_an.add_argument("--method", choices=("canonical", "efficient", "both"),
                      default="efficient")
    p_an.add_argument("--kernel", choices=KERNEL_CHOICES, default="auto")
    p_an.add_argument("--rank-tol", type=float, default=None)
    p_an.add_argument("--threads", type=int, default=None)
    p_an.add_argument("--out", default=None,
                      help="diag: CSV of per-mode diagonal entries; "
                           "full: MatrixMarket coordinate file")
    p_an.add_argument("--dump-system", default=None, metavar="PREFIX",
                      help="also write the equilibrium factors A and C (MatrixMarket)")
    p_an.set_defaults(func=cmd_analyze)

    p_chk = sub.add_parser("check", help="run numerical self-checks on a model")
    p_chk.add_argument("model", help="model JSON file")
    p_chk.add_argument("--kernel", choices=KERNEL_CHOICES, default="auto")
    p_chk.add_argument("--rank-tol", type=float, default=None)
    p_chk.set_defaults(func=cmd_check)

    p_b = sub.add_parser("bench", help="time canonical vs kernel-based routes")
    p_b.add_argument("--family", choices=FAMILIES, required=True)
    p_b.add_argument("--n", required=True,
                     help="sizes, as 'a,b,c' or 'start:stop[:step]' (stop inclusive)")
    p_b.add_argument("--alpha", default=None,
                     help="comma-separated target ratios (cylinder only)")
    p_b.add_argument("--task", choices=("diag", "full"), default="diag")
    p_b.add_argument("--kernel", choices=KERNEL_CHOICES, default="auto")
    p_b.add_argument("--repetitions", type=int, default=3)
    p_b.add_argument("--threads", type=int, default=1)
    p_b.add_argument("--memory-cap-gib", type=float, default=None,
                     help=f"skip cells estimated above this cap "
                          f"(default {DEFAULT_MEMORY_CAP_BYTES / 2**30:.0f} GiB)")
    p_b.add_argument("--out", required=True, help="summary CSV path")
    p_b.add_argument("--details", default=None, help="raw per-route timings CSV")
    p_b.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 0 for --help/--version, 2 for usage
        return int(exc.code or 0)
    try:
        return args.func(args)
    except KinematicallyIndeterminate as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except InvariantViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
