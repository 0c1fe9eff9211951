"""Command-line front end: solve, validate, generate, reduce, bench, export-lp.

Exit codes: 0 valid/feasible, 1 invalid/infeasible, 2 usage or parse error,
3 resource or backend failure.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import json
import os
import re
import statistics
import sys
import time
from pathlib import Path

from . import generators, reductions
from .dp_path import solve_path_dp
from .errors import (
    BackendError,
    BackendInfeasibleError,
    BudgetExceededError,
    FormatError,
    ResourceLimitError,
    ShapeError,
    SrdgError,
)
from .exact import brute_force_feasible, min_slack_oracle
from .milp import (
    SolverBackend,
    build_milp,
    export_lp,
    solve_feasibility,
    solve_milp,
    solve_relaxation,
)
from .model import (
    instance_to_dict,
    parse_instance,
    parse_schedule,
    schedule_to_dict,
    shape,
    validate,
)
from .star import solve_star

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_USAGE = 2
EXIT_RESOURCE = 3

ENGINES = ("auto", "brute", "dp", "star", "milp")

PATH_GRID = {
    "n": (8, 12, 16),
    "p": (0.5, 0.67, 0.83, 1.0),
    "l": (0.33, 0.44, 0.55, 0.66),
    "c": (0.1, 0.4, 0.7, 1.0),
    "d": (0.2, 0.47, 0.73, 1.0),
}
STAR_GRID = {
    "n": (8, 12, 16),
    "p": (0.5, 1.0, 1.5, 2.0),
    "c": (0.1, 0.4, 0.7, 1.0),
    "d": (0.2, 0.47, 0.73, 1.0),
}

BENCH_COLUMNS = (
    "instance",
    "constellation",
    "engine",
    "status",
    "d_star",
    "wall_s",
    "relax_bound",
    "relax_ratio",
    "error",
)


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc


def _load_instance(path: str):
    text = _read_text(path)
    try:
        return parse_instance(text)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def _write_output(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _backend_from_args(args) -> SolverBackend | None:
    if getattr(args, "solver_cmd", None):
        return SolverBackend(command=args.solver_cmd, dialect=args.solver_dialect)
    return None


def _pick_engine(instance, engine: str, min_slack: bool) -> str:
    if engine == "auto":
        if min_slack:
            return "milp"
        s = shape(instance.graph)
        if s == "path":
            return "dp"
        if s == "star":
            return "star"
        return "milp"
    return engine


def run_engine(
    instance,
    engine: str,
    min_slack: bool = False,
    backend: SolverBackend | None = None,
    fold_fixed: bool = False,
    budget: int | None = None,
) -> dict:
    """Solve one instance; returns status, d_star, schedule, engine used."""
    engine = _pick_engine(instance, engine, min_slack)
    kw = {"node_budget": budget} if budget else {}
    if min_slack:
        if engine == "brute":
            out = min_slack_oracle(instance, **kw)
        elif engine == "milp":
            out = solve_milp(build_milp(instance, "min_slack", fold_fixed=fold_fixed), backend)
        else:
            raise ShapeError(f"engine {engine!r} cannot minimize slack, use brute or milp")
        return {
            "engine": engine,
            "status": "optimal",
            "d_star": out.d_star,
            "schedule": out.schedule,
        }
    if engine == "brute":
        out = brute_force_feasible(instance, **kw)
    elif engine == "dp":
        if shape(instance.graph) != "path":
            raise ShapeError("engine 'dp' requires a path-shaped instance")
        out = solve_path_dp(instance, **({"max_states": budget} if budget else {}))
    elif engine == "star":
        if shape(instance.graph) != "star":
            raise ShapeError("engine 'star' requires a star-shaped instance")
        out = solve_star(instance, **kw)
    elif engine == "milp":
        out = solve_feasibility(instance, backend, fold_fixed=fold_fixed)
    else:
        raise FormatError(f"unknown engine {engine!r}")
    return {
        "engine": engine,
        "status": out.status,
        "d_star": None,
        "schedule": out.schedule,
    }


# ---------------------------------------------------------------------------
# solve / validate / export-lp


def cmd_solve(args) -> int:
    instance = _load_instance(args.instance)
    backend = _backend_from_args(args)
    t0 = time.perf_counter()
    res = run_engine(
        instance,
        args.engine,
        min_slack=args.min_slack,
        backend=backend,
        fold_fixed=args.fold_fixed,
        budget=args.budget,
    )
    wall = time.perf_counter() - t0
    if args.schedule_out and res["schedule"] is not None:
        Path(args.schedule_out).write_text(
            json.dumps(schedule_to_dict(res["schedule"]), indent=1) + "\n"
        )
    if args.json:
        print(
            json.dumps(
                {
                    "engine": res["engine"],
                    "status": res["status"],
                    "d_star": res["d_star"],
                    "wall_s": round(wall, 6),
                }
            )
        )
    elif args.min_slack:
        print(f"optimal slack d* = {res['d_star']} (engine {res['engine']}, {wall:.3f}s)")
    else:
        print(f"{res['status']} (engine {res['engine']}, {wall:.3f}s)")
    if not args.min_slack and res["status"] == "infeasible":
        return EXIT_INVALID
    return EXIT_OK


def cmd_validate(args) -> int:
    instance = _load_instance(args.instance)
    try:
        pi = parse_schedule(_read_text(args.schedule))
    except ValueError as exc:
        raise FormatError(f"{args.schedule}: {exc}") from exc
    if len(pi.departures) != len(instance.paths):
        raise FormatError(
            f"schedule covers {len(pi.departures)} paths, instance has {len(instance.paths)}"
        )
    diag = validate(instance, pi)
    if args.json:
        print(
            json.dumps(
                {
                    "valid": diag.ok,
                    "violations": [
                        {
                            "kind": v.kind,
                            "paths": list(v.paths),
                            "vertex": v.vertex,
                            "connection": list(v.connection) if v.connection else None,
                            "times": list(v.times),
                            "message": v.message,
                        }
                        for v in diag.violations
                    ],
                }
            )
        )
    elif diag.ok:
        print("VALID")
    else:
        print(f"INVALID ({len(diag.violations)} violations)")
        for v in diag.violations:
            print(f"  {v.kind}: {v.message}")
    return EXIT_OK if diag.ok else EXIT_INVALID


def cmd_export_lp(args) -> int:
    instance = _load_instance(args.instance)
    mode = "min_slack" if args.min_slack else "feasibility"
    model = build_milp(instance, mode, fold_fixed=args.fold_fixed)
    _write_output(export_lp(model, relax=args.relax), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# generate


def _fmt(v) -> str:
    return f"{v:g}"


def _emit_instance(instance, out, as_json):
    text = json.dumps(instance_to_dict(instance), indent=1) + "\n"
    if out:
        Path(out).write_text(text)
        if as_json:
            print(json.dumps({"file": out}))
        else:
            print(f"wrote {out}")
    else:
        sys.stdout.write(text)


def _grid_values(args, key, defaults):
    given = getattr(args, f"{key}_list", None)
    return tuple(given) if given else defaults


def cmd_generate(args) -> int:
    if args.family == "geo":
        if not args.geo:
            raise FormatError("family geo requires --geo FILE")
        geo = generators.GeoGraph.from_json(_read_text(args.geo))
        instance = generators.gen_geo_instance(geo, args.p_star, args.zone, args.seed)
        _emit_instance(instance, args.out, args.json)
        return EXIT_OK

    is_path = args.family == "path"
    if not args.grid:
        if is_path:
            params = generators.PathGenParams(
                n=args.n,
                p_star=args.p_star,
                l_star=args.l_star,
                c_star=args.c_star,
                d_scale=args.d_scale,
                seed=args.seed,
            )
            instance = generators.gen_path_instance(params)
        else:
            instance = generators.gen_star_instance(
                args.n, args.p_star, args.c_star, args.d_scale, args.seed
            )
        _emit_instance(instance, args.out, args.json)
        return EXIT_OK

    # full factorial design: one file per constellation and repetition index
    if not args.out_dir:
        raise FormatError("--grid requires --out-dir")
    grid = PATH_GRID if is_path else STAR_GRID
    ns = _grid_values(args, "n", grid["n"])
    ps = _grid_values(args, "p", grid["p"])
    cs = _grid_values(args, "c", grid["c"])
    ds = _grid_values(args, "d", grid["d"])
    ls = _grid_values(args, "l", PATH_GRID["l"]) if is_path else (None,)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    files = []
    cidx = 0
    for n in ns:
        for p in ps:
            for c in cs:
                for d in ds:
                    for l in ls:
                        for x in range(args.reps):
                            seed = args.seed + cidx * args.reps + x
                            if is_path:
                                name = (
                                    f"I_{n}_{_fmt(p)}_{_fmt(c)}_{_fmt(d)}_{_fmt(l)}_{x}.json"
                                )
                                inst = generators.gen_path_instance(
                                    generators.PathGenParams(n, p, l, c, d, seed)
                                )
                            else:
                                name = f"I_{n}_{_fmt(p)}_{_fmt(c)}_{_fmt(d)}_{x}.json"
                                inst = generators.gen_star_instance(n, p, c, d, seed)
                            (out_dir / name).write_text(
                                json.dumps(instance_to_dict(inst), indent=1) + "\n"
                            )
                            files.append(name)
                        cidx += 1
    if args.json:
        print(json.dumps({"dir": str(out_dir), "files": files}))
    else:
        print(f"wrote {len(files)} instances to {out_dir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# reduce


def cmd_reduce(args) -> int:
    if args.oracle_out:
        args.oracle = True
    text = _read_text(args.source)
    if args.problem == "mis-uig":
        src = reductions.parse_interval_classes(text)
        instance = reductions.reduce_mis_uig(src)
        oracle = (lambda: reductions.oracle_mis_uig(src)) if args.oracle else None
    elif args.problem == "cubic-is":
        verts, edges = reductions.parse_edge_list(text)
        src = reductions.CubicGraph(verts, edges)
        if args.k is None:
            raise FormatError("cubic-is requires --k")
        instance = reductions.reduce_cubic_is(src, args.k)
        oracle = (lambda: reductions.oracle_is(src, args.k)) if args.oracle else None
    elif args.problem == "vertex-cover":
        verts, edges = reductions.parse_edge_list(text)
        src = reductions.VcInstance(verts, edges)
        if args.k is None:
            raise FormatError("vertex-cover requires --k")
        instance = reductions.reduce_vertex_cover(src, args.k)
        oracle = (lambda: reductions.oracle_vc(src, args.k)) if args.oracle else None
    else:  # 223sat
        src = reductions.parse_cnf223(text)
        instance = reductions.reduce_223sat(src)
        oracle = (lambda: reductions.oracle_223sat(src)) if args.oracle else None

    verdict = oracle() if oracle else None
    if args.oracle_out is not None:
        Path(args.oracle_out).write_text(json.dumps({"source_feasible": verdict}) + "\n")
    payload = instance_to_dict(instance)
    text_out = json.dumps(payload, indent=1) + "\n"
    if args.out:
        Path(args.out).write_text(text_out)
        summary = {
            "file": args.out,
            "vertices": len(instance.graph.vertices),
            "paths": len(instance.paths),
        }
        if verdict is not None:
            summary["source_feasible"] = verdict
        if args.json:
            print(json.dumps(summary))
        else:
            msg = f"wrote {args.out} ({summary['vertices']} vertices, {summary['paths']} paths)"
            if verdict is not None:
                msg += f"; source oracle: {'yes' if verdict else 'no'}"
            print(msg)
    else:
        sys.stdout.write(text_out)
        if verdict is not None:
            print(f"source oracle: {'yes' if verdict else 'no'}", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# bench


_CONSTELLATION_RE = re.compile(r"^(.*)_\d+$")


def constellation_of(stem: str) -> str:
    m = _CONSTELLATION_RE.match(stem)
    return m.group(1) if m else stem


def _bench_one(job) -> dict:
    (path, engine, min_slack, relaxation, repeats, solver_cmd, solver_dialect,
     fold_fixed, budget) = job
    stem = Path(path).stem
    record = {
        "instance": stem,
        "constellation": constellation_of(stem),
        "engine": engine,
        "status": "",
        "d_star": "",
        "wall_s": "",
        "relax_bound": "",
        "relax_ratio": "",
        "error": "",
    }
    backend = (
        SolverBackend(command=solver_cmd, dialect=solver_dialect) if solver_cmd else None
    )
    try:
        instance = _load_instance(path)
        times = []
        res = None
        for _ in range(repeats):
            t0 = time.perf_counter()
            res = run_engine(
                instance,
                engine,
                min_slack=min_slack,
                backend=backend,
                fold_fixed=fold_fixed,
                budget=budget,
            )
            times.append(time.perf_counter() - t0)
        record["status"] = res["status"]
        record["d_star"] = "" if res["d_star"] is None else res["d_star"]
        record["wall_s"] = round(statistics.median(times), 6)
        if relaxation and res["engine"] == "milp":
            model = build_milp(instance, "min_slack", fold_fixed=fold_fixed)
            bound = solve_relaxation(model, backend)
            record["relax_bound"] = round(bound, 6)
            d_star = res["d_star"]
            record["relax_ratio"] = (
                1.0 if d_star == 0 else round(bound / d_star, 6)
            )
    except SrdgError as exc:
        record["status"] = "error"
        record["error"] = f"{type(exc).__name__}: {exc}"
    return record


def cmd_bench(args) -> int:
    corpus = sorted(Path(args.corpus).glob("*.json"))
    engines = args.engine or ["auto"]
    jobs = [
        (
            str(path),
            engine,
            args.min_slack,
            args.relaxation,
            args.repeats,
            args.solver_cmd,
            args.solver_dialect,
            args.fold_fixed,
            args.budget,
        )
        for path in corpus
        for engine in engines
    ]
    if args.workers > 1 and len(jobs) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.workers) as pool:
            records = list(pool.map(_bench_one, jobs))
    else:
        records = [_bench_one(job) for job in jobs]
    records.sort(key=lambda r: (r["instance"], r["engine"]))

    with open(args.out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=BENCH_COLUMNS)
        writer.writeheader()
        writer.writerows(records)

    summary_rows = _summarize(records)
    if args.summary:
        with open(args.summary, "w", newline="") as fh:
            writer = csv.DictWriter(
                fh,
                fieldnames=(
                    "engine",
                    "metric",
                    "constellations",
                    "mean_of_medians",
                    "mean_of_means",
                ),
            )
            writer.writeheader()
            writer.writerows(summary_rows)
    if args.json:
        print(json.dumps({"records": len(records), "summary": summary_rows}))
    else:
        print(f"wrote {len(records)} records to {args.out}")
        for row in summary_rows:
            print(
                f"  {row['engine']} {row['metric']}: mean-of-medians "
                f"{row['mean_of_medians']}, mean-of-means {row['mean_of_means']} "
                f"over {row['constellations']} constellations"
            )
    return EXIT_OK


def _summarize(records) -> list:
    """Per engine: group runs by constellation, take the median and the mean
    of each group's wall times, then average both across constellations."""
    rows = []
    by_engine = {}
    for rec in records:
        if rec["status"] == "error" or rec["wall_s"] == "":
            continue
        by_engine.setdefault(rec["engine"], {}).setdefault(
            rec["constellation"], []
        ).append(float(rec["wall_s"]))
    for engine in sorted(by_engine):
        groups = by_engine[engine]
        medians = [statistics.median(v) for v in groups.values()]
        means = [statistics.fmean(v) for v in groups.values()]
        rows.append(
            {
                "engine": engine,
                "metric": "wall_s",
                "constellations": len(groups),
                "mean_of_medians": round(statistics.fmean(medians), 6),
                "mean_of_means": round(statistics.fmean(means), 6),
            }
        )
    return rows


# ---------------------------------------------------------------------------
# parser wiring


def _add_solver_flags(p):
    p.add_argument("--solver-cmd", help="external MILP command with {model}/{solution}")
    p.add_argument("--solver-dialect", choices=("plain", "cbc"), default="plain")
    p.add_argument("--fold-fixed", action="store_true",
                   help="presolve bound-forced paths to constants")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="srdg", description="Solvers for smooth routing in decaying graphs."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="decide feasibility or minimize slack")
    p.add_argument("instance")
    p.add_argument("--engine", choices=ENGINES, default="auto")
    p.add_argument("--min-slack", action="store_true")
    p.add_argument("--schedule-out", help="write the witness schedule JSON here")
    p.add_argument("--budget", type=int, help="node/state budget for brute, dp, star")
    p.add_argument("--json", action="store_true")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("validate", help="check a schedule against an instance")
    p.add_argument("instance")
    p.add_argument("schedule")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("generate", help="sample artificial or geo instances")
    p.add_argument("family", choices=("path", "star", "geo"))
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--p-star", type=float, default=1.0)
    p.add_argument("--l-star", type=float, default=0.44)
    p.add_argument("--c-star", type=float, default=1.0)
    p.add_argument("--d-scale", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--geo", help="GeoGraph JSON file (family geo)")
    p.add_argument("--zone", choices=("A", "B", "C"), default="B")
    p.add_argument("--grid", action="store_true", help="emit the full factorial design")
    p.add_argument("--out-dir")
    p.add_argument("--reps", type=int, default=10, help="instances per constellation")
    p.add_argument("--n-list", type=int, nargs="+")
    p.add_argument("--p-list", type=float, nargs="+")
    p.add_argument("--l-list", type=float, nargs="+")
    p.add_argument("--c-list", type=float, nargs="+")
    p.add_argument("--d-list", type=float, nargs="+")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("reduce", help="build a hardness-gadget instance")
    p.add_argument("problem", choices=("mis-uig", "cubic-is", "vertex-cover", "223sat"))
    p.add_argument("source", help="interval classes, edge list, or CNF file")
    p.add_argument("--k", type=int, help="solution size (cubic-is, vertex-cover)")
    p.add_argument("--out")
    p.add_argument("--oracle", action="store_true",
                   help="also run the source-problem oracle")
    p.add_argument("--oracle-out", help="write the oracle verdict JSON here")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("bench", help="run engines over an instance corpus")
    p.add_argument("corpus", help="directory of instance JSON files")
    p.add_argument("--engine", action="append", choices=ENGINES)
    p.add_argument("--out", required=True, help="per-run records CSV")
    p.add_argument("--summary", help="per-engine aggregate CSV")
    p.add_argument("--workers", type=int, default=min(4, os.cpu_count() or 1))
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--min-slack", action="store_true")
    p.add_argument("--relaxation", action="store_true",
                   help="also solve the LP relaxation (milp runs, needs --min-slack)")
    p.add_argument("--budget", type=int)
    p.add_argument("--json", action="store_true")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("export-lp", help="write the instance's LP file")
    p.add_argument("instance")
    p.add_argument("--min-slack", action="store_true")
    p.add_argument("--relax", action="store_true", help="drop integrality")
    p.add_argument("--out")
    p.add_argument("--json", action="store_true")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_export_lp)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "relaxation", False) and not args.min_slack:
        parser.error("--relaxation requires --min-slack")
    try:
        return args.func(args)
    except (FormatError, ShapeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ResourceLimitError, BudgetExceededError, BackendError,
            BackendInfeasibleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE


if __name__ == "__main__":
    sys.exit(main())
