"""``laser`` command line."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys

from . import benchmark as bench
from .collision import conflicts_to_json
from .cp import DEFAULT_TIME_LIMIT
from .errors import LaserError
from .gantt import export_gantt
from .generator import GeneratorSpec, benchmark_suite, generate_slab_instance, random_instance
from .hetero import BottomConfig
from .homo import TopConfig
from .model import dumps, load_instance, load_schedule, save_instance, save_schedule
from .oracle import validate_schedule
from .pipeline import MODES, solve
from .sim import Fault, NoiseModel, compile_schedule, simulate

log = logging.getLogger("laser")

EXIT_ERROR = 1
EXIT_USAGE = 64  # argparse's default of 2 would collide with "feasible"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _write(path, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text + "\n")
    else:
        with open(path, "w") as fh:
            fh.write(text + "\n")


# ---------------------------------------------------------------------------
# subcommands


def cmd_generate(args) -> int:
    if args.random is not None:
        inst = random_instance(args.random, n_actors=args.actors, seed=args.seed)
    else:
        if args.suite:
            by_name = {s.name: s for s in benchmark_suite()}
            if args.suite not in by_name:
                raise LaserError(f"unknown suite entry {args.suite!r}; have {sorted(by_name)}")
            spec = by_name[args.suite]
        else:
            spec = GeneratorSpec()
        overrides = {k: v for k, v in (("session", args.session), ("n_elements", args.elements),
                                       ("length", args.length), ("width", args.width),
                                       ("bottom_screws", args.bottom_screws), ("top_screws", args.top_screws),
                                       ("n_actors", args.actors_slab)) if v is not None}
        spec = dataclasses.replace(spec, **overrides)
        inst = generate_slab_instance(spec, seed=args.seed)
    save_instance(inst, args.out)
    if args.emit_conflicts:
        _write(args.emit_conflicts, conflicts_to_json(inst))
    log.info("wrote %d tasks, %d actors to %s", inst.n_tasks, inst.n_actors, args.out)
    return 0


def cmd_solve(args) -> int:
    inst = load_instance(args.instance)
    if args.emit_conflicts:
        _write(args.emit_conflicts, conflicts_to_json(inst))
    out = solve(
        inst, args.mode, lam=args.lam, time_limit_s=args.time_limit, buffer_fraction=args.buffer,
        bottom=BottomConfig(lam=args.lam, max_splits=args.max_splits, buffer_fraction=args.buffer,
                            cp_time_limit_s=args.cp_time_limit),
        top=TopConfig(lam=args.lam, delta=args.delta, delta_dist=args.delta_dist, buffer_fraction=args.buffer,
                      time_budget_s=args.time_limit),
    )
    summary = {"mode": out.mode, "status": out.status.value, "wall_time_s": round(out.wall_time_s, 3)}
    if out.schedule is not None:
        save_schedule(out.schedule, inst, args.out, lam=args.lam)
        summary.update(makespan=out.schedule.makespan, levels=out.schedule.n_levels,
                       objective=out.schedule.objective(args.lam))
    summary.update({k: v for k, v in out.details.items() if k != "objective"})
    print(json.dumps(summary, sort_keys=True))
    return out.exit_code


def cmd_validate(args) -> int:
    inst = load_instance(args.instance)
    sched = load_schedule(args.schedule, inst)
    violations = validate_schedule(inst, sched, strict_windows=not args.buffered)
    for v in violations:
        print(v)
    print(f"{len(violations)} violation(s)")
    return 0 if not violations else EXIT_ERROR


def _parse_faults(inst, specs) -> list[Fault]:
    index = {str(t): i for i, t in enumerate(inst.task_ids)}
    out = []
    for s in specs or []:
        task, _, what = s.rpartition(":")
        if task not in index:
            raise LaserError(f"--fault names unknown task {task!r}")
        out.append(Fault.parse(index[task], what))
    return out


def cmd_simulate(args) -> int:
    inst = load_instance(args.instance)
    sched = load_schedule(args.schedule, inst)
    objects = compile_schedule(sched, inst)
    faults = _parse_faults(inst, args.fault)
    runs = []
    for s in range(args.seeds):
        seed = args.seed + s
        rep = simulate(objects, NoiseModel.parse(args.noise, seed=seed), inst, faults)
        row = rep.to_dict()
        row["seed"] = seed
        runs.append(row)
    report = {
        "schedule_makespan": sched.makespan,
        "noise": args.noise,
        "seeds": args.seeds,
        "total_window_violations": sum(r["window_violations"] for r in runs),
        "total_barrier_violations": sum(r["barrier_violations"] for r in runs),
        "max_makespan": max((r["makespan"] for r in runs), default=None),
        "runs": runs,
    }
    if args.report:
        _write(args.report, dumps(report))
    print(json.dumps({k: v for k, v in report.items() if k != "runs"}, sort_keys=True))
    bad = report["total_window_violations"] or report["total_barrier_violations"]
    return EXIT_ERROR if bad else 0


def cmd_benchmark(args) -> int:
    specs = benchmark_suite()
    if args.only:
        keep = set(args.only)
        specs = [s for s in specs if s.name in keep]
    n_workers = 1 if args.deterministic else None
    rows = bench.run_benchmark(specs, modes=args.modes, time_limit_s=args.time_limit, seed=args.seed,
                               lam=args.lam, session=args.session, n_workers=n_workers)
    bench.write_rows(rows, args.out)
    for r in rows:
        print(f"{r.instance:8s} {r.mode:10s} n={r.n_tasks:4d} {r.status:9s} {r.solve_time_s:9.2f}s")
    return EXIT_ERROR if any(r.status == "error" for r in rows) else 0


def cmd_gantt(args) -> int:
    inst = load_instance(args.instance)
    sched = load_schedule(args.schedule, inst)
    svg, csv_path = export_gantt(sched, inst, args.out, until=args.until)
    print(f"{svg}\n{csv_path}")
    return 0


# ---------------------------------------------------------------------------
# parser


def _common(suppress: bool) -> argparse.ArgumentParser:
    """Global flags, accepted before or after the subcommand.

    Subcommand copies default to SUPPRESS so they do not clobber a value
    given before the subcommand.
    """
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    c = argparse.ArgumentParser(add_help=False)
    c.add_argument("--seed", type=int, default=d(0), help="random seed (default 0)")
    c.add_argument("--time-limit", type=float, default=d(DEFAULT_TIME_LIMIT), help="seconds (default 1800)")
    c.add_argument("--deterministic", action="store_true", default=d(False), help="single worker, reproducible output")
    c.add_argument("--verbose", "-v", action="count", default=d(0))
    return c


def build_parser() -> argparse.ArgumentParser:
    top_level = _common(suppress=False)
    common = _common(suppress=True)

    p = _Parser(prog="laser", description="Level-barrier scheduling for multi-robot slab assembly.",
                parents=[top_level])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", parents=[common], help="write a synthetic instance")
    g.add_argument("--out", required=True)
    g.add_argument("--suite", help="start from a benchmark suite entry, e.g. slab-C")
    g.add_argument("--session", choices=("bottom", "top", "full"))
    g.add_argument("--elements", type=int)
    g.add_argument("--length", type=float)
    g.add_argument("--width", type=float)
    g.add_argument("--bottom-screws", type=int)
    g.add_argument("--top-screws", type=int)
    g.add_argument("--robots", dest="actors_slab", type=int)
    g.add_argument("--random", type=int, metavar="N", help="small random instance with N tasks instead of a slab")
    g.add_argument("--actors", type=int, default=2, help="actor count for --random")
    g.add_argument("--emit-conflicts", metavar="PATH")
    g.set_defaults(fn=cmd_generate)

    s = sub.add_parser("solve", parents=[common], help="compute a schedule")
    s.add_argument("--instance", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--mode", choices=MODES, default="monolithic")
    s.add_argument("--lambda", dest="lam", type=float, default=1.0)
    s.add_argument("--buffer", type=float, help="safety buffer fraction (default: the instance's)")
    s.add_argument("--max-splits", type=int, default=20)
    s.add_argument("--cp-time-limit", type=float, default=5.0, help="per-iteration limit in bottom mode")
    s.add_argument("--delta", type=float, default=16.0)
    s.add_argument("--delta-dist", type=float, default=1.0)
    s.add_argument("--emit-conflicts", metavar="PATH")
    s.set_defaults(fn=cmd_solve)

    v = sub.add_parser("validate", parents=[common], help="check a schedule against its instance")
    v.add_argument("--instance", required=True)
    v.add_argument("--schedule", required=True)
    v.add_argument("--buffered", action="store_true", help="check the buffered rather than the hard windows")
    v.set_defaults(fn=cmd_validate)

    m = sub.add_parser("simulate", parents=[common], help="replay a schedule under noise and faults")
    m.add_argument("--instance", required=True)
    m.add_argument("--schedule", required=True)
    m.add_argument("--noise", default="none", help="none | uniform:A | gaussian:SIGMA")
    m.add_argument("--seeds", type=int, default=1)
    m.add_argument("--report")
    m.add_argument("--fault", action="append", metavar="TASK:FACTOR|TASK:fail")
    m.set_defaults(fn=cmd_simulate)

    b = sub.add_parser("benchmark", parents=[common], help="monolithic vs hybrid on the slab suite")
    b.add_argument("--out", required=True)
    b.add_argument("--modes", nargs="+", choices=MODES, default=["monolithic", "hybrid"])
    b.add_argument("--session", choices=("bottom", "top", "full"), default="top")
    b.add_argument("--only", nargs="+", metavar="NAME")
    b.add_argument("--lambda", dest="lam", type=float, default=1.0)
    b.set_defaults(fn=cmd_benchmark)

    c = sub.add_parser("gantt", parents=[common], help="export an SVG Gantt chart and its CSV")
    c.add_argument("--instance", required=True)
    c.add_argument("--schedule", required=True)
    c.add_argument("--out", required=True)
    c.add_argument("--until", type=float, help="crop the time axis")
    c.set_defaults(fn=cmd_gantt)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    if args.deterministic:
        os.environ["LASER_WORKERS"] = "1"
    try:
        return args.fn(args)
    except (LaserError, OSError, ValueError) as exc:
        print(f"laser: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
