"""Command-line interface.

Subcommands: generate, ks-run, mc, fluid, variance, analyze, sweep, bench.
Every parameter can also come from a plain-text config file of
``key = value`` lines (keys named like the long flags); explicit flags
override the file.
"""

from __future__ import annotations

import argparse
import sys
import time
from typing import Optional, Sequence

import numpy as np

from . import covariance as cov
from . import fluid
from .graphs import read_graph, write_graph
from .ks import HAVE_COMPILED_KERNELS, StopRule, run_ks
from .mc import (
    ExperimentConfig,
    analyze,
    compare_models,
    generate_graph,
    read_samples,
    run_monte_carlo,
    sweep_core,
)
from .rng import RngStream

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _parse_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise SystemExit(f"{path}:{lineno}: expected 'key = value'")
            key, val = line.split("=", 1)
            values[key.strip().replace("-", "_")] = val.strip()
    return values


def _coerce(value: str, like) -> object:
    if isinstance(like, bool):
        low = value.lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise SystemExit(f"expected a boolean, got {value!r}")
    if isinstance(like, int):
        return int(value)
    if isinstance(like, float):
        return float(value)
    return value


def _command_defaults(parser: argparse.ArgumentParser, command: str) -> dict[str, object]:
    for action in parser._actions:  # the subparsers action holds per-command parsers
        if isinstance(action, argparse._SubParsersAction):
            sub = action.choices[command]
            return {a.dest: a.default for a in sub._actions if a.dest != "help"}
    return {}


def _apply_config(parser: argparse.ArgumentParser, args: argparse.Namespace) -> argparse.Namespace:
    path = getattr(args, "config", None)
    if not path:
        return args
    file_values = _parse_config_file(path)
    defaults = _command_defaults(parser, args.command)
    for key, raw in file_values.items():
        if key not in defaults:
            raise SystemExit(f"config key {key!r} does not match any flag of {args.command!r}")
        if getattr(args, key) == defaults[key]:  # flag not given explicitly: file wins
            like = defaults[key] if defaults[key] is not None else ""
            setattr(args, key, _coerce(raw, like))
    return args


def _require(args: argparse.Namespace, *keys: str) -> None:
    missing = [k for k in keys if getattr(args, k) is None]
    if missing:
        flags = ", ".join("--" + k.replace("_", "-") for k in missing)
        raise SystemExit(f"{args.command}: missing required {flags} (flag or config file)")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value file; flags override it")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--engine", default="auto", choices=("auto", "compiled", "python"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kslab")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="sample one graph and write its text form")
    _add_common(p)
    p.add_argument("--model", default="gnm", choices=("gnp", "gnm", "multigraph-fixed",
                                                      "multigraph-binomial"))
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--c", type=float, default=2.0)
    p.add_argument("--out", default="-", help="path or - for stdout")

    p = sub.add_parser("ks-run", help="run leaf removal on a graph")
    _add_common(p)
    p.add_argument("--infile", help="graph file (default: generate per --model/--n/--c)")
    p.add_argument("--model", default="gnm")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--c", type=float, default=2.0)
    p.add_argument("--stop", default="no-leaves", choices=("no-leaves", "edges", "steps"))
    p.add_argument("--delta", type=float, default=0.05, help="edge threshold fraction")
    p.add_argument("--k", type=int, default=0, help="step budget for --stop steps")
    p.add_argument("--trace-out", help="CSV of per-step statistics")
    p.add_argument("--core-out", help="text file for the final core graph")

    p = sub.add_parser("mc", help="Monte Carlo sampling of observables")
    _add_common(p)
    p.add_argument("--model", default="gnm", choices=("gnp", "gnm", "multigraph-fixed",
                                                      "multigraph-binomial"))
    p.add_argument("--n", type=int, default=10000)
    p.add_argument("--c", type=float, default=2.0)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--out", default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--kcap", type=int, default=30)
    p.add_argument("--no-matching", action="store_true")
    p.add_argument("--no-rank", action="store_true")
    p.add_argument("--degree-law", action="store_true")

    p = sub.add_parser("fluid", help="tabulate the fluid trajectory")
    _add_common(p)
    p.add_argument("--c", type=float, default=2.0)
    p.add_argument("--num", type=int, default=512)
    p.add_argument("--z-min", type=float, default=0.0)
    p.add_argument("--out", default="-")

    p = sub.add_parser("variance", help="stopped covariance ladder and sigma44 limit")
    _add_common(p)
    p.add_argument("--c", type=float, default=2.0)
    p.add_argument("--model", default="gnm",
                   help="model name or covariance tag (fixed-edges / binomial-edges)")
    p.add_argument("--delta0", type=float, default=0.05)
    p.add_argument("--levels", type=int, default=7)
    p.add_argument("--kcap", type=int, default=30)
    p.add_argument("--out", default="-")

    p = sub.add_parser("analyze", help="analyze a samples CSV")
    _add_common(p)
    p.add_argument("--samples", default=None, help="samples CSV from the mc command")
    p.add_argument("--model", default="gnm")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--c", type=float, default=None)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--report", help="write the text report here (default stdout)")
    p.add_argument("--report-csv", help="write the machine-readable report here")

    p = sub.add_parser("sweep", help="core fraction across a grid of c")
    _add_common(p)
    p.add_argument("--n", type=int, default=20000)
    p.add_argument("--c-grid", default="0.5,1.0,1.5,2.0,2.5,2.718,3.0,3.2",
                   help="comma-separated values of c")
    p.add_argument("--samples", type=int, default=30)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="-")

    p = sub.add_parser("compare", help="simple-vs-multigraph model comparison")
    _add_common(p)
    p.add_argument("--n", type=int, default=10000)
    p.add_argument("--c", type=float, default=2.0)
    p.add_argument("--samples", type=int, default=500)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("bench", help="compare the compiled and pure-Python kernels")
    _add_common(p)
    p.add_argument("--n", type=int, default=20000)
    p.add_argument("--c", type=float, default=2.0)
    p.add_argument("--repeats", type=int, default=3)

    return parser


def _open_out(path: str):
    if path == "-":
        return sys.stdout, False
    return open(path, "w"), True


def _cmd_generate(args) -> int:
    g = generate_graph(args.model, args.n, args.c, RngStream(args.seed, (0,)))
    fh, own = _open_out(args.out)
    try:
        write_graph(g, fh)
    finally:
        if own:
            fh.close()
    return 0


def _cmd_ks_run(args) -> int:
    if args.infile:
        g = read_graph(args.infile)
    else:
        g = generate_graph(args.model, args.n, args.c, RngStream(args.seed, (0,)))
    if args.stop == "no-leaves":
        rule = StopRule.no_leaves()
    elif args.stop == "edges":
        rule = StopRule.edges_at_most(args.delta)
    else:
        rule = StopRule.step_limit(args.k)
    trace = run_ks(g, rule, RngStream(args.seed, (1,)), engine=args.engine)
    x1, x2, x3, x4 = trace.final_stats
    print(f"stop={trace.stop_reason} steps={x4} X1={x1} X2={x2} X3={x3} "
          f"core_v={trace.core.n} core_e={trace.core.num_edges}")
    if args.trace_out:
        trace.write_csv(args.trace_out)
    if args.core_out:
        write_graph(trace.core, args.core_out)
    return 0


def _cmd_mc(args) -> int:
    _require(args, "out")
    cfg = ExperimentConfig(
        model=args.model, n=args.n, c=args.c, samples=args.samples,
        seed=args.seed, delta=args.delta,
        matching=not args.no_matching, rank=not args.no_rank,
        degree_law=args.degree_law, kcap=args.kcap,
        out=args.out, workers=args.workers, engine=args.engine,
    )
    t0 = time.perf_counter()
    records = run_monte_carlo(cfg)
    dt = time.perf_counter() - t0
    print(f"wrote {len(records)} samples to {args.out} in {dt:.1f}s")
    return 0


def _cmd_fluid(args) -> int:
    table = fluid.trajectory(args.c, num=args.num, z_min=args.z_min)
    fh, own = _open_out(args.out)
    try:
        fh.write("z,s,chi1,chi2,chi3,chi4,F1,F2,F3\n")
        for i in range(table["z"].size):
            cells = [table["z"][i], table["s"][i], *table["chi"][i], *table["F"][i][:3]]
            fh.write(",".join(repr(float(v)) for v in cells) + "\n")
    finally:
        if own:
            fh.close()
    return 0


def _cmd_variance(args) -> int:
    ladder = cov.limiting_sigma44(
        args.c, cov.canonical_model(args.model),
        delta0=args.delta0, levels=args.levels, kcap=args.kcap,
    )
    fh, own = _open_out(args.out)
    try:
        fh.write("c,model,delta,sigma11,sigma22,sigma33,sigma44,sigma44_limit\n")
        for k in range(ladder.deltas.size):
            d = ladder.diag[k]
            cells = [ladder.deltas[k], *d, ladder.sigma44_limit]
            fh.write(f"{ladder.c!r},{ladder.model}," +
                     ",".join(repr(float(v)) for v in cells) + "\n")
    finally:
        if own:
            fh.close()
    for w in ladder.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return 0


def _cmd_analyze(args) -> int:
    _require(args, "samples", "n", "c")
    records = read_samples(args.samples)
    cfg = ExperimentConfig(
        model=args.model, n=args.n, c=args.c, samples=len(records),
        seed=args.seed, delta=args.delta,
    )
    report = analyze(records, cfg)
    text = report.render_text()
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.report_csv:
        report.write_csv(args.report_csv)
    return 0


def _cmd_sweep(args) -> int:
    grid = [float(v) for v in args.c_grid.split(",") if v.strip()]
    rows = sweep_core(args.n, grid, args.samples, args.seed,
                      engine=args.engine, workers=args.workers)
    fh, own = _open_out(args.out)
    try:
        fh.write("c,samples,core_fraction_mean,core_fraction_se\n")
        for r in rows:
            fh.write(f"{r.c!r},{r.samples},{float(r.core_fraction_mean)!r},{float(r.core_fraction_se)!r}\n")
    finally:
        if own:
            fh.close()
    return 0


def _cmd_compare(args) -> int:
    rep = compare_models(args.n, args.c, args.samples, args.seed,
                         engine=args.engine, workers=args.workers)
    print(f"simple fraction: {rep.simple_fraction:.4f} "
          f"(predicted {rep.predicted_simple_fraction:.4f}, gap {rep.simple_gap:+.4f})")
    print(f"nu two-sample KS: D={rep.nu_ks.statistic:.4f} "
          f"1% threshold {rep.nu_ks.threshold(0.01):.4f} rejects={rep.nu_ks.rejects(0.01)}")
    return 0


def _cmd_bench(args) -> int:
    if not HAVE_COMPILED_KERNELS:
        print("compiled kernels unavailable; nothing to compare", file=sys.stderr)
        return 1
    rng = RngStream(args.seed)
    g = generate_graph("gnm", args.n, args.c, rng.child(0))
    times = {"compiled": [], "python": []}
    for engine in ("compiled", "python"):
        for _ in range(args.repeats):
            t0 = time.perf_counter()
            trace = run_ks(g, StopRule.no_leaves(), rng.child(1), engine=engine)
            times[engine].append(time.perf_counter() - t0)
        times[engine + "_final"] = trace.final_stats  # type: ignore[assignment]
    assert times["compiled_final"] == times["python_final"], "kernels disagree"
    tc = min(times["compiled"])
    tp = min(times["python"])
    print(f"n={args.n} c={args.c}: compiled {tc * 1e3:.2f} ms, "
          f"python {tp * 1e3:.2f} ms, speedup {tp / tc:.1f}x (identical traces)")
    return 0


_COMMANDS = {
    "generate": _cmd_generate,
    "ks-run": _cmd_ks_run,
    "mc": _cmd_mc,
    "fluid": _cmd_fluid,
    "variance": _cmd_variance,
    "analyze": _cmd_analyze,
    "sweep": _cmd_sweep,
    "compare": _cmd_compare,
    "bench": _cmd_bench,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args = _apply_config(parser, args)
    return _COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
