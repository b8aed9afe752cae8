"""Command line entry point: ``spawnnet {simulate,theory,analyze,compare}``.

Exit codes: 0 success, 1 usage error, 2 runtime or data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import analysis, export, theory
from .engine import ResourceLimitError, SimConfig, run, verify_tree

log = logging.getLogger("spawnnet")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2

_ROUNDING = {"ceil": "ceiling", "ceiling": "ceiling", "floor": "floor"}
_ENGINE = {"event": "event_driven", "event_driven": "event_driven", "sweep": "sweep"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _window(text: str) -> tuple[int, int]:
    try:
        lo, hi = (int(v) for v in text.split(":"))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"window must be A:B, got {text!r}") from exc
    if not 1 <= lo <= hi:
        raise argparse.ArgumentTypeError(f"window needs 1 <= A <= B, got {text!r}")
    return lo, hi


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="spawnnet", description=__doc__.splitlines()[0])
    parser.add_argument("--config", type=Path, help="JSON file whose keys mirror the flags")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="grow a network and write the run directory")
    p.add_argument("--max-nodes", type=int)
    p.add_argument("--max-ticks", type=int)
    p.add_argument("--rounding", choices=sorted(_ROUNDING))
    p.add_argument("--engine", choices=sorted(_ENGINE))
    p.add_argument("--out", type=Path)
    p.add_argument("--dot-limit", type=int, help="nodes in network.dot (default 100)")

    p = sub.add_parser("theory", help="write the analytic degree distribution table")
    p.add_argument("--max-q", type=int)
    p.add_argument("--evolve-n", type=int)
    p.add_argument("--q-cap", type=int)
    p.add_argument("--out", type=Path)

    p = sub.add_parser("analyze", help="fit distributions and growth curves of a run")
    p.add_argument("--in", dest="in_dir", type=Path)
    p.add_argument("--out", type=Path, help="defaults to <in>/analysis")
    p.add_argument("--xmin-scan", action="store_true", default=None)
    p.add_argument("--zipf", action="store_true", default=None)
    p.add_argument("--growth-fit", action="store_true", default=None)
    p.add_argument("--window", type=_window)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("compare", help="empirical degree shares vs. theory")
    p.add_argument("--in", dest="in_dir", type=Path)
    p.add_argument("--max-q", type=int)
    p.add_argument("--out", type=Path, help="defaults to <in>/compare.csv")
    return parser


def _merge_config(args: argparse.Namespace) -> argparse.Namespace:
    if args.config is None:
        return args
    try:
        data = json.loads(args.config.read_text())
    except OSError as exc:
        raise UsageError(f"cannot read config {args.config}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {args.config} is not valid JSON: {exc}") from exc
    aliases = {"in": "in_dir"}
    for key, value in data.items():
        attr = aliases.get(key, key).replace("-", "_")
        if not hasattr(args, attr) or attr in ("command", "config"):
            raise UsageError(f"config key {key!r} does not apply to {args.command}")
        if getattr(args, attr) is None:
            if attr in ("out", "in_dir") and value is not None:
                value = Path(value)
            if attr == "window" and isinstance(value, str):
                value = _window(value)
            setattr(args, attr, value)
    return args


def cmd_simulate(args) -> int:
    if (args.max_nodes is None) == (args.max_ticks is None):
        raise UsageError("simulate needs exactly one of --max-nodes / --max-ticks")
    if args.out is None:
        raise UsageError("simulate needs --out")
    try:
        config = SimConfig(
            max_nodes=args.max_nodes,
            max_ticks=args.max_ticks,
            rounding_rule=_ROUNDING[args.rounding or "ceil"],
            engine=_ENGINE[args.engine or "event"],
        )
    except (KeyError, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    result = run(config)
    report = verify_tree(result)
    if not report.valid:
        log.error("tree check failed: %s", report.violation)
        return EXIT_RUNTIME
    manifest = export.write_run(result, args.out)
    dot_limit = args.dot_limit if args.dot_limit is not None else 100
    if dot_limit >= 2 and result.node_count >= 2:
        export.write_dot(result, args.out, min(dot_limit, result.node_count))
    print(f"final_tick {result.final_tick}")
    print(f"node_count {result.node_count}")
    print(f"degree_sum {int(result.degree.sum())}")
    print(f"digest {manifest.events_digest}")
    return EXIT_OK


def cmd_theory(args) -> int:
    max_q = args.max_q if args.max_q is not None else 1000
    if max_q < 1:
        raise UsageError("--max-q must be >= 1")
    if args.out is None:
        raise UsageError("theory needs --out")
    table = theory.degree_table(max_q)
    export.write_theory_table(table, args.out / "theory.csv")
    rel = np.abs(table.p_recursive - table.p_closed) / table.p_closed
    print(f"rows {len(table)}")
    print(f"max_rel_recursive_vs_closed {rel.max():.3e}")
    if args.evolve_n is not None:
        q_cap = args.q_cap or theory.DEFAULT_Q_CAP
        if args.evolve_n <= 2:
            raise UsageError("--evolve-n must exceed 2")
        marks = np.unique(np.geomspace(3, args.evolve_n, num=60).astype(int))
        final, trace = theory.evolve_master(theory.initial_master_state(q_cap), args.evolve_n, checkpoints=marks)
        reference = theory.degree_pmf_recursive(q_cap)
        rows = [
            (s.n, s.p[0], s.p[1], s.p[2], s.overflow_mass, s.l1_distance(reference), s.max_drift)
            for s in [*trace, final]
        ]
        export.write_csv(
            args.out / "master_trace.csv",
            ("n", "p1", "p2", "p3", "overflow_mass", "l1_to_stationary", "max_mass_drift"),
            rows,
        )
        print(f"evolved_n {final.n}")
        print(f"p1 {float(final.p[0])!r} (stationary {3 / 7!r})")
        print(f"l1_to_stationary {final.l1_distance(reference):.3e}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    if args.in_dir is None:
        raise UsageError("analyze needs --in")
    result = export.read_run(args.in_dir)
    flags = (args.xmin_scan, args.zipf, args.growth_fit)
    everything = not any(flags)
    out = args.out or args.in_dir / "analysis"
    report, tables = analysis.analyze_run(
        result,
        xmin_scan=everything or bool(args.xmin_scan),
        zipf=everything or bool(args.zipf),
        growth_fit=everything or bool(args.growth_fit),
        window=args.window,
        seed=args.seed if args.seed is not None else 0,
    )
    export.write_json(out / "report.json", report)
    for name, (header, rows) in tables.items():
        export.write_csv(out / name, header, rows)
    fr = report["degree_fractions"]
    print(f"degree_fraction_q1 {fr.get('1', 0.0):.4f}")
    print(f"degree_fraction_q2 {fr.get('2', 0.0):.4f}")
    if "power_law" in report and "alpha" in report["power_law"]:
        pl = report["power_law"]
        print(f"power_law alpha {pl['alpha']:.4f} x_min {pl['x_min']}")
    if "zipf" in report:
        print(f"zipf rho {report['zipf']['rho']} (reference values 1.32, 1.5)")
    if "growth" in report:
        print(f"growth_exponent_total {report['growth']['total']['exponent']:.4f}")
        print(f"growth_exponent_degree2 {report['growth']['degree_2']['exponent']:.4f}")
    if "births" in report:
        print(f"births_mean {report['births']['full_run']['mean']:.3f}")
    return EXIT_OK


def cmd_compare(args) -> int:
    if args.in_dir is None or args.max_q is None:
        raise UsageError("compare needs --in and --max-q")
    if args.max_q < 1:
        raise UsageError("--max-q must be >= 1")
    result = export.read_run(args.in_dir)
    rows, summary = analysis.compare_run(result, args.max_q)
    out = args.out or args.in_dir / "compare.csv"
    header = tuple(rows[0].keys())
    export.write_csv(out, header, [tuple(r.values()) for r in rows])
    export.write_json(out.with_suffix(".json"), summary)
    head = rows[0]
    flag = " DISCREPANCY" if head["discrepancy"] else ""
    print(f"q=1 empirical {head['empirical']:.4f} theory {head['p_recursive']:.4f}{flag}")
    print(f"ks_empirical_vs_theory {summary['ks_empirical_vs_theory']:.4f}")
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "theory": cmd_theory, "analyze": cmd_analyze, "compare": cmd_compare}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args = _merge_config(args)
        return COMMANDS[args.command](args)
    except (UsageError, argparse.ArgumentTypeError) as exc:
        print(f"spawnnet: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (export.RunIOError, export.RunCorruptionError, ResourceLimitError, theory.NumericalIntegrityError) as exc:
        print(f"spawnnet: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ValueError, OSError) as exc:
        print(f"spawnnet: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
