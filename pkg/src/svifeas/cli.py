"""Command line front end: run, replicate-sec7, verify, plot."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .feasibility import ConfigError


def _cmd_run(args) -> int:
    from . import harness

    cfg = harness.parse_config(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seeds"] = (args.seed,)
    if args.out is not None:
        overrides["out_dir"] = args.out
    if args.cadence is not None:
        overrides["evaluation"] = {**cfg.evaluation, "cadence": args.cadence}
    if overrides:
        import dataclasses

        cfg = dataclasses.replace(cfg, **overrides)
    records = harness.run_experiment_matrix(cfg)
    failures = [r for r in records if r.error is not None]
    for r in failures:
        print(f"run failed: block={r.block} seed={r.seed}: {r.error}",
              file=sys.stderr)
    if len(failures) == len(records):
        return 2
    harness.write_csv(records, cfg.out_dir)
    agg = Path(cfg.out_dir) / "aggregate.csv"
    harness.emit_plot_svg(agg, Path(cfg.out_dir) / "gap.svg")
    summary = harness.summarize(records, agg)
    harness.write_summary(summary, cfg.out_dir)
    print(f"wrote results to {cfg.out_dir}")
    return 2 if failures else 0


def _cmd_replicate(args) -> int:
    from . import harness

    summary = harness.replicate_zero_sum_study(seed_count=args.seeds,
                                               out_dir=args.out,
                                               horizon=args.horizon)
    for block, entry in summary["blocks"].items():
        final = entry["final"]["gap_invalpha_mean"]
        slope = entry["slope"].get("gap_invalpha_mean")
        slope_s = f"{slope:.3f}" if slope is not None else "n/a"
        print(f"{block}: final gap (inv-alpha avg) = {final:.4g}, "
              f"loglog slope = {slope_s}")
    if "sqrt_beats_cbrt" in summary:
        print(f"sqrt schedule beats cbrt (korpelevich, inv-alpha): "
              f"{summary['sqrt_beats_cbrt']}")
    print(f"wrote results to {args.out}")
    return 0


def _cmd_verify(args) -> int:
    from .verify import standard_report

    results = standard_report(fast=not args.full)
    all_ok = True
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{r.name:36s} {status}  measured={r.measured:.3e}  "
              f"threshold[{r.threshold}]")
        all_ok = all_ok and r.passed
    return 0 if all_ok else 2


def _cmd_plot(args) -> int:
    from . import harness

    out = args.out or str(Path(args.aggregate).with_suffix(".svg"))
    harness.emit_plot_svg(args.aggregate, out)
    print(f"wrote {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="svifeas",
        description="Stochastic VI solvers with randomized feasibility updates")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config")
    p_run.add_argument("--seed", type=int, default=None,
                       help="replace the config seed list with one seed")
    p_run.add_argument("--out", default=None, help="output directory override")
    p_run.add_argument("--cadence", type=int, default=None,
                       help="gap evaluation cadence override")
    p_run.set_defaults(func=_cmd_run)

    p_rep = sub.add_parser("replicate-sec7",
                           help="run the zero-sum game benchmark study")
    p_rep.add_argument("--seeds", type=int, default=5)
    p_rep.add_argument("--out", default="out")
    p_rep.add_argument("--horizon", type=int, default=5000)
    p_rep.set_defaults(func=_cmd_replicate)

    p_ver = sub.add_parser("verify", help="run the independent check suites")
    p_ver.add_argument("--full", action="store_true",
                       help="full-size (slower) check suites")
    p_ver.set_defaults(func=_cmd_verify)

    p_plot = sub.add_parser("plot", help="render an aggregate CSV as SVG")
    p_plot.add_argument("aggregate")
    p_plot.add_argument("--out", default=None)
    p_plot.set_defaults(func=_cmd_plot)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"run failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
