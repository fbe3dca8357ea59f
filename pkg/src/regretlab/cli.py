"""Command-line front end.

Subcommands: ``simulate <config>``, ``report <trace.csv>``,
``lowerbound --eta X --T N``, ``verify-smooth <config>``, and
``plot <trace.csv> --kind {regret|bids}``.

Exit codes: 0 success, 1 usage or config problem, 2 certificate failure.
"""

from __future__ import annotations

import argparse
import os
import sys

__all__ = ["main"]


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; this artifact reserves 2 for
    certificate failures, so usage problems exit 1 instead."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> _Parser:
    parser = _Parser(prog="regretlab",
                     description="No-regret dynamics with checkable guarantees.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="run a config end to end, writing artifacts")
    p.add_argument("config", help="experiment config file")
    p.add_argument("--out", default=None, help="output directory (overrides "
                   "$REGRETLAB_OUT/<outputs.dir>)")

    p = sub.add_parser("report", help="recompute regrets and certificates from a trace")
    p.add_argument("trace", help="trace CSV written by simulate")

    p = sub.add_parser("lowerbound", help="two-strategy adversarial lower-bound runs")
    p.add_argument("--eta", type=float, required=True, help="step size")
    p.add_argument("--T", type=int, required=True, help="number of rounds (even)")

    p = sub.add_parser("verify-smooth", help="brute-force check a config's "
                       "smoothness claim")
    p.add_argument("config", help="experiment config file")

    p = sub.add_parser("plot", help="render an SVG from a trace")
    p.add_argument("trace", help="trace CSV written by simulate")
    p.add_argument("--kind", choices=("regret", "bids"), default="regret")
    p.add_argument("--out", default=None, help="output SVG path")
    return parser


def _read_file(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        print(f"error: cannot read {path}: {exc}", file=sys.stderr)
        raise SystemExit(1)


def _parse_config_file(path: str):
    from .config import ConfigError, parse_config

    try:
        spec = parse_config(_read_file(path))
    except ConfigError as exc:
        print(f"error: {path} is not a valid config:", file=sys.stderr)
        for problem in exc.errors:
            print(f"  {problem}", file=sys.stderr)
        raise SystemExit(1)
    # file references inside a config are relative to the config itself
    ref = spec.game.get("path")
    if ref is not None and not os.path.isabs(ref):
        spec.game["path"] = os.path.join(os.path.dirname(os.path.abspath(path)), ref)
    return spec


def _cmd_simulate(args) -> int:
    from .experiment import run_experiment

    spec = _parse_config_file(args.config)
    try:
        manifest = run_experiment(spec, out_dir=args.out)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    summary = manifest["summary"]
    fields = [f"T={summary['T']}", f"mode={summary['mode']}"]
    for key in ("sum_regret", "max_regret", "cce_gap", "avg_welfare",
                "sum_linearized_regret", "avg_total_cost", "eta"):
        if key in summary:
            fields.append(f"{key}={summary[key]:.6g}")
    print(" ".join(fields))
    for name, status in sorted(summary["certificates"].items()):
        print(f"certificate {name}: {status}")
    for key, path in sorted(manifest["artifacts"].items()):
        print(f"wrote {key}: {path}")
    return manifest["exit_code"]


def _cmd_report(args) -> int:
    from .dynamics import read_trace_csv
    from .experiment import full_report, write_report_csv

    try:
        trace = read_trace_csv(args.trace)
        rep = full_report(trace)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    sys.stdout.write(write_report_csv(rep))
    return 2 if rep.failed() else 0


def _cmd_lowerbound(args) -> int:
    from .library import lower_bound_experiment

    try:
        result = lower_bound_experiment(args.eta, args.T)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"eta={result.eta} T={result.T}")
    print(f"regret_on_identity={result.r_game_A!r}")
    print(f"regret_on_degenerate={result.r_game_Aprime!r}")
    print(f"closed_form_identity={result.closed_form_A!r}")
    print(f"closed_form_degenerate_floor={result.closed_form_Aprime_lb!r}")
    return 0


def _cmd_verify_smooth(args) -> int:
    from .experiment import build_game_from_config
    from .games import search_smoothness, verify_smoothness
    from .costmode import verify_cost_smoothness

    spec = _parse_config_file(args.config)
    if spec.smoothness is None:
        print("error: config claims no smoothness (game.lambda / game.mu missing)",
              file=sys.stderr)
        return 1
    game = build_game_from_config(spec.game)
    lam, mu = spec.smoothness["lambda"], spec.smoothness["mu"]
    s_star = spec.smoothness.get("s_star")
    try:
        if spec.mode == "cost":
            if s_star is None:
                print("error: cost-mode smoothness claims need game.s_star",
                      file=sys.stderr)
                return 1
            cert = verify_cost_smoothness(game, lam, mu, tuple(s_star))
        elif s_star is not None:
            cert = verify_smoothness(game, lam, mu, tuple(s_star))
        else:
            cert = search_smoothness(game, lam, mu)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    status = "verified" if cert.verified else "REFUTED"
    print(f"smoothness ({lam}, {mu}) {status}")
    print(f"s_star={list(cert.s_star)} slack={cert.slack!r} "
          f"worst_profile={list(cert.worst_profile)} opt={cert.opt!r}")
    return 0 if cert.verified else 2


def _cmd_plot(args) -> int:
    from .dynamics import read_trace_csv
    from .experiment import bids_plot, regret_plot
    from .svgplot import write_svg

    try:
        trace = read_trace_csv(args.trace)
        svg = regret_plot({"run": trace}) if args.kind == "regret" else bids_plot(trace)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    out = args.out or os.path.join(os.path.dirname(os.path.abspath(args.trace)),
                                   f"{args.kind}.svg")
    write_svg(svg, out)
    print(f"wrote {out}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "simulate": _cmd_simulate,
        "report": _cmd_report,
        "lowerbound": _cmd_lowerbound,
        "verify-smooth": _cmd_verify_smooth,
        "plot": _cmd_plot,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
