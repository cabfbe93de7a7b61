"""Command line harness: scans, growth checks, demos, and module checks.

Every experiment prints the measured slopes next to their reference
exponents and writes csv/dat/json/png reports; the exit code is 0 only
when every printed bound holds.  `packets`, `partition`, and `geometry`
run the built-in module health checks.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .experiments import (
    ExperimentConfig,
    config_hash,
    exponent_scan,
    part_a_check,
    reduction_demo,
)
from .report import emit_report
from .selfcheck import geometry_check, packets_check, partition_check

CONFIG_GRAMMAR = """\
config file grammar: one `key = value` pair per line; `#` starts a
comment; blank lines are ignored.  Keys are the long flag names without
dashes (R, p, q, K, M, A, seeds, dt, grid, out); list values (R, seeds)
are whitespace or comma separated.  Command-line flags win over the
file, the file wins over defaults."""

_LIST_KEYS = {"R", "seeds"}
_INT_KEYS = {"K", "A"}
_FLOAT_KEYS = {"p", "q", "M", "dt"}
_STR_KEYS = {"grid", "out"}


def parse_config_file(path) -> dict:
    """Parse the documented key = value grammar into an option dict."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected `key = value`")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key in _LIST_KEYS:
            out[key] = [int(v) for v in value.replace(",", " ").split()]
        elif key in _INT_KEYS:
            out[key] = int(value)
        elif key in _FLOAT_KEYS:
            out[key] = float(value)
        elif key in _STR_KEYS:
            out[key] = value
        else:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
    return out


def _add_experiment_flags(sub):
    sub.add_argument("--R", nargs="+", type=int, default=None,
                     help="ball radii, at least 3 to fit a slope")
    sub.add_argument("--p", type=float, default=None, help="region exponent")
    sub.add_argument("--q", type=float, default=None,
                     help="time aggregation exponent")
    sub.add_argument("--K", type=int, default=None,
                     help="cap count parameter (default scales with R)")
    sub.add_argument("--M", type=float, default=None, help="cap scale factor")
    sub.add_argument("--A", type=int, default=None,
                     help="number of excluded direction sets")
    sub.add_argument("--seeds", nargs="+", type=int, default=None,
                     help="ensemble seeds (-1 is reserved)")
    sub.add_argument("--dt", type=float, default=None, help="time step")
    sub.add_argument("--grid", choices=("band", "full"), default=None,
                     help="survey grid: reduced band block or native")
    sub.add_argument("--out", default=None, help="report directory")
    sub.add_argument("--config", default=None,
                     help="key = value options file (see grammar below)")


_DEFAULTS = {
    "scan": {"R": [64, 128, 256, 512], "out": "reports"},
    "part-a": {"R": [36, 64, 100, 144], "A": 0, "out": "reports"},
    "reduction": {"R": [32, 64, 128], "out": "reports"},
}


def _resolve(args, command: str) -> tuple[ExperimentConfig, str]:
    opts = dict(_DEFAULTS[command])
    if args.config:
        opts.update(parse_config_file(args.config))
    for key in ("R", "p", "q", "K", "M", "A", "seeds", "dt", "grid", "out"):
        val = getattr(args, key)
        if val is not None:
            opts[key] = val
    out = opts.pop("out")
    kwargs = {}
    if "R" in opts:
        kwargs["radii"] = tuple(opts.pop("R"))
    if "seeds" in opts:
        kwargs["seeds"] = tuple(opts.pop("seeds"))
    kwargs.update(opts)
    kwargs["include_focusing"] = command == "scan"
    return ExperimentConfig(**kwargs), out


def _print_fits(fits_by_p: dict, slack: float) -> bool:
    ok = True
    for p in sorted(fits_by_p, key=float):
        fit = fits_by_p[p]
        bound = fit["target"] + slack
        if abs(bound) < 1e-12:
            bound = 0.0
        print(f"  p={p}: slope {fit['slope']:+.4f}  bound {bound:+.4f}  "
              f"margin {fit['margin']:+.4f}  residual {fit['residual']:.4f}")
        ok = ok and fit["margin"] >= 0.0
    return ok


def _run_scan(args) -> int:
    config, out = _resolve(args, "scan")
    result = exponent_scan(config)
    paths = emit_report(result, out)
    print(f"scan  [{config_hash(config)}]")
    for path in paths:
        print(f"  wrote {path}")
    ok = _print_fits(result.comparison["fits_by_p"], 0.15)
    c = result.comparison
    print(f"  control: slope {c['control_slope']:.4f}  "
          f"target {c['control_target']:.4f}  "
          f"error {c['control_error']:.4f} (bound 0.02)")
    ok = ok and c["control_error"] <= 0.02
    print(f"  note: {result.extras['note']}")
    print(f"  status: {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


def _run_part_a(args) -> int:
    config, out = _resolve(args, "part-a")
    result = part_a_check(config)
    paths = emit_report(result, out)
    print(f"part-a  [{config_hash(config)}]")
    for path in paths:
        print(f"  wrote {path}")
    print(f"  K per R: {result.extras['K_per_R']}")
    ok = _print_fits(result.comparison["fits_by_p"], 0.1)
    print(f"  status: {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


def _run_reduction(args) -> int:
    config, out = _resolve(args, "reduction")
    result = reduction_demo(config)
    paths = emit_report(result, out)
    print(f"reduction  [{config_hash(config)}]")
    for path in paths:
        print(f"  wrote {path}")
    c = result.comparison
    print(f"  violations: {c['violations_total']}  "
          f"worst relative margin {c['worst_relative_margin']:.3e}")
    print(f"  A=0 violations: {c['zero_exclusion_violations']}")
    print(f"  single-cap narrow share: {c['single_cap_narrow_share']:.6f} "
          "(bound >= 0.99)")
    ok = (c["violations_total"] == 0
          and c["zero_exclusion_violations"] == 0
          and c["single_cap_narrow_share"] >= 0.99)
    print(f"  status: {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


def _run_selfcheck(args, name: str) -> int:
    if name == "packets":
        R = args.R[0] if args.R else 64
        seeds = tuple(args.seeds) if args.seeds else (1, 2, 3)
        report = packets_check(R=R, seeds=seeds)
    elif name == "partition":
        seeds = tuple(args.seeds) if args.seeds else (11, 29)
        report = partition_check(seeds=seeds)
    else:
        report = geometry_check()
    outdir = Path(args.out or "reports")
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / f"{name}-check.json"
    path.write_text(json.dumps(report, indent=2, allow_nan=False) + "\n")
    print(f"{name}  [{report['params_hash']}]")
    print(f"  wrote {path}")
    for key, c in report.get("checks", {}).items():
        print(f"  {key}: {c['value']}  (bound {c['bound']})")
    for run in report.get("runs", []):
        print(f"  seed {run['seed']} D={run['D']}: cells {run['n_cells']} "
              f"floor x{run['min_cell_over_floor']:.3f} "
              f"degradation {run['perturb_degradation']:.4f} "
              f"{'ok' if run['ok'] else 'FAIL'}")
    print(f"  status: {'PASS' if report['ok'] else 'FAIL'}")
    return 0 if report["ok"] else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="maxwave",
        description=__doc__.split("\n\n")[0],
        epilog=CONFIG_GRAMMAR,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    subs = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("scan", "maximal ratio exponent scan with the plane-wave control"),
        ("part-a", "single-direction broad-norm growth check"),
        ("reduction", "broad/narrow domination demo with the measured split"),
    ):
        sub = subs.add_parser(name, help=text,
                              epilog=CONFIG_GRAMMAR,
                              formatter_class=argparse.RawDescriptionHelpFormatter)
        _add_experiment_flags(sub)
    for name, text in (
        ("packets", "frame and localization health check"),
        ("partition", "sign-cell partition health check"),
        ("geometry", "variety geometry health check"),
    ):
        sub = subs.add_parser(name, help=text)
        sub.add_argument("--R", nargs="+", type=int, default=None)
        sub.add_argument("--seeds", nargs="+", type=int, default=None)
        sub.add_argument("--out", default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "scan":
            return _run_scan(args)
        if args.command == "part-a":
            return _run_part_a(args)
        if args.command == "reduction":
            return _run_reduction(args)
        return _run_selfcheck(args, args.command)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
