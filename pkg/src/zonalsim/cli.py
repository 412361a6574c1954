"""Command-line entry point.

Subcommands:

* ``run``     execute one scenario, write metrics/trace/dumps to --out
* ``audit``   run the privacy auditor over a finished run directory
* ``compare`` run zonal and baseline with one seed, print the traffic table

Exit codes: 0 success (audit: clean), 1 audit violations, 2 usage or
configuration errors. ``ZONALSIM_LOG`` selects log verbosity.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import audit as audit_mod
from .config import ConfigError, ScenarioConfig
from .scenario import RunResult, run_scenario

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VIOLATIONS = 1
EXIT_ERROR = 2


def _setup_logging() -> None:
    level_name = os.environ.get("ZONALSIM_LOG", "warning").upper()
    level = getattr(logging, level_name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _load_config(args: argparse.Namespace) -> ScenarioConfig:
    config = ScenarioConfig.load(args.config) if args.config else ScenarioConfig()
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "mode", None) is not None:
        overrides["mode"] = args.mode
    return config.replace(**overrides) if overrides else config


def _cmd_run(args: argparse.Namespace) -> int:
    config = _load_config(args)
    result = run_scenario(config)
    result.write(Path(args.out))
    for line in result.metrics.to_lines():
        print(line)
    print(f"wrote run artifacts to {args.out}")
    return EXIT_OK


def _cmd_audit(args: argparse.Namespace) -> int:
    run_dir = Path(args.run_dir)
    violations, linkage = audit_mod.audit_run_dir(run_dir)
    audit_mod.write_reports(run_dir, violations, linkage)
    print(f"{len(violations)} violations")
    if linkage.empty:
        print("no cross-provider join keys")
    else:
        print(
            f"cross-provider join keys on {','.join(linkage.fields_involved)} "
            f"(max cardinality {linkage.max_join_cardinality})"
        )
    print(f"reports written to {run_dir / 'audit'}")
    return EXIT_VIOLATIONS if violations else EXIT_OK


def _traffic_table(zonal: RunResult, baseline: RunResult) -> list[str]:
    rows = [
        ("authentications", len(zonal.attempts), len(baseline.attempts)),
        ("cidr_auth_requests", zonal.metrics.cidr_auth_requests, baseline.metrics.cidr_auth_requests),
        ("cidr_fetch_requests", zonal.metrics.cidr_fetch_requests, baseline.metrics.cidr_fetch_requests),
        ("zonal_local_hits", zonal.metrics.zonal_local_hits, baseline.metrics.zonal_local_hits),
        ("zonal_cache_hits", zonal.metrics.zonal_cache_hits, baseline.metrics.zonal_cache_hits),
    ]
    zonal_cidr_load = zonal.metrics.cidr_auth_requests + zonal.metrics.cidr_fetch_requests
    baseline_cidr_load = baseline.metrics.cidr_auth_requests + baseline.metrics.cidr_fetch_requests
    rows.append(("cidr_requests_total", zonal_cidr_load, baseline_cidr_load))
    lines = [f"{'metric':<22} {'zonal':>10} {'baseline':>10}"]
    lines += [f"{name:<22} {z:>10} {b:>10}" for name, z, b in rows]
    if baseline_cidr_load:
        ratio = zonal_cidr_load / baseline_cidr_load
        lines.append(f"central registry load ratio (zonal/baseline): {ratio:.3f}")
    return lines


def _cmd_compare(args: argparse.Namespace) -> int:
    config = _load_config(args)
    zonal = run_scenario(config.replace(mode="zonal"))
    baseline = run_scenario(config.replace(mode="baseline"))
    table = _traffic_table(zonal, baseline)
    if args.out:
        out = Path(args.out)
        zonal.write(out / "zonal")
        baseline.write(out / "baseline")
        (out / "compare.txt").parent.mkdir(parents=True, exist_ok=True)
        (out / "compare.txt").write_text("\n".join(table) + "\n", encoding="utf-8")
    for line in table:
        print(line)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zonalsim",
        description="Deterministic simulator for zonally decentralized identity authentication.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute one scenario")
    run_p.add_argument("--config", type=Path, help="scenario config JSON")
    run_p.add_argument("--out", type=Path, required=True, help="output directory")
    run_p.add_argument("--seed", type=int, help="override the config seed")
    run_p.add_argument("--mode", choices=("zonal", "baseline"), help="override the config mode")
    run_p.set_defaults(func=_cmd_run)

    audit_p = sub.add_parser("audit", help="audit a finished run directory")
    audit_p.add_argument("run_dir", type=Path, help="directory written by `zonalsim run`")
    audit_p.set_defaults(func=_cmd_audit)

    cmp_p = sub.add_parser("compare", help="run both modes with one seed")
    cmp_p.add_argument("--config", type=Path, help="scenario config JSON")
    cmp_p.add_argument("--out", type=Path, help="optional output directory")
    cmp_p.add_argument("--seed", type=int, help="override the config seed")
    cmp_p.set_defaults(func=_cmd_compare)

    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, audit_mod.AuditError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
