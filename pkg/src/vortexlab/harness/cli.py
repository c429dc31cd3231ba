"""Command-line entry point.

Subcommands: run, report, scenarios, accept.  Exit codes: 0 success,
1 validation error, 2 runtime abort.  VORTEXLAB_THREADS limits the
compiled kernels' thread count.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

from .accept import CRITERIA, run_suite
from .config import ConfigError, ScenarioConfig, load_config
from .report import ReportError, sweep_report
from .run import run_scenario
from .scenarios import builtin_scenarios, get_scenario

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2


def _apply_thread_env() -> None:
    threads = os.environ.get("VORTEXLAB_THREADS")
    if threads:
        import numba
        numba.set_num_threads(max(1, int(threads)))


def _resolve_config(spec: str) -> ScenarioConfig:
    path = Path(spec)
    if path.exists():
        return load_config(path)
    try:
        return get_scenario(spec)
    except KeyError:
        raise ConfigError(spec, "neither a config file nor a builtin scenario name")


def _cmd_run(args) -> int:
    config = _resolve_config(args.config)
    manifests = run_scenario(config, args.out, serial=args.serial,
                             velocity_override=args.velocity, force=args.force)
    aborted = [m for m in manifests if m.aborted]
    for m in manifests:
        status = "aborted" if m.aborted else "ok"
        print(f"{m.scenario} eps={m.epsilon:g}: {status}  "
              f"N={m.n_particles}  ->  {m.directory}")
    return EXIT_RUNTIME if aborted else EXIT_OK


def _cmd_report(args) -> int:
    summary = sweep_report(args.dirs, args.out)
    if args.out:
        print(f"summary written to {args.out}")
    else:
        json.dump(summary, sys.stdout, indent=1, sort_keys=True)
        print()
    return EXIT_OK


def _cmd_scenarios(args) -> int:
    if args.action == "list":
        for cfg in builtin_scenarios():
            eps = ",".join(f"{e:g}" for e in cfg.epsilons)
            print(f"{cfg.name}: {len(cfg.vortices)} vortices, eps=[{eps}], "
                  f"T={cfg.t_end:g}")
    else:
        cfg = get_scenario(args.name)
        json.dump(cfg.to_dict(), sys.stdout, indent=1, sort_keys=True)
        print()
    return EXIT_OK


def _cmd_accept(args) -> int:
    if args.suite == "all":
        names = list(CRITERIA)
    elif args.suite in CRITERIA:
        names = [args.suite]
    else:
        known = ", ".join(CRITERIA)
        raise ConfigError(args.suite, f"unknown suite; pick one of: all, {known}")
    workdir = args.out or tempfile.mkdtemp(prefix="vortexlab-accept-")
    results = run_suite(names, workdir)
    for res in results:
        print(res.line())
    n_fail = sum(not r.passed for r in results)
    print(f"{len(results) - n_fail}/{len(results)} criteria passed "
          f"(outputs in {workdir})")
    return EXIT_OK if n_fail == 0 else EXIT_RUNTIME


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vortexlab",
        description="Desk-scale laboratory for 2D point-vortex dynamics")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario config or builtin")
    p_run.add_argument("config", help="JSON config path or builtin scenario name")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--serial", action="store_true",
                       help="bit-reproducible single-thread reference mode")
    p_run.add_argument("--velocity", choices=["direct", "tree"], default=None,
                       help="override the configured velocity method")
    p_run.add_argument("--force", action="store_true",
                       help="allow runs beyond the desk-scale particle budget")
    p_run.set_defaults(func=_cmd_run)

    p_rep = sub.add_parser("report", help="summarize run directories")
    p_rep.add_argument("dirs", nargs="+", help="run directories")
    p_rep.add_argument("--out", default=None, help="summary JSON path")
    p_rep.set_defaults(func=_cmd_report)

    p_sc = sub.add_parser("scenarios", help="list or show builtin scenarios")
    sc_sub = p_sc.add_subparsers(dest="action", required=True)
    sc_list = sc_sub.add_parser("list")
    sc_list.set_defaults(func=_cmd_scenarios, action="list")
    sc_show = sc_sub.add_parser("show")
    sc_show.add_argument("name")
    sc_show.set_defaults(func=_cmd_scenarios, action="show")

    p_acc = sub.add_parser("accept", help="run acceptance criteria")
    p_acc.add_argument("suite", help="'all' or a criterion name")
    p_acc.add_argument("--out", default=None, help="working directory for runs")
    p_acc.set_defaults(func=_cmd_accept)
    return parser


def main(argv=None) -> int:
    _apply_thread_env()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ReportError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # runtime aborts keep partial outputs on disk
        print(f"runtime abort: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
