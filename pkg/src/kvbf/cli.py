"""Command line interface: ``kvbf <convergence|simulate|check> <config.toml> [--out DIR]``.

Exit codes: 0 success, 1 configuration error, 2 solver failure, 3 check failure.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SOLVER = 2
EXIT_CHECK = 3

_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")

log = logging.getLogger("kvbf")


def _limit_threads() -> None:
    """Apply KVBF_THREADS (default 1) to the BLAS/OpenMP pools before numpy loads."""
    raw = os.environ.get("KVBF_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise SystemExit(f"kvbf: KVBF_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise SystemExit(f"kvbf: KVBF_THREADS must be a positive integer, got {raw!r}")
    for var in _THREAD_VARS:
        os.environ[var] = str(n)


class _Parser(argparse.ArgumentParser):
    # usage errors share the configuration exit code; 2 is reserved for solver failures
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="kvbf", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=("convergence", "simulate", "check"))
    parser.add_argument("config", help="TOML run configuration")
    parser.add_argument("--out", help="output directory (overrides [output] directory)")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    return parser


def cmd_convergence(cfg, out: Path) -> int:
    from .mms import observed_rates
    from .output import format_table, write_table
    from .scenarios import run_convergence

    if cfg.scenario != "mms2d":
        print("kvbf: convergence needs scenario = \"mms2d\"", file=sys.stderr)
        return EXIT_CONFIG
    reports = run_convergence(cfg)
    path = write_table(reports, out / "table.csv")
    sys.stdout.write(format_table(reports))
    if len(reports) > 1:
        last = observed_rates(reports)[-1]
        log.info("last-interval rates: %s", {k: round(v, 3) for k, v in last.items()})
    print(f"wrote {path}")
    return EXIT_OK


def cmd_simulate(cfg, out: Path) -> int:
    from .output import write_timeseries, write_vtk
    from .scenarios import channel_mesh, mms_problem, region_mean_speed, run_channel
    from .spaces import build_spaces
    from .timeloop import TimeGrid

    n = cfg.levels[-1]
    vtk_dir = out / "vtk"
    if cfg.vtk:
        vtk_dir.mkdir(parents=True, exist_ok=True)

    if cfg.scenario == "channel":
        spaces = build_spaces(channel_mesh(cfg, n), cfg.element)
        kappas = [cfg.kappa] + [k for k in cfg.kappa_sweep if k != cfg.kappa]
        rows = []
        for i, kappa in enumerate(kappas):
            writer = None
            if cfg.vtk and i == 0:
                def writer(step, state):
                    write_vtk(state, spaces.mesh, spaces, vtk_dir / f"state_{step:05d}.vtk",
                              title=f"kvbf channel kappa={kappa:g} t={state.t:.6g}")
            run = run_channel(cfg, kappa, n, on_state=writer, spaces=spaces)
            rows.extend(run.rows)
            last = run.rows[-1]
            print(f"kappa={kappa:g}: mean |u| channel={last['mean_speed_channel']:.4e} "
                  f"matrix={last['mean_speed_matrix']:.4e} ratio={run.ratio:.3f} "
                  f"newton={run.iterations:.2f}")
        path = write_timeseries(rows, out / "timeseries.csv")
        print(f"wrote {path}")
        return EXIT_OK

    problem, exact = mms_problem(cfg, n)
    spaces = problem.spaces
    rows = []

    def record(step, state, report):
        speeds = region_mean_speed(spaces, state.u)
        rows.append({"kappa": cfg.kappa, "step": step, "t": state.t,
                     "mean_speed_channel": speeds["channel"], "mean_speed_matrix": speeds["matrix"],
                     "newton_iterations": 0 if report is None else report.iterations})
        if cfg.vtk:
            write_vtk(state, spaces.mesh, spaces, vtk_dir / f"state_{step:05d}.vtk",
                      title=f"kvbf mms2d t={state.t:.6g}")

    initial = problem.initial_state(exact.u0, cfg.initial_data, grad_u0=exact.grad_u0)
    problem.run(initial, TimeGrid.from_dt(cfg.T, cfg.dt), record)
    path = write_timeseries(rows, out / "timeseries.csv")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_check(cfg, out: Path) -> int:
    from .checks import run_checks

    results = run_checks(cfg.element)
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_CHECK if failed else EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    _limit_threads()
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(message)s")

    from .config import ConfigError, load
    from .solver import NewtonError, SingularMatrixError
    from .timeloop import TransientError

    try:
        cfg = load(args.config)
    except ConfigError as exc:
        print(f"kvbf: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out or cfg.directory)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"kvbf: cannot create output directory {str(out)!r}: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    commands = {"convergence": cmd_convergence, "simulate": cmd_simulate, "check": cmd_check}
    try:
        return commands[args.command](cfg, out)
    except (NewtonError, TransientError, SingularMatrixError) as exc:
        print(f"kvbf: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
