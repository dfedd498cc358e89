"""Command line entry point: ``npidob simulate | certify | compare``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .analysis import compare_runs, compute_metrics, steady_windows
from .config import ControllerVariant, bundled_config, read_config
from .errors import ConfigError, NonFiniteState, NotHurwitz
from .simulation import run_scenario
from .stability import StabilityQuery, gamma_star, mechanical_matrix

log = logging.getLogger("npidob")


def _load(path_or_name):
    path = Path(path_or_name)
    if not path.exists() and path.suffix == "" and "/" not in str(path_or_name):
        return bundled_config(str(path_or_name))
    return read_config(path)


def _cmd_simulate(args):
    p, g, s = _load(args.config)
    if args.variant:
        s = s.with_variant(args.variant)
    t0 = time.perf_counter()
    traj = run_scenario(p, g, s, seed=args.seed)
    traj.to_csv(args.out)
    log.info("wrote %d records to %s in %.2f s", len(traj), args.out, time.perf_counter() - t0)
    return 0


def _cmd_certify(args):
    p, g, _ = _load(args.config)
    t0 = time.perf_counter()
    q = StabilityQuery(args.loop, args.q0, args.epsilon, args.delta)
    report = gamma_star(q, p, g, norm=args.norm)
    A_m, hurwitz_m = mechanical_matrix(g, p)
    out = report.to_dict()
    if args.v0 is not None and report.gamma_star > 0:
        out["t_f_bound"] = report.t_f_bound(args.v0)
    out["mechanical"] = {"A_m": A_m.tolist(), "hurwitz": hurwitz_m}
    out["elapsed_s"] = time.perf_counter() - t0
    print(json.dumps(out, indent=2))
    return 0


def _run_variant(args):
    p, g, s, variant, seed = args
    return variant, run_scenario(p, g, s.with_variant(variant), seed=seed)


def _cmd_compare(args):
    p, g, s = _load(args.config)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    variants = [v.value for v in ControllerVariant]
    jobs = [(p, g, s, v, args.seed) for v in variants]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            runs = dict(pool.map(_run_variant, jobs))
    else:
        runs = dict(map(_run_variant, jobs))

    duration = s.timing.duration
    windows = steady_windows(runs["full"], settle=args.settle)
    transient = [w for w in s.reference.ramps() if w[1] <= duration]
    report = {"steady_windows": windows, "transient_windows": transient, "variants": {}}
    for v, traj in runs.items():
        traj.to_csv(out_dir / f"{v}.csv")
        report["variants"][v] = {
            "steady": compute_metrics(traj, windows).to_dict(),
            "transient": compute_metrics(traj, transient).to_dict() if transient else None,
        }
    report["comparisons"] = {}
    for b in ("outer-only", "no-dob"):
        report["comparisons"][f"full/{b}"] = {
            "steady": compare_runs(runs["full"], runs[b], windows),
            "transient": compare_runs(runs["full"], runs[b], transient) if transient else None,
        }
    (out_dir / "metrics.json").write_text(json.dumps(report, indent=2))
    print(json.dumps(report["comparisons"], indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="npidob",
        description="Simulate and certify a PMSM motion controller with nonlinear PI disturbance observers.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one closed-loop scenario and write a CSV log")
    sim.add_argument("--config", required=True,
                     help="JSON config path, or a bundled name (default, published_gains)")
    sim.add_argument("--variant", choices=[v.value for v in ControllerVariant])
    sim.add_argument("--out", required=True)
    sim.add_argument("--seed", type=int, default=None)
    sim.set_defaults(func=_cmd_simulate)

    cert = sub.add_parser("certify", help="observer decay-rate certificate as JSON")
    cert.add_argument("--config", required=True)
    cert.add_argument("--loop", choices=["inner", "outer"], required=True)
    cert.add_argument("--q0", type=float, default=1000.0, help="Q0 = q0 * I")
    cert.add_argument("--epsilon", type=float, default=0.1)
    cert.add_argument("--delta", type=float, default=1.0)
    cert.add_argument("--norm", choices=["spectral", "frobenius"], default="spectral")
    cert.add_argument("--v0", type=float, default=None,
                      help="initial Lyapunov value for the finite-time bound")
    cert.set_defaults(func=_cmd_certify)

    cmp_ = sub.add_parser("compare", help="run every controller variant and report metrics")
    cmp_.add_argument("--config", required=True)
    cmp_.add_argument("--out", required=True, help="output directory")
    cmp_.add_argument("--seed", type=int, default=None)
    cmp_.add_argument("--settle", type=float, default=1.0,
                      help="seconds skipped after each event before a steady window starts")
    cmp_.add_argument("--jobs", type=int, default=1)
    cmp_.set_defaults(func=_cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, NotHurwitz) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NonFiniteState as exc:
        print(f"error: simulation diverged: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
