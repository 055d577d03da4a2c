"""Command line interface: run / learn / simulate / validate."""

from __future__ import annotations

import argparse
import os
import sys

from . import queuesim
from .experiments import (
    ALL_SCHEMES,
    ConfigError,
    build_config,
    export_suite,
    export_trace_csv,
    generate_scenario,
    parse_config_file,
    run_suite,
)
from .model import UnstableLoadError
from .pricing import LearningConfig, LearningError, run_learning
from .solvers import ConvergenceError

EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_IO = 4


def _load_config(args, **extra):
    file_values = parse_config_file(args.config) if args.config else {}
    overrides = dict(extra)
    if getattr(args, "seed", None) is not None:
        overrides["placement_seed"] = args.seed
    if getattr(args, "out", None):
        overrides["out_dir"] = args.out
    if getattr(args, "scheme", None):
        overrides["schemes"] = tuple(args.scheme)
    return build_config(file_values, **overrides)


def _cmd_run(args):
    cfg = _load_config(args)
    result = run_suite(cfg)
    export_suite(result, cfg.out_dir)
    for s in result.summaries:
        print(f"{s.scheme}: {s.status}  welfare={s.welfare:.6g}  "
              f"mean_x={s.mean_x:.4f}  mean_cost_pct={s.mean_cost_pct:.2f}")
    print(f"wrote results.csv, trace.csv, summary.csv, utility_curves.csv "
          f"to {cfg.out_dir}")
    if any(s.status != "ok" for s in result.summaries):
        return EXIT_SOLVER
    return 0


def _cmd_learn(args):
    cfg = _load_config(args)
    scn = generate_scenario(cfg)
    learn_cfg = LearningConfig(epsilon=cfg.epsilon,
                               congestion_oracle=cfg.congestion_oracle)
    outcome, trace = run_learning(scn, learn_cfg)
    export_trace_csv(trace, os.path.join(cfg.out_dir, "trace.csv"))
    sig = outcome.signal
    print(f"converged after {len(trace)} broadcasts")
    print(f"p_H={sig.p_H:.6g} p_L={sig.p_L:.6g} "
          f"D_H={sig.D_H:.6g} D_L={sig.D_L:.6g}")
    print(f"welfare={outcome.welfare:.6g}")
    print(f"wrote trace.csv to {cfg.out_dir}")
    return 0


def _cmd_simulate(args):
    cfg = _load_config(args)
    params = cfg.system_params()
    service = args.service_rate if args.service_rate else params.mu_B
    sim_cfg = queuesim.SimConfig(
        seed=args.sim_seed, horizon_jobs=args.horizon,
        warmup_jobs=args.warmup if args.warmup is not None
        else args.horizon // 10,
        rate_H=args.rate_h, rate_L=args.rate_l, service_rate=service)
    rpt = queuesim.simulate(sim_cfg)
    print(f"mean_sojourn_H={rpt.mean_sojourn_H:.6g} "
          f"(se {rpt.se_sojourn_H:.2g}, n={rpt.count_H})")
    print(f"mean_sojourn_L={rpt.mean_sojourn_L:.6g} "
          f"(se {rpt.se_sojourn_L:.2g}, n={rpt.count_L})")
    print(f"utilization={rpt.utilization:.4f} rng={rpt.rng_algorithm}")
    return 0


def _cmd_validate(args):
    from .validate import validate_invariants
    cfg = _load_config(args)
    results = validate_invariants(cfg)
    failed = 0
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
        failed += 0 if ok else 1
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 0 if failed == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="mecprice",
        description="Priority-priced edge offloading: experiments and tools")
    sub = p.add_subparsers(dest="verb", required=True)

    def common(sp):
        sp.add_argument("--config", help="key=value config file")
        sp.add_argument("--seed", type=int, help="placement seed")
        sp.add_argument("--out", help="output directory")

    sp = sub.add_parser("run", help="run the scheme comparison suite")
    common(sp)
    sp.add_argument("--scheme", action="append", choices=ALL_SCHEMES,
                    help="scheme to run (repeatable; default: all)")
    sp.set_defaults(fn=_cmd_run)

    sp = sub.add_parser("learn", help="run only the pricing loop")
    common(sp)
    sp.set_defaults(fn=_cmd_learn)

    sp = sub.add_parser("simulate", help="run only the queue simulator")
    common(sp)
    sp.add_argument("--rate-h", type=float, required=True,
                    help="class-H arrival rate (jobs/s)")
    sp.add_argument("--rate-l", type=float, required=True,
                    help="class-L arrival rate (jobs/s)")
    sp.add_argument("--service-rate", type=float,
                    help="service rate (default: mu_B from config)")
    sp.add_argument("--horizon", type=int, default=200_000,
                    help="completed jobs to simulate")
    sp.add_argument("--warmup", type=int,
                    help="discarded initial completions (default 10%%)")
    sp.add_argument("--sim-seed", type=int, default=12345)
    sp.set_defaults(fn=_cmd_simulate)

    sp = sub.add_parser("validate", help="run the built-in invariant checks")
    common(sp)
    sp.set_defaults(fn=_cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"error-category=config message={exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceError, LearningError, UnstableLoadError) as exc:
        print(f"error-category=solver message={exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"error-category=io message={exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
