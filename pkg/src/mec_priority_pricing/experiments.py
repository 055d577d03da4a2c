"""Experiment harness: scenario generation, scheme execution, CSV emission.

Everything is deterministic given the config (placement seed included), so a
run can be reproduced byte for byte from its config file.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass, fields

import numpy as np

from .model import Cls, SystemParams, UserProfile, local_cost, utility
from .pricing import LearningConfig, LearningTrace, run_learning
from .solvers import (
    Scenario,
    SolverConfig,
    solve_selfish_single_class,
    solve_social_single_class,
    solve_social_two_class,
)

ALL_SCHEMES = ("local-only", "selfish-single", "social-single",
               "priority-social", "priority-learned")

RESULTS_HEADER = ("scheme,user_id,distance_m,c_d,class,x,cost_per_job,"
                  "cost_pct_of_local,welfare")
TRACE_HEADER = "step,phase,posted_D_H,posted_D_L,p_H,p_L,true_D_H,true_D_L"
SUMMARY_HEADER = ("scheme,status,welfare,mean_x,mean_cost_pct_of_local,"
                  "p_H,p_L,D_H,D_L")
CURVES_HEADER = "d_m,x,utility"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    # physical / queueing constants
    lambda_a: float = 0.01
    L_a: float = 100e3
    B_a: float = 8250.0
    f_m: float = 0.5e9
    f_B: float = 3e9
    kappa_m: float = 1e-27
    P_tr: float = 0.1
    sigma2: float = 1e-7
    alpha: float = 3.5
    W: float = 360e3
    # population
    n_users: int = 100
    r_min: float = 10.0
    r_max: float = 75.0
    c_H_d: float = 0.9
    c_L_d: float = 0.1
    h_fraction: float = 0.5
    placement_seed: int = 2     # fixed default so reported numbers reproduce
    tx_scale: float = 2.0
    # execution
    schemes: tuple = ALL_SCHEMES
    epsilon: float = 0.01
    congestion_oracle: str = "analytic"
    out_dir: str = "results"

    def __post_init__(self):
        if self.n_users < 1:
            raise ConfigError("n_users must be at least 1")
        if not (0 < self.r_min < self.r_max):
            raise ConfigError("need 0 < r_min < r_max")
        if not (0 < self.c_L_d < self.c_H_d < 1):
            raise ConfigError("need 0 < c_L_d < c_H_d < 1")
        unknown = set(self.schemes) - set(ALL_SCHEMES)
        if unknown:
            raise ConfigError(f"unknown schemes: {sorted(unknown)}")

    def system_params(self) -> SystemParams:
        return SystemParams(
            lambda_a=self.lambda_a, L_a=self.L_a, B_a=self.B_a,
            f_m=self.f_m, f_B=self.f_B, kappa_m=self.kappa_m,
            P_tr=self.P_tr, sigma2=self.sigma2, alpha=self.alpha, W=self.W,
            tx_scale=self.tx_scale)


def parse_config_file(path: str) -> dict:
    """Read a flat key=value file; '#' starts a comment."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for ln, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{ln}: expected key=value")
            key, val = (s.strip() for s in line.split("=", 1))
            out[key] = val
    return out


def build_config(file_values: dict | None = None, **overrides
                 ) -> ExperimentConfig:
    """Merge file values and keyword overrides (overrides win) into a config."""
    spec = {f.name: f.type for f in fields(ExperimentConfig)}
    merged = {}
    for source in (file_values or {}), overrides:
        for key, val in source.items():
            if val is None:
                continue
            if key not in spec:
                raise ConfigError(f"unknown config key: {key}")
            if key == "schemes" and isinstance(val, str):
                val = tuple(s.strip() for s in val.split(",") if s.strip())
            elif key in ("n_users", "placement_seed") and isinstance(val, str):
                val = int(val)
            elif key in ("congestion_oracle", "out_dir"):
                pass
            elif isinstance(val, str):
                val = float(val)
            merged[key] = val
    try:
        return ExperimentConfig(**merged)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


@dataclass(frozen=True)
class ResultRow:
    scheme: str
    user_id: int
    distance_m: float
    c_d: float
    cls: str
    x: float
    cost_per_job: float
    cost_pct_of_local: float
    welfare: float


@dataclass
class SchemeSummary:
    scheme: str
    status: str                 # "ok" or the error message
    welfare: float = float("nan")
    mean_x: float = float("nan")
    mean_cost_pct: float = float("nan")
    p_H: float = float("nan")
    p_L: float = float("nan")
    D_H: float = float("nan")
    D_L: float = float("nan")


@dataclass
class SuiteResult:
    rows: list
    summaries: list
    trace: LearningTrace | None
    curves: list                # (d, x, U) triples


def generate_scenario(cfg: ExperimentConfig) -> Scenario:
    """Users uniform on the ring [r_min, r_max]; first block is class H."""
    params = cfg.system_params()
    rng = np.random.default_rng(cfg.placement_seed)
    d = rng.uniform(cfg.r_min, cfg.r_max, cfg.n_users)
    n_h = int(round(cfg.h_fraction * cfg.n_users))
    users = [UserProfile.make(i, float(d[i]),
                              cfg.c_H_d if i < n_h else cfg.c_L_d, params)
             for i in range(cfg.n_users)]
    return Scenario(params=params, users=tuple(users))


def _rows_for(scheme: str, scn: Scenario, x, cls, profit) -> list:
    rows = []
    for i, u in enumerate(scn.users):
        z0 = float(local_cost(0.0, u, scn.params))
        v = float(profit[i])
        rows.append(ResultRow(
            scheme=scheme, user_id=u.id, distance_m=u.d, c_d=u.c_d,
            cls=cls[i].value, x=float(x[i]), cost_per_job=z0 - v,
            cost_pct_of_local=100.0 * ((z0 - v) / z0), welfare=v))
    return rows


def _run_scheme(scheme: str, scn: Scenario, cfg: ExperimentConfig):
    solver_cfg = SolverConfig()
    if scheme == "local-only":
        n = len(scn.users)
        x = np.zeros(n)
        cls = [Cls.L] * n
        return _rows_for(scheme, scn, x, cls, np.zeros(n)), SchemeSummary(
            scheme, "ok", welfare=0.0, mean_x=0.0, mean_cost_pct=100.0), None
    if scheme == "selfish-single":
        out = solve_selfish_single_class(scn, solver_cfg)
    elif scheme == "social-single":
        out = solve_social_single_class(scn, solver_cfg)
    elif scheme == "priority-social":
        out = solve_social_two_class(scn, solver_cfg)
    elif scheme == "priority-learned":
        learn_cfg = LearningConfig(epsilon=cfg.epsilon,
                                   congestion_oracle=cfg.congestion_oracle)
        out, trace = run_learning(scn, learn_cfg)
        rows = _rows_for(scheme, scn, out.x, out.cls, out.profit)
        summ = _summary_of(scheme, rows, out)
        return rows, summ, trace
    else:
        raise ConfigError(f"unknown scheme {scheme}")
    rows = _rows_for(scheme, scn, out.x, out.cls, out.profit)
    return rows, _summary_of(scheme, rows, out), None


def _summary_of(scheme, rows, out) -> SchemeSummary:
    # scheme-level cost figure: mean job cost relative to the mean
    # local-only cost (aggregate ratio, not the mean of per-user ratios)
    cost = float(np.sum([r.cost_per_job for r in rows]))
    local = float(np.sum([r.cost_per_job + r.welfare for r in rows]))
    summ = SchemeSummary(
        scheme, "ok", welfare=out.welfare,
        mean_x=float(np.mean([r.x for r in rows])),
        mean_cost_pct=100.0 * cost / local)
    if out.signal is not None:
        summ.p_H, summ.p_L = out.signal.p_H, out.signal.p_L
        summ.D_H, summ.D_L = out.signal.D_H, out.signal.D_L
    return summ


def utility_curves(cfg: ExperimentConfig, distances=(10.0, 50.0, 70.0),
                   n_points: int = 200) -> list:
    """(d, x, U) samples behind the utility-vs-frequency illustration."""
    params = cfg.system_params()
    xs = np.linspace(0.0, 0.995, n_points)
    out = []
    for d in distances:
        u = UserProfile.make(0, d, cfg.c_H_d, params)
        vals = utility(xs, u, params)
        out.extend((d, float(x), float(v)) for x, v in zip(xs, vals))
    return out


def run_suite(cfg: ExperimentConfig) -> SuiteResult:
    """Run every selected scheme on one shared scenario.

    A failing scheme is reported in its summary row and does not abort the
    other schemes.
    """
    scn = generate_scenario(cfg)
    rows = []
    summaries = []
    trace = None
    for scheme in cfg.schemes:
        try:
            r, summ, tr = _run_scheme(scheme, scn, cfg)
        except Exception as exc:   # surfaced per scheme, not fatal
            summaries.append(SchemeSummary(scheme, f"error: {exc}"))
            continue
        rows.extend(r)
        summaries.append(summ)
        if tr is not None:
            trace = tr
    return SuiteResult(rows=rows, summaries=summaries, trace=trace,
                       curves=utility_curves(cfg))


# ---------------------------------------------------------------------------
# CSV emission
# ---------------------------------------------------------------------------

def _atomic_write(path: str, text: str):
    dirname = os.path.dirname(os.path.abspath(path))
    os.makedirs(dirname, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=dirname, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise OSError(f"writing {path}: {exc}") from exc


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def export_results_csv(rows, path: str):
    lines = [RESULTS_HEADER]
    for r in rows:
        lines.append(",".join(_fmt(v) for v in (
            r.scheme, r.user_id, r.distance_m, r.c_d, r.cls, r.x,
            r.cost_per_job, r.cost_pct_of_local, r.welfare)))
    _atomic_write(path, "\n".join(lines) + "\n")


def export_trace_csv(trace: LearningTrace | None, path: str):
    lines = [TRACE_HEADER]
    for s in (trace.steps if trace is not None else []):
        lines.append(",".join(_fmt(v) for v in (
            s.t, s.phase, s.posted_D_H, s.posted_D_L, s.p_H, s.p_L,
            s.true_D_H, s.true_D_L)))
    _atomic_write(path, "\n".join(lines) + "\n")


def export_summary_csv(summaries, path: str):
    lines = [SUMMARY_HEADER]
    for s in summaries:
        status = s.status.replace(",", ";")
        lines.append(",".join(_fmt(v) for v in (
            s.scheme, status, s.welfare, s.mean_x, s.mean_cost_pct,
            s.p_H, s.p_L, s.D_H, s.D_L)))
    _atomic_write(path, "\n".join(lines) + "\n")


def export_curves_csv(curves, path: str):
    lines = [CURVES_HEADER]
    lines.extend(",".join(_fmt(v) for v in row) for row in curves)
    _atomic_write(path, "\n".join(lines) + "\n")


def export_suite(result: SuiteResult, out_dir: str):
    export_results_csv(result.rows, os.path.join(out_dir, "results.csv"))
    export_trace_csv(result.trace, os.path.join(out_dir, "trace.csv"))
    export_summary_csv(result.summaries, os.path.join(out_dir, "summary.csv"))
    export_curves_csv(result.curves,
                      os.path.join(out_dir, "utility_curves.csv"))
