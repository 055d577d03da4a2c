"""Built-in invariant checks behind the `validate` CLI verb.

A fast subset of the full test suite, runnable in the field without pytest:
round-trip identities, demand monotonicity, pricing identities, and a short
simulation-vs-formula cross-check.
"""

from __future__ import annotations

import numpy as np

from . import queuesim
from .experiments import ExperimentConfig, generate_scenario
from .model import (
    LoadState,
    MarketSignal,
    beta_of_x,
    demand,
    demand_inverse,
    demand_zero,
    edge_delays,
    utility,
)
from .pricing import check_incentive_compatibility, prices_from_delays


def _check_beta_roundtrip(cfg, scn):
    xs = np.linspace(0.001, 0.999, 999)
    u = scn.users[0]
    back = np.exp(-(np.expm1(beta_of_x(xs, u.rho))) / u.rho)
    err = float(np.max(np.abs(back - xs) / xs))
    return err < 1e-12, f"max relative error {err:.2e}"

def _check_utility_zero(cfg, scn):
    vals = [utility(0.0, u, scn.params) for u in scn.users[:5]]
    return all(v == 0.0 for v in vals), f"U(0) values {vals}"

def _check_demand_monotone(cfg, scn):
    xs = np.linspace(0.001, 0.999, 999)
    u = scn.users[0]
    g = demand(xs, u, scn.params)
    dec = bool(np.all(np.diff(g) < 0.0))
    crossings = int(np.sum(np.diff(np.sign(g)) != 0.0))
    return dec and crossings == 1, f"decreasing={dec} crossings={crossings}"

def _check_demand_inverse(cfg, scn):
    u = scn.users[0]
    x_up = demand_zero(u, scn.params)
    errs = [abs(demand_inverse(demand(x, u, scn.params), u, scn.params) - x)
            for x in (0.1, 0.3, 0.6, 0.9 * x_up)]
    return max(errs) < 1e-8, f"max |g^-1(g(x))-x| = {max(errs):.2e}"

def _check_finite_difference(cfg, scn):
    rng = np.random.default_rng(7)
    u = scn.users[0]
    h = 1e-6
    worst = 0.0
    for x in rng.uniform(0.05, 0.9, 50):
        fd = (utility(x + h, u, scn.params)
              - utility(x - h, u, scn.params)) / (2 * h)
        g = demand(x, u, scn.params)
        worst = max(worst, abs(fd - g) / abs(g))
    return worst < 1e-5, f"max relative error {worst:.2e}"

def _check_pricing_identity(cfg, scn):
    params = scn.params
    mu_B = params.mu_B
    rng = np.random.default_rng(11)
    weights = (cfg.c_H_d, cfg.c_L_d)
    worst = 0.0
    for _ in range(200):
        psi_h = mu_B * rng.uniform(0.2, 0.99)
        psi = psi_h * rng.uniform(0.2, 0.99)
        d_h = 1.0 / psi_h
        d_l = mu_B * d_h / psi
        p_h, p_l = prices_from_delays(d_h, d_l, params, weights)
        lhs = p_h + weights[0] * d_h
        rhs = (weights[0] - weights[1]) * mu_B * d_h ** 2 + p_l + weights[1] * d_l
        worst = max(worst, abs(lhs - rhs))
        ok, _ = check_incentive_compatibility(
            MarketSignal(p_H=p_h, p_L=p_l, D_H=d_h, D_L=d_l), weights)
        if not ok:
            return False, "incentive sandwich violated"
    return worst < 1e-10, f"max identity gap {worst:.2e}"

def _check_queue_sim(cfg, scn):
    params = scn.params
    mu_B = params.mu_B
    load = LoadState(rate_H=0.25 * mu_B, rate_L=0.15 * mu_B)
    d_h, d_l = edge_delays(load, params)
    rpt = queuesim.simulate(queuesim.SimConfig(
        seed=12345, horizon_jobs=100_000, warmup_jobs=10_000,
        rate_H=load.rate_H, rate_L=load.rate_L, service_rate=mu_B))
    err_h = abs(rpt.mean_sojourn_H - d_h) / d_h
    err_l = abs(rpt.mean_sojourn_L - d_l) / d_l
    return (err_h < 0.05 and err_l < 0.05,
            f"relative errors ({err_h:.3f}, {err_l:.3f})")


CHECKS = [
    ("beta-roundtrip", _check_beta_roundtrip),
    ("utility-zero-at-origin", _check_utility_zero),
    ("demand-monotone-unique-zero", _check_demand_monotone),
    ("demand-inverse-identity", _check_demand_inverse),
    ("demand-finite-difference", _check_finite_difference),
    ("pricing-identity-and-sandwich", _check_pricing_identity),
    ("queue-sim-vs-formula", _check_queue_sim),
]


def validate_invariants(cfg: ExperimentConfig):
    """Run every check; returns [(name, ok, detail)]."""
    scn = generate_scenario(cfg)
    results = []
    for name, fn in CHECKS:
        try:
            ok, detail = fn(cfg, scn)
        except Exception as exc:
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        results.append((name, bool(ok), detail))
    return results
