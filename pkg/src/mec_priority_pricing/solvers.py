"""Equilibrium solvers: two-class social optimum and single-class baselines.

Each solver runs a damped fixed-point iteration x <- (1-g) x + g * inv(rhs(x)),
where rhs isolates the per-user marginal condition of the scheme and inv is
the (monotone) demand inverse. Solutions are deterministic and reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    Cls,
    EquilibriumOutcome,
    LoadState,
    SystemParams,
    UserProfile,
    X_MIN,
    demand,
    demand_inverse,
    demand_zero,
    utility,
)


class ConvergenceError(RuntimeError):
    """The fixed-point iteration failed to reach the requested tolerance."""


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-8           # absolute tolerance on x between iterates
    max_iter: int = 10_000
    damping: float = 0.5        # step-mixing factor in (0, 1]
    residual_tol: float = 1e-6  # first-order condition residual at return

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if not (0.0 < self.damping <= 1.0):
            raise ValueError("damping must lie in (0, 1]")


@dataclass(frozen=True)
class UserVec:
    """Column view of a user population; duck-types UserProfile fields."""

    rho: np.ndarray
    c_d: np.ndarray
    c_e: np.ndarray

    @classmethod
    def of(cls, users) -> "UserVec":
        return cls(rho=np.array([u.rho for u in users], float),
                   c_d=np.array([u.c_d for u in users], float),
                   c_e=np.array([u.c_e for u in users], float))

    def __len__(self):
        return len(self.rho)


@dataclass(frozen=True)
class Scenario:
    params: SystemParams
    users: tuple

    def __post_init__(self):
        object.__setattr__(self, "users", tuple(self.users))

    def vec(self) -> UserVec:
        return UserVec.of(self.users)


def assign_priority(users) -> list:
    """Class per user: the higher delay weight gets priority (the c-mu rule)."""
    weights = sorted({u.c_d for u in users})
    if len(weights) < 2:
        raise ValueError(
            "all users share one delay weight; use a single-class solver")
    if len(weights) > 2:
        raise ValueError("expected exactly two distinct delay weights")
    c_h = weights[-1]
    return [Cls.H if u.c_d == c_h else Cls.L for u in users]


def class_weights(users) -> tuple:
    """(c_H_d, c_L_d), the two distinct delay weights, high first."""
    weights = sorted({u.c_d for u in users}, reverse=True)
    if len(weights) != 2:
        raise ValueError("expected exactly two distinct delay weights")
    return weights[0], weights[1]


def _project_stable(x, lam, mu_B):
    """Rescale x multiplicatively if the total offered load is too close to mu_B."""
    load = lam * float(np.sum(x))
    if load >= mu_B * (1.0 - 1e-6):
        x = x * (mu_B * (1.0 - 1e-3) / load)
    return x


def _fixed_point(rhs_fn, uv: UserVec, params: SystemParams, cfg: SolverConfig,
                 scheme: str):
    """Damped fixed point over the per-user marginal conditions."""
    n = len(uv)
    x_up = np.asarray(demand_zero(uv, params))
    x = np.full(n, X_MIN)
    lam = params.lambda_a
    gamma = cfg.damping
    best_delta = np.inf
    since_best = 0
    for it in range(1, cfg.max_iter + 1):
        rhs = rhs_fn(x)
        target = demand_inverse(rhs, uv, params, x_up=x_up)
        x_new = (1.0 - gamma) * x + gamma * target
        x_new = _project_stable(x_new, lam, params.mu_B)
        delta = float(np.max(np.abs(x_new - x)))
        x = x_new
        if delta < cfg.tol:
            res = _residual(x, rhs_fn(x), uv, params)
            if res < cfg.residual_tol:
                return x, it, res
        # steps that stop shrinking (incl. 2-cycles) mean the best-response
        # map over-reacts at this step size; halve it and keep going
        if delta < 0.999 * best_delta:
            best_delta = delta
            since_best = 0
        else:
            since_best += 1
            if since_best >= 10:
                gamma = max(0.5 * gamma, 1e-3)
                since_best = 0
                best_delta = delta
    res = _residual(x, rhs_fn(x), uv, params)
    raise ConvergenceError(
        f"{scheme}: no convergence after {cfg.max_iter} iterations "
        f"(last step {delta:.3e}, residual {res:.3e})")


def _residual(x, rhs, uv, params):
    """Max first-order violation; users clamped at X_MIN satisfy g <= rhs."""
    g = demand(np.maximum(x, X_MIN), uv, params)
    viol = np.abs(g - rhs)
    clamped = x <= X_MIN * (1.0 + 1e-9)
    viol = np.where(clamped & (g < rhs), 0.0, viol)
    return float(np.max(viol)) if len(viol) else 0.0


def _two_class_rhs(uv: UserVec, h_mask: np.ndarray, params: SystemParams):
    lam = params.lambda_a
    mu_B = params.mu_B
    c_h = float(np.max(uv.c_d[h_mask])) if np.any(h_mask) else 0.0
    c_l = float(np.max(uv.c_d[~h_mask])) if np.any(~h_mask) else 0.0

    def rhs(x):
        a_h = lam * float(np.sum(x[h_mask]))
        a_l = lam * float(np.sum(x[~h_mask]))
        psi_h = mu_B - a_h
        psi = psi_h - a_l
        d_h = 1.0 / psi_h
        d_l = mu_B * d_h / psi
        # own delay cost plus the marginal congestion imposed on each class
        s_h = c_h * a_h / psi_h ** 2
        s_xl = c_l * mu_B * (psi_h + psi) * a_l / (psi ** 2 * psi_h ** 2)
        s_l = c_l * mu_B * a_l / (psi ** 2 * psi_h)
        rhs_h = c_h * d_h + s_h + s_xl
        rhs_l = uv.c_d * d_l + s_l   # c_k = c_l for every L user
        return np.where(h_mask, rhs_h, rhs_l)

    return rhs


def solve_social_two_class(scn: Scenario, cfg: SolverConfig = SolverConfig(),
                           ) -> EquilibriumOutcome:
    """Welfare-maximizing offloading with the two-class priority queue."""
    uv = scn.vec()
    try:
        cls = assign_priority(scn.users)
    except ValueError:
        # degenerate single-weight population: run everyone in class H,
        # which reduces the queue to a plain M/M/1
        cls = [Cls.H] * len(scn.users)
    h_mask = np.array([c is Cls.H for c in cls])
    rhs_fn = _two_class_rhs(uv, h_mask, scn.params)
    x, it, res = _fixed_point(rhs_fn, uv, scn.params, cfg, "social-two-class")
    return _outcome_two_class(x, cls, uv, scn.params, it, res)


def _outcome_two_class(x, cls, uv, params, it=0, res=0.0):
    h_mask = np.array([c is Cls.H for c in cls])
    lam = params.lambda_a
    load = LoadState(rate_H=lam * float(np.sum(x[h_mask])),
                     rate_L=lam * float(np.sum(x[~h_mask])))
    psi_h = params.mu_B - load.rate_H
    psi = psi_h - load.rate_L
    d_h = 1.0 / psi_h
    d_l = params.mu_B * d_h / psi
    d = np.where(h_mask, d_h, d_l)
    v = np.asarray(utility(x, uv, params)) - uv.c_d * x * d
    return EquilibriumOutcome(x=x, cls=list(cls), profit=v,
                              welfare=float(np.sum(v)), load=load,
                              iterations=it, residual=res)


def _outcome_single_class(x, uv, params, it=0, res=0.0):
    lam = params.lambda_a
    load = LoadState(rate_H=lam * float(np.sum(x)), rate_L=0.0)
    d = 1.0 / (params.mu_B - load.rate_H)
    v = np.asarray(utility(x, uv, params)) - uv.c_d * x * d
    return EquilibriumOutcome(x=x, cls=[Cls.H] * len(uv), profit=v,
                              welfare=float(np.sum(v)), load=load,
                              iterations=it, residual=res)


def solve_social_single_class(scn: Scenario, cfg: SolverConfig = SolverConfig(),
                              ) -> EquilibriumOutcome:
    """Welfare-maximizing offloading with one shared FCFS edge queue."""
    uv = scn.vec()
    lam = scn.params.lambda_a
    mu_B = scn.params.mu_B

    def rhs(x):
        total = lam * float(np.sum(x))
        d = 1.0 / (mu_B - total)
        ext = lam * float(np.sum(uv.c_d * x)) * d ** 2
        return uv.c_d * d + ext

    x, it, res = _fixed_point(rhs, uv, scn.params, cfg, "social-single-class")
    return _outcome_single_class(x, uv, scn.params, it, res)


def solve_selfish_single_class(scn: Scenario, cfg: SolverConfig = SolverConfig(),
                               ) -> EquilibriumOutcome:
    """Price-taking users on one FCFS queue: each solves g(x) = c_d * D."""
    uv = scn.vec()
    lam = scn.params.lambda_a
    mu_B = scn.params.mu_B

    def rhs(x):
        d = 1.0 / (mu_B - lam * float(np.sum(x)))
        return uv.c_d * d

    x, it, res = _fixed_point(rhs, uv, scn.params, cfg, "selfish-single-class")
    return _outcome_single_class(x, uv, scn.params, it, res)
