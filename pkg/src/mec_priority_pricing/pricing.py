"""Priority prices, user best responses, and the learning-based pricing loop.

The AP never needs user utility functions: it posts a candidate delay pair
(D_H, D_L), derives the implied class loads and externality prices, observes
the congestion the resulting best responses actually cause, and runs a
bracketing search (growth phase, then bisection) on each posted delay until
posted and measured congestion coincide.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import (
    Cls,
    EquilibriumOutcome,
    LoadState,
    MarketSignal,
    SystemParams,
    demand_inverse,
    demand_zero,
    utility,
)
from .solvers import Scenario, UserVec, assign_priority, class_weights


class LearningError(RuntimeError):
    """The pricing loop exhausted its iteration caps."""

    def __init__(self, msg, signal=None):
        super().__init__(msg)
        self.signal = signal


@dataclass(frozen=True)
class LearningConfig:
    epsilon: float = 0.01        # bisection stop threshold (s of delay)
    varsigma: float = 1e-6       # strictly positive seed offset (s)
    max_outer: int = 200
    max_inner: int = 200
    congestion_oracle: str = "analytic"   # "analytic" or "simulated"
    sim_horizon: int = 200_000   # jobs per simulated measurement
    sim_replications: int = 5
    sim_seed: int = 20240801

    def __post_init__(self):
        if self.epsilon <= 0 or self.varsigma <= 0:
            raise ValueError("epsilon and varsigma must be positive")
        if self.congestion_oracle not in ("analytic", "simulated"):
            raise ValueError("congestion_oracle must be analytic|simulated")


@dataclass
class TraceStep:
    t: int
    phase: str
    posted_D_H: float
    posted_D_L: float
    p_H: float
    p_L: float
    true_D_H: float
    true_D_L: float
    x: np.ndarray


@dataclass
class LearningTrace:
    steps: list = field(default_factory=list)

    def append(self, step: TraceStep):
        self.steps.append(step)

    def __len__(self):
        return len(self.steps)


def prices_from_delays(D_H: float, D_L: float, params: SystemParams,
                       weights: tuple) -> tuple:
    """Externality prices (p_H, p_L) implied by a posted delay pair.

    The delay pair pins down the per-class loads (Psi_H = 1/D_H,
    Psi = mu_B * D_H / D_L); each price is the marginal congestion cost a
    class member imposes on everyone else at those loads.
    """
    c_h, c_l = weights
    mu_B = params.mu_B
    if D_H < 1.0 / mu_B - 1e-15:
        raise ValueError(f"D_H={D_H} below the empty-system delay 1/mu_B")
    psi_h = 1.0 / D_H
    psi = mu_B * D_H / D_L
    if psi > psi_h + 1e-12 * psi_h:
        raise ValueError(f"delay pair ({D_H}, {D_L}) implies negative "
                         "low-priority load")
    psi = min(psi, psi_h)
    a_h = mu_B - psi_h
    a_l = psi_h - psi
    p_h = (c_h * a_h / psi_h ** 2
           + c_l * mu_B * (psi_h + psi) * a_l / (psi ** 2 * psi_h ** 2))
    p_l = c_l * mu_B * a_l / (psi ** 2 * psi_h)
    return p_h, p_l


def best_response(user, sig: MarketSignal, params: SystemParams,
                  tie: Cls = Cls.H):
    """The class and offloading frequency minimizing the user's posted cost.

    Ties between the two classes' total costs resolve to `tie` (the caller
    passes the user's priority-rule class; boundary signals make exactly
    that class indifferent).
    """
    cost_h = sig.p_H + user.c_d * sig.D_H
    cost_l = sig.p_L + user.c_d * sig.D_L
    if np.isclose(cost_h, cost_l, rtol=1e-12, atol=0.0):
        cls = tie
    elif cost_h < cost_l:
        cls = Cls.H
    else:
        cls = Cls.L
    cost = cost_h if cls is Cls.H else cost_l
    return cls, demand_inverse(cost, user, params)


def check_incentive_compatibility(sig: MarketSignal, weights: tuple):
    """Whether both classes strictly prefer their own (price, delay) bundle.

    Returns (ok, margins) where margins = (H-class margin, L-class margin);
    each margin is the strict saving from staying in the intended class.
    """
    c_h, c_l = weights
    margin_h = (sig.p_L + c_h * sig.D_L) - (sig.p_H + c_h * sig.D_H)
    margin_l = (sig.p_H + c_l * sig.D_H) - (sig.p_L + c_l * sig.D_L)
    return bool(margin_h > 0.0 and margin_l > 0.0), (margin_h, margin_l)


def _vec_best_response(uv: UserVec, x_up, sig: MarketSignal,
                       tie_h: np.ndarray, params: SystemParams):
    """Best responses of the whole population against one broadcast signal."""
    cost_h = sig.p_H + uv.c_d * sig.D_H
    cost_l = sig.p_L + uv.c_d * sig.D_L
    pick_h = np.where(np.isclose(cost_h, cost_l, rtol=1e-12, atol=0.0),
                      tie_h, cost_h < cost_l)
    cost = np.where(pick_h, cost_h, cost_l)
    x = np.asarray(demand_inverse(cost, uv, params, x_up=x_up))
    return pick_h, x


class _Learner:
    """One run of the nested delay search; accumulates the broadcast trace."""

    def __init__(self, scn: Scenario, cfg: LearningConfig):
        self.scn = scn
        self.cfg = cfg
        self.params = scn.params
        self.uv = scn.vec()
        self.n = len(self.uv)
        if self.n:
            self.weights = class_weights(scn.users)
            lemma = assign_priority(scn.users)
            self.tie_h = np.array([c is Cls.H for c in lemma])
            self.x_up = np.asarray(demand_zero(self.uv, self.params))
        else:
            self.weights = (0.9, 0.1)
            self.tie_h = np.zeros(0, bool)
            self.x_up = np.zeros(0)
        self.trace = LearningTrace()
        self.t = 0
        self.se_h = self.se_l = 0.0
        self._oracle = None
        if cfg.congestion_oracle == "simulated":
            from . import queuesim
            self._oracle = queuesim
        self.last = None   # (sig, pick_h, x, true_h, true_l)

    # -- congestion measurement ------------------------------------------

    def _measure(self, load: LoadState):
        """(true_D_H, true_D_L); inf where the offered load is unstable."""
        mu_B = self.params.mu_B
        psi_h = mu_B - load.rate_H
        psi = psi_h - load.rate_L
        self.se_h = self.se_l = 0.0
        if self.cfg.congestion_oracle == "analytic":
            d_h = 1.0 / psi_h if psi_h > 0 else np.inf
            d_l = mu_B * d_h / psi if (psi > 0 and psi_h > 0) else np.inf
            return d_h, d_l
        if psi_h <= 0 or psi <= 0:
            return np.inf, np.inf
        cfg = self.cfg
        est_h = []
        est_l = []
        for rep in range(cfg.sim_replications):
            rpt = self._oracle.measure_congestion(
                load, self._oracle.SimConfig(
                    seed=cfg.sim_seed + 977 * self.t + rep,
                    horizon_jobs=cfg.sim_horizon,
                    warmup_jobs=cfg.sim_horizon // 10,
                    rate_H=load.rate_H, rate_L=load.rate_L,
                    service_rate=mu_B))
            est_h.append(rpt[0])
            est_l.append(rpt[1])
        k = max(len(est_h) - 1, 1)
        self.se_h = float(np.std(est_h, ddof=1) / np.sqrt(len(est_h))) if k > 1 \
            else 0.0
        self.se_l = float(np.std(est_l, ddof=1) / np.sqrt(len(est_l))) if k > 1 \
            else 0.0
        return float(np.mean(est_h)), float(np.mean(est_l))

    # -- one broadcast step ----------------------------------------------

    def broadcast(self, d_h_post: float, d_l_post: float, phase: str):
        p_h, p_l = prices_from_delays(d_h_post, d_l_post, self.params,
                                      self.weights)
        sig = MarketSignal(p_H=p_h, p_L=p_l, D_H=d_h_post, D_L=d_l_post)
        pick_h, x = _vec_best_response(self.uv, self.x_up, sig, self.tie_h,
                                       self.params)
        lam = self.params.lambda_a
        load = LoadState(rate_H=lam * float(np.sum(x[pick_h])),
                         rate_L=lam * float(np.sum(x[~pick_h])))
        true_h, true_l = self._measure(load)
        self.t += 1
        self.trace.append(TraceStep(
            t=self.t, phase=phase, posted_D_H=d_h_post, posted_D_L=d_l_post,
            p_H=p_h, p_L=p_l, true_D_H=true_h, true_D_L=true_l, x=x.copy()))
        self.last = (sig, pick_h, x, true_h, true_l)
        return true_h, true_l

    def _width_l(self):
        # a stochastic oracle cannot support brackets tighter than its noise
        return max(self.cfg.epsilon, 3.0 * self.se_l)

    def _width_h(self):
        return max(self.cfg.epsilon, 3.0 * self.se_h)

    # -- inner search over the low-priority posted delay -----------------

    def inner(self, d_h_post: float) -> float:
        """Search D_L (at fixed posted D_H) until posted matches measured."""
        mu_B = self.params.mu_B
        d_l = mu_B * d_h_post * d_h_post      # zero low-priority load seed
        lb = d_l
        _, true_l = self.broadcast(d_h_post, d_l, "inner_seed")
        it = 0
        while d_l < true_l:                   # growth phase: learn the bounds
            lb = d_l
            d_l = 2.0 * d_l
            _, true_l = self.broadcast(d_h_post, d_l, "inner_grow")
            it += 1
            if it > self.cfg.max_inner:
                raise LearningError("inner growth phase did not bracket",
                                    self.last[0] if self.last else None)
        ub = d_l
        it = 0
        # bisect until posted and measured low-priority delays agree
        while abs(d_l - true_l) > self._width_l():
            if ub - lb < 1e-12 * max(ub, 1.0):
                break
            d_l = 0.5 * (ub + lb)
            _, true_l = self.broadcast(d_h_post, d_l, "inner_bisect")
            if d_l < true_l:
                lb = d_l
            else:
                ub = d_l
            it += 1
            if it > self.cfg.max_inner:
                raise LearningError("inner bisection did not converge",
                                    self.last[0] if self.last else None)
        return d_l

    # -- outer search over the high-priority posted delay ----------------

    def run(self):
        mu_B = self.params.mu_B
        d_h = 1.0 / mu_B + self.cfg.varsigma
        self.inner(d_h)
        true_h = self.last[3]
        lb = d_h
        it = 0
        while d_h < true_h:                   # growth phase: learn the bounds
            lb = d_h
            d_h = 2.0 * d_h
            self.inner(d_h)
            true_h = self.last[3]
            it += 1
            if it > self.cfg.max_outer:
                raise LearningError("outer growth phase did not bracket",
                                    self.last[0] if self.last else None)
        ub = d_h
        it = 0
        # bisect until posted and measured high-priority delays agree
        while abs(d_h - true_h) > self._width_h():
            if ub - lb < 1e-12 * max(ub, 1.0):
                break
            d_h = 0.5 * (ub + lb)
            self.inner(d_h)
            true_h = self.last[3]
            if d_h < true_h:
                lb = d_h
            else:
                ub = d_h
            it += 1
            if it > self.cfg.max_outer:
                raise LearningError("outer bisection did not converge",
                                    self.last[0] if self.last else None)
        return self._outcome()

    def _outcome(self) -> EquilibriumOutcome:
        sig, pick_h, x, _, _ = self.last
        lam = self.params.lambda_a
        load = LoadState(rate_H=lam * float(np.sum(x[pick_h])),
                         rate_L=lam * float(np.sum(x[~pick_h])))
        mu_B = self.params.mu_B
        psi_h = mu_B - load.rate_H
        psi = psi_h - load.rate_L
        d_h = 1.0 / psi_h
        d_l = mu_B * d_h / psi
        d = np.where(pick_h, d_h, d_l)
        v = (np.asarray(utility(x, self.uv, self.params))
             - self.uv.c_d * x * d) if self.n else np.zeros(0)
        cls = [Cls.H if h else Cls.L for h in pick_h]
        return EquilibriumOutcome(x=x, cls=cls, profit=np.asarray(v),
                                  welfare=float(np.sum(v)), load=load,
                                  signal=sig, iterations=self.t)


def run_learning(scn: Scenario, cfg: LearningConfig = LearningConfig()):
    """Run the full nested delay search; returns (outcome, trace)."""
    learner = _Learner(scn, cfg)
    outcome = learner.run()
    return outcome, learner.trace
