"""Discrete-event simulator of an M/M/1 queue with two preemptive classes.

Class-H arrivals interrupt an in-service class-L job (preemptive resume:
remaining work is kept). Serves as the stochastic congestion oracle and as
the empirical cross-check of the closed-form sojourn times.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .model import LoadState

RNG_ALGORITHM = "numpy.PCG64"
_CHUNK = 1 << 15


@dataclass(frozen=True)
class SimConfig:
    seed: int
    horizon_jobs: int
    warmup_jobs: int
    rate_H: float
    rate_L: float
    service_rate: float

    def __post_init__(self):
        if self.horizon_jobs <= self.warmup_jobs or self.warmup_jobs < 0:
            raise ValueError("need horizon_jobs > warmup_jobs >= 0")
        if self.rate_H < 0 or self.rate_L < 0:
            raise ValueError("arrival rates must be nonnegative")
        if self.rate_H + self.rate_L >= self.service_rate:
            raise ValueError(
                f"unstable: rate_H + rate_L = {self.rate_H + self.rate_L} "
                f">= service_rate {self.service_rate}")


@dataclass(frozen=True)
class SimReport:
    mean_sojourn_H: float
    mean_sojourn_L: float
    se_sojourn_H: float
    se_sojourn_L: float
    count_H: int
    count_L: int
    utilization: float
    cv_interarrival_H: float
    cv_interarrival_L: float
    cv_service: float
    rng_algorithm: str = RNG_ALGORITHM


class _ExpStream:
    """Chunked exponential draws with running moments for sanity checks."""

    __slots__ = ("rng", "scale", "buf", "idx", "n", "s1", "s2")

    def __init__(self, rng, rate):
        self.rng = rng
        self.scale = 1.0 / rate if rate > 0 else 0.0
        self.buf = None
        self.idx = 0
        self.n = 0
        self.s1 = 0.0
        self.s2 = 0.0

    def next(self):
        if self.buf is None or self.idx >= _CHUNK:
            self.buf = self.rng.exponential(self.scale, _CHUNK)
            self.idx = 0
        v = self.buf[self.idx]
        self.idx += 1
        self.n += 1
        self.s1 += v
        self.s2 += v * v
        return v

    def cv(self):
        if self.n < 2:
            return float("nan")
        mean = self.s1 / self.n
        var = self.s2 / self.n - mean * mean
        return float(np.sqrt(max(var, 0.0)) / mean)


def _batch_se(samples):
    """Standard error via batch means (sojourns are autocorrelated)."""
    n = len(samples)
    if n < 4:
        return float("nan")
    nb = min(100, n // 2)
    arr = np.asarray(samples[: (n // nb) * nb]).reshape(nb, -1)
    means = arr.mean(axis=1)
    return float(np.std(means, ddof=1) / np.sqrt(nb))


def simulate(cfg: SimConfig) -> SimReport:
    """Run the two-class preemptive-resume queue for horizon_jobs completions."""
    if cfg.rate_H + cfg.rate_L == 0.0:
        nan = float("nan")
        return SimReport(mean_sojourn_H=nan, mean_sojourn_L=nan,
                         se_sojourn_H=nan, se_sojourn_L=nan,
                         count_H=0, count_L=0, utilization=0.0,
                         cv_interarrival_H=nan, cv_interarrival_L=nan,
                         cv_service=nan)
    root = np.random.SeedSequence(cfg.seed)
    rng_h, rng_l, rng_s = (np.random.default_rng(s) for s in root.spawn(3))
    arr_h = _ExpStream(rng_h, cfg.rate_H)
    arr_l = _ExpStream(rng_l, cfg.rate_L)
    svc = _ExpStream(rng_s, cfg.service_rate)

    inf = float("inf")
    next_h = arr_h.next() if cfg.rate_H > 0 else inf
    next_l = arr_l.next() if cfg.rate_L > 0 else inf
    q_h = deque()              # arrival times of waiting H jobs
    q_l = deque()              # (arrival time, remaining service or None)
    # in service: (is_h, arrival time, completion time)
    busy = False
    cur_h = False
    cur_arr = 0.0
    completion = inf
    t = 0.0
    busy_since = 0.0
    busy_time = 0.0
    done = 0
    soj_h = []
    soj_l = []
    warm = cfg.warmup_jobs
    horizon = cfg.horizon_jobs

    while done < horizon:
        # event order on exact ties: completion, H arrival, L arrival
        if completion <= next_h and completion <= next_l:
            t = completion
            done += 1
            if done > warm:
                (soj_h if cur_h else soj_l).append(t - cur_arr)
            if q_h:
                cur_h = True
                cur_arr = q_h.popleft()
                completion = t + svc.next()
            elif q_l:
                cur_h = False
                cur_arr, rem = q_l.popleft()
                completion = t + (rem if rem is not None else svc.next())
            else:
                busy = False
                busy_time += t - busy_since
                completion = inf
        elif next_h <= next_l:
            t = next_h
            next_h = t + arr_h.next()
            if not busy:
                busy = True
                busy_since = t
                cur_h = True
                cur_arr = t
                completion = t + svc.next()
            elif cur_h:
                q_h.append(t)
            else:
                # preempt the L job in service, keeping its remaining work
                q_l.appendleft((cur_arr, completion - t))
                cur_h = True
                cur_arr = t
                completion = t + svc.next()
        else:
            t = next_l
            next_l = t + arr_l.next()
            if not busy:
                busy = True
                busy_since = t
                cur_h = False
                cur_arr = t
                completion = t + svc.next()
            else:
                q_l.append((t, None))

    if busy:
        busy_time += t - busy_since
    util = busy_time / t if t > 0 else 0.0
    mean_h = float(np.mean(soj_h)) if soj_h else float("nan")
    mean_l = float(np.mean(soj_l)) if soj_l else float("nan")
    return SimReport(
        mean_sojourn_H=mean_h, mean_sojourn_L=mean_l,
        se_sojourn_H=_batch_se(soj_h), se_sojourn_L=_batch_se(soj_l),
        count_H=len(soj_h), count_L=len(soj_l),
        utilization=util,
        cv_interarrival_H=arr_h.cv(), cv_interarrival_L=arr_l.cv(),
        cv_service=svc.cv())


def measure_congestion(load: LoadState, cfg: SimConfig):
    """Sample-mean sojourn pair (D_H_hat, D_L_hat) at the given class loads."""
    cfg = SimConfig(seed=cfg.seed, horizon_jobs=cfg.horizon_jobs,
                    warmup_jobs=cfg.warmup_jobs,
                    rate_H=load.rate_H, rate_L=load.rate_L,
                    service_rate=cfg.service_rate)
    empty = 1.0 / cfg.service_rate
    if cfg.rate_H + cfg.rate_L == 0.0:
        # no jobs to observe; a probe job of either class would see an idle
        # server and experience the bare service time
        return empty, empty
    rpt = simulate(cfg)
    d_h = rpt.mean_sojourn_H if rpt.count_H else empty
    d_l = rpt.mean_sojourn_L
    return d_h, d_l
