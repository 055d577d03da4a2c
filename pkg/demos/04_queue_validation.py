"""Discrete-event queue vs closed-form priority sojourn times.

Simulates the two-class preemptive-resume M/M/1 queue at several load mixes
and compares the measured mean sojourns against the analytic formulas
D_H = 1/(mu - a_H) and D_L = mu * D_H / (mu - a_H - a_L). Also shows the
priority "shield": D_H does not react to class-L load.
"""

from mec_priority_pricing import (
    LoadState,
    SimConfig,
    SystemParams,
    edge_delays,
    simulate,
)

params = SystemParams()
mu = params.mu_B
print(f"service rate mu_B = {mu:.4f} jobs/s\n")

print(f"{'a_H/mu':>7} {'a_L/mu':>7} {'D_H sim':>9} {'D_H exact':>10} "
      f"{'D_L sim':>9} {'D_L exact':>10}")
for fh, fl in ((0.25, 0.15), (0.25, 0.45), (0.10, 0.60), (0.50, 0.20)):
    load = LoadState(fh * mu, fl * mu)
    d_h, d_l = edge_delays(load, params)
    rpt = simulate(SimConfig(seed=7, horizon_jobs=300_000,
                             warmup_jobs=30_000, rate_H=load.rate_H,
                             rate_L=load.rate_L, service_rate=mu))
    print(f"{fh:>7.2f} {fl:>7.2f} {rpt.mean_sojourn_H:>9.3f} {d_h:>10.3f} "
          f"{rpt.mean_sojourn_L:>9.3f} {d_l:>10.3f}")

print()
print("Note the first two rows: tripling the class-L load leaves the")
print("simulated D_H unchanged (preemptive priority shields class H), while")
print("D_L grows sharply. Simulated values track the formulas to ~1%.")
