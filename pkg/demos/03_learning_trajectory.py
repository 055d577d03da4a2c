"""Trajectory of the learning-based pricing loop.

The access point never sees user utilities: it posts a delay pair, derives
the implied externality prices, observes the congestion users' best
responses actually create, and bisects until posted and measured delays
coincide. This prints the broadcast-by-broadcast trace and the final match
against the directly computed social optimum.
"""

import numpy as np

from mec_priority_pricing import (
    ExperimentConfig,
    LearningConfig,
    generate_scenario,
    run_learning,
    solve_social_two_class,
)

cfg = ExperimentConfig(n_users=100)
scn = generate_scenario(cfg)

outcome, trace = run_learning(scn, LearningConfig(epsilon=0.01))

print(f"{'t':>4} {'phase':<13} {'posted D_H':>11} {'posted D_L':>11} "
      f"{'true D_H':>10} {'true D_L':>10} {'p_H':>7} {'p_L':>7}")
steps = trace.steps
shown = steps[:8] + steps[-6:]
for prev, s in zip([None] + shown[:-1], shown):
    if prev is not None and s.t != prev.t + 1:
        print(f"{'...':>4}  ({s.t - prev.t - 1} broadcasts omitted)")
    print(f"{s.t:>4} {s.phase:<13} {s.posted_D_H:>11.4f} "
          f"{s.posted_D_L:>11.4f} {s.true_D_H:>10.4f} {s.true_D_L:>10.4f} "
          f"{s.p_H:>7.3f} {s.p_L:>7.3f}")

ref = solve_social_two_class(scn)
gap = float(np.max(np.abs(outcome.x - ref.x)))
last = steps[-1]
print()
print(f"broadcasts: {len(trace)}")
print(f"final posted-vs-true delay gaps: "
      f"H {abs(last.posted_D_H - last.true_D_H):.4f}, "
      f"L {abs(last.posted_D_L - last.true_D_L):.4f} (epsilon = 0.01)")
print(f"||x_learned - x_social||_inf = {gap:.2e}")
print(f"welfare: learned {outcome.welfare:.4f} vs direct {ref.welfare:.4f}")
