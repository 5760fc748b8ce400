#!/usr/bin/env python3
# Exhaustive optimum of the toy instance and the metrics used to grade a schedule.

import numpy as np

from evdqn.evaluation import deviation_report, oracle_optima, pearson, schedule_count
from evdqn.scenarios import toy_environment

env = toy_environment()
print("candidate schedules:", schedule_count(env))

optima, best = oracle_optima(env)
print(len(optima), "optimal schedules at L1 =", round(best, 3))
for s in optima[:3]:
    print(s.cells, s.per_slot)

best_state = optima[0]
dev, worst = deviation_report(env.program.target, best_state.per_slot)
print("per-slot deviation", dev.round(3), "max", round(worst, 3))
print("pearson(target, optimum) =", round(pearson(env.program.target, best_state.per_slot), 4))

base = env.baseline_schedule()
print("baseline cells\n", base.cells)
print("pearson(target, baseline) =", round(pearson(env.program.target, base.per_slot), 4))

# correlation ignores scale and offset
x = np.array([1.0, 2.0, 3.0, 4.0])
y = np.array([2.0, 4.0, 5.0, 4.0])
print(pearson(x, y), pearson(3 * x + 1, y))
