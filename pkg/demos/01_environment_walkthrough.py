#!/usr/bin/env python3
# Walk through the scheduling MDP by hand on the toy instance.

import numpy as np

from evdqn import Action, Kind
from evdqn.scenarios import toy_environment

env = toy_environment()

# 2 stations x 3 slots, 4 EVs
print("target kWh per slot:", env.program.target)
print("energy per (station, EV):")
print(env.energy_table)  # rows are stations; LEAF is capped by SoC headroom

state = env.reset()
print("free cells:", state.cells.size, "actions:", env.n_actions)

# a ZOE 41 into slot 0 moves 22 kWh
out = env.step(state, Action(station=0, ev_id=2, timeslot=0, kind=Kind.C))
print("reward", out.reward, "per-slot", out.next_state.per_slot)

# wrong kind: penalised, state untouched, episode goes on
bad = env.step(out.next_state, Action(1, 1, 1, Kind.D))
print("violation", bad.violation, "reward", bad.reward, "done", bad.done)

# second ZOE 41 into slot 0 would overshoot the target
print("C5 check:", env.check_constraints(out.next_state, Action(1, 4, 0, Kind.C)))

# put another EV on an occupied cell: conflict ends the episode
clash = env.step(out.next_state, Action(0, 1, 0, Kind.C))
print("violation", clash.violation, "done", clash.done)

# random legal play until nothing fits
rng = np.random.default_rng(1)
s = env.reset()
while legal := env.legal_actions(s):
    o = env.step(s, env.decode(int(rng.choice(legal))))
    s = o.next_state
    if o.done:
        break
print(s.cells)
print("L1 distance", round(env.distance(s), 3))
print("baseline L1", round(env.distance(env.baseline_schedule()), 3))
