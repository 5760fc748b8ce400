#!/usr/bin/env python3
# Train a small Q-network on the toy instance and compare it with the optimum.
# Takes about ten seconds.

import numpy as np

from evdqn import greedy_rollout, train
from evdqn.config import load_config
from evdqn.evaluation import brute_force_oracle, pearson
from pathlib import Path

cfg = load_config(Path(__file__).resolve().parents[1] / "configs" / "toy.ini")
env, netcfg = cfg.resolve()
_, oracle = brute_force_oracle(env)


def progress(episode, history):
    if episode % 1000 == 0:
        recent = np.mean(history.episode_rewards[-1000:])
        print(f"episode {episode:5d}  eps {history.epsilons[-1]:.3f}  mean reward {recent:9.1f}")


qnet, history = train(env, cfg.hyperparams, netcfg, oracle_distance=oracle, on_episode=progress)

roll = greedy_rollout(qnet, env)
print(roll.state.cells)
print("achieved", roll.state.per_slot.round(3), "target", env.program.target.round(3))
print("greedy L1", round(env.distance(roll.state), 3), "oracle", round(oracle, 3))
print("pearson", round(pearson(env.program.target, roll.state.per_slot), 4))
print("optimal in last 500 training episodes:", sum(history.optimal[-500:]))
