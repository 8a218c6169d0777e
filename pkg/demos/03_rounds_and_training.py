"""Run a short experiment with training switched on and print how many
devices each scheme schedules and where the global loss ends up."""

from dataclasses import replace

import numpy as np

from relayfl import SystemParams
from relayfl.config import ExperimentConfig
from relayfl.harness import run_experiment

config = ExperimentConfig(system=SystemParams(total_rounds=100), trials=5, master_seed=3, fl_enabled=True)
records = run_experiment(config)

print("mean devices scheduled per round")
print("%-12s %8s %8s" % ("scheme", "r1-10", "r91-100"))
for scheme in config.schemes:
    early = np.mean([r.scheduled_count for r in records if r.scheme == scheme and r.round <= 10])
    late = np.mean([r.scheduled_count for r in records if r.scheme == scheme and r.round > 90])
    print("%-12s %8.2f %8.2f" % (scheme, early, late))
# unspent energy rolls forward, so later rounds can afford more devices

clean = run_experiment(replace(config, fl=replace(config.fl, noisy=False)))
print()
print("final global loss, mean over trials")
for scheme in config.schemes:
    a = np.mean([r.global_loss for r in records if r.scheme == scheme and r.round == 100])
    b = np.mean([r.global_loss for r in clean if r.scheme == scheme and r.round == 100])
    print("%-12s noisy %.4f  noiseless %.4f" % (scheme, a, b))
