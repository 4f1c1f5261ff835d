"""
PPO on PointMass with and without a Bayesian value function
===========================================================

Runs the deterministic critic and the alpha-BNN critic on the same seeds and
compares final scores with a Welch t-test. A short budget keeps this to a
few minutes; the acceptance run uses 100k steps and five seeds.
"""

import tempfile
from pathlib import Path

from bayesvf.envs import make_env, random_policy_baseline
from bayesvf.harness import ExperimentConfig, run_experiment, summarize

STEPS = 30_000
SEEDS = [1, 2, 3]
out = Path(tempfile.mkdtemp(prefix="bayesvf_demo_"))

###############################################################################
# Same seeds for both modes. The reset seeds come from their own stream, so
# both variants see the same start states.

scores = {}
for mode in ("deterministic", "alpha-bnn"):
    cfg = ExperimentConfig.from_flat(dict(algorithm="ppo", mode=mode, env="pointmass", seeds=SEEDS,
                                          total_timesteps=STEPS, output_dir=str(out / mode)))
    scores[mode] = run_experiment(cfg).final_scores
    print(mode, {s: round(v, 2) for s, v in scores[mode].items()})

###############################################################################
# A uniform-random policy for scale, then the comparison table.

print(f"random policy: {random_policy_baseline(make_env('pointmass'), 0, 200):.1f}")
print(summarize(scores).table())
print("per-seed CSVs in", out)
