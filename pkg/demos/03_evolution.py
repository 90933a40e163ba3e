# coding: utf-8
# # Evolutionary refinement of an under-trained fit
#
# Start from a gradient fit stopped after 20 steps, then evolve a population of
# graph sequences: prune / sprout / perturb mutations, blend or swap crossover,
# and a short Adam refinement as fitness (the refined genome is kept).

# %%
import numpy as np

from ecrnet import EvoConfig, GenConfig, HyperParams, fit_ecr, make_dataset, run_evolution, score_sequence

gt, ts = make_dataset(GenConfig(d=5, K=3, T=1500), seed=4)
hp = HyperParams()

seed_fit, report = fit_ecr(ts, hp.replace(max_iters=20), seed=0)
print("truncated seed: SHD", score_sequence(gt, seed_fit).total_shd, f"loss {report.final_loss:.5f}")

# %%
best, history = run_evolution(ts, hp, EvoConfig(population_size=12, generations=10, seed=0), seed_fit)
for h in history:
    print(f"gen {h['generation']:>2}  best {h['best_fitness']:.5f}  mean {h['mean_fitness']:.5f}")
print("evolved: SHD", score_sequence(gt, best).total_shd)

# %% [markdown]
# Reference: the same data with the full gradient budget.

# %%
full, _ = fit_ecr(ts, hp, seed=0)
print("full fit: SHD", score_sequence(gt, full).total_shd)
