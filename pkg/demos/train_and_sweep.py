"""Train linear verdict classifiers on synthetic data and compare objectives.

Run with: python3 demos/train_and_sweep.py   (about half a minute)
"""
import numpy as np

from verdict_loss import LossSpec, SyntheticConfig, TrainConfig, generate_synthetic, train, training_weights
from verdict_loss.sweep import SweepGrid, lambda_effect_table, render_rows, run_sweep

train_set, dev = generate_synthetic(SyntheticConfig.at_scale(0.02))
print("train counts:", train_set.class_counts, " dev counts:", dev.class_counts)

# The training split leans towards SUPPORTS, and an unweighted model follows it.
weights = tuple(training_weights(train_set.class_counts, 0.999999))
for name, spec in (("ce", LossSpec("ce")), ("ce+w", LossSpec("ce", 0.0, weights))):
    _, report = train(train_set, dev, TrainConfig(spec, seed=1))
    print(f"{name:<5} dev acc {report.dev_accuracy:.4f}  predictions per class {np.bincount(report.dev_predictions, minlength=3)}")

# A small grid over every objective, best of two seeds per point.
grid = SweepGrid(lambdas=(0.0625, 0.25, 1.0), betas=(0.0, 0.999999))
rows = run_sweep(train_set, dev, grid, TrainConfig(epochs=10, seed=1), n_runs=2)
print(render_rows(rows))
print()
print(lambda_effect_table(rows))
