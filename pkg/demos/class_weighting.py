"""Class-balanced weights for an imbalanced three-way label distribution.

Run with: python3 demos/class_weighting.py
"""
import numpy as np

from verdict_loss import FEVER_TRAIN_COUNTS, class_balanced_weights, inverse_frequency_limit, training_weights

counts = np.array(FEVER_TRAIN_COUNTS)
print("train counts (S, R, N):", counts)

# beta = 0 means no reweighting at all.
print("beta=0      :", class_balanced_weights(counts, 0.0))

# As beta approaches 1 the weights approach inverse class frequency.
for beta in (0.9999, 0.99999, 0.999999):
    w = class_balanced_weights(counts, beta)
    print(f"beta={beta:<8}: {w / w.max()}")
print("1/n limit   :", inverse_frequency_limit(counts))

# The raw weights are tiny; the trainer rescales them to sum to the class count
# so the step size of plain gradient descent stays comparable to the unweighted run.
print("training    :", training_weights(counts, 0.999999))
