"""How the four verdict objectives treat the same prediction.

Run with: python3 demos/losses_walkthrough.py
"""
import math

import numpy as np

from verdict_loss import LossSpec, VerdictLabel, aux_loss, loss_gradient, total_loss

# A claim whose gold label is SUPPORTS, and a model that is fairly sure about it.
y = VerdictLabel.S.one_hot()
p = np.array([0.7, 0.2, 0.1])

# Cross entropy only looks at the gold probability.
print("CE  :", total_loss(LossSpec("ce"), y, p), "=", -math.log(0.7))

# The auxiliary terms push down the wrong classes.
# OVA penalises both R and N; SRN and SR penalise only R here.
for kind in ("ova", "srn", "sr"):
    print(f"{kind:<4}: aux = {aux_loss(kind, y, p):.6f}")

# When the gold label is NOT ENOUGH INFO, SR drops the auxiliary term entirely.
y_n = VerdictLabel.N.one_hot()
print("SR with gold N:", aux_loss("sr", y_n, p))

# Gradients are taken with respect to the logits, not the probabilities.
z = np.log(p)
for kind in ("ce", "ova", "srn", "sr"):
    res = loss_gradient(LossSpec(kind, 0.5), y, z)
    print(f"{kind:<4} loss={res.value:.4f} grad={np.round(res.grad_z, 4)}")

# Softmax gradients always sum to zero, since adding a constant to every logit changes nothing.
res = loss_gradient(LossSpec("ova", 1.0), y, z)
print("gradient sum:", res.grad_z.sum())

# Class weights multiply the whole per-sample loss by the weight of the gold class.
weighted = total_loss(LossSpec("srn", 1.0, (2.0, 1.0, 1.0)), y, p)
print("weighted SRN:", weighted, "=", -2 * (math.log(0.7) + math.log(0.8)))
