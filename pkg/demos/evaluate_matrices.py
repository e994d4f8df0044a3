"""Label accuracy, FEVER score and McNemar on hand-built prediction sets.

Run with: python3 demos/evaluate_matrices.py
"""
import numpy as np

from verdict_loss import ConfusionMatrix, PredictionRecord, VerdictLabel, evaluate, format_percent, label_accuracy, mcnemar

S, R, N = VerdictLabel.S, VerdictLabel.R, VerdictLabel.N

# A dev-set confusion matrix: rows are gold S/R/N, columns are predictions.
cm = ConfusionMatrix([[5976, 222, 468], [470, 5153, 1043], [1051, 1184, 4431]])
print(cm.render())
print("LA =", format_percent(label_accuracy(cm)))
print()

# The FEVER score also needs the right evidence in the top five retrieved sentences.
records = [
    PredictionRecord(1, S, S, [[("Paris", 0)]], [("Paris", 0), ("France", 3)]),
    PredictionRecord(2, R, R, [[("Moon", 1), ("Moon", 2)]], [("Moon", 1)]),  # half the evidence
    PredictionRecord(3, N, N),  # no evidence needed
    PredictionRecord(4, S, R, [[("Tea", 0)]], [("Tea", 0)]),  # wrong label
]
report = evaluate(records)
print("LA =", format_percent(report.label_accuracy), " FS =", format_percent(report.fever_score))
print()

# Paired comparison of two systems on the same claims.
a = np.array([True] * 5 + [False] * 15 + [True] * 30)
b = np.array([False] * 5 + [True] * 15 + [True] * 30)
res = mcnemar(a, b)
print(f"b={res.b} c={res.c} {res.method} p={res.p_value:.4f} significant={res.significant}")
