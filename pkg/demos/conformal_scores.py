"""Conformal p-values from a calibration set of conformity scores.

Each test score is ranked against the calibration scores; low scores are
evidence against the null.  The resulting p-value (1 + #{cal <= test}) /
(n + 1) is super-uniform by exchangeability alone, with no distributional
assumptions, so it feeds directly into the step-up procedures.

Run as: python3 demos/conformal_scores.py
"""

import numpy as np

from activetest.pipeline import conformal_p
from activetest.procedures import bh

print("== the rank formula on a toy calibration set ==")
cal = [0.1, 0.2, 0.3, 0.4]
for t in (0.25, 0.05, 0.99, 0.2):
    p = conformal_p(cal, [t])[0]
    print(f"   test score {t:.2f} -> p = {p:.2f}")
print("(a tied calibration score counts toward the rank, so 0.2 draws the")
print(" same p-value as 0.25; the attainable minimum is 1/(n+1) = 0.2)")

print()
print("== a screening task ==")
rng = np.random.default_rng(3)
# calibration scores from healthy controls; test batch has 30 true events
# with systematically lower scores
cal = rng.normal(loc=1.0, size=400)
test = np.concatenate([rng.normal(loc=-4.0, size=30),
                       rng.normal(loc=1.0, size=470)])
p = conformal_p(cal, test)
print(f"{cal.size} calibration scores, {test.size} test points")
print(f"smallest attainable p-value: {1/(cal.size+1):.5f}")

res = bh(p, 0.2)
hits = int(np.sum(res.rejected < 30))
print(f"step-up at level 0.2: {res.rejected.size} flagged, {hits} of 30 "
      f"true events, {res.rejected.size - hits} false")

print()
print("== super-uniformity sanity check under the null ==")
# draw fresh calibration + null test scores many times; the p-values'
# empirical CDF must sit at or below the diagonal
m = 20_000
counts = np.sum(rng.normal(size=(m, 99)) <= rng.normal(size=(m, 1)), axis=1)
p_null = (1.0 + counts) / 100.0
for s in (0.05, 0.1, 0.25, 0.5):
    print(f"   P(p <= {s:<4}) = {np.mean(p_null <= s):.4f}")
