"""Budgeted recovery of discoveries from paired summary-statistic tables.

Two studies report p-values for overlapping keys: a large expensive one
(the target) and a cheap convenience one (the auxiliary).  The goal is to
recover the target's discoveries while actually reading only a budgeted
subset of its rows, steering the budget with the auxiliary column.

Run as: python3 demos/summary_table_recovery.py
"""

import os
import tempfile

import numpy as np

from activetest.pipeline import (
    SummaryTable,
    align,
    oracle_recovery,
    read_summary_table,
)

rng = np.random.default_rng(5)
n, n_signal = 20_000, 120

# target p-values: 120 strong signals buried in uniform noise
target = rng.uniform(size=n)
target[:n_signal] = 10.0 ** rng.uniform(-9.0, -6.0, size=n_signal)
# the auxiliary study sees the same signals through a noisy lens
aux = np.clip(target * 10.0 ** rng.normal(0.0, 0.4, size=n), 0.0, 1.0)
keys = [f"rs{i:05d}" for i in range(n)]

# round-trip through files to exercise the same path the CLI uses
tmp = tempfile.mkdtemp()
for name, stats, order in (("target", target, rng.permutation(n)),
                           ("aux", aux, np.arange(n))):
    with open(os.path.join(tmp, f"{name}.csv"), "w") as fh:
        fh.write("rsid,pval\n")
        for i in order:
            fh.write(f"{keys[i]},{float(stats[i])!r}\n")

joined = align(read_summary_table(os.path.join(tmp, "target.csv"), "rsid", "pval"),
               read_summary_table(os.path.join(tmp, "aux.csv"), "rsid", "pval"))
print(f"aligned {len(joined)} keys (tables arrive in different row orders)")

print()
budget = 1200.0
print(f"== budgeted recovery, budget {budget:.0f} of {n} rows ==")
print(f"{'method':<9}{'queries':>9}{'oracle':>8}{'recovered':>11}{'overlap_eff':>13}")
for method in ("active", "random", "all"):
    res = oracle_recovery(joined, n_b=budget if method != "all" else n,
                          beta=0.5, method=method, alpha=0.1, seed=42)
    print(f"{method:<9}{res.n_queries:>9}{res.oracle.size:>8}"
          f"{res.recovered.size:>11}{res.efficiency:>13.4f}")

print()
print("efficiency = discoveries shared with the full-information oracle per")
print("row actually read; the utility allocation reads a small fraction of")
print("the rows the oracle needs and still recovers most of its discoveries")
