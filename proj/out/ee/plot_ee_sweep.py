#!/usr/bin/env python3
"""Plot energy efficiency vs antenna count per user count."""
import csv
import sys
from collections import defaultdict

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

csv_path = sys.argv[1] if len(sys.argv) > 1 else "ee_sweep.csv"
rows = list(csv.DictReader(open(csv_path)))
by_users = defaultdict(list)
for r in rows:
    by_users[int(r["m_r"])].append(r)

fig, ax = plt.subplots(figsize=(7, 5))
for m_r, group in sorted(by_users.items()):
    group.sort(key=lambda r: int(r["n_t"]))
    n_t = [int(r["n_t"]) for r in group]
    ax.plot(n_t, [float(r["ee_zf_mbit_per_j"]) for r in group],
            "o--", label=f"ZF, M_r={m_r}")
    ax.plot(n_t, [float(r["ee_rnn_mbit_per_j"]) for r in group],
            "s-", label=f"RNN-aided, M_r={m_r}")
ax.set_xlabel("BS antennas N_t")
ax.set_ylabel("Energy efficiency (Mbit/Joule)")
ax.set_xscale("log", base=2)
ax.grid(True, which="both", alpha=0.3)
ax.legend()
fig.tight_layout()
out = csv_path.rsplit(".", 1)[0] + ".png"
fig.savefig(out, dpi=150)
print(f"wrote {out}")
