#!/usr/bin/env python3
"""Plot detection accuracy vs SNR per class."""
import csv
import sys
from collections import defaultdict

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

csv_path = sys.argv[1] if len(sys.argv) > 1 else "accuracy.csv"
rows = list(csv.DictReader(open(csv_path)))
per_class = defaultdict(list)
overall = {}
for r in rows:
    snr = float(r["snr_db"])
    per_class[r["class"]].append((snr, float(r["recall"])))
    overall[snr] = float(r["overall_accuracy"])

fig, ax = plt.subplots(figsize=(7, 5))
for cls, points in sorted(per_class.items()):
    points.sort()
    ax.plot([p[0] for p in points], [p[1] for p in points], "o-", label=cls)
snrs = sorted(overall)
ax.plot(snrs, [overall[s] for s in snrs], "k--", label="overall")
ax.set_xlabel("SNR (dB)")
ax.set_ylabel("Detection accuracy")
ax.set_ylim(-0.02, 1.02)
ax.grid(True, alpha=0.3)
ax.legend()
fig.tight_layout()
out = csv_path.rsplit(".", 1)[0] + ".png"
fig.savefig(out, dpi=150)
print(f"wrote {out}")
