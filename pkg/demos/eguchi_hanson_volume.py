"""Bishop ratio of the Eguchi-Hanson metric around the bolt, written as CSV.

Usage: python demos/eguchi_hanson_volume.py [samples] > eh_psi.csv
"""

import csv
import sys

import numpy as np

from tale.metrics import eguchi_hanson_bolt_chart
from tale.volume import check_monotone, psi_table

samples = int(sys.argv[1]) if len(sys.argv) > 1 else 512
radii = np.geomspace(0.1, 50.0, 12)
table = psi_table(eguchi_hanson_bolt_chart(1.0), np.zeros(4), radii, samples=samples)

w = csv.writer(sys.stdout)
w.writerow(["r", "psi", "stderr"])
for r, p, s in zip(table.radii, table.psi, table.stderr):
    w.writerow([f"{r:.6g}", f"{p:.6f}", f"{s:.2e}"])
print(f"# monotone within 2 stderr: {check_monotone(table)['monotone']}", file=sys.stderr)
