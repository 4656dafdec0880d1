"""Fit the decay order of Eguchi-Hanson, invert the end and probe the added point."""

import numpy as np

from tale.conformal import compactify, estimate_ale_order
from tale.metrics import eguchi_hanson

g = eguchi_hanson(1.0)
desc = estimate_ale_order(g, np.geomspace(4.0, 64.0, 5))
print(f"tau = {desc.tau:.4f}, mu = {desc.mu}")
for row in desc.per_k:
    print(f"  k = {row['k']}: slope {row['slope']:.4f} (r^2 = {row['r2']:.6f})")

chart, report = compactify(g, desc)
print(report.verdict)
for k, (e, b) in enumerate(zip(report.exponents, report.bounded)):
    print(f"  order {k}: |d^k(gbar - I)| ~ |z|^{e:.3f}, bounded: {b}")
