"""A twistor spinor on the compactified Eguchi-Hanson space vanishes at the added point.

The parallel spinor of Eguchi-Hanson becomes, after the conformal change
and inversion, a twistor spinor on a punctured ball; transporting it into
the puncture gives phi = 0 and D phi != 0 there.
"""

import numpy as np

from tale.conformal import ALEDescriptor, compactify
from tale.metrics import eguchi_hanson
from tale.spinors import (FrameField, dirac_field, extend_to_puncture, inverted_spinor_field,
                          parallel_spinor_on_EH, twistor_residual)

R = 4.0
g = eguchi_hanson(1.0)
chart, _ = compactify(g, ALEDescriptor(4.0, 3, R))
par = parallel_spinor_on_EH(g)
print(f"parallel spinors: dimension {par.dimension}, chirality {par.chirality}")

phi = inverted_spinor_field(g, chart, par.field.column(0))
frame = FrameField(chart)
z = np.array([0.02, -0.01, 0.015, 0.005])
print("twistor residual at z:", np.max(np.abs(twistor_residual(chart, frame, phi, z, np.array([1.0, 0, 0, 0])))))

psi = dirac_field(chart, frame, phi)
ext = extend_to_puncture(chart, lambda x: np.concatenate([phi(x), psi(x)[0]]), np.zeros(4), 2.0 ** -3 / R, frame)
print(f"limit at the added point: |phi| = {np.linalg.norm(ext.phi):.2e}, |D phi| = {np.linalg.norm(ext.psi):.4f}, "
      f"path spread {ext.spread:.1e}")
