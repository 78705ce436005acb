"""Photon number during a click-free stretch from a two-state superposition.

Run: python demos/03_null_record.py
"""

import numpy as np

from qjump.analytics import (
    SuperpositionSpec,
    initial_superposition_photon,
    null_record_photon_approx,
    null_record_photon_exact,
)
from qjump.semiclassical import localization_bound, localization_intersection

s = SuperpositionSpec(1.7 - 5.15j, -2.25 - 0.2j)
n0 = initial_superposition_photon(s)
print(f"<n> at the start of the null record: {n0:.3f}")

# Without clicks the brighter component loses weight; <n> falls far faster
# than the kappa decay of either component alone.
for t in np.array([0.0, 0.02, 0.05, 0.074, 0.1, 0.2]):
    print(f"  t={t:5.3f}  exact {float(null_record_photon_exact(s, t)):7.3f}"
          f"  approx {float(null_record_photon_approx(s, t)):7.3f}")

print(f"lower bound on the jump half-duration: {localization_bound(s.alpha1, s.alpha2):.4f}")
print(f"time the null-record <n> falls to the smaller plateau: "
      f"{localization_intersection(s.alpha1, s.alpha2):.4f}")
