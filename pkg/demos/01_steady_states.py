"""Where the bistability lives: mean-field roots against the exact steady state.

Run: python demos/01_steady_states.py
"""

import numpy as np

from qjump.models import ModelParams
from qjump.semiclassical import neoclassical_roots
from qjump.steady import steady_state

LOW = ModelParams.jc(25, 5.3, -8)
HIGH = ModelParams.jc(60, 13.5, -8)

# Both drives give three mean-field roots. The exact steady state is a single
# super-Poissonian distribution spread between the dim and bright roots.
for name, p, l_max in [("g=25, eps=5.3", LOW, 25), ("g=60, eps=13.5", HIGH, 70)]:
    rep = steady_state(p, l_max)
    roots = neoclassical_roots(p)
    print(f"{name}: <n>_ss = {rep.photon_number:.3f}, g2(0) = {rep.g2_zero:.3f}")
    for r in roots.roots:
        print(f"    mean-field {r.label:9s} |alpha| = {r.amp_unscaled:.3f}")

# Above threshold the exact <n> sits between the dim and bright plateaus:
# the ensemble is a mixture of the two, weighted by how long each survives.
rep = steady_state(HIGH, 70)
bright = neoclassical_roots(HIGH).amplitudes[-1] ** 2
print(f"bright-state occupation estimate: {rep.photon_number / bright:.2f}")
print("photon-number distribution peaks:",
      np.argsort(np.real(np.diag(rep.rho_cav)))[-3:][::-1].tolist())
