"""Heterodyne records and the cumulative-charge readout of a cat state.

Run: python demos/04_heterodyne_and_charge.py   (about a minute)
"""

import numpy as np

from qjump.fock import coherent_ket, superposition_ket
from qjump.heterodyne import charge_distribution_test, charge_records, run_heterodyne_trajectory
from qjump.models import ModelParams

# An empty cavity prepared in a coherent state stays coherent under heterodyne
# detection: the conditional amplitude simply decays.
rec = run_heterodyne_trajectory(ModelParams.jc(0, 0, 0), 30, 0.001, 1.0, 3,
                                psi0=coherent_ket(2.0, 30), sample_every=250)
for t, a in zip(rec.sample_t, rec.sample_a):
    print(f"  t={t:4.2f}  <a>={a.real:+.4f}{a.imag:+.4f}i  2 e^-t={2 * np.exp(-t):.4f}")

# The final charge of an even cat lands on one of the two lobes at random.
q = np.array([r.q_tilde for r in charge_records(superposition_ket(3, -3, 40), range(400),
                                                trace_every=10**9)])
print(f"fraction read out on the +3 lobe: {np.mean(np.conj(q).real > 0):.3f}")

rep = charge_distribution_test(coherent_ket(1 + 2j, 30), 1000, master_seed=4)
print(f"charge histogram vs Q function: chi2={rep.statistic:.1f}, p={rep.p_value:.3f}")
