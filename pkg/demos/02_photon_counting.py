"""A single photon-counting record at high drive: long plateaus, rare switches.

Run: python demos/02_photon_counting.py   (a few minutes)
"""

import numpy as np

from qjump.fock import GridSpec, coherent_ket, embed
from qjump.mcwf import cavity_state, classify_jumps, detect_switches, find_q_peaks, run_trajectory_pure
from qjump.models import ModelParams

p = ModelParams.jc(60, 13.5, -8)
# Start on the bright branch (atom in its ground state) so the record opens
# on a plateau instead of the turn-on transient from vacuum.
bright = embed(coherent_ket(1.7 - 5.15j, 70))
rec = run_trajectory_pure(p, 70, 0.001, 120.0, seed=1, psi0=bright, sample_every=5, snapshot_times=[120.0])

counts = classify_jumps(rec)
print(f"{counts.total} clicks, {100 * counts.fraction:.2f}% of them raised <n>")

# Plateaus of the conditional photon number: dim near 0-4, bright near 28.
hist, edges = np.histogram(rec.sample_n, bins=[0, 2, 6, 12, 20, 26, 40])
for lo, hi, h in zip(edges, edges[1:], hist):
    print(f"  <n> in [{lo:2.0f},{hi:2.0f}): {100 * h / hist.sum():5.1f}% of the time")

for s in detect_switches(rec.sample_t, rec.sample_n, 2.0, 20.0)[:6]:
    print(f"  {s.direction:4s} switch {s.t_start:8.3f} -> {s.t_end:8.3f}")

# The final conditional state's Q function: one or two coherent-like lobes.
_, ket = rec.snapshots[-1]
peaks = find_q_peaks(cavity_state(ket, 70), GridSpec.square(7.5, 81))
print("Q peaks at t=120:", [f"{z:.2f}" for z in peaks])
