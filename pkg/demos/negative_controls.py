"""
Two ways a point set fails to be a crystal
==========================================

The Fibonacci chain is finite type (its difference set keeps a healthy
gap at every window size) yet owns no exact period at all. A lattice
modulated at an irrational frequency is the opposite failure: almost
periodic by construction, but its difference set smears and the gap
collapses as the window grows.
"""

import numpy as np

from idealcrystal import RunConfig, recover_crystal
from idealcrystal.generators import gen_cut_and_project, gen_perturbed_lattice
from idealcrystal.geometry import denseness_radius, finite_type_gap

golden = (1 + np.sqrt(5.0)) / 2

print("Fibonacci chain (cut-and-project, golden slope)")
for R in (50.0, 100.0, 200.0):
    S = gen_cut_and_project(golden, (0.0, 1.0), R)
    g = finite_type_gap(S, denseness_radius(S, R / 10))
    print(f"  R = {R:5.0f}: {len(S):4d} points, gap = {g.gap:.9f}")
# the gap never moves: it is the golden ratio itself

S = gen_cut_and_project(golden, (0.0, 1.0), 1000.0)
out = recover_crystal(S, RunConfig(r_max=500.0))
print(f"  R = 1000: {len(S)} points, verdict = no crystal at stage "
      f"'{out.stage}'")
print(f"  {out.diagnostics['n_candidates']} candidate translations up to "
      f"|T| = 500 tried, {out.diagnostics['n_periods']} verified")

print()
print("perturbed lattice, amplitude 0.1 at frequency sqrt(2)")
for R in (100.0, 200.0, 400.0):
    S = gen_perturbed_lattice([[1.0]], 0.1, [np.sqrt(2.0)], R)
    g = finite_type_gap(S, denseness_radius(S, R / 10))
    print(f"  R = {R:5.0f}: {len(S):4d} points, gap = {g.gap:.3e}")
# the same displacement field at frequency 1/3 repeats every third site,
# so the dichotomy flips and a genuine crystal comes back
S = gen_perturbed_lattice([[1.0]], 0.1, [1.0 / 3.0], 60.0)
dec = recover_crystal(S)
print(f"  frequency 1/3: verdict = crystal, det = {dec.lattice.det:.6f}, "
      f"residues = {[round(float(f[0]), 6) for f in dec.residues]}")
