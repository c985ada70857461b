"""
Time to solution for LABS
=========================

Anneal the low-autocorrelation binary sequence problem at a few sizes and fit
TTS(N) = c * b**N for the transverse field and a bSYK-assisted schedule.
"""

import numpy as np

from chaoticqa.analysis import fit_scaling, tts
from chaoticqa.drivers import DriverSpec
from chaoticqa.dynamics import LONG_ANNEAL, population_sweep, with_method
from chaoticqa.problems import labs_energies
from chaoticqa.schedules import ScheduleSpec

sizes, Ts = [5, 7, 9], [3.0, 10.0]
for n in sizes:
    e = labs_energies(n)
    print(f"N={n}: optimum {e.ground_energy:g}, degeneracy {e.degeneracy}")

# a bSYK4 driver on an odd number of spins has a two-fold ground state, so the
# start state is |+...+> projected onto that doublet
cfg = with_method(LONG_ANNEAL, tie_break="project")
results = {}
for label, make in {
    "TF": lambda c: ScheduleSpec("TF", c),
    "bSYK4": lambda c: ScheduleSpec("S1", c, DriverSpec("bsyk", q=4, seed=3)),
}.items():
    for n in sizes:
        sweep = population_sweep(make(labs_energies(n)), Ts, cfg)
        for r in sweep:
            results.setdefault((label, r.T), []).append((n, tts(r.T, r.p_gs)))

for (label, T), pts in sorted(results.items()):
    fit = fit_scaling(pts)
    err = "" if fit.stderr_b is None else f" +- {fit.stderr_b:.3f}"
    print(f"{label:6s} T={T:<5g} b = {fit.b:.3f}{err}   TTS = {np.round([p[1] for p in pts], 2)}")
