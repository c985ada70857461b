"""
Anatomy of a bosonic SYK driver
===============================
"""

import math

import numpy as np

from chaoticqa.drivers import bsyk_term_count, bsyk_variance, sample_bsyk, sparsify_bsyk

n, q = 14, 4
inst = sample_bsyk(n, q, seed=2024)
print("terms:", inst.n_terms, "=", math.comb(n, q), "site sets x", 3**q, "axis strings")
print(f"coupling variance {inst.coeffs.var():.6f}, target (q-1)!/N^(q-1) = {bsyk_variance(n, q):.6f}")
print("first terms:", [(tuple(int(i) for i in s), a, round(float(c), 4)) for s, a, c in zip(inst.sites[:3], inst.axes, inst.coeffs)])

# the sparse version keeps k*N random terms with their original couplings
sparse = sparsify_bsyk(inst, k=4, subseed=0)
print("sparse terms:", sparse.n_terms)

# small instances can be assembled densely; the spectrum is symmetric on average
small = sample_bsyk(8, 4, seed=1)
ev = np.linalg.eigvalsh(small.matrix)
print("N=8 spectrum: min %.3f  max %.3f  mean %.2e" % (ev[0], ev[-1], ev.mean()))
print("dense term count at N=8:", bsyk_term_count(8, 4))
