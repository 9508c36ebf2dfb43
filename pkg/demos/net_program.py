"""The 1-norm of non-negativity of a pure state, by a net of phases.

The norm asks how cheaply a complex vector can be written as a phase-weighted
sum of nonnegative vectors. Restricting the phases to the k-th roots of unity
gives a second-order cone program whose value overestimates the norm by a
known factor; the bracket tightens as k doubles.
"""

import numpy as np

from cpcone import fixtures, measures

v = fixtures.fourier_vector()
print("Fourier column of size 5:", np.round(v, 4))
for k in (8, 16, 32, 64, 128):
    dec = measures.net_decomposition(v, k)[0]
    f = measures.net_error_factor(k)
    print(f"k = {k:3d}: net value {dec.objective:.6f}, guaranteed lower end {dec.objective / f:.6f}")

r = measures.nnorm_1(v, eps=1e-3)
print(f"\nnnorm_1 bracket at eps = 1e-3: [{r.lower:.6f}, {r.upper:.6f}]")
print(f"exact value sqrt(15 - 5 sqrt5) = {np.sqrt(15 - 5 * np.sqrt(5)):.6f}")

pure = measures.robustness_pure(v)
print(f"CP robustness of the pure state, norm^2 - 1: [{pure.lower:.6f}, {pure.upper:.6f}]"
      f" vs 14 - 5 sqrt5 = {14 - 5 * np.sqrt(5):.6f}")

print("\nphase vectors (1, -1, i, -i, 0, ...)/2 have norm 2 in every dimension:")
for n in (4, 10, 50):
    r = measures.nnorm_1(fixtures.phase_vector(n, "unit"))
    print(f"  n = {n:2d}: [{r.lower:.6f}, {r.upper:.6f}]")
