"""A state that is doubly nonnegative but not completely positive.

Every test that only looks at entries and eigenvalues accepts this 5x5
state; the Horn copositive matrix separates it from the CP cone. The script
then bounds how far the state sits from the cone.
"""

import numpy as np

from cpcone import cones, fixtures, measures

rho = fixtures.dnn_not_cp_state()
print("state (times 9):")
print(np.round(9 * rho.real).astype(int))

print("\nDNN:", cones.is_dnn(rho).verdict, " DD:", cones.is_dd(rho).verdict)

verdict = cones.cp_membership(rho, effort="certify")
W = verdict.certificate.W
print("CP:", verdict.verdict, f"via {verdict.certificate.source}")
print(f"Tr(W rho) = {verdict.certificate.value:.12f}  (a copositive W pairs nonnegatively with every CP state)")
print("certificate re-checked independently:", cones.check_certificate(rho, verdict))

# the Horn identity writes x^T W x for x >= 0 as a manifestly nonnegative expression
x = np.random.default_rng(0).random(5)
lhs, rhs = cones.horn_certificate_eval(x)
print(f"\nHorn identity on a random x >= 0: x^T W x = {lhs:.6f}, certificate form = {rhs:.6f}")

bounds = measures.robustness_cp_bounds(rho)
print(f"\nCP robustness lies in [{bounds.lower:.6f}, {bounds.upper:.6f}]")
print(f"the lower end is the Horn witness scaled by its top eigenvalue 1 + sqrt(5): 1/(9 sqrt5 + 9) = {1 / (9 * np.sqrt(5) + 9):.6f}")
