"""Which non-negativity measures behave like resource monotones.

The l1 measure is cheap but can grow under a channel that preserves CP
states. The DD robustness is an upper bound on the CP robustness but is not
zero on every CP state, so it is a bound and not a monotone.
"""

import numpy as np

from cpcone import channels, measures

ch, rho = channels.l1_counterexample()
print("l1 measure before the channel:", measures.l1_measure(rho))
print("l1 measure after the channel: ", measures.l1_measure(channels.apply_channel(ch, rho)))

ones = np.full((3, 3), 1 / 3)
print("\nall-ones state (CP, rank one, not diagonally dominant):")
print("  DNN robustness:", round(measures.robustness(ones, "DNN").value, 9))
print("  DD robustness: ", round(measures.robustness(ones, "DD").value, 9))

for kind in ("robustness-dnn", "robustness-dd", "trace-dnn"):
    rep = measures.monotone_axiom_suite(kind, trials=20, seed=3, axioms=("C1", "C2", "C3"))
    counts = {a: rep.count(a) for a in ("C1", "C2", "C3")}
    print(f"{kind:15s} violations over 20 trials: {counts}")
