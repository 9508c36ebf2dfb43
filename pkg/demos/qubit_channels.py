"""Qubit channels that preserve completely positive states.

For qubits the question reduces to inequalities on the 4x4 Pauli transfer
matrix. Preserving CP states is weaker than being CP-preserving on every
extension (CPCP); a measurement in the Hadamard basis shows the gap.
"""

import numpy as np

from cpcone import channels, cones, fixtures, measures

for name, ch in [("classical error p=0.3", channels.catalogue("classical_error", p=0.3)),
                 ("Y conjugation", channels.ChannelRep.from_kraus([np.array([[0, -1j], [1j, 0]])])),
                 ("Hadamard-basis measurement", channels.measure_in_basis(np.array([[1, 1], [1, -1]]) / np.sqrt(2)))]:
    T = channels.pauli_standard(ch)
    print(f"{name}:")
    print(np.array2string(T, precision=3, suppress_small=True))
    print(f"  CP-preserving: {channels.qubit_cp_preserving(ch)}, CPCP: {channels.qubit_cpcp(ch)},"
          f" general classifier: {channels.classify(ch).cpcp.verdict}\n")

# any qubit state is reachable from the most non-negativity-rich state (I + Y)/2
rng = np.random.default_rng(1)
target = measures.random_density(2, rng)
ch = channels.most_resourceful_channel(target)
out = channels.apply_channel(ch, fixtures.y_plus_state())
print("most resourceful channel reproduces a random target:", np.allclose(out, target))
print("and it is CP-preserving:", channels.qubit_cp_preserving(ch))
print("qubit closed form of the target:", round(measures.qubit_closed_form(target), 6),
      " DNN robustness:", round(measures.robustness(target, "DNN").value, 6))
print("Hadamard channel maps a CP input to CP:",
      cones.cp_membership(channels.apply_channel(channels.measure_in_basis(np.array([[1, 1], [1, -1]]) / np.sqrt(2)),
                                                 measures.random_cp_state(2, rng))).verdict)
