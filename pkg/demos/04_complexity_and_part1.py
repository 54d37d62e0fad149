# %% [markdown]
# # Unitary machines, complexity search and the incompressibility test
#
# qc_complexity searches a dictionary of pure states, so its answer is an
# upper bound on the true complexity.

# %%
from gmpy2 import mpq

from qcantor.compression import (
    StateDictionary,
    UnitaryMachine,
    build_part1_test,
    default_f,
    f_mass,
    part1_component,
    qc_complexity,
    run_machine,
)
from qcantor.fixtures import PART2_V, zeros_sequence
from qcantor.linalg import basis_projector, ket_projector, tensor, tracial_value
from qcantor.states import evaluate, from_bits

ident = UnitaryMachine.identity(12)
print("|0^6>:", qc_complexity(ident, basis_projector("000000"), 0.5).k)
print("|1^6>:", qc_complexity(ident, basis_projector("111111"), 0.5).k)
print("bit reversal of |1> padded to 2 qubits:",
      run_machine(UnitaryMachine.bit_reversal(2), basis_projector("1"), 2).diagonal_real())

# %% [markdown]
# Extending the dictionary can only lower the bound.

# %%
x = tensor(ket_projector(PART2_V), basis_projector("0"))
print(qc_complexity(ident, x, 0.5).k, qc_complexity(ident, x, 0.5, StateDictionary().extended([PART2_V])).k)

# %% [markdown]
# The incompressibility test uses f(n) = 2 ceil(log2(n+2)).  Up to t = 12 no
# length leaves room for an input, so every level is empty.

# %%
print("mass of 2^-f over n=1..8:", f_mass(default_f, range(1, 9)))
for r in range(5):
    print(r, [str(tracial_value(build_part1_test(ident, default_f, r, t))) for t in (4, 8, 12)])

# %% [markdown]
# With a longer dictionary window the test catches |0^6>, which the identity
# machine produces from the empty input.

# %%
p = part1_component(UnitaryMachine.identity(63), default_f, 0, 63, 6)
print("value of 0^infinity on p_(0,63)(6):", evaluate(from_bits(zeros_sequence(6)), p))
print("mass:", tracial_value(p), "<= bound", mpq(1, 2 ** (default_f(6) - 2)))
