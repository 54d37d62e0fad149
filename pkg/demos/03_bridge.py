# %% [markdown]
# # From quantum tests to classical tests
#
# For a projection p and threshold delta we keep the basis strings whose
# diagonal entry is at least delta.  The resulting clopen sets have measure
# at most tau(p)/delta, and the bit sequence failing the quantum test lies in
# every level.

# %%
from gmpy2 import mpq

from qcantor.bridge import bridge_report, check_lifting, select_strings
from qcantor.fixtures import rotated_basis_test, zeros_sequence
from qcantor.linalg import ket_projector, tracial_value

p = ket_projector([mpq(3, 5), mpq(4, 5)])
for d in (mpq(1, 4), mpq(1, 2), mpq(3, 4)):
    sel = select_strings(p, d)
    print(d, sorted(sel.strings), "measure", sel.measure, "bound", tracial_value(p) / d, check_lifting(p, d))

# %%
t = rotated_basis_test(6, 8)
rep = bridge_report(t, zeros_sequence(8).prefix, mpq(1, 2), 8)
print("fails quantum test:", rep.fails_quantum)
for r, (m, b, c) in enumerate(zip(rep.measures, rep.bounds, rep.covered)):
    print(f"r={r} measure={m} bound={b} covered={c}")

# %% [markdown]
# A sequence that does not fail the quantum test has no coverage obligation.

# %%
rep = bridge_report(t, lambda n: "1" * n, mpq(1, 2), 8)
print(rep.fails_quantum, rep.covered)
