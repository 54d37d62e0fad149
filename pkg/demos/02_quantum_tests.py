# %% [markdown]
# # Quantum tests and verdicts
#
# A level of a test is an increasing sequence of projections.  We evaluate
# states on a few fixture tests and report depth-relative verdicts.

# %%
from gmpy2 import mpq

from qcantor.fixtures import epr_test, fixture_states, prefix_qml_test, rotated_basis_test
from qcantor.qtests import evaluate_test, lln_statistic, universal_test, verdict

DEPTH = 8
tests = {
    "prefix": prefix_qml_test(7, DEPTH),
    "rotated": rotated_basis_test(7, DEPTH),
    "epr": epr_test(7, DEPTH),
}
states = fixture_states(DEPTH)

# %%
for tname, t in tests.items():
    for sname, rho in states.items():
        vals = evaluate_test(rho, t, DEPTH)
        v = verdict(vals, mpq(1, 4), depth=DEPTH)
        print(f"{tname:8s} {sname:14s} {v.describe()}")

# %% [markdown]
# Combining an explicit list of tests: level n joins level e+n+1 of test e.

# %%
u = universal_test(list(tests.values()), 3, DEPTH)
for n in range(3):
    print("R_%d mass at depth %d: %s" % (n, DEPTH, u.level(n).mass(DEPTH)))

# %% [markdown]
# Law of large numbers statistic.

# %%
for sname in ("tracial", "iid_2_3", "zeros"):
    print(sname, [str(lln_statistic(states[sname], n)) for n in range(1, 7)])
