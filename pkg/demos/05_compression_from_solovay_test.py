# %% [markdown]
# # Compressing states that fail a strong Solovay test
#
# Level r is a single projection p_r on n_r qubits.  From tau(p_r) we read off
# f(n_r) and build a unitary whose first 2**g columns span the range of p_r,
# where g = n_r - f(n_r).  A state with rho(p_r) > 1 - eps is then within
# sqrt(eps) of a g-qubit input run through the machine.

# %%
import math

from qcantor.compression import compress_via_test, run_machine, solovay_to_machine
from qcantor.fixtures import part2_state, part2_test
from qcantor.linalg import trace_distance, tracial_value
from qcantor.states import evaluate

test = part2_test(3)
rho = part2_state(6)
f, machine = solovay_to_machine(test)

# %%
eps = 0.1
for r in range(test.max_levels):
    n, p = test.item(r)
    rec = compress_via_test(rho, test, r, eps, (f, machine))
    out = run_machine(machine, rec.witness, n)
    print(f"n={n} tau={tracial_value(p)} rho(p)={float(evaluate(rho, p)):.4f} f={f(n)} k={rec.k} "
          f"D={trace_distance(out, rho(n)):.4f} <= {math.sqrt(eps):.4f}")
