# %% [markdown]
# # States as coherent sequences of density matrices
#
# A state on the infinite qubit chain is stored as its restrictions to the
# first n qubits.  Tracing out the last qubit of level n+1 must give level n.

# %%
import numpy as np
from gmpy2 import mpq

from qcantor import linalg
from qcantor.fixtures import random_matrix_sequence
from qcantor.states import (
    ClassicalSequence,
    bernoulli_measure,
    check_coherence,
    epr_chain,
    from_bits,
    from_measure,
    iid_state,
)

# %% [markdown]
# Bit strings are indexed little-endian: bit j of the string contributes 2**j.

# %%
z = ClassicalSequence.from_prefix("10")
print(from_bits(z)(2).to_numpy().real)

# %%
b = from_measure(bernoulli_measure(mpq(1, 3)), 4)
print("Bernoulli(1/3) diagonal at n=2:", [str(x) for x in b(2).diagonal_real()])

# %% [markdown]
# The EPR chain alternates pure and mixed prefixes.

# %%
epr = epr_chain(6)
for n in range(5):
    print(n, "rank", np.linalg.matrix_rank(epr(n).to_numpy()))

# %%
states = {
    "bits": from_bits(ClassicalSequence.periodic("011", 8)),
    "iid": iid_state(linalg.diagonal([mpq(3, 4), mpq(1, 4)]), 8),
    "epr": epr_chain(8),
    "random": random_matrix_sequence(np.random.default_rng(0), 8),
}
for name, rho in states.items():
    rep = check_coherence(rho, 8)
    print(f"{name:7s} max deviation {rep.max_deviation}")
