# %% [markdown]
# # Entropy profiles and the cross-entropy statistic
#
# Logarithms are base 2.

# %%
from gmpy2 import mpq

from qcantor.entropy import cross_entropy_report, entropy_rate
from qcantor.linalg import diagonal
from qcantor.states import ClassicalSequence, bernoulli_measure, from_bits, from_measure, iid_state, tracial_state

DEPTH = 6
iid = iid_state(diagonal([mpq(3, 4), mpq(1, 4)]), DEPTH)
print([round(row[2], 6) for row in entropy_rate(iid, DEPTH).rows])

# %% [markdown]
# Against the tracial state the statistic is 1 for every rho.

# %%
rep = cross_entropy_report(iid, tracial_state(DEPTH), DEPTH)
print(rep.cross)

# %% [markdown]
# For a bit sequence against a measure state it is the empirical code length.

# %%
z = from_bits(ClassicalSequence.periodic("001", DEPTH))
psi = from_measure(bernoulli_measure(mpq(1, 3)), DEPTH)
print([round(x, 6) for x in cross_entropy_report(z, psi, DEPTH).cross])
