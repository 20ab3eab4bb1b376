# coding: utf-8

# # How often is a committee all Byzantine?
#
# A committee of size kappa is a uniform kappa-subset of the n parties. With
# f Byzantine parties the chance that nobody honest is selected is
# C(f, kappa) / C(n, kappa). We compare that with coin draws.

# In[1]:

from evaba.committee import committee_probability
from evaba.harness import committee_stats, committee_table

for n in (4, 7, 10, 13, 31):
    f = (n - 1) // 3
    row = [f"{float(committee_probability(n, f, k)):.5f}" for k in range(1, f + 2)]
    print(f"n={n:>2} f={f:>2}  " + "  ".join(row))


# The default kappa = f + 1 can never be all Byzantine. Smaller committees
# shrink the promotion traffic at a price that drops geometrically in kappa.

# In[2]:

rows = committee_stats(10, samples=20_000, seed=5)
print(committee_table(rows))
