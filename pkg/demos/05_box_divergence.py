"""The box divergence: truncated full form against its first-order expansion."""

# %%
import math

from qkl.kl import kl_box_first_order, kl_box_full_paper, kl_divergence

# %% [markdown]
# First-order coefficient: the line integral of the expanded integrand (per
# unit beta). The tail past |p| = 100 pi is summed from sine and cosine
# integrals; the total comes out as 6 pi^2.

# %%
c_box = kl_box_first_order(1.0).value
print("c_box =", c_box, " 6 pi^2 =", 6 * math.pi ** 2)

# %% [markdown]
# The full deformed density is only a first-order construction. On its
# truncated support it is not normalised, so the "divergence" can even go
# negative. The deformed mass is printed next to each value.

# %%
print("beta      full KL           c_box*beta      deformed mass   printed form")
for beta in (1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1):
    res = kl_divergence("nonlocal_box", beta)
    printed = kl_box_full_paper(beta)
    print(f"{beta:<9g} {res.value:<+17.8e} {c_box * beta:<15.6e} {res.deformed_norm:<15.10f} {printed.value:+.8e}")

# %% [markdown]
# Making the truncation tighter changes the answer; the divergence depends
# on where the support is cut.

# %%
for factor in (0.5, 0.7, 0.9, 1.0):
    print(factor, kl_box_full_paper(1e-3, support_factor=factor).value)
