"""How large is the oscillator divergence, really?"""

# %%
from qkl.kl import (
    kl_divergence,
    kl_oscillator_analytic,
    kl_oscillator_integral_paper,
    kl_oscillator_leading_constants,
    kl_oscillator_second_order,
)

# %% [markdown]
# The generic engine integrates q~ ln(q~/q) with the exact constants. Next to
# it are the first-order closed form 3 beta / 8r and the second-order
# estimate 3 beta^2 / 16 r^2 from the variance of the log ratio.

# %%
print("beta      exact KL           3b/8            3b^2/16")
for beta in (1e-6, 1e-4, 1e-2, 1e-1, 1.0):
    res = kl_divergence("gup_oscillator", beta)
    print(f"{beta:<9g} {res.value:<18.10e} {kl_oscillator_analytic(1, beta):<15.6e} {kl_oscillator_second_order(1, beta):.6e}")

# %% [markdown]
# The exact value is quadratic in beta, not linear. The rewritten integral
# with exact A and B agrees with the generic route. With A = 1 and
# B = sqrt(r/pi) substituted it gives 3 beta / 8 instead, and that number is
# the excess mass of the density it weights with.

# %%
for beta in (1e-4, 1e-3, 1e-2):
    generic = kl_divergence("gup_oscillator", beta)
    exact_consts = kl_oscillator_integral_paper(1.0, beta)
    leading = kl_oscillator_leading_constants(1.0, beta)
    print(f"beta={beta:g}")
    print(f"  generic            {generic.value:.12e} +- {generic.error_estimate:.1e}")
    print(f"  exact constants    {exact_consts.value:.12e} +- {exact_consts.error_estimate:.1e}")
    print(f"  leading constants  {leading.value:.12e}  (mass of weight - 1 = {leading.deformed_norm - 1:.12e})")

# %% [markdown]
# Doubling r: the exact value drops by four, the first-order form by two.

# %%
for r in (1.0, 2.0, 4.0):
    print(r, kl_divergence("gup_oscillator", 1e-4, r=r).value, kl_oscillator_analytic(r, 1e-4))
