"""Special functions behind the oscillator constants."""

# %%
import math

import numpy as np
from scipy.special import eval_gegenbauer, gammaln

from qkl.specialfn import (
    duplication_residual,
    gegenbauer,
    log_gamma,
    stirling_ratio_residual,
)

# %% [markdown]
# log-Gamma is built in-house (Lanczos below 10, Stirling above) so the
# oscillator constants never depend on a particular scipy build. It should
# agree with scipy to a few ulps across many decades.

# %%
x = np.logspace(-3, 6, 10)
print("x            log_gamma(x)            rel diff vs scipy")
for xi, mine, ref in zip(x, log_gamma(x), gammaln(x)):
    print(f"{xi:<12.4g} {mine:<24.17g} {abs(mine - ref) / abs(ref):.1e}")

# %% [markdown]
# The normalisation of the deformed ground state rests on the duplication
# formula. Its residual in log space stays at rounding level even when
# lambda is a million (beta = 1e-6).

# %%
for lam in (0.5, 1.0, 10.0, 1e3, 1e6):
    print(f"lambda={lam:<8g} duplication residual={duplication_residual(lam):+.2e}")

# %% [markdown]
# ln G(x+a) - ln G(x) - a ln x is tiny for large x. Taking the difference
# of two huge log-Gamma values would throw most digits away; the Stirling
# form keeps them.

# %%
for xv in (1e2, 1e4, 1e6):
    naive = log_gamma(xv + 0.5) - log_gamma(xv) - 0.5 * math.log(xv)
    print(f"x={xv:<8g} stable={stirling_ratio_residual(xv, 0.5):+.16e} naive={naive:+.16e}")

# %% [markdown]
# Gegenbauer polynomials (excited oscillator states) by three-term recurrence.

# %%
s = np.linspace(-1, 1, 5)
for n in (2, 4, 6):
    print(n, gegenbauer(n, 2.5, s), np.max(np.abs(gegenbauer(n, 2.5, s) - eval_gegenbauer(n, 2.5, s))))
