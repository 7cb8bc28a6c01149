"""The adaptive tanh-sinh integrator on a few awkward integrands."""

# %%
import math

import numpy as np

from qkl.quadrature import QuadratureSpec, integrate_interval, integrate_line

# %% [markdown]
# Whole-line integrals map each half-line onto a finite panel, so Gaussian
# and algebraic tails are handled the same way.

# %%
for label, f, exact in [
    ("gaussian", lambda p: np.exp(-p * p), math.sqrt(math.pi)),
    ("lorentzian", lambda p: 1 / (1 + p * p), math.pi),
    ("(1+p^2)^-1.2", lambda p: (1 + p * p) ** -1.2, math.sqrt(math.pi) * math.gamma(0.7) / math.gamma(1.2)),
]:
    res = integrate_line(f, QuadratureSpec(abs_tol=1e-13, rel_tol=1e-11))
    print(f"{label:<14} value={res.value:.15f} err_est={res.error_estimate:.1e} "
          f"true_err={abs(res.value - exact):.1e} evals={res.evaluations}")

# %% [markdown]
# Endpoint singularities are what tanh-sinh is good at; interior ones need
# to be declared as split points so they land on a panel edge. Undeclared,
# the panel midpoint hits x = 1/2 exactly and the result is reported as
# non-finite.

# %%
f = lambda x: np.log(np.abs(x - 0.5))
with np.errstate(divide="ignore"):
    plain = integrate_interval(f, 0.0, 1.0)
split = integrate_interval(f, 0.0, 1.0, QuadratureSpec(split_points=(0.5,)))
print("log|x-1/2| exact", -1 - math.log(2))
print("  no split :", plain.value, plain.converged, plain.message)
print("  split 0.5:", split.value, split.evaluations, split.converged)

# %% [markdown]
# Running out of subdivisions is reported, not raised.

# %%
starved = QuadratureSpec(abs_tol=1e-300, rel_tol=1e-300, max_subdivisions=3)
res = integrate_interval(lambda x: np.sin(40 * x) / np.sqrt(x), 0.0, 1.0, starved)
print(res.converged, res.message)
