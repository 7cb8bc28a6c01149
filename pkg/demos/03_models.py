"""The two deformed momentum densities and their baselines."""

# %%
import math

import numpy as np

from qkl.models import (
    BoxParams,
    OscillatorParams,
    box_baseline_density,
    box_deformed_density,
    get_model,
    oscillator_baseline_density,
    oscillator_constants,
    oscillator_deformed_density,
    oscillator_lambda,
)

# %% [markdown]
# Oscillator: lambda = 1/2 + sqrt(1/4 + (r/beta)^2). For small beta,
# lambda ~ r/beta, A -> 1 and B -> sqrt(r/pi).

# %%
for beta in (1e-6, 1e-3, 1e-1, 1.0, 10.0):
    params = OscillatorParams(r=1.0, beta=beta)
    a, b = oscillator_constants(params)
    print(f"beta={beta:<6g} lambda={oscillator_lambda(params):<22.15g} A={a:.12f} B={b:.12f}")
print("sqrt(1/pi) =", 1 / math.sqrt(math.pi))

# %% [markdown]
# The deformed density has power-law tails, (1 + beta p^2)^-(1+lambda),
# which are heavier than the Gaussian at any beta > 0.

# %%
p = np.array([0.0, 1.0, 3.0, 6.0, 10.0])
params = OscillatorParams(r=1.0, beta=0.05)
print("p      baseline        deformed")
for pi_, q, qt in zip(p, oscillator_baseline_density(1.0, p), oscillator_deformed_density(params, p)):
    print(f"{pi_:<6g} {q:<15.6e} {qt:.6e}")

# %% [markdown]
# Box: q(p) = 2 pi (1 + cos p) / (pi^2 - p^2)^2 with a removable singularity
# at |p| = pi, and the first-order deformation with t = 1 - 3 beta p^2.
# The deformed density changes sign past |p| = 1/sqrt(3 beta), which is why
# the catalogue model truncates its support at 0.9 of that radius.

# %%
box = BoxParams()
print("q(0) =", box_baseline_density(box, 0.0), " 4/pi^3 =", 4 / math.pi ** 3)
print("q(pi) =", box_baseline_density(box, math.pi), " 1/(4 pi) =", 1 / (4 * math.pi))
deformed = BoxParams(beta=1e-2)
edge = deformed.positivity_radius
for frac in (0.5, 0.9, 1.0, 1.1):
    print(f"p = {frac} * edge: deformed density {box_deformed_density(deformed, frac * edge):+.3e}")

model = get_model("nonlocal_box")
print("support at beta=1e-2:", model.support(1e-2))
print("declared split points:", np.round(model.recommended_splits(1e-2), 4))
