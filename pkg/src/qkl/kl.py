"""Kullback-Leibler divergence between deformed and baseline densities.

The generic engine integrates q~ ln(q~/q) over the model support. Next to
it sit the closed-form and transcribed routes for the two systems, which
the test-suite plays against the generic engine:

* oscillator: the exact integral in its (A, B) form, the integral with the
  small-beta constants A = 1, B = sqrt(r/pi), lam = r/beta substituted, the
  closed form 3 beta / (8 r), and the second-order asymptote of the exact
  divergence, 3 beta^2 / (16 r^2).
* box: the first-order-in-beta integrand.

All values are in nats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import sici

from .models import (
    BOX_SUPPORT_FACTOR,
    BoxParams,
    DeformedDensityModel,
    OscillatorParams,
    box_deformed_density,
    box_log_ratio,
    get_model,
    oscillator_log_constants,
    oscillator_lambda,
)
from .quadrature import QuadratureSpec, integrate_interval, integrate_line

__all__ = [
    "KlResult",
    "DEFAULT_KL_SPEC",
    "FIRST_ORDER_K_TOKEN",
    "kl_divergence",
    "kl_oscillator_analytic",
    "kl_oscillator_second_order",
    "kl_oscillator_integral_paper",
    "kl_oscillator_leading_constants",
    "oscillator_expansion_terms",
    "box_full_integrand_paper",
    "kl_box_full_paper",
    "box_first_order_integrand",
    "kl_box_first_order",
]

# The divergences of interest run down to ~1e-13 (oscillator at beta = 1e-6),
# so the absolute floor sits well below them. The integrand is O(beta) while
# the divergence is O(beta^2), so its rounding floor is ~1e-15/beta relative;
# rel_tol stays above that across the small-beta grid.
DEFAULT_KL_SPEC = QuadratureSpec(abs_tol=1e-20, rel_tol=1e-8, max_subdivisions=4000)

# Reading of the k^2 token in the printed first-order box integrand
# (6 pi beta (... - pi^2 k^2 - pi^2 p^2 cos p) / (pi^2 - p^2)^3). None reads
# it as p^2, which makes the numerator vanish to third order at |p| = pi and
# the integrand finite; a number substitutes that constant for k.
FIRST_ORDER_K_TOKEN: Optional[float] = None

_EPS = float(np.finfo(float).eps)
# bound on the relative rounding of one evaluation of a cancelling integrand
_ROUNDING_FACTOR = 8.0

# first-order box integral: core |p| <= _FO_RADIUS, analytic tail beyond
_FO_RADIUS = 100.0 * math.pi
_FO_TAIL_TERMS = 5


@dataclass(frozen=True)
class KlResult:
    """Divergence value with the diagnostics needed to judge it.

    ``baseline_norm`` and ``deformed_norm`` are the masses of the two
    densities over ``support_used``; ``1 - baseline_norm`` is the baseline
    mass discarded by a truncated support.
    """

    value: float
    error_estimate: float
    baseline_norm: float
    deformed_norm: float
    support_used: tuple
    divergent: bool
    evaluations: int
    message: str = ""

    @property
    def discarded_tail_mass(self) -> float:
        return 1.0 - self.baseline_norm

    @property
    def norms_valid(self) -> bool:
        """Both densities carry unit mass to 1e-6 (Gibbs inequality applies)."""
        return abs(self.baseline_norm - 1.0) <= 1e-6 and abs(self.deformed_norm - 1.0) <= 1e-6


def _integrate(f, support, splits, spec):
    lo, hi = support
    spec = spec.with_splits([s for s in splits if lo < s < hi])
    if math.isinf(lo) and math.isinf(hi):
        return integrate_line(f, spec)
    return integrate_line(f, spec.replace(truncation_radius=hi)) if lo == -hi else integrate_interval(f, lo, hi, spec)


def kl_divergence(
    model: DeformedDensityModel | str,
    beta: float,
    spec: QuadratureSpec = DEFAULT_KL_SPEC,
    r: float = 1.0,
) -> KlResult:
    """D(q~ || q) = integral of q~ ln(q~/q) over the model support.

    ``model`` is a catalogue model or its name (``r`` applies to names
    only). 0 ln 0 is taken as 0. Both norms are recomputed on every call.
    A non-converged integration or non-finite value comes back with
    ``divergent=True`` rather than raising.
    """
    if isinstance(model, str):
        model = get_model(model, r=r)
    if not (beta >= 0 and math.isfinite(beta)):
        raise ValueError(f"beta must be non-negative, got {beta!r}")
    support = model.support(beta)
    splits = model.recommended_splits(beta)

    def integrand(p):
        qt = np.asarray(model.deformed_pdf(p, beta), dtype=float)
        if model.log_ratio is not None:
            lr = model.log_ratio(p, beta)
        else:
            with np.errstate(divide="ignore", invalid="ignore"):
                lr = np.log(qt) - np.log(model.baseline_pdf(p))
        with np.errstate(invalid="ignore"):
            out = qt * lr
        return np.where(qt == 0.0, 0.0, out)

    kl = _integrate(integrand, support, splits, spec)
    base = _integrate(model.baseline_pdf, support, splits, spec)
    defo = _integrate(lambda p: model.deformed_pdf(p, beta), support, splits, spec)
    divergent = not (kl.converged and math.isfinite(kl.value))
    return KlResult(
        value=kl.value,
        error_estimate=kl.error_estimate,
        baseline_norm=base.value,
        deformed_norm=defo.value,
        support_used=support,
        divergent=divergent,
        evaluations=kl.evaluations + base.evaluations + defo.evaluations,
        message=kl.message,
    )


# --------------------------------------------------------------------------
# oscillator


def kl_oscillator_analytic(r: float, beta: float) -> float:
    """Closed form 3 beta / (8 r) from the small-beta expansion."""
    return 3.0 * beta / (8.0 * r)


def kl_oscillator_second_order(r: float, beta: float) -> float:
    """Leading term of the exact oscillator divergence, 3 beta^2 / (16 r^2).

    Writing q~ = q (1 + beta h) with normalised q~, the divergence is
    (beta^2 / 2) Var_q(h) + O(beta^3); for the Gaussian ground state
    h = (3/8 - 3u/2 + u^2/2) / r with u = r p^2, and Var_q(r h) = 3/8.
    """
    return 3.0 * beta * beta / (16.0 * r * r)


def _osc_support_result(kl, norm_b, norm_d, rounding=0.0):
    return KlResult(
        value=kl.value,
        error_estimate=kl.error_estimate + rounding,
        baseline_norm=norm_b,
        deformed_norm=norm_d,
        support_used=(-math.inf, math.inf),
        divergent=not (kl.converged and math.isfinite(kl.value)),
        evaluations=kl.evaluations,
        message=kl.message,
    )


def kl_oscillator_integral_paper(r: float, beta: float, spec: QuadratureSpec = DEFAULT_KL_SPEC) -> KlResult:
    """-B * integral of (1+beta p^2)^-(1+lam) ln[A (1+beta p^2)^(1+lam) e^(-r p^2)] dp.

    A and B are the exact constants (Gamma ratios in the log domain), so
    this is the exact divergence rewritten; the norms reported are the
    analytic ones (both 1).
    """
    params = OscillatorParams(r=r, beta=beta)
    lam = oscillator_lambda(params)
    log_a, log_b = oscillator_log_constants(params)
    b_const = math.exp(log_b)

    def integrand(p):
        lp = np.log1p(beta * p * p)
        power = (1.0 + lam) * lp
        return -b_const * np.exp(-power) * (log_a + power - r * p * p)

    def magnitude(p):
        lp = np.log1p(beta * p * p)
        power = (1.0 + lam) * lp
        return b_const * np.exp(-power) * (abs(log_a) + power + r * p * p)

    # The bracket adds O(1) terms that cancel to O(beta), so rounding in the
    # integrand itself, not the quadrature, sets the floor at small beta;
    # asking the quadrature for more than that only burns evaluations.
    rounding = _ROUNDING_FACTOR * _EPS * integrate_line(magnitude, spec).value
    kl = integrate_line(integrand, spec.replace(abs_tol=max(spec.abs_tol, rounding)))
    return _osc_support_result(kl, 1.0, 1.0, rounding)


def kl_oscillator_leading_constants(r: float, beta: float, spec: QuadratureSpec = DEFAULT_KL_SPEC) -> KlResult:
    """Same integral with A = 1, B = sqrt(r/pi), lam = r/beta substituted.

    -sqrt(r/pi) * integral of (1+beta p^2)^(-r/beta) ln[(1+beta p^2)^(r/beta) e^(-r p^2)] dp.
    Its value tends to 3 beta / (8 r). The density it weights with,
    sqrt(r/pi) (1+beta p^2)^(-r/beta), carries mass about 1 + 3 beta/(8 r),
    and that excess mass is what the integral measures to first order;
    ``deformed_norm`` reports it.
    """
    if not beta > 0:
        raise ValueError("beta must be positive")
    q = r / beta
    b_const = math.sqrt(r / math.pi)

    def log_power(p):
        return q * np.log1p(beta * p * p)

    def weight(p):
        return b_const * np.exp(-log_power(p))

    def integrand(p):
        lp = log_power(p)
        return -b_const * np.exp(-lp) * (lp - r * p * p)

    kl = integrate_line(integrand, spec)
    mass = integrate_line(weight, spec)
    return _osc_support_result(kl, 1.0, mass.value)


def oscillator_expansion_terms(r: float, beta: float, p) -> tuple:
    """First-order truncations of (1+beta p^2)^(-r/beta) and (1+beta p^2)^(r/beta).

    Returns (e^{-r p^2} (1 + beta r p^4 / 2), e^{r p^2} (1 - beta r p^4 / 2)).
    """
    p = np.asarray(p, dtype=float)
    if not beta > 0:
        raise ValueError("beta must be positive")
    if np.any(beta * p * p >= 1.0):
        raise ValueError("expansion needs beta p^2 < 1")
    corr = 0.5 * beta * r * p ** 4
    lo = np.exp(-r * p * p) * (1.0 + corr)
    hi = np.exp(r * p * p) * (1.0 - corr)
    if lo.ndim == 0:
        return float(lo), float(hi)
    return lo, hi


# --------------------------------------------------------------------------
# box, full expression


def box_full_integrand_paper(p, beta: float):
    """The printed full box divergence integrand.

    2 pi (3 beta p^2 - 1)(cos(p - 3 beta p^3) + 1)
      * ln[(pi^2 - p^2 t^2)^2 (cos p + 1) / ((p^2 - pi^2)^2 t (cos(p - 3 beta p^3) + 1))]
      / (pi^2 - p^2 t^2)^2,  t = 1 - 3 beta p^2.

    The prefactor is -q~ and the log argument is q/q~, so the product is
    q~ ln(q~/q). Where the literal form is 0/0 in floating point (|p| or
    |p t| at pi) the model's limit value is used instead.
    """
    p = np.asarray(p, dtype=float)
    t = 1.0 - 3.0 * beta * p * p
    pi2 = math.pi ** 2
    cos_theta = np.cos(p - 3.0 * beta * p ** 3)
    den = (pi2 - p * p * t * t) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        arg = den * (np.cos(p) + 1.0) / ((p * p - pi2) ** 2 * t * (cos_theta + 1.0))
        out = 2.0 * math.pi * (3.0 * beta * p * p - 1.0) * (cos_theta + 1.0) * np.log(arg) / den
    bad = ~np.isfinite(out)
    if np.any(bad):
        params = BoxParams(beta=beta)
        pb = p[bad] if p.ndim else p
        qt = box_deformed_density(params, pb)
        with np.errstate(invalid="ignore"):
            fix = np.where(qt == 0.0, 0.0, qt * box_log_ratio(params, pb))
        if p.ndim:
            out[bad] = fix
        else:
            out = fix
    return float(out) if np.ndim(out) == 0 else out


def kl_box_full_paper(
    beta: float,
    spec: QuadratureSpec = DEFAULT_KL_SPEC,
    support_factor: float = BOX_SUPPORT_FACTOR,
) -> KlResult:
    """Integral of the printed full box integrand over the box model's support.

    Cross-checks the sign composition of the printed form against the
    generic engine. Norms are those of the model densities on the same
    support.
    """
    if not beta > 0:
        raise ValueError("beta must be positive")
    model = get_model("nonlocal_box", box_support_factor=support_factor)
    support = model.support(beta)
    splits = model.recommended_splits(beta)
    kl = _integrate(lambda p: box_full_integrand_paper(p, beta), support, splits, spec)
    base = _integrate(model.baseline_pdf, support, splits, spec)
    defo = _integrate(lambda p: model.deformed_pdf(p, beta), support, splits, spec)
    return KlResult(
        value=kl.value,
        error_estimate=kl.error_estimate,
        baseline_norm=base.value,
        deformed_norm=defo.value,
        support_used=support,
        divergent=not (kl.converged and math.isfinite(kl.value)),
        evaluations=kl.evaluations,
        message=kl.message,
    )


# --------------------------------------------------------------------------
# box, first order in beta


def _box_first_order_near_pi(p):
    """-3 p^2 q0(p) - 3 p^3 q0'(p) for p near pi, from the sinc form of q0.

    Algebraically identical to the printed first-order integrand (per unit
    beta) under the p^2 reading, but free of its third-order cancellation.
    """
    ap = np.abs(p)
    delta = ap - math.pi
    x = 0.5 * delta
    sinc = np.sinc(delta / (2.0 * math.pi))
    small = np.abs(x) < 1e-3
    xs = np.where(small, 1.0, x)
    dsinc = np.where(
        small,
        0.5 * (-x / 3.0 + x ** 3 / 30.0 - x ** 5 / 840.0),
        0.5 * (xs * np.cos(xs) - np.sin(xs)) / (xs * xs),
    )
    s = ap + math.pi
    q0 = math.pi * sinc ** 2 / s ** 2
    dq0 = math.pi * (2.0 * sinc * dsinc / s ** 2 - 2.0 * sinc ** 2 / s ** 3)
    return -3.0 * ap ** 2 * q0 - 3.0 * ap ** 3 * dq0


def _box_first_order_printed(p, k_token):
    s, c = np.sin(p), np.cos(p)
    pi2 = math.pi ** 2
    kk = p * p if k_token is None else k_token * k_token
    num = -(p ** 5) * s - 3.0 * p ** 4 - 3.0 * p ** 4 * c + pi2 * p ** 3 * s - pi2 * kk - pi2 * p * p * c
    return 6.0 * math.pi * num / (pi2 - p * p) ** 3


def box_first_order_integrand(p, beta: float = 1.0, k_token: Optional[float] = FIRST_ORDER_K_TOKEN):
    """First-order box divergence integrand.

    6 pi beta (-p^5 sin p - 3p^4 - 3p^4 cos p + pi^2 p^3 sin p - pi^2 k^2
    - pi^2 p^2 cos p) / (pi^2 - p^2)^3, with the k^2 token read per
    ``k_token``. Under the p^2 reading, points within 0.25 of |p| = pi use
    an equivalent cancellation-free form.
    """
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = _box_first_order_printed(p, k_token)
    if k_token is None:
        near = np.abs(np.abs(p) - math.pi) < 0.25
        if np.any(near):
            out = np.where(near, _box_first_order_near_pi(np.where(near, p, math.pi)), out)
    out = beta * out
    return float(out) if out.ndim == 0 else out


def _sin_cos_tails(radius, n_max):
    """(S_n, C_n) = integrals over [radius, inf) of sin p / p^n and cos p / p^n, n = 1..n_max.

    Upward recurrence from Si/Ci; the absolute error stays at rounding level.
    """
    si, ci = sici(radius)
    sn = [0.0, 0.5 * math.pi - si]
    cn = [0.0, -ci]
    sr, cr = math.sin(radius), math.cos(radius)
    for n in range(1, n_max):
        rn = radius ** n
        cn.append((cr / rn - sn[n]) / n)
        sn.append((cn[n] + sr / rn) / n)
    return sn, cn


def _first_order_tail(radius):
    """Integral of the first-order integrand (per unit beta) over [radius, inf).

    Expands 1/(pi^2-p^2)^3 = -p^-6 sum_j C(j+2,2) (pi^2/p^2)^j, giving
    terms sin p / p^m and (1 + cos p) / p^m.
    """
    pi2 = math.pi ** 2
    n_max = 4 + 2 * _FO_TAIL_TERMS + 2
    sn, cn = _sin_cos_tails(radius, n_max)

    def power(n):
        return radius ** (1 - n) / (n - 1)

    total = 0.0
    for j in range(_FO_TAIL_TERMS + 1):
        cj = (j + 1) * (j + 2) / 2.0 * pi2 ** j
        m = 2 * j
        term = sn[1 + m] - pi2 * sn[3 + m]
        term += 3.0 * (power(2 + m) + cn[2 + m]) + pi2 * (power(4 + m) + cn[4 + m])
        total += cj * term
    return 6.0 * math.pi * total


def kl_box_first_order(
    beta: float,
    spec: QuadratureSpec = DEFAULT_KL_SPEC,
    k_token: Optional[float] = FIRST_ORDER_K_TOKEN,
) -> KlResult:
    """Line integral of the first-order box integrand.

    |p| <= 100 pi is integrated numerically (panels split at multiples of
    pi); the conditionally convergent tail sin p / p + ... beyond it is
    summed in closed form. The result is beta times a fixed coefficient, so
    it is exactly linear in beta. Norms are not defined here and come back
    as NaN.
    """
    if not beta > 0:
        raise ValueError("beta must be positive")
    radius = _FO_RADIUS
    splits = math.pi * np.arange(-100, 101)
    core = integrate_line(
        lambda p: box_first_order_integrand(p, 1.0, k_token),
        spec.replace(truncation_radius=radius).with_splits(splits[1:-1]),
    )
    tail = _first_order_tail(radius)
    if k_token is not None:
        # extra pi^2 (p^2 - k^2) term relative to the p^2 reading
        extra = integrate_line(
            lambda p: np.where(np.abs(p) > radius, 6.0 * math.pi ** 3 * (p * p - k_token ** 2) / (math.pi ** 2 - p * p) ** 3, 0.0),
            spec.with_splits([-radius, radius]),
        )
        tail += 0.5 * extra.value
    coeff = float(core.value + 2.0 * tail)
    divergent = not (core.converged and math.isfinite(coeff))
    return KlResult(
        value=beta * coeff,
        error_estimate=beta * core.error_estimate,
        baseline_norm=math.nan,
        deformed_norm=math.nan,
        support_used=(-math.inf, math.inf),
        divergent=divergent,
        evaluations=core.evaluations,
        message=core.message,
    )
