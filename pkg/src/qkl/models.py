"""Momentum-space densities for the deformed oscillator and box.

Two systems, each with a baseline density q(p) and a beta-deformed density
q~(p):

* ``gup_oscillator``: ground state of the harmonic oscillator under a
  minimal-length deformation. The exact deformed eigenfunctions are
  Gegenbauer polynomials in s = sqrt(beta) p / sqrt(1 + beta p^2).
* ``nonlocal_box``: ground state (n = 1) of the unit infinite well, with the
  deformed momentum transform p -> p (1 - 3 beta p^2).

Units are hbar = 1, well width a = 1 unless stated, r = 1/(m omega hbar).
All density functions accept numpy arrays for ``p``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .specialfn import gegenbauer, log1p_minus_x, log_gamma, log_gamma_ratio, stirling_ratio_residual

__all__ = [
    "DegenerateInputError",
    "ModelNotFoundError",
    "OscillatorParams",
    "BoxParams",
    "DeformedDensityModel",
    "BOX_SUPPORT_FACTOR",
    "oscillator_lambda",
    "oscillator_lambda_expansion",
    "oscillator_log_constants",
    "oscillator_constants",
    "oscillator_constants_unreduced",
    "oscillator_constants_stirling",
    "oscillator_constants_leading",
    "oscillator_baseline_density",
    "oscillator_deformed_density",
    "oscillator_deformed_wavefunction",
    "oscillator_log_ratio",
    "box_baseline_density",
    "box_deformed_density",
    "box_deformed_wavefunction",
    "box_log_ratio",
    "box_singular_points",
    "model_catalogue",
    "get_model",
    "MODEL_NAMES",
]

# Fraction of the positivity radius 1/sqrt(3 beta) kept as box support.
BOX_SUPPORT_FACTOR = 0.9

_LOG_PI = math.log(math.pi)


class DegenerateInputError(ValueError):
    """The deformed oscillator formulas have no finite form at beta = 0."""


class ModelNotFoundError(LookupError):
    pass


@dataclass(frozen=True)
class OscillatorParams:
    """r = 1/(m omega hbar) and beta, both in inverse momentum squared."""

    r: float = 1.0
    beta: float = 0.0
    n: int = 0

    def __post_init__(self):
        if not (self.r > 0 and math.isfinite(self.r)):
            raise ValueError(f"r must be positive, got {self.r!r}")
        if not (self.beta >= 0 and math.isfinite(self.beta)):
            raise ValueError(f"beta must be non-negative, got {self.beta!r}")
        if int(self.n) != self.n or self.n < 0:
            raise ValueError(f"n must be a non-negative integer, got {self.n!r}")

    @property
    def k(self) -> float:
        return math.sqrt(self.beta / self.r)

    @property
    def lam(self) -> float:
        return oscillator_lambda(self)


@dataclass(frozen=True)
class BoxParams:
    a: float = 1.0
    n: int = 1
    beta: float = 0.0

    def __post_init__(self):
        if not (self.a > 0 and math.isfinite(self.a)):
            raise ValueError(f"a must be positive, got {self.a!r}")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        if not (self.beta >= 0 and math.isfinite(self.beta)):
            raise ValueError(f"beta must be non-negative, got {self.beta!r}")

    @property
    def positivity_radius(self) -> float:
        """|p| beyond which the deformed prefactor 1 - 3 beta p^2 is negative."""
        return math.inf if self.beta == 0 else 1.0 / math.sqrt(3.0 * self.beta)


# --------------------------------------------------------------------------
# oscillator


def _require_beta(beta):
    if beta == 0:
        raise DegenerateInputError("lambda diverges at beta = 0; use the baseline density")


def oscillator_lambda(params: OscillatorParams) -> float:
    """lambda = 1/2 + sqrt(1/4 + 1/k^4), with k^4 = (beta/r)^2."""
    _require_beta(params.beta)
    return 0.5 + math.hypot(0.5, params.r / params.beta)


def _lambda_excess(r, beta):
    """lambda - r/beta, without the cancellation of the direct difference."""
    q = r / beta
    return 0.5 + 0.25 / (math.hypot(0.5, q) + q)


def oscillator_lambda_expansion(r: float, beta: float) -> float:
    """Small-beta binomial expansion lambda ~ 1/2 + r/beta + beta/(8r)."""
    return 0.5 + r / beta + beta / (8.0 * r)


def _log_b(params):
    lam = oscillator_lambda(params)
    return math.log(lam) + 0.5 * math.log(params.beta / math.pi) - log_gamma_ratio(lam, 0.5)


def oscillator_log_constants(params: OscillatorParams) -> tuple:
    """(ln A, ln B) of the exact normalization constants.

    ln A = ln Gamma(lam+1/2) - ln Gamma(lam) - ln(lam)/2 - ln(beta lam / r)/2,
    where beta lam / r = 1 + beta (lam - r/beta) / r; written this way the
    two O(ln lam) logs never get subtracted. ln A + ln B = ln(r/pi)/2.
    """
    lam = oscillator_lambda(params)
    excess = _lambda_excess(params.r, params.beta)
    log_a = stirling_ratio_residual(lam, 0.5) - 0.5 * math.log1p(params.beta * excess / params.r)
    return log_a, 0.5 * math.log(params.r / math.pi) - log_a


def oscillator_constants(params: OscillatorParams) -> tuple:
    """Exact (A, B) in the duplication-reduced form.

    A = sqrt(r/beta) Gamma(lam+1/2) / (lam Gamma(lam)),
    B = lam sqrt(beta/pi) Gamma(lam) / Gamma(lam+1/2).
    The Gamma ratio is taken in the log domain, so lam ~ 1e6 is fine.
    A * B = sqrt(r/pi) identically.
    """
    log_a, log_b = oscillator_log_constants(params)
    return math.exp(log_a), math.exp(log_b)


def oscillator_constants_unreduced(params: OscillatorParams) -> tuple:
    """(A, B) straight from their Gamma(2 lam) form, before the duplication step.

    Loses absolute accuracy in the exponent once lam is large; it exists to
    check the reduced form, not to be used for lam beyond ~1e4.
    """
    lam = oscillator_lambda(params)
    lg, lg2 = log_gamma(lam), log_gamma(2.0 * lam)
    log_a = (
        (1.0 - 2.0 * lam) * math.log(2.0)
        + 0.5 * math.log(params.r * math.pi)
        + lg2
        - 0.5 * math.log(params.beta)
        - math.log(lam)
        - 2.0 * lg
    )
    log_b = math.log(lam) + 0.5 * math.log(params.beta) + (2.0 * lam - 1.0) * math.log(2.0) + 2.0 * lg - _LOG_PI - lg2
    return math.exp(log_a), math.exp(log_b)


def oscillator_constants_stirling(params: OscillatorParams) -> tuple:
    """(A, B) after Gamma(z+1/2) ~ Gamma(z) sqrt(z): sqrt(r/(beta lam)), sqrt(beta lam/pi)."""
    lam = oscillator_lambda(params)
    return math.sqrt(params.r / (params.beta * lam)), math.sqrt(params.beta * lam / math.pi)


def oscillator_constants_leading(r: float) -> tuple:
    """(A, B) once lam is replaced by r/beta: (1, sqrt(r/pi))."""
    return 1.0, math.sqrt(r / math.pi)


def oscillator_baseline_density(r: float, p):
    """Gaussian ground-state density sqrt(r/pi) exp(-r p^2)."""
    p = np.asarray(p, dtype=float)
    out = math.sqrt(r / math.pi) * np.exp(-r * p * p)
    return float(out) if out.ndim == 0 else out


def oscillator_deformed_wavefunction(params: OscillatorParams, p):
    """Deformed eigenfunction for quantum number ``params.n``.

    2^lam Gamma(lam) sqrt(n! (n+lam) sqrt(beta) / (2 pi Gamma(n+2 lam)))
    c^(1+lam) C_n^lam(s), with c = (1+beta p^2)^(-1/2), s = sqrt(beta) p c.
    The Gamma prefactor is rewritten through the duplication formula so
    only Gamma ratios of nearby arguments appear.
    """
    _require_beta(params.beta)
    lam = oscillator_lambda(params)
    n = int(params.n)
    beta = params.beta
    # ln[2^lam Gamma(lam) / sqrt(Gamma(2 lam))] = ln2/2 + ln(pi)/4 - lnG(lam+1/2)/2 + lnG(lam)/2
    log_pref = (
        0.5 * math.log(2.0)
        + 0.25 * _LOG_PI
        - 0.5 * log_gamma_ratio(lam, 0.5)
        + 0.5
        * (
            math.lgamma(n + 1.0)
            + math.log(n + lam)
            + 0.5 * math.log(beta)
            - math.log(2.0 * math.pi)
            - (log_gamma_ratio(2.0 * lam, n) if n else 0.0)
        )
    )
    p = np.asarray(p, dtype=float)
    x = beta * p * p
    c = 1.0 / np.sqrt(1.0 + x)
    s = math.sqrt(beta) * p * c
    out = np.exp(log_pref - 0.5 * (1.0 + lam) * np.log1p(x)) * gegenbauer(n, lam, s)
    return float(out) if out.ndim == 0 else out


def oscillator_deformed_density(params: OscillatorParams, p):
    """|psi~_n(p)|^2. For n = 0 this is B (1+beta p^2)^-(1+lam) in log form."""
    if params.n:
        psi = oscillator_deformed_wavefunction(params, p)
        return psi * psi
    _require_beta(params.beta)
    lam = oscillator_lambda(params)
    p = np.asarray(p, dtype=float)
    out = np.exp(_log_b(params) - (1.0 + lam) * np.log1p(params.beta * p * p))
    return float(out) if out.ndim == 0 else out


def oscillator_log_ratio(params: OscillatorParams, p):
    """ln(q~(p) / q(p)) for the ground state, free of large cancellations.

    Written as C0 - (1 + lam - r/beta) ln(1+x) - (r/beta)(ln(1+x) - x),
    x = beta p^2, so each term is small when beta is small.
    """
    p = np.asarray(p, dtype=float)
    if params.beta == 0:
        return np.zeros_like(p)
    r, beta = params.r, params.beta
    lam = oscillator_lambda(params)
    excess = _lambda_excess(r, beta)
    c0 = 0.5 * math.log1p(beta * excess / r) - stirling_ratio_residual(lam, 0.5)
    x = beta * p * p
    return c0 - (1.0 + excess) * np.log1p(x) - (r / beta) * log1p_minus_x(x)


# --------------------------------------------------------------------------
# box


def _box_profile(x, a=1.0, n=1):
    """|psi_n(x)|^2 for the width-a well, as sinc^2 around the peak at k = n pi / a.

    2 k^2 (1 - (-1)^n cos(a x)) / (pi a (k^2 - x^2)^2) equals
    a k^2 sinc^2(a (|x| - k) / 2pi) / (pi (k + |x|)^2), which has no 0/0 at
    |x| = k.
    """
    k = n * math.pi / a
    ax = np.abs(x)
    return a * k * k * np.sinc(a * (ax - k) / (2.0 * math.pi)) ** 2 / (math.pi * (k + ax) ** 2)


def _log_box_profile(x):
    ax = np.abs(x)
    with np.errstate(divide="ignore"):
        return _LOG_PI + 2.0 * np.log(np.abs(np.sinc((ax - math.pi) / (2.0 * math.pi)))) - 2.0 * np.log(math.pi + ax)


def box_baseline_density(params: BoxParams, p):
    """Momentum density of the n-th well state, 2 k^2 (1 - (-1)^n cos pa) / (pi a (k^2 - p^2)^2).

    For a = 1, n = 1 this is 2 pi (1 + cos p) / (pi^2 - p^2)^2 with the
    limit 1/(4 pi) at |p| = pi.
    """
    p = np.asarray(p, dtype=float)
    out = _box_profile(p, params.a, params.n)
    return float(out) if out.ndim == 0 else out


def _require_ground_unit_box(params):
    if params.n != 1 or params.a != 1.0:
        raise ValueError("the deformed box is defined only for n = 1, a = 1")


def box_deformed_density(params: BoxParams, p):
    """(1 - 3 beta p^2) times the baseline profile at theta = p (1 - 3 beta p^2).

    Same as 2 pi t (1 + cos theta) / (pi^2 - theta^2)^2 with t = 1 - 3 beta p^2.
    Negative past the positivity radius; the model support stays inside it.
    """
    _require_ground_unit_box(params)
    p = np.asarray(p, dtype=float)
    t = 1.0 - 3.0 * params.beta * p * p
    out = t * _box_profile(p * t)
    return float(out) if out.ndim == 0 else out


def box_deformed_wavefunction(params: BoxParams, p):
    """sqrt(pi t) (1 + exp(-i theta)) / (pi^2 - theta^2), theta = p t."""
    _require_ground_unit_box(params)
    p = np.asarray(p, dtype=float)
    if np.any(np.abs(p) > params.positivity_radius):
        raise ValueError("deformed box wavefunction is undefined beyond |p| = 1/sqrt(3 beta)")
    t = 1.0 - 3.0 * params.beta * p * p
    theta = p * t
    at = np.abs(theta)
    # (1 + e^{-i theta}) / (pi^2 - theta^2) = e^{-i theta/2} sinc((|theta|-pi)/2pi) / (|theta|+pi)
    ratio = np.sinc((at - math.pi) / (2.0 * math.pi)) / (at + math.pi)
    out = np.sqrt(math.pi * t) * np.exp(-0.5j * theta) * ratio
    return complex(out) if out.ndim == 0 else out


def box_log_ratio(params: BoxParams, p):
    """ln(q~/q) = ln t + ln q0(theta) - ln q0(p); +inf at baseline zeros."""
    _require_ground_unit_box(params)
    p = np.asarray(p, dtype=float)
    t = 1.0 - 3.0 * params.beta * p * p
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.log(t) + _log_box_profile(p * t) - _log_box_profile(p)


def box_singular_points(beta: float, radius: float) -> np.ndarray:
    """Non-negative points in [0, radius] where the box KL integrand is not smooth.

    Odd multiples of pi (zeros of the baseline, log singularities of the
    log-ratio) and the momenta where theta = p (1 - 3 beta p^2) hits an odd
    multiple of pi (removable point at m = 1, zeros of the deformed density
    for m >= 3). Both branches of the cubic count.
    """
    pts = []
    m_max = radius / math.pi if math.isfinite(radius) else 1.0
    pts.extend(math.pi * np.arange(1, int(m_max) + 1, 2))
    if beta > 0:
        # p^3 - P p + m pi P = 0, P = 1/(3 beta): trigonometric roots
        big_p = 1.0 / (3.0 * beta)
        theta_max = 2.0 / (9.0 * math.sqrt(beta))
        m = np.arange(1, int(theta_max / math.pi) + 1, 2)
        if m.size:
            amp = 2.0 * math.sqrt(big_p / 3.0)
            arg = np.clip(-1.5 * m * math.pi * math.sqrt(3.0 / big_p), -1.0, 1.0)
            phi = np.arccos(arg) / 3.0
            for shift in (0.0, 2.0, 4.0):
                roots = amp * np.cos(phi - shift * math.pi / 3.0)
                pts.extend(roots[(roots > 0)].tolist())
    pts = np.unique(np.asarray(pts, dtype=float))
    return pts[(pts > 0) & (pts < radius)]


# --------------------------------------------------------------------------
# catalogue


@dataclass(frozen=True)
class DeformedDensityModel:
    """A baseline/deformed density pair, parameterised by beta.

    ``support(beta)`` returns the momentum interval the divergence is taken
    over (possibly the whole line); ``splits(beta)`` the interior points the
    integrator should use as panel boundaries. ``log_ratio``, when given,
    computes ln(q~/q) more accurately than the difference of logs.
    """

    name: str
    baseline_pdf: Callable
    deformed_pdf: Callable
    support: Callable
    splits: Callable
    log_ratio: Optional[Callable] = None
    constants: dict = field(default_factory=dict)

    def recommended_splits(self, beta: float) -> tuple:
        return tuple(self.splits(beta))


def _oscillator_model(r: float) -> DeformedDensityModel:
    def baseline(p):
        return oscillator_baseline_density(r, p)

    def deformed(p, beta):
        if beta == 0:
            return oscillator_baseline_density(r, p)
        return oscillator_deformed_density(OscillatorParams(r=r, beta=beta), p)

    def log_ratio(p, beta):
        return oscillator_log_ratio(OscillatorParams(r=r, beta=beta), p)

    return DeformedDensityModel(
        name="gup_oscillator",
        baseline_pdf=baseline,
        deformed_pdf=deformed,
        support=lambda beta: (-math.inf, math.inf),
        splits=lambda beta: (),
        log_ratio=log_ratio,
        constants={"r": r},
    )


def _box_model(support_factor: float) -> DeformedDensityModel:
    ground = BoxParams()

    def baseline(p):
        return box_baseline_density(ground, p)

    def deformed(p, beta):
        return box_deformed_density(BoxParams(beta=beta), p)

    def support(beta):
        if beta == 0:
            return (-math.inf, math.inf)
        edge = support_factor / math.sqrt(3.0 * beta)
        return (-edge, edge)

    def splits(beta):
        hi = support(beta)[1]
        if not math.isfinite(hi):
            return (-math.pi, math.pi)
        pos = box_singular_points(beta, hi)
        return tuple(np.concatenate([-pos[::-1], pos]).tolist())

    def log_ratio(p, beta):
        return box_log_ratio(BoxParams(beta=beta), p)

    return DeformedDensityModel(
        name="nonlocal_box",
        baseline_pdf=baseline,
        deformed_pdf=deformed,
        support=support,
        splits=splits,
        log_ratio=log_ratio,
        constants={"a": 1.0, "n": 1, "support_factor": support_factor},
    )


MODEL_NAMES = ("gup_oscillator", "nonlocal_box")


def model_catalogue(r: float = 1.0, box_support_factor: float = BOX_SUPPORT_FACTOR) -> list:
    """Every registered model, oscillator first."""
    return [_oscillator_model(r), _box_model(box_support_factor)]


def get_model(name: str, r: float = 1.0, box_support_factor: float = BOX_SUPPORT_FACTOR) -> DeformedDensityModel:
    for model in model_catalogue(r, box_support_factor):
        if model.name == name:
            return model
    raise ModelNotFoundError(f"unknown model {name!r}; available: {', '.join(MODEL_NAMES)}")
