"""Invariant checks behind ``qkl verify``.

Each check is a small function returning (passed, detail). The fast level
covers identities, normalizations, Gibbs and the beta -> 0 limits; the full
level adds the beta-grid cross-checks between independent routes.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np
from scipy.special import gamma as _gamma_fn

from . import kl as _kl
from .models import (
    BoxParams,
    OscillatorParams,
    box_baseline_density,
    model_catalogue,
    oscillator_deformed_wavefunction,
)
from .quadrature import QuadratureSpec, integrate_line
from .specialfn import duplication_residual, gegenbauer, log_gamma, stirling_ratio_residual
from .sweep import SweepSpec, run_sweep

__all__ = ["CheckResult", "FAULTS", "C_BOX", "run_checks", "check_names"]

# 6 pi^2: first-order box coefficient, frozen from an independent
# high-precision integration of the first-order integrand
C_BOX = 59.21762640653615

# test hooks that corrupt one ingredient so verify must fail
FAULTS = ("oscillator_norm", "box_coefficient")

_NORM_SPEC = QuadratureSpec(abs_tol=1e-14, rel_tol=1e-12)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def _models(fault):
    cat = model_catalogue()
    if fault == "oscillator_norm":
        osc = cat[0]
        cat[0] = replace(osc, deformed_pdf=lambda p, beta: 1.001 * osc.deformed_pdf(p, beta), log_ratio=None)
    return cat


# --------------------------------------------------------------------------
# fast


def _check_log_gamma(fault):
    err = abs(log_gamma(10.0) - math.log(362880.0))
    return err < 1e-13, f"|lnG(10) - ln 9!|={err:.1e}"


def _check_duplication(fault):
    lams = 10.0 ** np.arange(0, 7)
    worst = max(abs(duplication_residual(float(l))) for l in lams)
    return worst < 1e-9, f"max residual={worst:.1e} over lambda=1..1e6"


def _check_stirling(fault):
    # lnG(x+1/2) - lnG(x) - ln(x)/2 = -1/(8x) + 1/(192 x^3) + O(x^-5)
    worst = 0.0
    for x in (1e2, 1e4, 1e6):
        approx = -1.0 / (8 * x) + 1.0 / (192 * x ** 3)
        worst = max(worst, abs(stirling_ratio_residual(x, 0.5) - approx) * x)
    return worst < 1e-9, f"max scaled deviation={worst:.1e}"


def _gegenbauer_explicit(n, lam, s):
    total = 0.0
    for k in range(n // 2 + 1):
        total += (
            (-1) ** k
            * _gamma_fn(n - k + lam)
            / (_gamma_fn(lam) * math.factorial(k) * math.factorial(n - 2 * k))
            * (2.0 * s) ** (n - 2 * k)
        )
    return total


def _check_gegenbauer(fault):
    worst = 0.0
    for n in range(7):
        for lam in (0.5, 1.0, 2.5, 7.0):
            for s in np.linspace(-1.0, 1.0, 9):
                worst = max(worst, abs(gegenbauer(n, lam, s) - _gegenbauer_explicit(n, lam, s)))
    return worst < 1e-10, f"max |recurrence - explicit|={worst:.1e} for n<=6"


def _check_oscillator_norm(fault):
    osc = _models(fault)[0]
    worst = 0.0
    for beta in (1e-6, 1e-3, 1.0, 10.0):
        res = integrate_line(lambda p: osc.deformed_pdf(p, beta), _NORM_SPEC)
        worst = max(worst, abs(res.value - 1.0))
    return worst < 1e-10, f"max |norm - 1|={worst:.1e} at beta=1e-6,1e-3,1,10"


def _check_box_norm(fault):
    res = integrate_line(lambda p: box_baseline_density(BoxParams(), p), _NORM_SPEC.with_splits([-math.pi, math.pi]))
    err = abs(res.value - 1.0)
    return err < 1e-8, f"|norm - 1|={err:.1e}"


def _check_beta_zero(fault):
    worst = 0.0
    for model in _models(fault):
        worst = max(worst, abs(_kl.kl_divergence(model, 0.0).value))
    return worst <= 1e-12, f"max |kl(beta=0)|={worst:.1e}"


def _check_gibbs(fault):
    runs, skipped = 0, 0
    worst = math.inf
    for model in _models(fault):
        for beta in (1e-6, 1e-4, 1e-2, 1.0):
            res = _kl.kl_divergence(model, beta)
            if not res.norms_valid:
                skipped += 1
                continue
            runs += 1
            worst = min(worst, res.value + res.error_estimate)
    ok = runs > 0 and worst >= 0.0
    return ok, f"{runs} runs with unit norms, min(kl + err)={worst:.2e}, {skipped} skipped for norms"


def _check_small_beta_limits(fault):
    beta = 1e-5
    osc = _models(fault)[0]
    exact = _kl.kl_divergence(osc, beta).value / _kl.kl_oscillator_second_order(1.0, beta)
    lead = _kl.kl_oscillator_leading_constants(1.0, beta).value / _kl.kl_oscillator_analytic(1.0, beta)
    coeff = _kl.kl_box_first_order(1e-3).value / 1e-3
    if fault == "box_coefficient":
        coeff *= 1.05
    ok = abs(exact - 1.0) < 1e-3 and abs(lead - 1.0) < 1e-3 and abs(coeff / C_BOX - 1.0) < 1e-6
    return ok, (
        f"exact/(3b^2/16)={exact:.6f} approx-constants/(3b/8)={lead:.6f} "
        f"box first-order coeff={coeff:.10f} (6pi^2={C_BOX:.10f})"
    )


# --------------------------------------------------------------------------
# full


def _check_transcription_grid(fault):
    osc = _models(fault)[0]
    worst = 0.0
    grid = np.concatenate([np.logspace(-6, -1, 50), np.logspace(-1, 2, 50)[1:]])
    for beta in grid:
        g = _kl.kl_divergence(osc, float(beta))
        p = _kl.kl_oscillator_integral_paper(1.0, float(beta))
        worst = max(worst, abs(g.value - p.value) / (g.error_estimate + p.error_estimate))
    return worst <= 1.0, f"max |generic - transcribed| / combined error={worst:.3f} over {grid.size} beta in [1e-6, 1e2]"


def _check_leading_constants_grid(fault):
    worst = 0.0
    for beta in np.logspace(-6, -3, 7):
        v = _kl.kl_oscillator_leading_constants(1.0, float(beta)).value
        worst = max(worst, abs(v / _kl.kl_oscillator_analytic(1.0, float(beta)) - 1.0) / beta)
    # the integral is 3 beta/(8r) (1 + c beta + ...) with c ~ 2.7
    return worst < 5.0, f"max |ratio - 1| / beta={worst:.3f} for the approximate-constants integral"


def _check_box_full_transcription(fault):
    worst = 0.0
    spec = _kl.DEFAULT_KL_SPEC.replace(rel_tol=1e-7)
    for beta in (1e-4, 1e-3, 1e-2):
        g = _kl.kl_divergence("nonlocal_box", beta)
        p = _kl.kl_box_full_paper(beta, spec)
        worst = max(worst, abs(g.value - p.value) / abs(g.value))
    return worst < 1e-6, f"max relative |generic - printed full box form|={worst:.1e}"


def _check_first_order_linear(fault):
    a = _kl.kl_box_first_order(1e-4).value
    b = _kl.kl_box_first_order(2e-4).value
    err = abs(b / a - 2.0)
    return err < 1e-13, f"|kl(2b)/kl(b) - 2|={err:.1e}"


def _check_excited_norms(fault):
    worst = 0.0
    for n, beta in ((1, 0.1), (2, 0.1), (3, 1.0)):
        params = OscillatorParams(r=1.0, beta=beta, n=n)
        res = integrate_line(lambda p: np.abs(oscillator_deformed_wavefunction(params, p)) ** 2, _NORM_SPEC)
        worst = max(worst, abs(res.value - 1.0))
    for n, a in ((2, 1.0), (3, 2.0)):
        k = n * math.pi / a
        spec = _NORM_SPEC.with_splits([-k, k]).replace(abs_tol=1e-11, rel_tol=1e-10)
        res = integrate_line(lambda p: box_baseline_density(BoxParams(a=a, n=n), p), spec)
        worst = max(worst, abs(res.value - 1.0))
    return worst < 1e-8, f"max |norm - 1|={worst:.1e} over excited states"


def _check_sweep_determinism(fault):
    spec = SweepSpec(beta_min=1e-4, beta_max=1e-2, points=4, csv_path=None, svg_path=None)
    serial = run_sweep(spec)
    parallel = run_sweep(replace(spec, workers=2))
    return serial == parallel, f"{len(serial)} rows, serial == parallel: {serial == parallel}"


_FAST = (
    ("log_gamma", _check_log_gamma),
    ("duplication_identity", _check_duplication),
    ("stirling_ratio", _check_stirling),
    ("gegenbauer_recurrence", _check_gegenbauer),
    ("oscillator_normalization", _check_oscillator_norm),
    ("box_normalization", _check_box_norm),
    ("beta_zero", _check_beta_zero),
    ("gibbs_inequality", _check_gibbs),
    ("small_beta_limits", _check_small_beta_limits),
)
_FULL = _FAST + (
    ("transcription_equivalence", _check_transcription_grid),
    ("approximate_constants_limit", _check_leading_constants_grid),
    ("box_full_transcription", _check_box_full_transcription),
    ("box_first_order_linearity", _check_first_order_linear),
    ("excited_state_normalization", _check_excited_norms),
    ("sweep_determinism", _check_sweep_determinism),
)


def check_names(level: str) -> list:
    return [name for name, _ in (_FULL if level == "full" else _FAST)]


def run_checks(level: str = "fast", fault: Optional[str] = None, report: Optional[Callable] = None) -> list:
    """Run the suite for ``level`` ('fast' or 'full'); ``report`` sees each result as it lands."""
    if level not in ("fast", "full"):
        raise ValueError(f"level must be 'fast' or 'full', got {level!r}")
    if fault is not None and fault not in FAULTS:
        raise ValueError(f"unknown fault {fault!r}; available: {', '.join(FAULTS)}")
    results = []
    for name, fn in _FULL if level == "full" else _FAST:
        t0 = time.perf_counter()
        try:
            ok, detail = fn(fault)
        except Exception as exc:  # a crashing check is a failed check
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        res = CheckResult(name, bool(ok), detail, time.perf_counter() - t0)
        results.append(res)
        if report is not None:
            report(res)
    return results
