import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qkl.kl import (
    _box_first_order_printed,
    DEFAULT_KL_SPEC,
    FIRST_ORDER_K_TOKEN,
    KlResult,
    box_first_order_integrand,
    box_full_integrand_paper,
    kl_box_first_order,
    kl_box_full_paper,
    kl_divergence,
    kl_oscillator_analytic,
    kl_oscillator_integral_paper,
    kl_oscillator_leading_constants,
    kl_oscillator_second_order,
    oscillator_expansion_terms,
)
from qkl.models import (
    DeformedDensityModel,
    ModelNotFoundError,
    OscillatorParams,
    get_model,
    oscillator_baseline_density,
    oscillator_deformed_density,
    oscillator_log_ratio,
)
from qkl.quadrature import QuadratureSpec

from golden import GOLDEN

OSC_POINTS = [(1, "1e-6"), (1, "1e-5"), (1, "1e-4"), (2, "1e-4"), (1, "1e-3"), (1, "1e-2"), (1, "0.1"), (1, "1"), (1, "10")]


def _combined(a: KlResult, b: KlResult) -> float:
    return a.error_estimate + b.error_estimate


# --------------------------------------------------------------------------
# generic engine


@pytest.mark.parametrize("r,beta", OSC_POINTS)
def test_oscillator_golden(r, beta):
    res = kl_divergence("gup_oscillator", float(beta), r=r)
    want = GOLDEN[f"osckl_{r}_{beta}"]
    assert not res.divergent
    assert res.value == pytest.approx(want, rel=1e-8)
    assert abs(res.value - want) <= res.error_estimate + 1e-14 * want


@pytest.mark.parametrize("name", ["gup_oscillator", "nonlocal_box"])
def test_zero_beta_is_zero(name):
    res = kl_divergence(name, 0.0)
    assert abs(res.value) <= DEFAULT_KL_SPEC.abs_tol
    assert res.baseline_norm == pytest.approx(1.0, abs=1e-8)


def test_unknown_model_and_bad_beta():
    with pytest.raises(ModelNotFoundError):
        kl_divergence("no_such", 1e-3)
    with pytest.raises(ValueError):
        kl_divergence("gup_oscillator", -1e-3)
    with pytest.raises(ValueError):
        kl_divergence("gup_oscillator", math.nan)


def test_oscillator_norms_are_reported():
    res = kl_divergence("gup_oscillator", 1e-2)
    assert res.norms_valid
    assert res.support_used == (-math.inf, math.inf)
    assert res.discarded_tail_mass == pytest.approx(0.0, abs=1e-10)
    assert res.evaluations > 0


def test_oscillator_exact_divergence_is_second_order():
    # the exact divergence behaves as 3 beta^2 / (16 r^2) at small beta
    for r in (1.0, 2.0):
        beta = 1e-5
        res = kl_divergence("gup_oscillator", beta, r=r)
        assert res.value == pytest.approx(kl_oscillator_second_order(r, beta), rel=1e-4)


def test_reparameterisation_invariance():
    # p -> 2p on both densities, with the Jacobian: divergence unchanged
    beta, sigma = 1e-3, 2.0
    params = OscillatorParams(r=1.0, beta=beta)
    scaled = DeformedDensityModel(
        name="scaled",
        baseline_pdf=lambda p: oscillator_baseline_density(1.0, p / sigma) / sigma,
        deformed_pdf=lambda p, b: oscillator_deformed_density(params, p / sigma) / sigma,
        support=lambda b: (-math.inf, math.inf),
        splits=lambda b: (),
        log_ratio=lambda p, b: oscillator_log_ratio(params, p / sigma),
    )
    ref = kl_divergence("gup_oscillator", beta)
    got = kl_divergence(scaled, beta)
    assert got.value == pytest.approx(ref.value, rel=1e-8)


def test_zero_times_log_zero_convention():
    model = DeformedDensityModel(
        name="half",
        baseline_pdf=lambda p: np.where(np.abs(p) <= 1.0, 0.5, 0.0),
        deformed_pdf=lambda p, b: np.where(np.abs(p) <= 0.5, 1.0, 0.0),
        support=lambda b: (-1.0, 1.0),
        splits=lambda b: (-0.5, 0.5),
    )
    res = kl_divergence(model, 1.0)
    assert res.value == pytest.approx(math.log(2.0), rel=1e-10)


def test_misconfigured_support_is_divergent():
    model = DeformedDensityModel(
        name="bad",
        baseline_pdf=lambda p: np.exp(-p * p) / math.sqrt(math.pi),
        deformed_pdf=lambda p, b: np.full_like(np.asarray(p, dtype=float), np.nan),
        support=lambda b: (-math.inf, math.inf),
        splits=lambda b: (),
    )
    res = kl_divergence(model, 1.0)
    assert res.divergent and res.message


@settings(max_examples=15)
@given(
    st.floats(min_value=-6.0, max_value=1.0).map(lambda e: 10.0 ** e),
    st.floats(min_value=0.25, max_value=4.0),
)
def test_gibbs_inequality_oscillator(beta, r):
    res = kl_divergence("gup_oscillator", beta, r=r)
    assert res.norms_valid
    assert res.value >= -res.error_estimate


@settings(max_examples=10)
@given(st.floats(min_value=-6.0, max_value=1.0).map(lambda e: 10.0 ** e))
def test_oscillator_divergence_below_first_order_claim(beta):
    # the exact value sits far below 3 beta / 8 at small beta
    res = kl_divergence("gup_oscillator", beta)
    assert 0.0 < res.value < kl_oscillator_analytic(1.0, beta)


# --------------------------------------------------------------------------
# oscillator routes


def test_analytic_values():
    assert kl_oscillator_analytic(1.0, 0.01) == pytest.approx(0.00375, rel=1e-15)
    assert kl_oscillator_analytic(2.0, 0.01) == pytest.approx(0.001875, rel=1e-15)
    assert kl_oscillator_analytic(1.0, 0.0) == 0.0
    assert kl_oscillator_analytic(2.0, 1e-4) == 0.5 * kl_oscillator_analytic(1.0, 1e-4)


@pytest.mark.parametrize("beta", [1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0])
def test_transcription_equivalence(beta):
    generic = kl_divergence("gup_oscillator", beta)
    printed = kl_oscillator_integral_paper(1.0, beta)
    assert not printed.divergent
    assert abs(generic.value - printed.value) <= _combined(generic, printed)


def test_transcribed_route_reports_unit_norms():
    res = kl_oscillator_integral_paper(1.0, 1e-3)
    assert res.baseline_norm == 1.0 and res.deformed_norm == 1.0


@pytest.mark.parametrize("beta", [1e-5, 1e-4, 1e-3])
def test_leading_constants_route_gives_first_order_value(beta):
    # with A = 1, B = sqrt(r/pi) the weighted density carries excess mass
    # 3 beta / (8 r), which is what the integral returns
    res = kl_oscillator_leading_constants(1.0, beta)
    assert res.value / beta == pytest.approx(0.375, rel=5 * beta + 1e-6)
    assert res.deformed_norm - 1.0 == pytest.approx(res.value, rel=5 * beta + 1e-6)


def test_expansion_terms():
    lo, hi = oscillator_expansion_terms(1.0, 1e-3, 1.0)
    assert abs(lo - (1 + 1e-3) ** (-1e3)) <= 1e-5
    assert abs(hi - (1 + 1e-3) ** 1e3) <= 1e-5 * math.e ** 2
    assert oscillator_expansion_terms(1.0, 1e-3, 0.0) == (1.0, 1.0)
    lo, hi = oscillator_expansion_terms(1.0, 1e-9, 1.5)
    assert lo == pytest.approx(math.exp(-2.25), rel=1e-8)
    assert hi == pytest.approx(math.exp(2.25), rel=1e-8)
    with pytest.raises(ValueError):
        oscillator_expansion_terms(1.0, 1e-3, 40.0)
    with pytest.raises(ValueError):
        oscillator_expansion_terms(1.0, 0.0, 1.0)


# --------------------------------------------------------------------------
# box


@pytest.mark.parametrize("beta", ["1e-4", "1e-3", "1e-2"])
def test_box_golden(beta):
    res = kl_divergence("nonlocal_box", float(beta))
    assert res.value == pytest.approx(GOLDEN[f"boxkl_{beta}"], rel=1e-9, abs=1e-12)
    assert res.deformed_norm == pytest.approx(GOLDEN[f"boxnorm_{beta}"], rel=1e-9)
    lo, hi = res.support_used
    assert hi == pytest.approx(0.9 / math.sqrt(3 * float(beta))) and lo == -hi
    # truncation and the first-order construction leave the mass off 1
    assert not res.norms_valid


@pytest.mark.parametrize("beta", [1e-4, 1e-3, 1e-2])
def test_box_full_printed_matches_generic(beta):
    generic = kl_divergence("nonlocal_box", beta)
    printed = kl_box_full_paper(beta)
    assert not printed.divergent
    assert printed.value == pytest.approx(generic.value, rel=1e-6)
    assert printed.deformed_norm == pytest.approx(generic.deformed_norm, rel=1e-12)


def test_box_full_integrand_orientation():
    # prefactor -q~ and log(q/q~): pointwise equal to q~ ln(q~/q)
    model = get_model("nonlocal_box")
    beta = 1e-3
    p = np.array([0.2, 1.0, 2.5, 4.0, 7.0])
    qt = model.deformed_pdf(p, beta)
    want = qt * (np.log(qt) - np.log(model.baseline_pdf(p)))
    np.testing.assert_allclose(box_full_integrand_paper(p, beta), want, rtol=1e-9)
    assert np.isfinite(box_full_integrand_paper(math.pi, beta))


@pytest.mark.parametrize("p", ["0.5", "2", "3", "3.2", "10"])
def test_first_order_integrand_golden(p):
    assert box_first_order_integrand(float(p)) == pytest.approx(GOLDEN[f"fo_{p}"], rel=1e-12)


def test_first_order_integrand_is_smooth_at_pi():
    near = np.array([math.pi - 1e-6, math.pi, math.pi + 1e-6])
    vals = box_first_order_integrand(near)
    assert np.all(np.isfinite(vals))
    assert np.ptp(vals) < 1e-4
    # the stable form agrees with the printed form where both are accurate
    for p in (math.pi - 0.2, math.pi + 0.2):
        assert box_first_order_integrand(p) == pytest.approx(_box_first_order_printed(p, None), rel=1e-9)


def test_first_order_coefficient_golden():
    assert FIRST_ORDER_K_TOKEN is None
    res = kl_box_first_order(1.0)
    assert res.value == pytest.approx(GOLDEN["c_box"], rel=1e-10)
    assert res.value == pytest.approx(6 * math.pi ** 2, rel=1e-10)
    assert math.isnan(res.baseline_norm) and math.isnan(res.deformed_norm)


@given(st.floats(min_value=-8.0, max_value=-1.0).map(lambda e: 10.0 ** e))
def test_first_order_is_exactly_linear(beta):
    one = kl_box_first_order(beta)
    two = kl_box_first_order(2 * beta)
    assert two.value == 2 * one.value


def test_first_order_tolerance_tightening_is_stable():
    loose = kl_box_first_order(1.0, QuadratureSpec(abs_tol=1e-8, rel_tol=1e-6))
    tight = kl_box_first_order(1.0, QuadratureSpec(abs_tol=1e-13, rel_tol=1e-12))
    assert loose.value == pytest.approx(tight.value, rel=1e-6)


def test_first_order_alternative_k_reading():
    # a constant k in place of p changes the coefficient
    res = kl_box_first_order(1.0, k_token=math.pi)
    assert math.isfinite(res.value) and not res.value == pytest.approx(GOLDEN["c_box"], rel=1e-3)


def test_first_order_rejects_non_positive_beta():
    with pytest.raises(ValueError):
        kl_box_first_order(0.0)
