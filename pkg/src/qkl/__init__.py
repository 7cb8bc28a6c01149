"""Kullback-Leibler divergence between deformed and standard quantum momentum densities.

Two systems are catalogued: the harmonic oscillator under a minimal-length
deformation (``gup_oscillator``) and the infinite well under a nonlocal
deformation (``nonlocal_box``). The package provides the special functions
and quadrature they need, the divergence engine with its analytic
cross-checks, and a sweep runner with CSV/SVG output.
"""

__version__ = "0.1.0"

from .kl import (
    DEFAULT_KL_SPEC,
    KlResult,
    kl_box_first_order,
    kl_box_full_paper,
    kl_divergence,
    kl_oscillator_analytic,
    kl_oscillator_integral_paper,
    kl_oscillator_leading_constants,
    kl_oscillator_second_order,
)
from .models import MODEL_NAMES, get_model, model_catalogue
from .quadrature import IntegralResult, QuadratureSpec, integrate_interval, integrate_line
from .sweep import SweepRow, SweepSpec, run_sweep

__all__ = [
    "__version__",
    "DEFAULT_KL_SPEC",
    "KlResult",
    "IntegralResult",
    "QuadratureSpec",
    "SweepRow",
    "SweepSpec",
    "MODEL_NAMES",
    "get_model",
    "model_catalogue",
    "integrate_interval",
    "integrate_line",
    "kl_divergence",
    "kl_oscillator_analytic",
    "kl_oscillator_integral_paper",
    "kl_oscillator_leading_constants",
    "kl_oscillator_second_order",
    "kl_box_first_order",
    "kl_box_full_paper",
    "run_sweep",
]
