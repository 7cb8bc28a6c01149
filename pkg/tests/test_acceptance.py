"""Acceptance criteria, one test each.

Every test records a one-line verdict before asserting, so the terminal
summary lists all eight even when some fail. Run directly
(``python tests/test_acceptance.py``) to see only these lines.
"""

import math
import os
import shutil
import subprocess
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from qkl.kl import (
    kl_box_first_order,
    kl_divergence,
    kl_oscillator_analytic,
    kl_oscillator_integral_paper,
)
from qkl.models import (
    BoxParams,
    OscillatorParams,
    box_baseline_density,
    oscillator_deformed_density,
)
from qkl.quadrature import QuadratureSpec, integrate_line
from qkl.specialfn import duplication_residual, gegenbauer
from qkl.sweep import read_csv

from conftest import ACCEPTANCE_LINES
from golden import GOLDEN

NAMES = {
    1: "analytic reproduction",
    2: "scale law in r",
    3: "normalization suite",
    4: "oscillator above box, monotone",
    5: "transcription equivalence",
    6: "identity suite",
    7: "determinism",
    8: "verify --level full",
}


def _report(n: int, passed: bool, detail: str) -> None:
    line = f"criterion {n} [{'PASS' if passed else 'FAIL'}] {NAMES[n]}: {detail}"
    ACCEPTANCE_LINES[n] = (passed, line)
    print(line)
    assert passed, line


def _qkl(*args, cwd, env=None):
    exe = shutil.which("qkl")
    cmd = [exe, *args] if exe else [sys.executable, "-m", "qkl.cli", *args]
    return subprocess.run(cmd, cwd=cwd, env=env, capture_output=True, text=True)


@pytest.fixture(scope="module")
def default_sweep(tmp_path_factory):
    """`qkl sweep` with the default config, serial; the files and the rows."""
    root = tmp_path_factory.mktemp("default_sweep")
    env = {k: v for k, v in os.environ.items() if k != "QKL_WORKERS"}
    proc = _qkl("sweep", cwd=root, env=env)
    assert proc.returncode == 0, proc.stderr
    return root, read_csv(root / "sweep.csv")


# --------------------------------------------------------------------------


def test_criterion_1_analytic_reproduction():
    parts, ok = [], True
    for beta, tol in ((1e-3, 0.02), (1e-4, 0.005)):
        t0 = time.perf_counter()
        res = kl_divergence("gup_oscillator", beta, r=1.0)
        secs = time.perf_counter() - t0
        dev = abs(res.value / beta - 0.375) / 0.375
        ok &= dev <= tol and secs < 5.0 and not res.divergent
        parts.append(f"beta={beta:g} kl/beta={res.value / beta:.6g} rel_dev={dev:.4g} (tol {tol}) {secs:.2f}s")
    _report(1, ok, "; ".join(parts))


def test_criterion_2_scale_law():
    beta = 1e-4
    a1, a2 = kl_oscillator_analytic(1.0, beta), kl_oscillator_analytic(2.0, beta)
    analytic_ok = a2 == 0.5 * a1
    n1 = kl_divergence("gup_oscillator", beta, r=1.0)
    n2 = kl_divergence("gup_oscillator", beta, r=2.0)
    ratio = n2.value / n1.value
    ratio_err = ratio * (n1.error_estimate / n1.value + n2.error_estimate / n2.value)
    numeric_ok = abs(ratio - 0.5) <= ratio_err
    _report(
        2,
        analytic_ok and numeric_ok,
        f"analytic ratio={a2 / a1!r} ({'ok' if analytic_ok else 'off'}); "
        f"numeric kl(r=2)/kl(r=1)={ratio:.10g} +- {ratio_err:.2g} ({'ok' if numeric_ok else 'off'})",
    )


def test_criterion_3_normalization():
    tight = QuadratureSpec(abs_tol=1e-14, rel_tol=1e-12)
    worst = 0.0
    for beta in (1e-6, 1e-3, 1.0, 10.0):
        params = OscillatorParams(r=1.0, beta=beta)
        res = integrate_line(lambda p: oscillator_deformed_density(params, p), tight)
        worst = max(worst, abs(res.value - 1.0))
    box = integrate_line(
        lambda p: box_baseline_density(BoxParams(), p),
        QuadratureSpec(abs_tol=1e-11, rel_tol=1e-10, split_points=(-math.pi, math.pi)),
    )
    box_dev = abs(box.value - 1.0)
    _report(
        3,
        worst <= 1e-10 and box_dev <= 1e-8,
        f"oscillator max |norm-1|={worst:.2g} (tol 1e-10); box baseline |norm-1|={box_dev:.2g} (tol 1e-8)",
    )


def test_criterion_4_ordering(default_sweep):
    _, rows = default_sweep
    osc = {r.beta: r.kl for r in rows if r.model == "gup_oscillator"}
    box = {r.beta: r.kl for r in rows if r.model == "nonlocal_box"}
    betas = sorted(osc)
    assert len(betas) == 50 and sorted(box) == betas
    above = sum(osc[b] > box[b] for b in betas)
    osc_mono = all(osc[a] < osc[b] for a, b in zip(betas, betas[1:]))
    box_mono = all(box[a] < box[b] for a, b in zip(betas, betas[1:]))
    c_box = kl_box_first_order(1.0).value
    c_ok = abs(c_box / GOLDEN["c_box"] - 1.0) <= 0.01
    _report(
        4,
        above == len(betas) and osc_mono and box_mono and c_ok,
        f"oscillator > box at {above}/{len(betas)} beta; monotone oscillator={osc_mono} box={box_mono}; "
        f"c_box={c_box:.10g} vs golden {GOLDEN['c_box']:.10g} ({'ok' if c_ok else 'off'})",
    )


def test_criterion_5_transcription():
    betas = np.logspace(-5, -1, 10)
    worst = 0.0
    equiv_ok = True
    for beta in betas:
        g = kl_divergence("gup_oscillator", float(beta))
        t = kl_oscillator_integral_paper(1.0, float(beta))
        gap = abs(g.value - t.value)
        allowed = g.error_estimate + t.error_estimate
        equiv_ok &= gap <= allowed and not (g.divergent or t.divergent)
        worst = max(worst, gap / allowed if allowed > 0 else math.inf)

    fit_betas = np.logspace(-5, -2, 10)
    c_box = kl_box_first_order(1.0).value
    diffs = np.array([abs(kl_divergence("nonlocal_box", float(b)).value - c_box * b) for b in fit_betas])
    slope = float(np.polyfit(np.log(fit_betas), np.log(diffs), 1)[0])
    slope_ok = abs(slope - 2.0) <= 0.2
    _report(
        5,
        equiv_ok and slope_ok,
        f"oscillator routes agree at {len(betas)} beta (max gap/allowed={worst:.3g}) {'ok' if equiv_ok else 'off'}; "
        f"box full-minus-first-order exponent={slope:.3f} (want 2.0 +- 0.2)",
    )


def _gegenbauer_explicit(n: int, lam: float, s: float) -> float:
    # sum_k (-1)^k (lam)_(n-k) / (k! (n-2k)!) (2s)^(n-2k), in exact rationals
    lam, s = Fraction(lam), Fraction(s)
    total = Fraction(0)
    for k in range(n // 2 + 1):
        poch = Fraction(1)
        for j in range(n - k):
            poch *= lam + j
        total += (-1) ** k * poch / (math.factorial(k) * math.factorial(n - 2 * k)) * (2 * s) ** (n - 2 * k)
    return float(total)


def test_criterion_6_identities():
    lams = np.logspace(0, 6, 25)
    dup = max(abs(duplication_residual(float(l))) for l in lams)
    geg = 0.0
    for n in range(7):
        for lam in (0.25, 0.5, 1.0, 2.5, 10.0):
            for s in np.linspace(-1, 1, 9):
                geg = max(geg, abs(gegenbauer(n, lam, float(s)) - _gegenbauer_explicit(n, lam, float(s))))
    gibbs_runs = gibbs_bad = skipped = 0
    for name in ("gup_oscillator", "nonlocal_box"):
        for beta in np.logspace(-6, 2, 17):
            res = kl_divergence(name, float(beta))
            if not res.norms_valid:
                skipped += 1
                continue
            gibbs_runs += 1
            gibbs_bad += res.value < -res.error_estimate
    _report(
        6,
        dup < 1e-9 and geg < 1e-10 and gibbs_bad == 0 and gibbs_runs > 0,
        f"duplication max residual={dup:.2g} over lam in [1,1e6]; gegenbauer max diff={geg:.2g} (n<=6); "
        f"gibbs violations={gibbs_bad}/{gibbs_runs} (skipped {skipped} runs with norms off 1)",
    )


def test_criterion_7_determinism(default_sweep, tmp_path):
    first, _ = default_sweep
    env = {k: v for k, v in os.environ.items() if k != "QKL_WORKERS"}
    serial = tmp_path / "serial"
    parallel = tmp_path / "parallel"
    serial.mkdir()
    parallel.mkdir()
    assert _qkl("sweep", cwd=serial, env=env).returncode == 0
    assert _qkl("sweep", "--workers", "3", cwd=parallel, env=env).returncode == 0
    same = {
        kind: (first / f"sweep.{kind}").read_bytes()
        == (serial / f"sweep.{kind}").read_bytes()
        == (parallel / f"sweep.{kind}").read_bytes()
        for kind in ("csv", "svg")
    }
    _report(7, all(same.values()), f"serial rerun and 3-worker run byte-identical: csv={same['csv']} svg={same['svg']}")


def test_criterion_8_verify_full(tmp_path):
    t0 = time.perf_counter()
    proc = _qkl("verify", "--level", "full", cwd=tmp_path)
    secs = time.perf_counter() - t0
    failed = [l for l in proc.stdout.splitlines() if "status=FAIL" in l]
    _report(
        8,
        proc.returncode == 0 and secs < 300,
        f"exit={proc.returncode} in {secs:.1f}s (limit 300s); failed checks={len(failed)}",
    )


if __name__ == "__main__":
    here = Path(__file__).resolve().parent
    sys.exit(pytest.main([str(Path(__file__).resolve()), "-q", "-p", "no:cacheprovider", "--rootdir", str(here.parent)]))
