"""Divergence sweeps over beta grids, with CSV tables and SVG line charts.

Rows are independent, so a sweep fans them out to worker processes; the
results are reassembled in (model, beta) order and every number written is
produced by the same serial code path, so worker count never changes an
output byte.
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np

from .kl import DEFAULT_KL_SPEC, kl_divergence
from .models import BOX_SUPPORT_FACTOR, MODEL_NAMES, ModelNotFoundError, get_model
from .quadrature import QuadratureSpec

__all__ = [
    "FLAG_ORDER",
    "SweepSpecError",
    "SweepSpec",
    "SweepRow",
    "SMALL_BETA_GRID",
    "LARGE_BETA_GRID",
    "beta_grid",
    "run_sweep",
    "write_csv",
    "read_csv",
    "write_svg_chart",
    "render_svg_chart",
]

TRUNCATED_SUPPORT = "TRUNCATED_SUPPORT"
NOT_CONVERGED = "NOT_CONVERGED"
EXPANSION_INVALID = "EXPANSION_INVALID"
FLAG_ORDER = (TRUNCATED_SUPPORT, NOT_CONVERGED, EXPANSION_INVALID)

CSV_HEADER = ("model", "beta", "kl", "log10_kl", "error_estimate", "deformed_norm", "flags")

# (beta_min, beta_max, points)
SMALL_BETA_GRID = (1e-6, 1e-1, 50)
LARGE_BETA_GRID = (1e-1, 1e2, 50)

# oscillator expansion is flagged from beta = 0.1 r on
_EXPANSION_LIMIT = 0.1


class SweepSpecError(ValueError):
    """Raised for an invalid sweep specification, before any work is done."""


@dataclass(frozen=True)
class SweepSpec:
    """What to sweep and where to write it.

    ``csv_path`` / ``svg_path`` of None skip that output. ``workers`` of 1
    evaluates serially in-process.
    """

    models: tuple = MODEL_NAMES
    beta_min: float = SMALL_BETA_GRID[0]
    beta_max: float = SMALL_BETA_GRID[1]
    points: int = SMALL_BETA_GRID[2]
    grid: str = "log"
    r: float = 1.0
    box_support_factor: float = BOX_SUPPORT_FACTOR
    quadrature: QuadratureSpec = field(default_factory=lambda: DEFAULT_KL_SPEC)
    csv_path: Optional[str] = "sweep.csv"
    svg_path: Optional[str] = "sweep.svg"
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "models", tuple(self.models))
        if not self.models:
            raise SweepSpecError("models must not be empty")
        unknown = [m for m in self.models if m not in MODEL_NAMES]
        if unknown:
            raise SweepSpecError(f"unknown model(s) {', '.join(unknown)}; available: {', '.join(MODEL_NAMES)}")
        if len(set(self.models)) != len(self.models):
            raise SweepSpecError("models must not repeat")
        if not (0 < self.beta_min < self.beta_max and math.isfinite(self.beta_max)):
            raise SweepSpecError(f"need 0 < beta_min < beta_max, got {self.beta_min!r}, {self.beta_max!r}")
        if int(self.points) != self.points or self.points < 2:
            raise SweepSpecError("points must be an integer >= 2")
        if self.grid not in ("log", "linear"):
            raise SweepSpecError(f"grid must be 'log' or 'linear', got {self.grid!r}")
        if not (self.r > 0 and math.isfinite(self.r)):
            raise SweepSpecError("r must be positive")
        if not 0 < self.box_support_factor <= 1:
            raise SweepSpecError("box_support_factor must lie in (0, 1]")
        if int(self.workers) != self.workers or self.workers < 1:
            raise SweepSpecError("workers must be a positive integer")


@dataclass(frozen=True)
class SweepRow:
    model: str
    beta: float
    kl: float
    log10_kl: Optional[float]
    error_estimate: float
    deformed_norm: float
    flags: tuple = ()


def beta_grid(spec: SweepSpec) -> np.ndarray:
    """The beta values of a sweep, endpoints exact."""
    n = int(spec.points)
    if spec.grid == "log":
        grid = np.logspace(math.log10(spec.beta_min), math.log10(spec.beta_max), n)
    else:
        grid = np.linspace(spec.beta_min, spec.beta_max, n)
    grid[0], grid[-1] = spec.beta_min, spec.beta_max
    return grid


def _evaluate_row(task) -> SweepRow:
    name, beta, r, factor, quadrature = task
    model = get_model(name, r=r, box_support_factor=factor)
    flags = set()
    try:
        res = kl_divergence(model, beta, quadrature)
        kl, err, norm = res.value, res.error_estimate, res.deformed_norm
        if res.divergent:
            flags.add(NOT_CONVERGED)
        if any(math.isfinite(s) for s in res.support_used):
            flags.add(TRUNCATED_SUPPORT)
    except (ArithmeticError, ValueError):
        kl, err, norm = math.nan, math.inf, math.nan
        flags.add(NOT_CONVERGED)
    if name == "gup_oscillator" and beta >= _EXPANSION_LIMIT * r:
        flags.add(EXPANSION_INVALID)
    log10_kl = math.log10(kl) if (math.isfinite(kl) and kl > err and kl > 0) else None
    return SweepRow(
        model=name,
        beta=float(beta),
        kl=float(kl),
        log10_kl=log10_kl,
        error_estimate=float(err),
        deformed_norm=float(norm),
        flags=tuple(f for f in FLAG_ORDER if f in flags),
    )


def run_sweep(spec: SweepSpec) -> list:
    """Evaluate every (model, beta) pair; rows come back sorted by (model, beta).

    A row that fails is kept with the NOT_CONVERGED flag; the sweep itself
    never aborts once it has started.
    """
    tasks = [
        (name, float(beta), spec.r, spec.box_support_factor, spec.quadrature)
        for name in sorted(spec.models)
        for beta in beta_grid(spec)
    ]
    if spec.workers == 1 or len(tasks) == 1:
        rows = [_evaluate_row(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=min(spec.workers, len(tasks))) as pool:
            rows = list(pool.map(_evaluate_row, tasks, chunksize=4))
    return sorted(rows, key=lambda row: (row.model, row.beta))


# --------------------------------------------------------------------------
# CSV


def _fmt(x: Optional[float]) -> str:
    return "" if x is None else repr(float(x))


def _csv_text(rows: Iterable[SweepRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow(
            [
                row.model,
                _fmt(row.beta),
                _fmt(row.kl),
                _fmt(row.log10_kl),
                _fmt(row.error_estimate),
                _fmt(row.deformed_norm),
                "|".join(row.flags),
            ]
        )
    return buf.getvalue()


def _write_text(path, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {os.fspath(path)!r}: {exc.strerror or exc}") from exc


def write_csv(rows: Sequence[SweepRow], path) -> None:
    """Write rows as UTF-8 CSV with LF line endings and round-trip floats."""
    _write_text(path, _csv_text(rows))


def read_csv(path) -> list:
    """Parse a file written by :func:`write_csv` back into rows."""
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            records = list(csv.reader(fh))
    except OSError as exc:
        raise OSError(f"cannot read {os.fspath(path)!r}: {exc.strerror or exc}") from exc
    if not records or tuple(records[0]) != CSV_HEADER:
        raise ValueError(f"{os.fspath(path)!r} is not a sweep CSV (bad header)")
    rows = []
    for rec in records[1:]:
        model, beta, kl, log10_kl, err, norm, flags = rec
        rows.append(
            SweepRow(
                model=model,
                beta=float(beta),
                kl=float(kl),
                log10_kl=float(log10_kl) if log10_kl else None,
                error_estimate=float(err),
                deformed_norm=float(norm),
                flags=tuple(flags.split("|")) if flags else (),
            )
        )
    return rows


# --------------------------------------------------------------------------
# SVG

_WIDTH, _HEIGHT = 960, 540
_MARGIN = {"left": 90, "right": 200, "top": 40, "bottom": 70}
_COLOURS = {"gup_oscillator": "#1f77b4", "nonlocal_box": "#ff7f0e"}
_FALLBACK_COLOURS = ("#2ca02c", "#d62728", "#9467bd", "#8c564b")


def _ticks(lo: float, hi: float) -> list:
    """Integer ticks covering [lo, hi], at most ~10 of them."""
    first, last = math.floor(lo), math.ceil(hi)
    step = max(1, math.ceil((last - first) / 10))
    return list(range(first, last + 1, step))


def _c(v: float) -> str:
    return f"{v:.2f}"


def render_svg_chart(rows: Sequence[SweepRow], title: str = "KL divergence vs beta") -> str:
    """SVG text of log10 kl against log10 beta, one polyline per model.

    Rows without a finite positive divergence (log10_kl is None) are left
    out of the polylines.
    """
    if not rows:
        raise ValueError("cannot chart an empty sweep")
    models = []
    for row in rows:
        if row.model not in models:
            models.append(row.model)
    pts = [(math.log10(r.beta), r.log10_kl) for r in rows if r.log10_kl is not None]
    xs = [math.log10(r.beta) for r in rows]
    ys = [p[1] for p in pts] or [0.0]
    xt, yt = _ticks(min(xs), max(xs)), _ticks(min(ys), max(ys))
    x0, x1, y0, y1 = xt[0], xt[-1], yt[0], yt[-1]
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1
    left, top = _MARGIN["left"], _MARGIN["top"]
    pw = _WIDTH - left - _MARGIN["right"]
    ph = _HEIGHT - top - _MARGIN["bottom"]

    def sx(x):
        return left + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return top + (y1 - y) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {_WIDTH} {_HEIGHT}" width="{_WIDTH}" height="{_HEIGHT}">',
        '<rect x="0" y="0" width="100%" height="100%" fill="#ffffff"/>',
        f'<text x="{_c(left + pw / 2)}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{escape(title)}</text>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#000000"/>',
    ]
    for t in xt:
        x = sx(t)
        out.append(f'<line x1="{_c(x)}" y1="{top + ph}" x2="{_c(x)}" y2="{top + ph + 6}" stroke="#000000"/>')
        out.append(f'<line x1="{_c(x)}" y1="{top}" x2="{_c(x)}" y2="{top + ph}" stroke="#dddddd"/>')
        out.append(f'<text x="{_c(x)}" y="{top + ph + 22}" text-anchor="middle" font-family="sans-serif" font-size="12">1e{t}</text>')
    for t in yt:
        y = sy(t)
        out.append(f'<line x1="{left - 6}" y1="{_c(y)}" x2="{left}" y2="{_c(y)}" stroke="#000000"/>')
        out.append(f'<line x1="{left}" y1="{_c(y)}" x2="{left + pw}" y2="{_c(y)}" stroke="#dddddd"/>')
        out.append(f'<text x="{left - 10}" y="{_c(y + 4)}" text-anchor="end" font-family="sans-serif" font-size="12">{t}</text>')
    out.append(
        f'<text x="{_c(left + pw / 2)}" y="{_HEIGHT - 20}" text-anchor="middle" font-family="sans-serif" font-size="14">beta (log scale)</text>'
    )
    out.append(
        f'<text x="24" y="{_c(top + ph / 2)}" text-anchor="middle" font-family="sans-serif" font-size="14" '
        f'transform="rotate(-90 24 {_c(top + ph / 2)})">log10 D_KL (nats)</text>'
    )
    for i, name in enumerate(models):
        colour = _COLOURS.get(name, _FALLBACK_COLOURS[i % len(_FALLBACK_COLOURS)])
        line = " ".join(
            f"{_c(sx(math.log10(r.beta)))},{_c(sy(r.log10_kl))}"
            for r in rows
            if r.model == name and r.log10_kl is not None
        )
        out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="2" points="{line}"/>')
        ly = top + 20 + 22 * i
        lx = left + pw + 16
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 24}" y2="{ly}" stroke="{colour}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 30}" y="{ly + 4}" font-family="sans-serif" font-size="12">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg_chart(rows: Sequence[SweepRow], path, title: str = "KL divergence vs beta") -> None:
    """Write :func:`render_svg_chart` output to ``path``."""
    _write_text(path, render_svg_chart(rows, title))
