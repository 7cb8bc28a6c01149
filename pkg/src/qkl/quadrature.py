"""Adaptive quadrature on intervals and on the real line.

The panel rule is tanh-sinh (double exponential). It is an open rule, so
panel endpoints are never evaluated, and it converges quickly even when the
integrand has a log or removable singularity at an endpoint. That is why
callers declare singular points as ``split_points``: they become panel
boundaries. Panels that do not settle are bisected under a global error
budget, in the style of QUADPACK's globally adaptive drivers.

Unbounded pieces are mapped onto (0, 1] with p = R / u.

Integrands must accept a 1-d numpy array and return values of the same
shape. Scalar-only callables still work but are slower.
"""

from __future__ import annotations

import dataclasses
import heapq
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

__all__ = [
    "InvalidSpecError",
    "QuadratureSpec",
    "IntegralResult",
    "integrate_interval",
    "integrate_line",
]

_EPS = np.finfo(float).eps
_T_MAX = 4.0
_MAX_LEVEL = 6
_MIN_LEVEL = 3
_AUTO_RADIUS = 50.0
# widest panel allowed when seeding a line integral, in natural units
_LINE_PANEL = 2.0
_RESUM = 64


class InvalidSpecError(ValueError):
    """Raised for a malformed QuadratureSpec."""


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and geometry for one integration.

    ``truncation_radius`` is either a positive number, meaning integrate
    over [-R, R] only, or ``"auto"``, meaning a core of radius
    max(50, largest split point) plus algebraically mapped tails.
    """

    abs_tol: float = 1e-12
    rel_tol: float = 1e-9
    max_subdivisions: int = 2000
    truncation_radius: Union[float, str] = "auto"
    split_points: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if not (self.abs_tol > 0 and math.isfinite(self.abs_tol)):
            raise InvalidSpecError(f"abs_tol must be positive, got {self.abs_tol!r}")
        if not (self.rel_tol > 0 and math.isfinite(self.rel_tol)):
            raise InvalidSpecError(f"rel_tol must be positive, got {self.rel_tol!r}")
        if int(self.max_subdivisions) != self.max_subdivisions or self.max_subdivisions < 1:
            raise InvalidSpecError("max_subdivisions must be a positive integer")
        tr = self.truncation_radius
        if isinstance(tr, str):
            if tr != "auto":
                raise InvalidSpecError(f"truncation_radius must be a number or 'auto', got {tr!r}")
        elif not (tr > 0 and math.isfinite(tr)):
            raise InvalidSpecError(f"truncation_radius must be positive, got {tr!r}")
        pts = tuple(float(p) for p in self.split_points)
        if any(not math.isfinite(p) for p in pts):
            raise InvalidSpecError("split_points must be finite")
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise InvalidSpecError("split_points must be strictly increasing")
        object.__setattr__(self, "split_points", pts)

    def replace(self, **changes) -> "QuadratureSpec":
        return dataclasses.replace(self, **changes)

    def with_splits(self, points: Sequence[float]) -> "QuadratureSpec":
        """Copy with ``points`` merged into the split list."""
        merged = np.unique(np.concatenate([np.asarray(self.split_points, float), np.asarray(points, float)]))
        return self.replace(split_points=tuple(merged.tolist()))

    def tolerance(self, value: float) -> float:
        return max(self.abs_tol, self.rel_tol * abs(value))


@dataclass(frozen=True)
class IntegralResult:
    value: float
    error_estimate: float
    evaluations: int
    converged: bool
    message: str = ""


def _build_tables():
    """Node offsets and weights on [-1, 1], grouped by refinement level.

    Each node is stored as (side, d, w): side -1 means x = a + half*d,
    +1 means x = b - half*d. Storing the distance to the nearest endpoint
    rather than the abscissa keeps the nodes near an endpoint exact.
    """
    levels = []
    for k in range(_MAX_LEVEL + 1):
        h = 2.0 ** -k
        n = int(round(_T_MAX / h))
        j = np.arange(-n, n + 1)
        if k > 0:
            j = j[j % 2 != 0]
        t = j * h
        y = 0.5 * math.pi * np.sinh(np.abs(t))
        e = np.exp(-2.0 * y)
        d = 2.0 * e / (1.0 + e)
        w = 0.5 * math.pi * np.cosh(t) * 4.0 * e / (1.0 + e) ** 2
        side = np.sign(t)
        levels.append((side, d, w))
    return levels


_TABLES = _build_tables()


def _evaluate(f, x):
    try:
        y = f(x)
    except (TypeError, ValueError):
        y = [f(float(xi)) for xi in x]
    y = np.asarray(y, dtype=float)
    if y.shape != x.shape:
        y = np.broadcast_to(y, x.shape).astype(float)
    return y


class _Panel:
    __slots__ = ("a", "b", "g", "budget", "value", "error", "evals", "finite", "level", "at_floor")

    def __init__(self, a, b, g, budget):
        self.a, self.b, self.g, self.budget = a, b, g, budget


def _tanh_sinh_panel(panel: _Panel, rel_tol: float, target: float = 0.0) -> None:
    """Run the level sequence until the level difference meets the target.

    The target is 0.25 * max(budget, rel_tol |I|, ``target``); ``target``
    lets the driver tighten a panel against the global tolerance when
    neighbouring panels cancel.
    """
    a, b = panel.a, panel.b
    half = 0.5 * (b - a)
    total = 0.0
    absum = 0.0
    prev = None
    evals = 0
    err = math.inf
    value = 0.0
    for k, (side, d, w) in enumerate(_TABLES):
        x = np.where(side < 0, a + half * d, b - half * d)
        inside = (x > a) & (x < b)
        x = x[inside]
        fx = _evaluate(panel.g, x) if x.size else np.zeros(0)
        evals += x.size
        if not np.all(np.isfinite(fx)):
            panel.value, panel.error, panel.evals, panel.finite = math.nan, math.inf, evals, False
            return
        wf = w[inside] * fx
        total += math.fsum(wf)
        absum += float(np.sum(np.abs(wf)))
        h = 2.0 ** -k
        value = half * h * total
        if prev is not None:
            err = abs(value - prev)
            if k >= _MIN_LEVEL and err <= 0.25 * max(panel.budget, rel_tol * abs(value), target):
                break
        prev = value
    roundoff = 10.0 * _EPS * half * (2.0 ** -k) * absum
    panel.value = value
    panel.error = max(err, roundoff)
    panel.at_floor = err <= roundoff
    panel.evals = evals
    panel.finite = True
    panel.level = k


def _refine(panel, rel_tol, target):
    _tanh_sinh_panel(panel, rel_tol, target)
    return panel.evals


def _adaptive(pieces, spec: QuadratureSpec) -> IntegralResult:
    """Global adaptive refinement over a list of (a, b, g) pieces."""
    if not pieces:
        return IntegralResult(0.0, 0.0, 0, True)
    budget = spec.abs_tol / len(pieces)
    heap = []
    frozen_err = 0.0
    frozen_val = 0.0
    evals = 0
    seq = 0
    for a, b, g in pieces:
        p = _Panel(a, b, g, budget)
        _tanh_sinh_panel(p, spec.rel_tol)
        evals += p.evals
        if not p.finite:
            return IntegralResult(math.nan, math.inf, evals, False, f"non-finite integrand value on [{a!r}, {b!r}]")
        heapq.heappush(heap, (-p.error, seq, p))
        seq += 1

    def exact_totals():
        live = [p for _, _, p in heap]
        return math.fsum([p.value for p in live] + [frozen_val]), math.fsum([p.error for p in live] + [frozen_err])

    # running totals, re-summed exactly every _RESUM steps and before any exit
    value, error = exact_totals()
    subdivisions = 0
    message = ""
    while True:
        if error <= spec.tolerance(value):
            value, error = exact_totals()
            if error <= spec.tolerance(value):
                return IntegralResult(value, error, evals, True)
        if not heap:
            message = "remaining error sits at the rounding floor or on panels too narrow to bisect"
            break
        if subdivisions >= spec.max_subdivisions:
            message = f"max_subdivisions={spec.max_subdivisions} exhausted"
            break
        _, _, worst = heapq.heappop(heap)
        # share of the global tolerance this panel may keep
        share = spec.tolerance(value) / (len(heap) + 2)
        if worst.level < _MAX_LEVEL:
            value -= worst.value
            error -= worst.error
            evals += _refine(worst, 0.0, share)
            if not worst.finite:
                return IntegralResult(math.nan, math.inf, evals, False, f"non-finite integrand value on [{worst.a!r}, {worst.b!r}]")
            # stop at the top level regardless, so the next visit bisects
            worst.level = _MAX_LEVEL
            heapq.heappush(heap, (-worst.error, seq, worst))
            seq += 1
            value += worst.value
            error += worst.error
            continue
        mid = 0.5 * (worst.a + worst.b)
        # bisecting cannot push a panel below its rounding floor
        if worst.at_floor or not (worst.a < mid < worst.b) or (worst.b - worst.a) <= 64 * _EPS * max(abs(worst.a), abs(worst.b)):
            frozen_val += worst.value
            frozen_err += worst.error
            continue
        subdivisions += 1
        value -= worst.value
        error -= worst.error
        for lo, hi in ((worst.a, mid), (mid, worst.b)):
            child = _Panel(lo, hi, worst.g, 0.5 * worst.budget)
            evals += _refine(child, 0.0, share)
            if not child.finite:
                return IntegralResult(math.nan, math.inf, evals, False, f"non-finite integrand value on [{lo!r}, {hi!r}]")
            heapq.heappush(heap, (-child.error, seq, child))
            seq += 1
            value += child.value
            error += child.error
        if subdivisions % _RESUM == 0:
            value, error = exact_totals()
    value, error = exact_totals()
    return IntegralResult(value, error, evals, False, message)


def _finite_pieces(f, lo, hi, splits, max_width=None):
    cuts = [lo] + [s for s in splits if lo < s < hi] + [hi]
    if max_width is not None:
        fine = []
        for a, b in zip(cuts, cuts[1:]):
            n = max(1, math.ceil((b - a) / max_width))
            fine.extend(np.linspace(a, b, n + 1)[:-1].tolist())
        cuts = fine + [hi]
    return [(a, b, f) for a, b in zip(cuts, cuts[1:])]


def integrate_interval(f: Callable, lo: float, hi: float, spec: QuadratureSpec = QuadratureSpec()) -> IntegralResult:
    """Integrate ``f`` over the finite interval [lo, hi].

    Interior ``spec.split_points`` become panel boundaries; the truncation
    setting is ignored.
    """
    if not (math.isfinite(lo) and math.isfinite(hi)) or not lo < hi:
        raise InvalidSpecError(f"need finite lo < hi, got [{lo!r}, {hi!r}]")
    return _adaptive(_finite_pieces(f, float(lo), float(hi), spec.split_points), spec)


def _tail(f, radius, sign):
    def g(u):
        p = sign * radius / u
        return f(p) * (radius / (u * u))

    return g


def integrate_line(f: Callable, spec: QuadratureSpec = QuadratureSpec()) -> IntegralResult:
    """Integrate ``f`` over the whole real line.

    The core is seeded with panels no wider than 2, so features of unit
    width cannot slip between the nodes of a single wide panel.

    With a numeric ``truncation_radius`` R the integral runs over [-R, R].
    With ``"auto"`` the core [-R, R] uses R = max(50, max |split|) and each
    tail |p| > R is mapped to u in (0, 1] through p = R/u, all refined under
    one shared error budget.
    """
    if spec.truncation_radius == "auto":
        radius = max([_AUTO_RADIUS] + [abs(s) for s in spec.split_points])
        pieces = _finite_pieces(f, -radius, radius, spec.split_points, _LINE_PANEL)
        pieces.append((0.0, 1.0, _tail(f, radius, 1.0)))
        pieces.append((0.0, 1.0, _tail(f, radius, -1.0)))
        return _adaptive(pieces, spec)
    radius = float(spec.truncation_radius)
    return _adaptive(_finite_pieces(f, -radius, radius, spec.split_points, _LINE_PANEL), spec)
