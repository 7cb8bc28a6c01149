"""``qkl`` command line: single divergences, sweeps, figures and the verify suite.

Exit codes: 0 success, 1 usage or config error, 2 a computation did not
converge, 3 a verify invariant failed. Machine-readable records go to
stdout as space-separated key=value pairs; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from typing import Optional, Sequence

from . import __version__
from .kl import (
    DEFAULT_KL_SPEC,
    kl_box_first_order,
    kl_box_full_paper,
    kl_divergence,
    kl_oscillator_analytic,
    kl_oscillator_integral_paper,
)
from .models import BOX_SUPPORT_FACTOR, MODEL_NAMES, ModelNotFoundError, get_model
from .quadrature import InvalidSpecError, QuadratureSpec
from .sweep import (
    LARGE_BETA_GRID,
    NOT_CONVERGED,
    SMALL_BETA_GRID,
    SweepSpec,
    SweepSpecError,
    run_sweep,
    write_csv,
    write_svg_chart,
)

__all__ = ["main", "build_parser", "load_config", "ConfigError"]

log = logging.getLogger("qkl")

EXIT_OK, EXIT_USAGE, EXIT_NOT_CONVERGED, EXIT_INVARIANT = 0, 1, 2, 3

ROUTES = ("generic", "transcribed", "first-order", "analytic")

_CONFIG_KEYS = {
    "models", "beta_min", "beta_max", "points", "grid", "r", "box_support_factor",
    "quadrature", "outputs", "workers", "verbosity",
}
_QUADRATURE_KEYS = {"abs_tol", "rel_tol", "max_subdivisions", "truncation_radius"}
_OUTPUT_KEYS = {"csv_path", "svg_path"}


class ConfigError(ValueError):
    """Bad config file or flag combination; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; the contract here says 1
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _record(**fields) -> str:
    return " ".join(f"{k}={_fmt(v)}" for k, v in fields.items() if v is not None)


def _truncation(value: str):
    if value == "auto":
        return value
    try:
        return float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or 'auto', got {value!r}") from None


def _add_quadrature_flags(p):
    g = p.add_argument_group("quadrature")
    g.add_argument("--abs-tol", type=float, help=f"absolute tolerance (default {DEFAULT_KL_SPEC.abs_tol:g})")
    g.add_argument("--rel-tol", type=float, help=f"relative tolerance (default {DEFAULT_KL_SPEC.rel_tol:g})")
    g.add_argument(
        "--max-subdivisions", type=int, help=f"bisection budget (default {DEFAULT_KL_SPEC.max_subdivisions})"
    )
    g.add_argument(
        "--truncation-radius",
        type=_truncation,
        help="'auto' (mapped tails) or a radius R to integrate over [-R, R] only (default auto)",
    )


def _add_sweep_flags(p, svg_only=False):
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--preset", choices=("small", "large"), help="beta grid preset: small=[1e-6,1e-1], large=[1e-1,1e2]")
    p.add_argument("--models", help=f"comma-separated model names (default {','.join(MODEL_NAMES)})")
    p.add_argument("--beta-min", type=float, help=f"smallest beta (default {SMALL_BETA_GRID[0]:g})")
    p.add_argument("--beta-max", type=float, help=f"largest beta (default {SMALL_BETA_GRID[1]:g})")
    p.add_argument("--points", type=int, help=f"grid points (default {SMALL_BETA_GRID[2]})")
    p.add_argument("--grid", choices=("log", "linear"), help="grid spacing (default log)")
    p.add_argument("--r", type=float, help="oscillator scale r = 1/(m omega hbar) (default 1)")
    p.add_argument(
        "--box-support-factor", type=float, help=f"box support is |p| <= factor/sqrt(3 beta) (default {BOX_SUPPORT_FACTOR})"
    )
    if not svg_only:
        p.add_argument("--csv", dest="csv_path", help="CSV output path (default sweep.csv)")
        p.add_argument("--no-csv", action="store_true", help="do not write the CSV")
    p.add_argument("--svg", dest="svg_path", help="SVG output path (default sweep.svg)")
    if not svg_only:
        p.add_argument("--no-svg", action="store_true", help="do not write the SVG")
    p.add_argument("--workers", type=int, help="worker processes (default: QKL_WORKERS, else config, else 1)")
    _add_quadrature_flags(p)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qkl", description="KL divergence of deformed quantum momentum densities.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more diagnostics on stderr")
    parser.add_argument("-q", "--quiet", action="store_true", help="only errors on stderr")
    # -v/-q also after the subcommand; SUPPRESS keeps the global values unless given
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="count", default=argparse.SUPPRESS, help="more diagnostics on stderr")
    common.add_argument("-q", "--quiet", action="store_true", default=argparse.SUPPRESS, help="only errors on stderr")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("kl", parents=[common], help="divergence at one beta", description="Evaluate D(deformed || baseline) at one beta.")
    p.add_argument("--model", required=True, help=f"one of: {', '.join(MODEL_NAMES)}")
    p.add_argument("--beta", type=float, required=True, help="deformation parameter, >= 0")
    p.add_argument("--r", type=float, default=1.0, help="oscillator scale r (default 1)")
    p.add_argument(
        "--box-support-factor", type=float, default=BOX_SUPPORT_FACTOR,
        help=f"box support factor (default {BOX_SUPPORT_FACTOR})",
    )
    p.add_argument(
        "--route", choices=ROUTES, default="generic",
        help="generic: numerical divergence (default); transcribed: the printed full integral "
        "(oscillator with exact A, B; box full form); first-order: box first-order integrand; "
        "analytic: oscillator closed form 3 beta/(8 r)",
    )
    _add_quadrature_flags(p)

    p = sub.add_parser("sweep", parents=[common], help="divergence over a beta grid", description="Sweep beta and write CSV and SVG.")
    _add_sweep_flags(p)
    p = sub.add_parser("figure", parents=[common], help="sweep, SVG only", description="Same as sweep but writes only the SVG chart.")
    _add_sweep_flags(p, svg_only=True)

    p = sub.add_parser("verify", parents=[common], help="run the invariant suite", description="Run invariant checks; exit 3 if any fails.")
    p.add_argument("--level", choices=("fast", "full"), default="fast", help="fast (<10 s) or full (default fast)")
    p.add_argument("--inject-fault", metavar="NAME", help=argparse.SUPPRESS)
    return parser


# --------------------------------------------------------------------------
# config


def _quadrature_from(base: QuadratureSpec, values: dict) -> QuadratureSpec:
    changes = {k: v for k, v in values.items() if v is not None}
    return base.replace(**changes) if changes else base


def load_config(path: str) -> dict:
    """Read and shape-check a JSON sweep config; raises ConfigError."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path!r} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path!r} must hold a JSON object")
    unknown = set(data) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
    for key, allowed in (("quadrature", _QUADRATURE_KEYS), ("outputs", _OUTPUT_KEYS)):
        sect = data.get(key, {})
        if not isinstance(sect, dict):
            raise ConfigError(f"config '{key}' must be an object")
        bad = set(sect) - allowed
        if bad:
            raise ConfigError(f"unknown '{key}' key(s): {', '.join(sorted(bad))}")
    if "models" in data and not (
        isinstance(data["models"], list) and all(isinstance(m, str) for m in data["models"])
    ):
        raise ConfigError("config 'models' must be a list of names")
    return data


def _env_workers() -> Optional[int]:
    raw = os.environ.get("QKL_WORKERS")
    if raw is None or raw.strip() == "":
        return None
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"QKL_WORKERS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"QKL_WORKERS must be a positive integer, got {raw!r}")
    return n


def sweep_spec_from_args(args, svg_only=False) -> SweepSpec:
    """Merge defaults < preset < config file < QKL_WORKERS < flags into a SweepSpec."""
    cfg = load_config(args.config) if args.config else {}
    values = {}
    if args.preset:
        lo, hi, n = SMALL_BETA_GRID if args.preset == "small" else LARGE_BETA_GRID
        values.update(beta_min=lo, beta_max=hi, points=n)
    for key in ("models", "beta_min", "beta_max", "points", "grid", "r", "box_support_factor", "workers"):
        if key in cfg:
            values[key] = cfg[key]
    if "verbosity" in cfg and not (args.verbose or args.quiet):
        v = cfg["verbosity"]
        if not isinstance(v, int) or isinstance(v, bool) or v < 0:
            raise ConfigError("config 'verbosity' must be a non-negative integer")
        logging.getLogger().setLevel((logging.WARNING, logging.INFO, logging.DEBUG)[min(v, 2)])
    outputs = dict(cfg.get("outputs", {}))
    quad = dict(cfg.get("quadrature", {}))

    env = _env_workers()
    if env is not None:
        values["workers"] = env
    if args.models is not None:
        values["models"] = [m.strip() for m in args.models.split(",") if m.strip()]
    for key in ("beta_min", "beta_max", "points", "grid", "r", "box_support_factor", "workers"):
        v = getattr(args, key)
        if v is not None:
            values[key] = v
    for key in ("abs_tol", "rel_tol", "max_subdivisions", "truncation_radius"):
        v = getattr(args, key)
        if v is not None:
            quad[key] = v

    csv_path = outputs.get("csv_path", "sweep.csv")
    svg_path = outputs.get("svg_path", "sweep.svg")
    if svg_only:
        csv_path = None
    else:
        if args.csv_path is not None:
            csv_path = args.csv_path
        if args.no_csv:
            csv_path = None
        if args.no_svg:
            svg_path = None
    if args.svg_path is not None:
        svg_path = args.svg_path
    if svg_only and svg_path is None:
        svg_path = "sweep.svg"

    try:
        quadrature = _quadrature_from(DEFAULT_KL_SPEC, quad)
        return SweepSpec(quadrature=quadrature, csv_path=csv_path, svg_path=svg_path, **values)
    except (TypeError, InvalidSpecError, SweepSpecError) as exc:
        raise ConfigError(str(exc)) from exc


# --------------------------------------------------------------------------
# commands


def cmd_kl(args) -> int:
    if args.model not in MODEL_NAMES:
        print(f"qkl kl: unknown model {args.model!r}; available: {', '.join(MODEL_NAMES)}", file=sys.stderr)
        return EXIT_USAGE
    if not (args.beta >= 0 and math.isfinite(args.beta)):
        print("qkl kl: --beta must be a finite number >= 0", file=sys.stderr)
        return EXIT_USAGE
    if not (args.r > 0 and math.isfinite(args.r)):
        print("qkl kl: --r must be positive", file=sys.stderr)
        return EXIT_USAGE
    try:
        spec = _quadrature_from(
            DEFAULT_KL_SPEC,
            {k: getattr(args, k) for k in ("abs_tol", "rel_tol", "max_subdivisions", "truncation_radius")},
        )
        model = get_model(args.model, r=args.r, box_support_factor=args.box_support_factor)
    except (InvalidSpecError, ModelNotFoundError, ValueError) as exc:
        print(f"qkl kl: {exc}", file=sys.stderr)
        return EXIT_USAGE

    is_osc = args.model == "gup_oscillator"
    route = args.route
    t0 = time.perf_counter()
    try:
        if route == "generic":
            res = kl_divergence(model, args.beta, spec)
        elif route == "analytic":
            if not is_osc:
                raise ValueError("the analytic route exists for gup_oscillator only")
            value = kl_oscillator_analytic(args.r, args.beta)
            print(_record(model=args.model, beta=args.beta, r=args.r, route=route, kl=value, error=0.0, flags=""))
            return EXIT_OK
        elif route == "first-order":
            if is_osc:
                raise ValueError("the first-order route exists for nonlocal_box only")
            res = kl_box_first_order(args.beta, spec)
        else:
            if args.beta == 0:
                raise ValueError("the transcribed route needs beta > 0")
            res = (
                kl_oscillator_integral_paper(args.r, args.beta, spec)
                if is_osc
                else kl_box_full_paper(args.beta, spec, args.box_support_factor)
            )
    except ValueError as exc:
        print(f"qkl kl: {exc}", file=sys.stderr)
        return EXIT_USAGE
    log.info("kl: %d evaluations in %.3f s", res.evaluations, time.perf_counter() - t0)

    flags = []
    if any(math.isfinite(s) for s in res.support_used):
        flags.append("TRUNCATED_SUPPORT")
    if res.divergent:
        flags.append(NOT_CONVERGED)
        log.warning("integration did not converge: %s", res.message or "non-finite value")
    if is_osc and args.beta >= 0.1 * args.r:
        flags.append("EXPANSION_INVALID")
    lo, hi = res.support_used
    print(
        _record(
            model=args.model,
            beta=args.beta,
            r=args.r if is_osc else None,
            route=route,
            kl=res.value,
            error=res.error_estimate,
            baseline_norm=res.baseline_norm,
            deformed_norm=res.deformed_norm,
            support=f"[{lo!r},{hi!r}]",
            evaluations=res.evaluations,
            flags="|".join(flags),
        )
    )
    return EXIT_NOT_CONVERGED if res.divergent else EXIT_OK


def cmd_sweep(args, svg_only=False) -> int:
    try:
        spec = sweep_spec_from_args(args, svg_only)
    except ConfigError as exc:
        print(f"qkl {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    t0 = time.perf_counter()
    rows = run_sweep(spec)
    log.info("sweep: %d rows in %.2f s with %d worker(s)", len(rows), time.perf_counter() - t0, spec.workers)
    try:
        if spec.csv_path:
            write_csv(rows, spec.csv_path)
            log.info("wrote %s", spec.csv_path)
        if spec.svg_path:
            write_svg_chart(rows, spec.svg_path)
            log.info("wrote %s", spec.svg_path)
    except OSError as exc:
        print(f"qkl {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE

    any_failed = False
    for name in sorted(spec.models):
        mine = [r for r in rows if r.model == name]
        finite = [r.kl for r in mine if math.isfinite(r.kl)]
        counts = {}
        for r in mine:
            for f in r.flags:
                counts[f] = counts.get(f, 0) + 1
        any_failed |= NOT_CONVERGED in counts
        print(
            _record(
                model=name,
                rows=len(mine),
                beta_min=mine[0].beta,
                beta_max=mine[-1].beta,
                kl_min=min(finite) if finite else math.nan,
                kl_max=max(finite) if finite else math.nan,
                flags=",".join(f"{k}:{counts[k]}" for k in sorted(counts)),
            )
        )
    return EXIT_NOT_CONVERGED if any_failed else EXIT_OK


def cmd_verify(args) -> int:
    from .checks import FAULTS, run_checks

    if args.inject_fault is not None and args.inject_fault not in FAULTS:
        print(f"qkl verify: unknown fault {args.inject_fault!r}; available: {', '.join(FAULTS)}", file=sys.stderr)
        return EXIT_USAGE

    def report(res):
        status = "pass" if res.passed else "FAIL"
        print(f"check={res.name} status={status} seconds={res.seconds:.2f} detail={json.dumps(res.detail)}", flush=True)

    t0 = time.perf_counter()
    results = run_checks(args.level, args.inject_fault, report)
    failed = [r.name for r in results if not r.passed]
    print(
        _record(
            level=args.level,
            checks=len(results),
            failed=len(failed),
            seconds=round(time.perf_counter() - t0, 2),
        )
    )
    if failed:
        log.error("failed invariants: %s", ", ".join(failed))
        return EXIT_INVARIANT
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.ERROR if args.quiet else (logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)]
    logging.basicConfig(level=level, format="qkl: %(levelname)s: %(message)s", stream=sys.stderr, force=True)
    if args.command == "kl":
        return cmd_kl(args)
    if args.command in ("sweep", "figure"):
        return cmd_sweep(args, svg_only=args.command == "figure")
    return cmd_verify(args)


if __name__ == "__main__":
    sys.exit(main())
