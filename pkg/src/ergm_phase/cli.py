"""Command-line front end: every subcommand emits one CSV or JSON dataset.

Exit codes: 0 ok, 2 usage, 3 domain/hypothesis violation, 4 numerical
failure, 5 resource budget. Errors are written to stderr as a JSON object
``{"error": kind, "message": text}``.

Output goes to ``--out PATH`` or standard output. When ``--out`` is a
relative path, or absent while ``ERGM_PHASE_OUTPUT_DIR`` is set, the file
is placed in that directory (``<subcommand>.<format>`` by default).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from ._version import __version__
from .errors import DomainError, ErgmPhaseError, UnknownFigure
from .finite import SubgraphSpec, default_subgraph, exact_expectation, exact_psi_n
from .geometry import (
    Critical,
    OnSurface,
    classify,
    corner_point,
    critical_curve,
    trace_surface,
    transition_beta2,
    v_region,
)
from .io import format_csv, format_json
from .model import ModelSpec, ToleranceConfig, as_beta, eval_l, find_maximizers, free_energy
from .observables import first_derivatives, second_derivatives
from .sampler import ChainConfig, run_chain

OUTPUT_DIR_ENV = "ERGM_PHASE_OUTPUT_DIR"

# beta2 values of the l(u) profiles, all at beta1 = beta3 = 2
FIGURE_BETA2 = {4: -4.0, 5: -2.5, 6: -3.24, 7: -2.7, 8: -2.95}

_VALUE_FLAGS = {"--beta", "--beta1", "--beta3", "--beta1-min", "--beta1-max"}


class UsageError(Exception):
    exit_code = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


class Dataset:
    """Column table plus an optional JSON-only extra record."""

    def __init__(self, columns: Sequence[str], rows: list[Sequence[Any]], extra: dict | None = None):
        self.columns = tuple(columns)
        self.rows = rows
        self.extra = extra or {}

    def render(self, fmt: str, manifest: dict) -> str:
        if fmt == "csv":
            return format_csv(self.columns, self.rows, manifest)
        record = {"columns": list(self.columns),
                  "rows": [dict(zip(self.columns, r)) for r in self.rows]}
        record.update(self.extra)
        return format_json(record, manifest)


# ---------------------------------------------------------------------------
# argument parsing


def _beta_arg(text: str):
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected b1,b2,b3, got {text!r}")
    try:
        return tuple(float(x) for x in parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _subgraph_arg(text: str) -> SubgraphSpec:
    try:
        return SubgraphSpec.parse(text)
    except DomainError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _join_negative_values(argv: Sequence[str]) -> list[str]:
    """Turn ``--beta -1,0,0`` into ``--beta=-1,0,0`` so argparse accepts it."""
    out: list[str] = []
    k = 0
    while k < len(argv):
        tok = argv[k]
        if tok in _VALUE_FLAGS and k + 1 < len(argv) and argv[k + 1].startswith("-"):
            out.append(f"{tok}={argv[k + 1]}")
            k += 2
            continue
        out.append(tok)
        k += 1
    return out


def _common(sp: argparse.ArgumentParser, p_default: int = 3, q_default: int = 5):
    sp.add_argument("--p", type=int, default=p_default, help="edge count of H2")
    sp.add_argument("--q", type=int, default=q_default, help="edge count of H3")
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.add_argument("--out", default=None, help="output path (default: stdout)")
    sp.add_argument("--tie-tol", type=float, default=ToleranceConfig.tie_tol)
    sp.add_argument("--bracketing", choices=("structural", "grid"), default="structural")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ergm-phase", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("free-energy", help="limiting free energy and maximizers")
    sp.add_argument("--beta", type=_beta_arg, required=True)
    _common(sp)

    sp = sub.add_parser("figure", help="dataset behind one of the eight phase-diagram figures")
    sp.add_argument("--id", type=int, required=True)
    sp.add_argument("--resolution", type=int, default=None)
    sp.add_argument("--on-curve", action="store_true",
                    help="figures 6-8: use the exact curve beta2 instead of the rounded one")
    _common(sp)

    sp = sub.add_parser("surface", help="transition curves r(beta1) over a grid")
    sp.add_argument("--beta3", type=_float_list, default=[0.0, 1.0, 2.0])
    sp.add_argument("--beta1", type=_float_list, default=None, help="explicit beta1 grid")
    sp.add_argument("--beta1-min", type=float, default=-4.0)
    sp.add_argument("--beta1-max", type=float, default=5.0)
    sp.add_argument("--num", type=int, default=50)
    sp.add_argument("--nonneg", action="store_true", help="drop points with beta2 < 0")
    _common(sp)

    sp = sub.add_parser("critical-curve", help="corner points along the critical curve")
    sp.add_argument("--samples", type=int, default=101)
    _common(sp)

    sp = sub.add_parser("classify", help="OffSurface / OnSurface / Critical")
    sp.add_argument("--beta", type=_beta_arg, required=True)
    _common(sp)

    sp = sub.add_parser("observables", help="first and second derivatives of the free energy")
    sp.add_argument("--beta", type=_beta_arg, required=True)
    sp.add_argument("--lenient", action="store_true",
                    help="allow negative beta2/beta3 (stationary-point calculus only)")
    _common(sp)

    sp = sub.add_parser("universality", help="distance of r(beta1) from the asymptotic plane")
    sp.add_argument("--beta1", type=_float_list, required=True)
    sp.add_argument("--beta3", type=float, required=True)
    _common(sp)

    sp = sub.add_parser("exact", help="finite-n free energy by enumerating all graphs")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--beta", type=_beta_arg, required=True)
    sp.add_argument("--h2", type=_subgraph_arg, default=None)
    sp.add_argument("--h3", type=_subgraph_arg, default=None)
    _common(sp)

    sp = sub.add_parser("sample", help="Gibbs sampler trace")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--beta", type=_beta_arg, required=True)
    sp.add_argument("--h2", type=_subgraph_arg, default=None)
    sp.add_argument("--h3", type=_subgraph_arg, default=None)
    sp.add_argument("--sweeps", type=int, default=1000)
    sp.add_argument("--burn-in", type=int, default=0)
    sp.add_argument("--thin", type=int, default=1)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--init", choices=("empty", "full", "random"), default="empty")
    _common(sp)
    return parser


# ---------------------------------------------------------------------------
# subcommands


def _tol(args) -> ToleranceConfig:
    return ToleranceConfig(tie_tol=args.tie_tol, bracketing=args.bracketing)


def _spec(args) -> ModelSpec:
    return ModelSpec(args.p, args.q)


def _patterns(args) -> tuple[SubgraphSpec, SubgraphSpec]:
    h2 = args.h2 or default_subgraph(args.p)
    h3 = args.h3 or default_subgraph(args.q)
    return h2, h3


def cmd_free_energy(args) -> Dataset:
    psi, ms = free_energy(args.beta, _spec(args), _tol(args))
    rows = [(psi, m.u, m.value, m.second_derivative, k in ms.global_indices)
            for k, m in enumerate(ms.local_maxima)]
    return Dataset(("psi", "u", "l", "d2l", "global"), rows, {"psi": psi, "u_star": ms.u_star})


def _curve_beta2(fig_id: int, spec: ModelSpec, tol: ToleranceConfig) -> float | None:
    """Exact beta2 of the curve a profile figure sits on (None for 4 and 5)."""
    if fig_id in (6, 7):
        vr = v_region(2.0, 2.0, spec, tol)
        return vr.lower if fig_id == 6 else vr.upper
    if fig_id == 8:
        return transition_beta2(2.0, 2.0, spec, tol).beta2
    return None


def _profile(fig_id: int, spec: ModelSpec, tol: ToleranceConfig, resolution: int,
             on_curve: bool) -> Dataset:
    curve = _curve_beta2(fig_id, spec, tol)
    beta2 = curve if on_curve and curve is not None else FIGURE_BETA2[fig_id]
    beta = (2.0, beta2, 2.0)
    ms = find_maximizers(beta, spec, tol)
    u = np.linspace(0.0, 1.0, resolution + 2)[1:-1]
    rows = [(float(x), eval_l(x, beta, spec), eval_l(x, beta, spec, 1), False) for x in u]
    rows += [(m.u, m.value, eval_l(m.u, beta, spec, 1), True) for m in ms.local_maxima]
    rows.sort(key=lambda r: r[0])
    extra = {"beta": beta, "nominal_beta2": FIGURE_BETA2[fig_id], "curve_beta2": curve,
             "local_maxima": [m.u for m in ms.local_maxima],
             "global_maxima": [m.u for m in ms.global_maxima]}
    return Dataset(("u", "l", "dl", "local_max"), rows, extra)


def figure_dataset(fig_id: int, spec: ModelSpec, tol: ToleranceConfig,
                   resolution: int | None = None, on_curve: bool = False) -> Dataset:
    """Dataset behind figure ``fig_id``.

    Profiles 4-8 use the rounded beta2 printed with each figure unless
    ``on_curve`` snaps 6, 7 and 8 to the exact bounding or transition curve.
    """
    if fig_id == 1:
        pts = critical_curve(spec, resolution or 101)
        return Dataset(("u0", "beta1", "beta2", "beta3"),
                       [(c.u0, c.beta1_c, c.beta2_c, c.beta3) for c in pts])
    if fig_id == 2:
        corner = corner_point(2.0, spec, tol)
        rows = []
        for b1 in np.linspace(-2.0, 5.0, resolution or 50):
            if b1 >= corner.beta1_c:
                continue
            vr = v_region(float(b1), 2.0, spec, tol)
            pt = transition_beta2(float(b1), 2.0, spec, tol)
            rows.append((float(b1), vr.lower, vr.upper, pt.beta2))
        extra = {"corner": list(corner.beta), "u0": corner.u0}
        return Dataset(("beta1", "lower", "upper", "r"), rows, extra)
    if fig_id == 3:
        grid = np.linspace(-4.0, 5.0, resolution or 50)
        return _surface_dataset(trace_surface([0.0, 1.0, 2.0], grid, spec, tol=tol))
    if fig_id in FIGURE_BETA2:
        return _profile(fig_id, spec, tol, resolution or 2000, on_curve)
    raise UnknownFigure(f"unknown figure id {fig_id}; valid ids are 1..8")


def cmd_figure(args) -> Dataset:
    return figure_dataset(args.id, _spec(args), _tol(args), args.resolution, args.on_curve)


_SURFACE_COLUMNS = ("beta3", "beta1", "beta2", "u_low", "u_high", "l_low", "l_high",
                    "jump_t1", "jump_t2", "jump_t3")


def _surface_dataset(trace) -> Dataset:
    rows = [(pt.beta3, pt.beta1, pt.beta2, pt.u_low, pt.u_high, pt.value_low,
             pt.value_high, *pt.jumps) for pt in trace.points]
    failures = [{"beta3": b3, "beta1": b1, "error": msg} for b3, b1, msg in trace.failures]
    for f in failures:
        print(json.dumps({"warning": "surface point failed", **f}), file=sys.stderr)
    return Dataset(_SURFACE_COLUMNS, rows, {"failures": failures})


def cmd_surface(args) -> Dataset:
    grid = args.beta1 if args.beta1 is not None else np.linspace(
        args.beta1_min, args.beta1_max, args.num)
    if any(b < 0 for b in args.beta3):
        raise DomainError("beta3 values must be >= 0")
    return _surface_dataset(trace_surface(args.beta3, grid, _spec(args), args.nonneg, _tol(args)))


def cmd_critical_curve(args) -> Dataset:
    return figure_dataset(1, _spec(args), _tol(args), args.samples)


def cmd_classify(args) -> Dataset:
    phase = classify(args.beta, _spec(args), _tol(args))
    b1, b2, b3 = args.beta
    nan = math.nan
    if isinstance(phase, Critical):
        row = ("Critical", phase.u0, phase.u0, nan)
    elif isinstance(phase, OnSurface):
        row = ("OnSurface", phase.u_low, phase.u_high, phase.r)
    else:
        row = ("OffSurface", phase.u_star, phase.u_star, nan)
    return Dataset(("beta1", "beta2", "beta3", "phase", "u_low", "u_high", "r"),
                   [(b1, b2, b3, *row)])


def cmd_observables(args) -> Dataset:
    spec, tol, strict = _spec(args), _tol(args), not args.lenient
    first = first_derivatives(args.beta, spec, tol, strict)
    rows = [("first", k, *trip) for k, trip in enumerate(first)]
    extra: dict[str, Any] = {"first": [list(t) for t in first]}
    try:
        hess = second_derivatives(args.beta, spec, tol, strict)
    except ErgmPhaseError as exc:
        if exc.kind != "SurfaceError":
            raise
        extra["second"] = None
        extra["second_error"] = str(exc)
    else:
        rows += [("second", k, *hess[k]) for k in range(3)]
        extra["second"] = hess
    return Dataset(("order", "row", "d_beta1", "d_beta2", "d_beta3"), rows, extra)


def cmd_universality(args) -> Dataset:
    spec, tol = _spec(args), _tol(args)
    if args.beta3 < 0:
        raise DomainError("beta3 must be >= 0")
    rows = []
    for b1 in args.beta1:
        pt = transition_beta2(b1, args.beta3, spec, tol)
        if pt is None:
            raise DomainError(f"beta1={b1} is not left of the corner at beta3={args.beta3}")
        rows.append((b1, args.beta3, pt.beta2, abs(pt.beta2 + b1 + args.beta3)))
    return Dataset(("beta1", "beta3", "r", "gap"), rows)


def cmd_exact(args) -> Dataset:
    h2, h3 = _patterns(args)
    psi = exact_psi_n(args.n, args.beta, h2, h3)
    means = [exact_expectation(args.n, args.beta, h, h2, h3)
             for h in (SubgraphSpec.edge(), h2, h3)]
    return Dataset(("n", "psi_n", "mean_t_edge", "mean_t_h2", "mean_t_h3"),
                   [(args.n, psi, *means)])


def cmd_sample(args) -> Dataset:
    h2, h3 = _patterns(args)
    config = ChainConfig(args.n, as_beta(args.beta), h2, h3, args.sweeps, args.burn_in,
                         args.thin, args.seed, args.init)
    trace = run_chain(config)
    rows = [(int(s), *map(float, r)) for s, r in zip(trace.sweep_index, trace.samples)]
    extra = {"flip_rate": trace.flip_rate, "chain": config.manifest()}
    return Dataset(("sweep", "t_edge", "t_h2", "t_h3"), rows, extra)


COMMANDS: dict[str, Callable[[argparse.Namespace], Dataset]] = {
    "free-energy": cmd_free_energy,
    "figure": cmd_figure,
    "surface": cmd_surface,
    "critical-curve": cmd_critical_curve,
    "classify": cmd_classify,
    "observables": cmd_observables,
    "universality": cmd_universality,
    "exact": cmd_exact,
    "sample": cmd_sample,
}


# ---------------------------------------------------------------------------
# driver


def _manifest_value(v: Any) -> Any:
    if isinstance(v, SubgraphSpec):
        return str(v)
    if isinstance(v, tuple):
        return ",".join(repr(float(x)) for x in v)
    if isinstance(v, list):
        return ",".join(repr(float(x)) for x in v)
    return v


def build_manifest(args: argparse.Namespace) -> dict[str, Any]:
    manifest: dict[str, Any] = {"subcommand": args.command}
    skip = {"command", "out", "format", "tie_tol", "bracketing"}
    for key in sorted(vars(args)):
        if key not in skip:
            manifest[key] = _manifest_value(getattr(args, key))
    if args.command in ("exact", "sample"):
        h2, h3 = _patterns(args)
        manifest["h2"], manifest["h3"] = str(h2), str(h3)
    tol = _tol(args)
    manifest.update({
        "grid_size": tol.grid_size, "root_tol": tol.root_tol, "tie_tol": tol.tie_tol,
        "max_iter": tol.max_iter, "bracketing": tol.bracketing,
    })
    if args.command == "sample":
        manifest["rng"] = "numpy.random.PCG64"
    manifest["format"] = args.format
    manifest["version"] = __version__
    return manifest


def _output_path(args) -> Path | None:
    base = os.environ.get(OUTPUT_DIR_ENV)
    if args.out is not None:
        path = Path(args.out)
        return path if path.is_absolute() or not base else Path(base) / path
    if base:
        return Path(base) / f"{args.command}.{args.format}"
    return None


def _fail(kind: str, message: str, code: int) -> int:
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)
    return code


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(_join_negative_values(argv))
    except UsageError as exc:
        return _fail("UsageError", str(exc), 2)
    try:
        text = COMMANDS[args.command](args).render(args.format, build_manifest(args))
    except ErgmPhaseError as exc:
        return _fail(exc.kind, str(exc), exc.exit_code)
    path = _output_path(args)
    if path is None:
        sys.stdout.write(text)
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
