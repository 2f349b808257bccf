"""Limiting expectations and covariances from derivatives of the free energy."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import SurfaceError
from .geometry import CriticalPoint, OffSurface, SurfacePoint, classify
from .model import DEFAULT_TOL, BetaLike, ModelSpec, ToleranceConfig, as_beta, find_maximizers

__all__ = [
    "ObservableReport",
    "DivergenceProbe",
    "first_derivatives",
    "second_derivatives",
    "jump_sizes",
    "observables",
    "divergence_probe",
]


@dataclass(frozen=True)
class ObservableReport:
    first: tuple[tuple[float, float, float], ...]
    second: Optional[np.ndarray]
    maximizer: float
    on_surface: bool


@dataclass(frozen=True)
class DivergenceProbe:
    distances: np.ndarray
    d2_beta1: np.ndarray
    loglog_slope: float


def _powers(u: float, spec: ModelSpec) -> tuple[float, float, float]:
    return (u, u ** spec.p, u ** spec.q)


def first_derivatives(beta: BetaLike, spec: ModelSpec, tol: ToleranceConfig = DEFAULT_TOL,
                      strict: bool = True) -> tuple[tuple[float, float, float], ...]:
    """Gradient of the limiting free energy, one triple per global maximizer.

    Off the transition surface the tuple has a single entry
    ``(u*, u*^p, u*^q)``; on it there is one entry per coexisting branch,
    ordered by u. ``strict=False`` permits negative beta2/beta3, where the
    triples are still the stationary-point calculus but no longer proven
    limits of expectations.
    """
    beta = as_beta(beta)
    if strict:
        beta.require_attraction()
    ms = find_maximizers(beta, spec, tol)
    return tuple(_powers(m.u, spec) for m in ms.global_maxima)


def _hessian(u: float, d2: float, spec: ModelSpec) -> np.ndarray:
    p, q = spec.p, spec.q
    grad = np.array([1.0, p * u ** (p - 1), q * u ** (q - 1)])
    # each entry is -c_ij / l''(u*), and c_ij = grad_i * grad_j
    return -np.outer(grad, grad) / d2


def second_derivatives(beta: BetaLike, spec: ModelSpec, tol: ToleranceConfig = DEFAULT_TOL,
                       strict: bool = True) -> np.ndarray:
    """Symmetric 3x3 Hessian of the limiting free energy off S and C3."""
    beta = as_beta(beta)
    if strict:
        beta.require_attraction()
    phase = classify(beta, spec, tol)
    if not isinstance(phase, OffSurface):
        raise SurfaceError(
            f"{type(phase).__name__} at beta={tuple(beta)}: second derivatives diverge or jump"
        )
    best = find_maximizers(beta, spec, tol).best
    if best.second_derivative >= 0:
        raise SurfaceError(f"l''(u*) = {best.second_derivative} is not negative")
    return _hessian(best.u, best.second_derivative, spec)


def jump_sizes(point: SurfacePoint, spec: ModelSpec) -> tuple[float, float, float]:
    lo, hi = _powers(point.u_low, spec), _powers(point.u_high, spec)
    return tuple(h - l for h, l in zip(hi, lo))


def observables(beta: BetaLike, spec: ModelSpec, tol: ToleranceConfig = DEFAULT_TOL,
                strict: bool = True) -> ObservableReport:
    first = first_derivatives(beta, spec, tol, strict)
    ms = find_maximizers(beta, spec, tol)
    try:
        second = second_derivatives(beta, spec, tol, strict)
    except SurfaceError:
        second = None
    return ObservableReport(first, second, ms.u_star, len(first) > 1 or second is None)


def divergence_probe(corner: CriticalPoint, spec: ModelSpec,
                     distances: Optional[Sequence[float]] = None,
                     direction: Sequence[float] = (1.0, 0.0, 0.0),
                     tol: ToleranceConfig = DEFAULT_TOL) -> DivergenceProbe:
    """d^2 psi / d beta1^2 along a straight path into a critical point.

    The default path leaves the corner towards larger beta1, which stays
    outside the V-region and so off the surface. Returns the sampled
    values and the fitted slope of log(value) against log(distance).
    """
    if distances is None:
        distances = np.geomspace(1e-1, 1.1e-6, 30)
    d = np.asarray(distances, dtype=float)
    unit = np.asarray(direction, dtype=float)
    unit = unit / np.linalg.norm(unit)
    base = np.array(corner.beta)
    vals = np.array([
        second_derivatives(tuple(base + t * unit), spec, tol, strict=False)[0, 0] for t in d
    ])
    slope = float(np.polyfit(np.log(d), np.log(np.abs(vals)), 1)[0])
    return DivergenceProbe(d, vals, slope)

