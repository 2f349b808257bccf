"""Phase geometry: critical points, V-regions, the transition surface.

Every curve is found by bisection on a branch where the relevant function is
monotone: beta3(u0) on [(p-1)/p, 1), m and n on each side of u0, and the gap
between the two local maxima as a function of beta2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .errors import DomainError, ErgmPhaseError, NumericalFailure
from .model import (
    DEFAULT_TOL,
    BetaLike,
    ModelSpec,
    ToleranceConfig,
    _exp,
    _root_span,
    as_beta,
    bisect,
    curvature_factor,
    dl_x,
    eval_l,
    expand_bracket,
    find_maximizers,
    inflection_center_logit,
    l_x,
    logit,
    sigmoid,
    softplus,
)

__all__ = [
    "CriticalPoint",
    "VRegion",
    "SurfacePoint",
    "SurfaceTrace",
    "OffSurface",
    "OnSurface",
    "Critical",
    "critical_parameters",
    "u0_from_beta3",
    "corner_point",
    "critical_curve",
    "inflection_points",
    "v_region",
    "transition_beta2",
    "trace_surface",
    "universality_gap",
    "classify",
    "ON_SURFACE_TOL",
    "CRITICAL_TOL",
]

ON_SURFACE_TOL = 1e-7
CRITICAL_TOL = 1e-6


@dataclass(frozen=True)
class CriticalPoint:
    u0: float
    beta1_c: float
    beta2_c: float
    beta3: float

    @property
    def beta(self):
        return (self.beta1_c, self.beta2_c, self.beta3)


@dataclass(frozen=True)
class VRegion:
    """Wedge at fixed beta1, beta3 where l has two local maximizers.

    ``a`` and ``b`` solve n(u) = -beta1 on either side of u0; they are the
    inflection points u1 at ``upper`` and u2 at ``lower`` respectively.
    """

    beta1: float
    beta3: float
    lower: float
    upper: float
    a: float
    b: float
    corner: CriticalPoint


@dataclass(frozen=True)
class SurfacePoint:
    beta1: float
    beta2: float
    beta3: float
    u_low: float
    u_high: float
    value_low: float
    value_high: float
    jumps: tuple[float, float, float]

    @property
    def admissible(self) -> bool:
        """True inside the region beta2, beta3 >= 0 where the theory applies."""
        return self.beta2 >= 0 and self.beta3 >= 0


@dataclass
class SurfaceTrace:
    points: list[SurfacePoint] = field(default_factory=list)
    failures: list[tuple[float, float, str]] = field(default_factory=list)


@dataclass(frozen=True)
class OffSurface:
    u_star: float


@dataclass(frozen=True)
class OnSurface:
    u_low: float
    u_high: float
    r: float


@dataclass(frozen=True)
class Critical:
    u0: float


# ---------------------------------------------------------------------------
# closed forms


def critical_parameters(u: float, spec: ModelSpec) -> tuple[float, float, float]:
    """(beta1, beta2, beta3) of the critical point whose merged maximizer is ``u``."""
    p, q = spec.p, spec.q
    v = 1.0 - u
    b1 = (0.5 * math.log(u / v) - 1.0 / (2 * (p - 1) * v)
          + (p * u - (p - 1)) / (2 * (p - 1) * (q - 1) * v * v))
    b2 = (q * u - (q - 1)) / (2 * p * (p - 1) * (p - q) * u ** (p - 1) * v * v)
    b3 = (p * u - (p - 1)) / (2 * q * (q - 1) * (q - p) * u ** (q - 1) * v * v)
    return b1, b2, b3


def m_curve_x(x: float, beta3: float, spec: ModelSpec) -> float:
    """m at u = sigmoid(x): the beta2 for which u is an inflection point."""
    p, q = spec.p, spec.q
    return (0.5 * _exp((p - 1) * softplus(-x) + softplus(x))
            - q * (q - 1) * beta3 * math.exp(-(q - p) * softplus(-x))) / (p * (p - 1))


def n_curve_x(x: float, beta3: float, spec: ModelSpec) -> float:
    """n at u = sigmoid(x): l'(u) - beta1 when u is an inflection point."""
    p, q = spec.p, spec.q
    return (_exp(softplus(x)) / (2 * (p - 1)) - 0.5 * x
            - q * (q - p) * beta3 * math.exp(-(q - 1) * softplus(-x)) / (p - 1))


def m_curve(u: float, beta3: float, spec: ModelSpec) -> float:
    return m_curve_x(logit(u), beta3, spec)


def n_curve(u: float, beta3: float, spec: ModelSpec) -> float:
    return n_curve_x(logit(u), beta3, spec)


def _require_nonneg_beta3(beta3: float) -> float:
    beta3 = float(beta3)
    if not math.isfinite(beta3) or beta3 < 0:
        raise DomainError(f"phase geometry needs a finite beta3 >= 0, got {beta3}")
    return beta3


# ---------------------------------------------------------------------------
# critical points


def u0_from_beta3(beta3: float, spec: ModelSpec, tol: ToleranceConfig = DEFAULT_TOL) -> float:
    beta3 = _require_nonneg_beta3(beta3)
    if beta3 == 0:
        return (spec.p - 1) / spec.p
    return sigmoid(inflection_center_logit(beta3, spec.p, spec.q, tol))


def _triple_root_scale(u: float) -> float:
    return 1.0 + 1.0 / (u * (1.0 - u)) ** 3


def corner_point(beta3: float, spec: ModelSpec, tol: ToleranceConfig = DEFAULT_TOL) -> CriticalPoint:
    """Corner (beta1_c, beta2_c) of the V-region at this beta3."""
    beta3 = _require_nonneg_beta3(beta3)
    u0 = u0_from_beta3(beta3, spec, tol)
    b1, b2, _ = critical_parameters(u0, spec)
    cp = CriticalPoint(u0, b1, b2, beta3)
    scale = _triple_root_scale(u0)
    for order in (1, 2, 3):
        r = eval_l(u0, cp.beta, spec, order)
        if abs(r) > 1e-7 * scale:
            raise NumericalFailure(
                f"corner at beta3={beta3}: l^({order})(u0) = {r} is not ~0"
            )
    return cp


def critical_curve(spec: ModelSpec, n_samples: int = 101) -> list[CriticalPoint]:
    """Sample C3 over u in [(p-1)/p, (q-1)/q] where beta2, beta3 >= 0."""
    if n_samples < 2:
        raise DomainError("n_samples must be at least 2")
    lo, hi = (spec.p - 1) / spec.p, (spec.q - 1) / spec.q
    out = []
    for k in range(n_samples):
        u = hi if k == n_samples - 1 else lo + (hi - lo) * k / (n_samples - 1)
        out.append(CriticalPoint(u, *critical_parameters(u, spec)))
    return out


# ---------------------------------------------------------------------------
# inflection points and V-region


def inflection_points(beta2: float, beta3: float, spec: ModelSpec,
                      tol: ToleranceConfig = DEFAULT_TOL) -> Optional[tuple[float, float]]:
    """Zeros u1 < u0 < u2 of l''; None when l'' <= 0 on all of [0, 1]."""
    beta3 = _require_nonneg_beta3(beta3)
    x0 = inflection_center_logit(beta3, spec.p, spec.q, tol)
    b2c = m_curve_x(x0, beta3, spec)
    if tol.ties(beta2, b2c):
        u0 = sigmoid(x0)
        return u0, u0
    if beta2 < b2c:
        return None
    g = lambda x: m_curve_x(x, beta3, spec) - beta2
    lo = expand_bracket(g, x0, -1.0, want_positive=True)
    hi = expand_bracket(g, x0, +1.0, want_positive=True)
    return sigmoid(bisect(g, lo, x0, tol)), sigmoid(bisect(g, x0, hi, tol))


def _v_region_logits(beta1, beta3, spec, corner, x0, tol):
    g = lambda x: n_curve_x(x, beta3, spec) + beta1
    lo = expand_bracket(g, x0, -1.0, want_positive=True)
    hi = expand_bracket(g, x0, +1.0, want_positive=True)
    return bisect(g, lo, x0, tol), bisect(g, x0, hi, tol)


def v_region(beta1: float, beta3: float, spec: ModelSpec,
             tol: ToleranceConfig = DEFAULT_TOL) -> Optional[VRegion]:
    beta3 = _require_nonneg_beta3(beta3)
    corner = corner_point(beta3, spec, tol)
    if beta1 >= corner.beta1_c:
        return None
    x0 = inflection_center_logit(beta3, spec.p, spec.q, tol)
    xa, xb = _v_region_logits(beta1, beta3, spec, corner, x0, tol)
    upper = m_curve_x(xa, beta3, spec)
    lower = m_curve_x(xb, beta3, spec)
    return VRegion(beta1, beta3, lower, upper, sigmoid(xa), sigmoid(xb), corner)


# ---------------------------------------------------------------------------
# transition surface


class _BranchSolver:
    """Left and right local maximizers of l at fixed beta1, beta3 as beta2 varies."""

    def __init__(self, beta1, beta3, spec, tol):
        self.b1, self.b3 = beta1, beta3
        self.p, self.q = spec.p, spec.q
        self.tol = tol
        self.x0 = inflection_center_logit(beta3, self.p, self.q, tol)

    def branches(self, b2):
        b1, b3, p, q, tol = self.b1, self.b3, self.p, self.q, self.tol
        F = lambda x: curvature_factor(x, b2, b3, p, q)
        if F(self.x0) <= 0:
            raise NumericalFailure(f"beta2={b2} is below the corner; no V-region")
        x1 = bisect(F, expand_bracket(F, self.x0, -1.0, want_positive=False), self.x0, tol)
        x2 = bisect(F, self.x0, expand_bracket(F, self.x0, +1.0, want_positive=False), tol)
        span = _root_span(b1, b2, b3, p, q)
        g = lambda x: dl_x(x, b1, b2, b3, p, q)
        left = bisect(g, -span, x1, tol) if g(x1) < 0 else None
        right = bisect(g, x2, span, tol) if g(x2) > 0 else None
        return left, right

    def gap(self, b2):
        """l(right max) - l(left max); increasing in beta2."""
        left, right = self.branches(b2)
        if left is None:
            return math.inf
        if right is None:
            return -math.inf
        args = (self.b1, b2, self.b3, self.p, self.q)
        return l_x(right, *args) - l_x(left, *args)


def transition_beta2(beta1: float, beta3: float, spec: ModelSpec,
                     tol: ToleranceConfig = DEFAULT_TOL) -> Optional[SurfacePoint]:
    """The beta2 = r(beta1) at which both local maxima of l are global."""
    vr = v_region(beta1, beta3, spec, tol)
    if vr is None:
        return None
    solver = _BranchSolver(beta1, vr.beta3, spec, tol)
    width = vr.upper - vr.lower
    eps = 1e-9 * min(width, 1.0)
    lo, top = vr.lower + eps, vr.upper - eps
    if not solver.gap(lo) < 0:
        raise NumericalFailure(f"gap at the lower V-bound beta2={lo} is not negative")
    # the upper bound diverges as beta1 -> -inf; walk up from lo instead
    step, hi = 1.0, min(top, lo + 1.0)
    while not solver.gap(hi) > 0:
        if hi >= top:
            raise NumericalFailure(f"gap at the upper V-bound beta2={top} is not positive")
        step *= 2.0
        hi = min(top, lo + step)
    r = bisect(solver.gap, lo, hi, tol)
    left, right = solver.branches(r)
    if left is None or right is None:
        raise NumericalFailure(f"lost a maximizer at beta2={r}")
    args = (beta1, r, vr.beta3, spec.p, spec.q)
    ul, uh = sigmoid(left), sigmoid(right)
    jumps = (uh - ul, uh ** spec.p - ul ** spec.p, uh ** spec.q - ul ** spec.q)
    return SurfacePoint(beta1, r, vr.beta3, ul, uh, l_x(left, *args), l_x(right, *args), jumps)


def trace_surface(beta3_values: Iterable[float], beta1_grid: Iterable[float], spec: ModelSpec,
                  constrain_nonneg: bool = False,
                  tol: ToleranceConfig = DEFAULT_TOL) -> SurfaceTrace:
    """Solve r(beta1) on every (beta3, beta1) grid node, sorted by (beta3, beta1).

    Nodes right of the corner (no V-region) are skipped silently; solver
    failures are recorded in ``failures`` and do not stop the sweep.
    """
    trace = SurfaceTrace()
    beta1_grid = sorted(float(b) for b in beta1_grid)
    for b3 in sorted(float(b) for b in beta3_values):
        for b1 in beta1_grid:
            try:
                pt = transition_beta2(b1, b3, spec, tol)
            except ErgmPhaseError as exc:
                trace.failures.append((b3, b1, f"{exc.kind}: {exc}"))
                continue
            if pt is None or (constrain_nonneg and pt.beta2 < 0):
                continue
            trace.points.append(pt)
    return trace


def universality_gap(beta1: float, beta3: float, spec: ModelSpec,
                     tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """Distance |r(beta1) + beta1 + beta3| to the asymptotic plane."""
    pt = transition_beta2(beta1, beta3, spec, tol)
    if pt is None:
        raise DomainError(f"beta1={beta1} is not left of the corner at beta3={beta3}")
    return abs(pt.beta2 + beta1 + beta3)


def classify(beta: BetaLike, spec: ModelSpec, tol: ToleranceConfig = DEFAULT_TOL):
    """Return Critical, OnSurface or OffSurface for the parameter point."""
    b1, b2, b3 = as_beta(beta)
    b3 = _require_nonneg_beta3(b3)
    corner = corner_point(b3, spec, tol)
    if math.hypot(b1 - corner.beta1_c, b2 - corner.beta2_c) <= CRITICAL_TOL:
        return Critical(corner.u0)
    if b1 < corner.beta1_c:
        pt = transition_beta2(b1, b3, spec, tol)
        if abs(b2 - pt.beta2) <= ON_SURFACE_TOL:
            return OnSurface(pt.u_low, pt.u_high, pt.beta2)
    return OffSurface(find_maximizers((b1, b2, b3), spec, tol).u_star)

