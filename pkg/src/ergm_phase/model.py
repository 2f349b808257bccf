"""The scalar variational problem behind the three-parameter edge model.

For edge counts ``(1, p, q)`` the limiting free energy is the supremum over
``u`` in ``[0, 1]`` of::

    l(u) = b1*u + b2*u**p + b3*u**q - u*log(u)/2 - (1-u)*log(1-u)/2

Internally most root solves run in the logit coordinate ``x = log(u/(1-u))``
because maximizers can sit within ``exp(-80)`` of either endpoint, where ``u``
itself no longer resolves them. In that coordinate the entropy derivative is
exactly ``-x/2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence, Union

from scipy import optimize

from .errors import (
    AssumptionViolation,
    DegenerateModel,
    DomainError,
    HypothesisViolation,
    NumericalFailure,
)

__all__ = [
    "BetaPoint",
    "Exponents",
    "LocalMax",
    "MaximizerSet",
    "ModelSpec",
    "ToleranceConfig",
    "DEFAULT_TOL",
    "validate_spec",
    "eval_l",
    "find_maximizers",
    "free_energy",
]

_EXP_MAX = 709.0


@dataclass(frozen=True)
class ToleranceConfig:
    """Numerical knobs shared by every solver.

    ``bracketing`` selects how roots of l' are isolated: ``"structural"``
    splits [0, 1] at the inflection points of l (l' is monotone on each
    piece); ``"grid"`` scans ``grid_size`` logit-spaced points.
    """

    grid_size: int = 4096
    root_tol: float = 1e-13
    tie_tol: float = 1e-9
    max_iter: int = 2000
    bracketing: str = "structural"

    def __post_init__(self):
        if self.bracketing not in ("structural", "grid"):
            raise ValueError(f"unknown bracketing {self.bracketing!r}")
        if self.grid_size < 3:
            raise ValueError("grid_size must be at least 3")

    def ties(self, a: float, b: float) -> bool:
        return abs(a - b) <= self.tie_tol * (1.0 + max(abs(a), abs(b)))


DEFAULT_TOL = ToleranceConfig()


class Exponents(NamedTuple):
    """Unchecked edge-count pair; enough for pure calculus on l."""

    p: int
    q: int


@dataclass(frozen=True)
class ModelSpec:
    """Edge counts of H2 and H3 (H1 is a single edge).

    Construction enforces ``2 <= p < q <= 5p - 1``.
    """

    p: int
    q: int

    def __post_init__(self):
        p, q = self.p, self.q
        if int(p) != p or int(q) != q:
            raise AssumptionViolation(f"edge counts must be integers, got p={p}, q={q}")
        if p < 2:
            raise AssumptionViolation(f"need p >= 2, got p={p}")
        if q < p:
            raise AssumptionViolation(f"need p <= q, got p={p}, q={q}")
        if q == p:
            raise DegenerateModel(
                f"p == q == {p}: the u^p and u^q terms merge, so the model is the "
                "2-parameter one; analyse it with a single coefficient beta2 + beta3"
            )
        if q > 5 * p - 1:
            raise AssumptionViolation(
                f"need q <= 5p - 1, got q={q} > {5 * p - 1} (p={p})"
            )

    @property
    def discriminant(self) -> float:
        """Discriminant of the numerator of f'; non-positive for valid specs."""
        p, q = self.p, self.q
        return q * q + 2 * (1 - 3 * p) * q + (p + 1) ** 2

    @property
    def q_roots(self) -> tuple[float, float]:
        """Zeros in q of the discriminant; a valid q lies between them."""
        p = self.p
        r = 2.0 * math.sqrt(2.0 * (p * p - p))
        return (3 * p - 1) - r, (3 * p - 1) + r

    def swapped(self) -> Exponents:
        return Exponents(self.q, self.p)


def validate_spec(p: int, q: int) -> ModelSpec:
    return ModelSpec(p, q)


class BetaPoint(NamedTuple):
    beta1: float
    beta2: float
    beta3: float

    def check_finite(self) -> "BetaPoint":
        if not all(math.isfinite(b) for b in self):
            raise DomainError(f"beta must be finite, got {tuple(self)}")
        return self

    def require_attraction(self) -> "BetaPoint":
        if self.beta2 < 0 or self.beta3 < 0:
            raise HypothesisViolation(
                "the variational formula for the limiting free energy needs "
                f"beta2 >= 0 and beta3 >= 0, got beta2={self.beta2}, beta3={self.beta3}"
            )
        return self


BetaLike = Union[BetaPoint, Sequence[float]]


def as_beta(beta: BetaLike) -> BetaPoint:
    if isinstance(beta, BetaPoint):
        return beta.check_finite()
    b1, b2, b3 = (float(b) for b in beta)
    return BetaPoint(b1, b2, b3).check_finite()


class LocalMax(NamedTuple):
    u: float
    value: float
    second_derivative: float
    logit: float


@dataclass(frozen=True)
class MaximizerSet:
    """Local maximizers of l sorted by u, plus which of them are global."""

    local_maxima: tuple[LocalMax, ...]
    global_indices: tuple[int, ...]

    @property
    def global_maxima(self) -> tuple[LocalMax, ...]:
        return tuple(self.local_maxima[i] for i in self.global_indices)

    @property
    def is_unique(self) -> bool:
        return len(self.global_indices) == 1

    @property
    def best(self) -> LocalMax:
        return max(self.local_maxima, key=lambda m: m.value)

    @property
    def u_star(self) -> float:
        return self.best.u

    @property
    def value(self) -> float:
        return self.best.value


# ---------------------------------------------------------------------------
# logit-space primitives


def _exp(t: float) -> float:
    return math.exp(t) if t < _EXP_MAX else math.inf


def softplus(x: float) -> float:
    """log(1 + e^x) without overflow."""
    if x > 0:
        return x + math.log1p(math.exp(-x))
    return math.log1p(math.exp(x))


def sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def logit(u: float) -> float:
    return math.log(u) - math.log1p(-u)


def l_x(x: float, b1: float, b2: float, b3: float, p: int, q: int) -> float:
    """l evaluated at u = sigmoid(x)."""
    s, t = sigmoid(x), sigmoid(-x)
    nlog_s, nlog_t = softplus(-x), softplus(x)
    ent = 0.5 * (s * nlog_s + t * nlog_t)
    return b1 * s + b2 * math.exp(-p * nlog_s) + b3 * math.exp(-q * nlog_s) + ent


def dl_x(x: float, b1: float, b2: float, b3: float, p: int, q: int) -> float:
    """l'(u) at u = sigmoid(x)."""
    nlog_s = softplus(-x)
    return (
        b1
        + p * b2 * math.exp(-(p - 1) * nlog_s)
        + q * b3 * math.exp(-(q - 1) * nlog_s)
        - 0.5 * x
    )


def d2l_x(x: float, b1: float, b2: float, b3: float, p: int, q: int) -> float:
    """l''(u) at u = sigmoid(x)."""
    nlog_s, nlog_t = softplus(-x), softplus(x)
    return (
        p * (p - 1) * b2 * math.exp(-(p - 2) * nlog_s)
        + q * (q - 1) * b3 * math.exp(-(q - 2) * nlog_s)
        - 0.5 * _exp(nlog_s + nlog_t)
    )


def bisect(fun, a: float, b: float, tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """Bisection on a sign-changing bracket, mapped onto our error types."""
    try:
        return optimize.bisect(fun, a, b, xtol=tol.root_tol, maxiter=tol.max_iter)
    except ValueError as exc:
        raise NumericalFailure(f"bracket [{a}, {b}] does not straddle a root: {exc}") from exc
    except RuntimeError as exc:
        raise NumericalFailure(f"bisection did not converge on [{a}, {b}]: {exc}") from exc


def expand_bracket(fun, start: float, direction: float, want_positive: bool,
                   limit: float = 1e4) -> float:
    """Walk from ``start`` in doubling steps until ``fun`` has the wanted sign."""
    step = 1.0
    while step < limit:
        x = start + direction * step
        v = fun(x)
        if (v > 0) == want_positive and v != 0:
            return x
        step *= 2.0
    raise NumericalFailure(f"no sign change within {limit} of {start}")


def inflection_center_logit(b3: float, p: int, q: int, tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """Logit of the unique maximizer u0 of l''(u)/u^(p-2), for any real b3.

    u0 solves f(u0) = -2q(q-1)(q-p) b3 where
    f(u) = ((p-1) - p u) / (u^(q-1) (1-u)^2) is strictly decreasing.
    """
    c = 2.0 * q * (q - 1) * (q - p)
    start = logit((p - 1) / p)
    if b3 == 0:
        return start

    def g(x):
        s, t = sigmoid(x), sigmoid(-x)
        head = (p - 1) * t - s  # (p-1) - p u without cancellation near (p-1)/p
        return head * _exp((q - 1) * softplus(-x) + 2 * softplus(x)) + c * b3

    # g decreasing; for b3 > 0 the root is right of start. When |b3| is so
    # small that rounding in g(start) hides its sign, start is the root.
    g0 = g(start)
    if (b3 > 0 and g0 <= 0) or (b3 < 0 and g0 >= 0):
        return start
    if b3 > 0:
        hi = expand_bracket(g, start, +1.0, want_positive=False)
        return bisect(g, start, hi, tol)
    lo = expand_bracket(g, start, -1.0, want_positive=True)
    return bisect(g, lo, start, tol)


def curvature_factor(x: float, b2: float, b3: float, p: int, q: int) -> float:
    """F(u) = l''(u) / u^(p-2); carries the sign of l''."""
    return (
        p * (p - 1) * b2
        + q * (q - 1) * b3 * math.exp(-(q - p) * softplus(-x))
        - 0.5 * _exp((p - 1) * softplus(-x) + softplus(x))
    )


def inflection_logits(b2: float, b3: float, p: int, q: int,
                      tol: ToleranceConfig = DEFAULT_TOL):
    """Return ``(x0, x1, x2)``: logits of u0 and of the two zeros of l''.

    ``x1`` and ``x2`` are None when l'' <= 0 everywhere.
    """
    x0 = inflection_center_logit(b3, p, q, tol)
    F = lambda x: curvature_factor(x, b2, b3, p, q)
    if F(x0) <= 0:
        return x0, None, None
    lo = expand_bracket(F, x0, -1.0, want_positive=False)
    hi = expand_bracket(F, x0, +1.0, want_positive=False)
    return x0, bisect(F, lo, x0, tol), bisect(F, x0, hi, tol)


def _root_span(b1: float, b2: float, b3: float, p: int, q: int) -> float:
    # |l'(x) + x/2| <= B, so every root of l' lies in [-2B, 2B]
    return 2.0 * (abs(b1) + p * abs(b2) + q * abs(b3)) + 2.0


# ---------------------------------------------------------------------------
# public operations


def _specs_pq(spec) -> tuple[int, int]:
    return int(spec.p), int(spec.q)


def eval_l(u: float, beta: BetaLike, spec, order: int = 0) -> float:
    """Evaluate l or one of its first three u-derivatives.

    At u = 0 or 1 the value uses 0*log(0) = 0 and derivatives return the
    signed infinity of their one-sided limit.
    """
    if order not in (0, 1, 2, 3):
        raise DomainError(f"order must be 0..3, got {order}")
    if not (0.0 <= u <= 1.0):
        raise DomainError(f"u must lie in [0, 1], got {u}")
    b1, b2, b3 = as_beta(beta)
    p, q = _specs_pq(spec)

    if u == 0.0 or u == 1.0:
        if order == 0:
            return 0.0 if u == 0.0 else b1 + b2 + b3
        if order == 1:
            return math.inf if u == 0.0 else -math.inf
        if order == 2:
            return -math.inf
        return math.inf if u == 0.0 else -math.inf

    v = 1.0 - u
    # sum the power terms in exponent order so that swapping (p, b2) with
    # (q, b3) reproduces the same floating-point result
    (e1, c1), (e2, c2) = sorted(((p, b2), (q, b3)), key=lambda t: t[0])
    if order == 0:
        return (b1 * u + c1 * u**e1 + c2 * u**e2
                - 0.5 * u * math.log(u) - 0.5 * v * math.log1p(-u))
    if order == 1:
        return (b1 + e1 * c1 * u ** (e1 - 1) + e2 * c2 * u ** (e2 - 1)
                - 0.5 * (math.log(u) - math.log1p(-u)))
    if order == 2:
        return (e1 * (e1 - 1) * c1 * u ** (e1 - 2) + e2 * (e2 - 1) * c2 * u ** (e2 - 2)
                - 0.5 / (u * v))
    # for exponent 2 the third derivative of u^2 is 0, not 0 * u^-1
    t1 = e1 * (e1 - 1) * (e1 - 2) * c1 * u ** (e1 - 3) if e1 > 2 else 0.0
    t2 = e2 * (e2 - 1) * (e2 - 2) * c2 * u ** (e2 - 3) if e2 > 2 else 0.0
    uv = u * v
    return t1 + t2 + 0.5 * ((1.0 - 2.0 * u) / uv) / uv


def _stationary_structural(b1, b2, b3, p, q, tol):
    """Stationary points of l as (logit, kind) with kind in {'max', 'min'}."""
    span = _root_span(b1, b2, b3, p, q)
    g = lambda x: dl_x(x, b1, b2, b3, p, q)
    _, x1, x2 = inflection_logits(b2, b3, p, q, tol)
    if x1 is None:
        return [(bisect(g, -span, span, tol), "max")]
    g1, g2 = g(x1), g(x2)
    out = []
    if g1 < 0:
        out.append((bisect(g, -span, x1, tol), "max"))
        if g2 > 0:
            out.append((bisect(g, x1, x2, tol), "min"))
    if g2 > 0:
        out.append((bisect(g, x2, span, tol), "max"))
    return out


def _stationary_grid(b1, b2, b3, p, q, tol):
    span = _root_span(b1, b2, b3, p, q)
    g = lambda x: dl_x(x, b1, b2, b3, p, q)
    n = tol.grid_size
    xs = [-span + 2.0 * span * k / (n - 1) for k in range(n)]
    gs = [g(x) for x in xs]
    brackets = [(xs[k], xs[k + 1], gs[k] > 0)
                for k in range(n - 1) if (gs[k] > 0) != (gs[k + 1] > 0)]
    if len(brackets) > 3:
        raise NumericalFailure(
            f"{len(brackets)} sign changes of l' bracketed; at most 3 are possible"
        )
    return [(bisect(g, a, b, tol), "max" if falling else "min") for a, b, falling in brackets]


def stationary_points(beta: BetaLike, spec, tol: ToleranceConfig = DEFAULT_TOL):
    b1, b2, b3 = as_beta(beta)
    p, q = _specs_pq(spec)
    if tol.bracketing == "structural" and isinstance(spec, ModelSpec):
        return _stationary_structural(b1, b2, b3, p, q, tol)
    return _stationary_grid(b1, b2, b3, p, q, tol)


def maximizer_set_from_logits(xs: Sequence[float], beta: BetaLike, spec,
                              tol: ToleranceConfig = DEFAULT_TOL) -> MaximizerSet:
    b1, b2, b3 = as_beta(beta)
    p, q = _specs_pq(spec)
    maxima = sorted(
        (LocalMax(sigmoid(x), l_x(x, b1, b2, b3, p, q), d2l_x(x, b1, b2, b3, p, q), x)
         for x in xs),
        key=lambda m: m.logit,
    )
    top = max(m.value for m in maxima)
    globs = tuple(i for i, m in enumerate(maxima) if tol.ties(m.value, top))
    return MaximizerSet(tuple(maxima), globs)


def find_maximizers(beta: BetaLike, spec, tol: ToleranceConfig = DEFAULT_TOL) -> MaximizerSet:
    """Locate every local maximizer of l on (0, 1)."""
    pts = stationary_points(beta, spec, tol)
    xs = [x for x, kind in pts if kind == "max"]
    if not 1 <= len(xs) <= 2:
        raise NumericalFailure(f"found {len(xs)} local maximizers; expected 1 or 2")
    return maximizer_set_from_logits(xs, beta, spec, tol)


def free_energy(beta: BetaLike, spec: ModelSpec,
                tol: ToleranceConfig = DEFAULT_TOL) -> tuple[float, MaximizerSet]:
    """Limiting free energy density ``sup l`` and the maximizers achieving it."""
    beta = as_beta(beta).require_attraction()
    ms = find_maximizers(beta, spec, tol)
    return ms.value, ms
