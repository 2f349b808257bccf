"""Phase diagram of three-parameter exponential random graph models.

The limiting free energy reduces to maximizing a scalar function l(u) of
the edge density u. This package locates those maximizers, traces the
first-order transition surface and its critical curve, evaluates limiting
observables, and checks everything against exact enumeration and a Gibbs
sampler at small n.
"""

from ._version import __version__
from .errors import (
    AssumptionViolation,
    DegenerateModel,
    DomainError,
    ErgmPhaseError,
    HypothesisViolation,
    NumericalFailure,
    ResourceError,
    SurfaceError,
    UnknownFigure,
)
from .model import (
    DEFAULT_TOL,
    BetaPoint,
    Exponents,
    LocalMax,
    MaximizerSet,
    ModelSpec,
    ToleranceConfig,
    eval_l,
    find_maximizers,
    free_energy,
    validate_spec,
)
from .geometry import (
    Critical,
    CriticalPoint,
    OffSurface,
    OnSurface,
    SurfacePoint,
    SurfaceTrace,
    VRegion,
    classify,
    corner_point,
    critical_curve,
    critical_parameters,
    inflection_points,
    trace_surface,
    transition_beta2,
    u0_from_beta3,
    universality_gap,
    v_region,
)
from .observables import (
    DivergenceProbe,
    ObservableReport,
    divergence_probe,
    first_derivatives,
    jump_sizes,
    observables,
    second_derivatives,
)
from .finite import (
    GraphState,
    SubgraphSpec,
    default_subgraph,
    exact_expectation,
    exact_psi_n,
    graph_densities,
    hom_count,
    hom_density,
)
from .sampler import ChainConfig, ChainTrace, gibbs_sweep, hom_delta, run_chain
