"""Numerical core: lattice orders, polynomial families, model systems and averages."""

from ergodic.averaging import (
    AlternatingWeights,
    AverageSeries,
    CheckpointSchedule,
    ConstantWeights,
    IndexMode,
    MaximalEstimate,
    OrthogonalityReport,
    PeriodicWeights,
    SeriesRow,
    SeriesTask,
    TableWeights,
    WeightSequence,
    cesaro_series,
    collect_series,
    maximal_estimate,
    orthogonality_probe,
    prime_series,
    weighted_series,
)
from ergodic.conditioning import (
    ExplicitSet,
    HalfSpaceSide,
    PastHalfSpace,
    condition_cylinder,
    condition_oracle,
    generated_half_space,
    martingale_tail,
)
from ergodic.diagnostics import (
    ConvergenceReport,
    EntropyEstimate,
    GapReport,
    KLimitResult,
    block_entropy,
    convergence_report,
    k_limit_check,
    reduction_gap,
)
from ergodic.errors import (
    ArithmeticOverflowError,
    ConfigError,
    DimensionMismatchError,
    ErgodicLabError,
    HypothesisUnmetError,
    IncompatibleObservableError,
    InsufficientCheckpointsError,
    NondegenerateFamilyRequired,
    SizeGuardError,
    ZeroNormError,
)
from ergodic.lattice import (
    AxiomReport,
    GroupElement,
    OrderOutcome,
    PastWeights,
    WeightSelection,
    phi_compare,
    phi_contains,
    select_weights,
    verify_past_axioms,
)
from ergodic.polys import (
    IntPoly,
    NondegeneracyReport,
    PolynomialFamily,
    check_nondegeneracy,
    normalize_family,
    orbit_exponent,
)
from ergodic.primes import PrimeStream
from ergodic.systems import (
    BernoulliShiftSystem,
    BoxIndicator,
    Character,
    ConstantObservable,
    CylinderObservable,
    ProbabilityVector,
    ProductObservable,
    ProductSystem,
    TorusRotationSystem,
    act,
    evaluate,
    integral,
    lp_norm,
    pinsker_project,
    sample_point,
)
