"""Experiment configuration: pydantic models and builders into core objects.

The models check types and shapes; the `build_*` functions check meaning
(dimensions, caps, compatibility) and raise `ConfigError` with the dotted
path of the offending field, e.g. `family.columns.1.0`.

Torus coordinates (rotation vectors, box corners) accept a 64-bit fixed-point
integer, a decimal in [0, 1], a rational string such as "1/3", or "golden"
for the fixed-point golden-ratio fraction 0x9E3779B97F4A7C15.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Annotated, Literal, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from db.enums import ExperimentKind
from ergodic.arith import GOLDEN_GAMMA, mix64
from ergodic.averaging import (
    AlternatingWeights,
    CheckpointSchedule,
    ConstantWeights,
    PeriodicWeights,
    TableWeights,
    WeightSequence,
)
from ergodic.errors import ConfigError, NondegenerateFamilyRequired
from ergodic.lattice import GroupElement, PastWeights, WeightSelection, select_weights
from ergodic.polys import PolynomialFamily
from ergodic.systems import (
    BernoulliShiftSystem,
    BoxIndicator,
    Character,
    ConstantObservable,
    CylinderObservable,
    Observable,
    ProbabilityVector,
    ProductObservable,
    ProductSystem,
    SystemInstance,
    TorusRotationSystem,
)
from settings import config

TWO_64 = 1 << 64

Rational = Union[int, float, str]
TorusCoordinate = Union[int, float, str]


def _check_rational(value: Rational) -> Rational:
    if isinstance(value, str):
        try:
            Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as e:
            raise ValueError(f"{value!r} is not a rational number") from e
    return value


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class BernoulliSpec(StrictModel):
    type: Literal["bernoulli"] = "bernoulli"
    d: int = Field(ge=1, le=8)
    prob: list[Rational] = Field(min_length=2)

    @field_validator("prob")
    @classmethod
    def rational_probabilities(cls, v: list[Rational]) -> list[Rational]:
        return [_check_rational(p) for p in v]


class TorusSpec(StrictModel):
    type: Literal["torus"] = "torus"
    d: int = Field(ge=1, le=8)
    k: int = Field(ge=1, le=8)
    alphas: list[list[TorusCoordinate]]


class ProductSystemSpec(StrictModel):
    type: Literal["product"] = "product"
    first: BernoulliSpec
    second: TorusSpec


SystemSpec = Annotated[Union[BernoulliSpec, TorusSpec, ProductSystemSpec], Field(discriminator="type")]


class ConstantSpec(StrictModel):
    type: Literal["constant"] = "constant"
    value: Rational = 1

    @field_validator("value")
    @classmethod
    def rational_value(cls, v: Rational) -> Rational:
        return _check_rational(v)


class CylinderSpec(StrictModel):
    type: Literal["cylinder"] = "cylinder"
    window: list[list[int]]
    table: list[Rational] = Field(min_length=1, description="Row-major values, axis k = symbol at window[k]")

    @field_validator("table")
    @classmethod
    def rational_table(cls, v: list[Rational]) -> list[Rational]:
        return [_check_rational(x) for x in v]


class IndicatorSpec(StrictModel):
    type: Literal["indicator"] = "indicator"
    window: list[list[int]] = Field(min_length=1)
    symbols: list[int] = Field(min_length=1)


class BoxSpec(StrictModel):
    type: Literal["box"] = "box"
    lows: list[TorusCoordinate] = Field(min_length=1)
    highs: list[TorusCoordinate] = Field(min_length=1)
    scale: Rational = 1


class CharacterSpec(StrictModel):
    type: Literal["character"] = "character"
    frequencies: list[int] = Field(min_length=1)
    scale: Rational = 1


BernoulliFactorSpec = Annotated[Union[ConstantSpec, CylinderSpec, IndicatorSpec], Field(discriminator="type")]
TorusFactorSpec = Annotated[Union[ConstantSpec, BoxSpec, CharacterSpec], Field(discriminator="type")]


class ProductObservableSpec(StrictModel):
    type: Literal["product"] = "product"
    u: BernoulliFactorSpec
    v: TorusFactorSpec


ObservableSpec = Annotated[
    Union[ConstantSpec, CylinderSpec, IndicatorSpec, BoxSpec, CharacterSpec, ProductObservableSpec],
    Field(discriminator="type"),
]


class FamilySpec(StrictModel):
    columns: list[list[list[int]]] = Field(min_length=1, description="columns[j][i] = coefficients of p_{i,j}, lowest power first")
    generator_assignment: Optional[list[int]] = None


class GeometricSpec(StrictModel):
    start: int = Field(ge=1)
    stop: int = Field(ge=1)
    ratio: int = Field(default=2, ge=2)


class ScheduleSpec(StrictModel):
    checkpoints: Optional[list[int]] = None
    geometric: Optional[GeometricSpec] = None

    @model_validator(mode="after")
    def exactly_one(self) -> ScheduleSpec:
        if (self.checkpoints is None) == (self.geometric is None):
            raise ValueError("Give exactly one of 'checkpoints' or 'geometric'")
        return self


class WeightSequenceSpec(StrictModel):
    type: Literal["constant", "periodic", "alternating", "table"]
    value: float = 1.0
    pattern: Optional[list[float]] = None
    values: Optional[list[float]] = None
    mean: Optional[float] = None


class Tolerances(StrictModel):
    eps: float = Field(default=0.01, gt=0)
    k_limit_mean: float = Field(default=0.01, gt=0)
    k_limit_sample: float = Field(default=0.05, gt=0)
    k_limit_fraction: float = Field(default=0.9, ge=0, le=1)
    gap_threshold: float = Field(default=0.05, gt=0)
    gap_fraction: float = Field(default=0.9, ge=0, le=1)
    band_low: Optional[float] = None
    band_high: Optional[float] = None


class VerifyPastSpec(StrictModel):
    weights: list[int] = Field(min_length=1)
    box_radius: int = Field(ge=1)


class OrthogonalitySpec(StrictModel):
    column: int = Field(ge=0)
    anchor: list[int] = Field(min_length=1)
    pairs: list[tuple[int, int]] = Field(min_length=1)
    modulus: int = Field(default=1, ge=1)
    residue: int = Field(default=0, ge=0)
    tolerance: float = Field(default=1e-12, gt=0)


class MaximalSpec(StrictModel):
    column: int = Field(default=0, ge=0)
    n_max: int = Field(ge=1)
    p: float = Field(default=2.0, gt=1)


class EntropySpec(StrictModel):
    box_side: int = Field(ge=1)
    estimator: Literal["plugin", "miller_madow"] = "plugin"
    tolerance: float = Field(default=0.05, gt=0)


class ExperimentConfig(StrictModel):
    """
    A single experiment, as read from a JSON config file.

    Attributes:
        kind (ExperimentKind): Which experiment to run.
        system: Bernoulli, torus or product system.
        observables: f_1, ..., f_m.
        family: Exponent polynomials, one column per observable.
        weights: "auto" (selected from the family) or explicit positive integers.
        schedule: Checkpoints of the averages.
        samples (int): Number of sample points (stream ids 0 .. samples - 1).
        master_seed (int): 64-bit seed of the random field.
        weight_sequence: g(n) for weighted averages.
        k_limit_check (bool): Compare estimated limits with the product of integrals.
        expected_limit: A known limit to compare against instead (no K-system hypothesis).
        tolerances: Pass thresholds.
    """

    kind: ExperimentKind
    system: Optional[SystemSpec] = None
    observables: list[ObservableSpec] = Field(default_factory=list)
    family: Optional[FamilySpec] = None
    weights: Union[Literal["auto"], list[int]] = "auto"
    schedule: Optional[ScheduleSpec] = None
    samples: int = Field(default=1, ge=1)
    master_seed: int = Field(default=0, ge=0, lt=TWO_64)
    weight_sequence: Optional[WeightSequenceSpec] = None
    k_limit_check: bool = False
    expected_limit: Optional[Rational] = None
    tolerances: Tolerances = Field(default_factory=Tolerances)

    verify_past: Optional[VerifyPastSpec] = None
    orthogonality: Optional[OrthogonalitySpec] = None
    maximal: Optional[MaximalSpec] = None
    entropy: Optional[EntropySpec] = None

    def echo(self) -> dict:
        """The configuration as JSON data; validating it again reproduces this config."""
        return self.model_dump(mode="json", exclude_none=True)


REQUIRED_BLOCKS: dict[ExperimentKind, tuple[str, ...]] = {
    ExperimentKind.CESARO: ("system", "family", "schedule"),
    ExperimentKind.WEIGHTED: ("system", "family", "schedule", "weight_sequence"),
    ExperimentKind.PRIME: ("system", "family", "schedule"),
    ExperimentKind.REDUCTION_GAP: ("system", "family", "schedule"),
    ExperimentKind.MAXIMAL: ("system", "family", "maximal"),
    ExperimentKind.ORTHOGONALITY: ("system", "family", "orthogonality"),
    ExperimentKind.VERIFY_PAST: ("verify_past",),
    ExperimentKind.ENTROPY: ("system", "entropy"),
}


def format_validation_error(error: ValidationError) -> list[str]:
    """One "path: message" line per pydantic error."""
    return [
        f"{'.'.join(str(part) for part in item['loc']) or '<root>'}: {item['msg']}"
        for item in error.errors()
    ]


def require_blocks(cfg: ExperimentConfig) -> None:
    for name in REQUIRED_BLOCKS[cfg.kind]:
        if getattr(cfg, name) is None:
            raise ConfigError(name, f"required for kind '{cfg.kind.value}'")
    if cfg.kind not in (ExperimentKind.VERIFY_PAST, ExperimentKind.ENTROPY) and not cfg.observables:
        raise ConfigError("observables", f"at least one observable is required for kind '{cfg.kind.value}'")


def parse_rational(value: Rational) -> Fraction | float:
    if isinstance(value, float):
        return value
    return Fraction(value.strip()) if isinstance(value, str) else Fraction(value)


def to_fixed_point(value: TorusCoordinate, path: str, allow_one: bool = False) -> int:
    """A torus coordinate in 64-bit fixed point; 2^64 (the value 1) only when `allow_one`."""
    upper = TWO_64 if allow_one else TWO_64 - 1
    if isinstance(value, str) and value.strip().lower() == "golden":
        return GOLDEN_GAMMA
    if isinstance(value, int):
        fixed = value
    else:
        try:
            fraction = Fraction(value.strip()) if isinstance(value, str) else Fraction(value)
        except (ValueError, ZeroDivisionError) as e:
            raise ConfigError(path, f"{value!r} is not a torus coordinate") from e
        if not 0 <= fraction <= 1:
            raise ConfigError(path, f"{value!r} is outside [0, 1]")
        fixed = math.floor(fraction * TWO_64) if isinstance(value, str) else round(fraction * TWO_64)
    if not 0 <= fixed <= upper:
        raise ConfigError(path, f"fixed-point value {fixed} is outside [0, {upper}]")
    return fixed


def _probability_vector(spec: BernoulliSpec, path: str) -> ProbabilityVector:
    try:
        return ProbabilityVector(tuple(parse_rational(p) for p in spec.prob))
    except ValueError as e:
        raise ConfigError(f"{path}.prob", str(e)) from e


def _bernoulli(spec: BernoulliSpec, master_seed: int, path: str) -> BernoulliShiftSystem:
    return BernoulliShiftSystem(d=spec.d, prob=_probability_vector(spec, path), master_seed=master_seed)


def _torus(spec: TorusSpec, master_seed: int, path: str) -> TorusRotationSystem:
    if len(spec.alphas) != spec.d:
        raise ConfigError(f"{path}.alphas", f"expected {spec.d} rotation vectors, got {len(spec.alphas)}")
    alphas = []
    for i, row in enumerate(spec.alphas):
        if len(row) != spec.k:
            raise ConfigError(f"{path}.alphas.{i}", f"expected {spec.k} coordinates, got {len(row)}")
        alphas.append(tuple(to_fixed_point(a, f"{path}.alphas.{i}.{c}") for c, a in enumerate(row)))
    return TorusRotationSystem(d=spec.d, k=spec.k, alphas=tuple(alphas), master_seed=master_seed)


def build_system(cfg: ExperimentConfig) -> SystemInstance:
    """
    Builds the system; the torus factor of a product is keyed by mix64(master_seed ^ 1).

    Raises:
        ConfigError: On inconsistent dimensions or invalid probabilities.
    """
    spec = cfg.system
    if isinstance(spec, BernoulliSpec):
        return _bernoulli(spec, cfg.master_seed, "system")
    if isinstance(spec, TorusSpec):
        return _torus(spec, cfg.master_seed, "system")
    if spec.first.d != spec.second.d:
        raise ConfigError("system.second.d", f"acting dimension {spec.second.d} differs from {spec.first.d}")
    return ProductSystem(
        first=_bernoulli(spec.first, cfg.master_seed, "system.first"),
        second=_torus(spec.second, mix64(cfg.master_seed ^ 1), "system.second"),
    )


def _window(coords: Sequence[Sequence[int]], d: int, path: str) -> tuple[GroupElement, ...]:
    window = []
    for k, v in enumerate(coords):
        if len(v) != d:
            raise ConfigError(f"{path}.{k}", f"expected {d} coordinates, got {len(v)}")
        window.append(GroupElement(tuple(v)))
    if len(set(window)) != len(window):
        raise ConfigError(path, "window coordinates must be distinct")
    if len(window) > config.max_window:
        raise ConfigError(path, f"window of {len(window)} coordinates exceeds the cap {config.max_window}")
    return tuple(window)


def _cylinder_part(spec, sys: BernoulliShiftSystem, path: str) -> Observable:
    a = sys.alphabet_size
    if isinstance(spec, ConstantSpec):
        return ConstantObservable(parse_rational(spec.value))
    window = _window(spec.window, sys.d, f"{path}.window")
    if isinstance(spec, IndicatorSpec):
        if len(spec.symbols) != len(window):
            raise ConfigError(f"{path}.symbols", f"expected {len(window)} symbols, got {len(spec.symbols)}")
        for k, s in enumerate(spec.symbols):
            if not 0 <= s < a:
                raise ConfigError(f"{path}.symbols.{k}", f"symbol {s} outside 0..{a - 1}")
        return CylinderObservable.indicator(window, spec.symbols, a, exact=sys.prob.exact)
    size = a ** len(window)
    if size > config.table_cap:
        raise ConfigError(f"{path}.table", f"table of {size} entries exceeds the cap {config.table_cap}")
    if len(spec.table) != size:
        raise ConfigError(f"{path}.table", f"expected a^|W| = {size} values, got {len(spec.table)}")
    values = [parse_rational(v) for v in spec.table]
    if any(isinstance(v, float) for v in values):
        table = np.array([float(v) for v in values], dtype=np.float64)
    else:
        table = np.empty(size, dtype=object)
        table[:] = values
    return CylinderObservable(window, table.reshape((a,) * len(window)), a)


def _torus_part(spec, sys: TorusRotationSystem, path: str) -> Observable:
    if isinstance(spec, ConstantSpec):
        return ConstantObservable(parse_rational(spec.value))
    if isinstance(spec, BoxSpec):
        for name, corners in (("lows", spec.lows), ("highs", spec.highs)):
            if len(corners) != sys.k:
                raise ConfigError(f"{path}.{name}", f"expected {sys.k} coordinates, got {len(corners)}")
        lows = tuple(to_fixed_point(v, f"{path}.lows.{c}") for c, v in enumerate(spec.lows))
        highs = tuple(to_fixed_point(v, f"{path}.highs.{c}", allow_one=True) for c, v in enumerate(spec.highs))
        for c, (low, high) in enumerate(zip(lows, highs)):
            if low > high:
                raise ConfigError(f"{path}.highs.{c}", "upper corner below lower corner")
        return BoxIndicator(lows, highs, parse_rational(spec.scale))
    if len(spec.frequencies) != sys.k:
        raise ConfigError(f"{path}.frequencies", f"expected {sys.k} frequencies, got {len(spec.frequencies)}")
    return Character(tuple(spec.frequencies), parse_rational(spec.scale))


def build_observable(spec, sys: SystemInstance, path: str) -> Observable:
    """
    Raises:
        ConfigError: If the observable does not fit the system.
    """
    if isinstance(sys, BernoulliShiftSystem):
        if not isinstance(spec, (ConstantSpec, CylinderSpec, IndicatorSpec)):
            raise ConfigError(f"{path}.type", f"'{spec.type}' observables do not live on a Bernoulli shift")
        return _cylinder_part(spec, sys, path)
    if isinstance(sys, TorusRotationSystem):
        if not isinstance(spec, (ConstantSpec, BoxSpec, CharacterSpec)):
            raise ConfigError(f"{path}.type", f"'{spec.type}' observables do not live on a torus")
        return _torus_part(spec, sys, path)
    if isinstance(spec, ConstantSpec):
        return ConstantObservable(parse_rational(spec.value))
    if not isinstance(spec, ProductObservableSpec):
        raise ConfigError(f"{path}.type", f"'{spec.type}' observables do not live on a product system")
    return ProductObservable(
        u=_cylinder_part(spec.u, sys.first, f"{path}.u"),
        v=_torus_part(spec.v, sys.second, f"{path}.v"),
    )


def build_observables(cfg: ExperimentConfig, sys: SystemInstance) -> tuple[Observable, ...]:
    return tuple(build_observable(spec, sys, f"observables.{i}") for i, spec in enumerate(cfg.observables))


def build_family(spec: FamilySpec, d: int | None = None, path: str = "family") -> PolynomialFamily:
    """
    Raises:
        ConfigError: On ragged shapes, degrees above the cap or invalid generator rows.
    """
    width = d if d is not None else len(spec.columns[0])
    for j, column in enumerate(spec.columns):
        if len(column) != width:
            raise ConfigError(f"{path}.columns.{j}", f"expected {width} polynomials, got {len(column)}")
        for i, coefficients in enumerate(column):
            trimmed = list(coefficients)
            while trimmed and trimmed[-1] == 0:
                trimmed.pop()
            if len(trimmed) - 1 > config.max_degree:
                raise ConfigError(
                    f"{path}.columns.{j}.{i}",
                    f"degree {len(trimmed) - 1} exceeds the cap {config.max_degree}",
                )
    try:
        return PolynomialFamily.from_coefficients(spec.columns, spec.generator_assignment)
    except ValueError as e:
        raise ConfigError(f"{path}.generator_assignment", str(e)) from e


def build_schedule(spec: ScheduleSpec, path: str = "schedule") -> CheckpointSchedule:
    try:
        if spec.geometric is not None:
            g = spec.geometric
            schedule = CheckpointSchedule.geometric(g.start, g.stop, g.ratio)
        else:
            schedule = CheckpointSchedule(tuple(spec.checkpoints))
    except ValueError as e:
        raise ConfigError(path, str(e)) from e
    if schedule.last > config.max_orbit_n:
        raise ConfigError(path, f"last checkpoint {schedule.last} exceeds the cap {config.max_orbit_n}")
    return schedule


def build_weight_sequence(spec: WeightSequenceSpec, path: str = "weight_sequence") -> WeightSequence:
    if spec.type == "constant":
        return ConstantWeights(spec.value)
    if spec.type == "alternating":
        return AlternatingWeights()
    if spec.type == "periodic":
        if not spec.pattern:
            raise ConfigError(f"{path}.pattern", "a periodic sequence needs a pattern")
        return PeriodicWeights(tuple(spec.pattern))
    if not spec.values:
        raise ConfigError(f"{path}.values", "a table sequence needs values")
    return TableWeights(tuple(spec.values), spec.mean)


def resolve_weights(
        weights: Union[str, list[int]],
        fam: PolynomialFamily | None,
        d: int,
        path: str = "weights"
) -> tuple[PastWeights, WeightSelection | None]:
    """
    Explicit weights, or the automatic selection for `fam`.

    Raises:
        ConfigError: For wrong lengths, non-positive weights or a degenerate family.
    """
    if weights == "auto":
        if fam is None:
            raise ConfigError(path, "'auto' needs a family")
        try:
            selection = select_weights(fam)
        except NondegenerateFamilyRequired as e:
            raise ConfigError("family", str(e)) from e
        return selection.weights, selection
    if len(weights) != d:
        raise ConfigError(path, f"expected {d} weights, got {len(weights)}")
    try:
        return PastWeights(tuple(weights)), None
    except ValueError as e:
        raise ConfigError(path, str(e)) from e
