"""Polynomial multiple ergodic averages and the probes built on them.

All engines share one streaming core. For a sample point x and terms
t = 0, 1, ..., N_max - 1 it accumulates

    w(n_t) * prod_j f_j(T^{p_j(n_t)} x)

where n_t is the t-th orbit index (t for Cesàro averages, t + 1 for weighted
ones, the t-th prime for prime averages) and records the running sum divided
by N at every checkpoint N. Terms are produced in blocks: the exponents of a
block are evaluated once and reused by every point of a chunk.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from ergodic.conditioning import condition_cylinder, generated_half_space
from ergodic.errors import (
    DimensionMismatchError,
    IncompatibleObservableError,
    SizeGuardError,
    ZeroNormError,
)
from ergodic.lattice import GroupElement, OrderOutcome, PastWeights, phi_compare
from ergodic.polys import IntPoly, PolynomialFamily
from ergodic.primes import PrimeStream
from ergodic.systems import (
    BernoulliShiftSystem,
    ConstantObservable,
    CylinderObservable,
    Observable,
    OrbitBlock,
    Point,
    SystemInstance,
    lp_norm,
)
from settings import config, get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class CheckpointSchedule:
    """
    Strictly increasing averaging lengths N at which A_N is recorded.

    Attributes:
        checkpoints (tuple[int, ...]): N values, the first at least 1.
    """

    checkpoints: tuple[int, ...]

    def __post_init__(self):
        values = tuple(int(n) for n in self.checkpoints)
        if not values:
            raise ValueError("A schedule needs at least one checkpoint")
        if values[0] < 1:
            raise ValueError(f"Checkpoints start at 1, got {values[0]}")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError(f"Checkpoints must be strictly increasing: {values}")
        object.__setattr__(self, "checkpoints", values)

    @classmethod
    def geometric(cls, start: int, stop: int, ratio: int = 2) -> CheckpointSchedule:
        """start, start * ratio, ... up to stop; stop itself is always the last checkpoint."""
        if ratio < 2:
            raise ValueError(f"Ratio must be at least 2, got {ratio}")
        values = []
        n = start
        while n < stop:
            values.append(n)
            n *= ratio
        values.append(stop)
        return cls(tuple(values))

    @property
    def last(self) -> int:
        return self.checkpoints[-1]

    def __len__(self) -> int:
        return len(self.checkpoints)


class WeightSequence(ABC):
    """A bounded sequence g(n) with a declared bound and Cesàro mean."""

    bound: float
    mean: float

    @abstractmethod
    def value(self, n: int) -> float:
        ...

    def values(self, ns: Sequence[int]) -> np.ndarray:
        return np.array([self.value(n) for n in ns], dtype=np.float64)

    @abstractmethod
    def to_dict(self) -> dict:
        ...


@dataclass(frozen=True)
class ConstantWeights(WeightSequence):
    c: float = 1.0

    @property
    def bound(self) -> float:
        return abs(self.c)

    @property
    def mean(self) -> float:
        return self.c

    def value(self, n: int) -> float:
        return self.c

    def values(self, ns: Sequence[int]) -> np.ndarray:
        return np.full(len(ns), self.c, dtype=np.float64)

    def to_dict(self) -> dict:
        return {"type": "constant", "value": self.c}


@dataclass(frozen=True)
class PeriodicWeights(WeightSequence):
    """g(n) = pattern[n mod period]."""

    pattern: tuple[float, ...]

    def __post_init__(self):
        if not self.pattern:
            raise ValueError("A periodic pattern cannot be empty")

    @property
    def bound(self) -> float:
        return max(abs(v) for v in self.pattern)

    @property
    def mean(self) -> float:
        return math.fsum(self.pattern) / len(self.pattern)

    def value(self, n: int) -> float:
        return float(self.pattern[n % len(self.pattern)])

    def values(self, ns: Sequence[int]) -> np.ndarray:
        pattern = np.asarray(self.pattern, dtype=np.float64)
        return pattern[np.asarray(ns, dtype=np.int64) % len(pattern)]

    def to_dict(self) -> dict:
        return {"type": "periodic", "pattern": list(self.pattern)}


@dataclass(frozen=True)
class AlternatingWeights(WeightSequence):
    """g(n) = (-1)^n."""

    @property
    def bound(self) -> float:
        return 1.0

    @property
    def mean(self) -> float:
        return 0.0

    def value(self, n: int) -> float:
        return -1.0 if n % 2 else 1.0

    def values(self, ns: Sequence[int]) -> np.ndarray:
        return np.where(np.asarray(ns, dtype=np.int64) % 2 == 1, -1.0, 1.0)

    def to_dict(self) -> dict:
        return {"type": "alternating"}


@dataclass(frozen=True)
class TableWeights(WeightSequence):
    """
    User-supplied g(1), ..., g(len) with a declared Cesàro mean.

    Attributes:
        table (tuple[float, ...]): table[n - 1] = g(n).
        declared_mean (float | None): Mean to report; the table average when absent.
    """

    table: tuple[float, ...]
    declared_mean: float | None = None

    def __post_init__(self):
        if not self.table:
            raise ValueError("A weight table cannot be empty")

    @property
    def bound(self) -> float:
        return max(abs(v) for v in self.table)

    @property
    def mean(self) -> float:
        if self.declared_mean is not None:
            return self.declared_mean
        return math.fsum(self.table) / len(self.table)

    def value(self, n: int) -> float:
        if not 1 <= n <= len(self.table):
            raise IndexError(f"Weight table covers n = 1..{len(self.table)}, requested n = {n}")
        return float(self.table[n - 1])

    def to_dict(self) -> dict:
        return {"type": "table", "values": list(self.table), "mean": self.mean}


class IndexMode(Enum):
    """How the t-th term picks its orbit index."""
    CESARO = "cesaro"
    WEIGHTED = "weighted"
    PRIME = "prime"


@dataclass(frozen=True)
class SeriesRow:
    """
    One sample point's averages.

    Attributes:
        stream_id (int): Stream the point was sampled from.
        values (tuple[float, ...]): A_N at each checkpoint.
        running_max (float | None): sup over N <= N_max of |A_N| when tracked.
    """

    stream_id: int
    values: tuple[float, ...]
    running_max: float | None = None


@dataclass
class AverageSeries:
    """
    Averages of many sample points at a shared schedule.

    Attributes:
        schedule (CheckpointSchedule): Checkpoints N.
        rows (list[SeriesRow]): Rows sorted by stream id.
        metadata (dict): Start index, regime and anything else worth echoing.
    """

    schedule: CheckpointSchedule
    rows: list[SeriesRow]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.rows = sorted(self.rows, key=lambda row: row.stream_id)

    @property
    def values(self) -> np.ndarray:
        """Matrix of shape (samples, checkpoints)."""
        return np.array([row.values for row in self.rows], dtype=np.float64).reshape(len(self.rows), len(self.schedule))

    @property
    def stream_ids(self) -> list[int]:
        return [row.stream_id for row in self.rows]

    def records(self) -> list[tuple[int, int, float]]:
        """(stream_id, checkpoint_N, value) triples in stream-then-checkpoint order."""
        return [
            (row.stream_id, n, value)
            for row in self.rows
            for n, value in zip(self.schedule.checkpoints, row.values)
        ]


def regime_for(fam: PolynomialFamily) -> str:
    """Convergence of prime averages is known only in the single-generator form."""
    return "single_generator" if fam.is_single_generator() else "conjecture_probe"


def start_index(mode: IndexMode) -> int:
    return 1 if mode is IndexMode.WEIGHTED else 0


@dataclass(frozen=True)
class SeriesTask:
    """
    Everything a worker needs to compute rows for a chunk of stream ids.

    Attributes:
        system (SystemInstance): System the points are sampled from.
        observables (tuple[Observable, ...]): f_1, ..., f_m.
        family (PolynomialFamily): Exponent polynomials, one column per observable.
        schedule (CheckpointSchedule): Checkpoints.
        mode (IndexMode): Orbit index selection.
        weights (WeightSequence | None): g(n) for weighted averages.
        start (int | None): First orbit index for Cesàro and weighted averages.
        track_max (bool): Whether to record sup_N |A_N|.
    """

    system: SystemInstance
    observables: tuple[Observable, ...]
    family: PolynomialFamily
    schedule: CheckpointSchedule
    mode: IndexMode = IndexMode.CESARO
    weights: WeightSequence | None = None
    start: int | None = None
    track_max: bool = False

    def __post_init__(self):
        if len(self.observables) != self.family.m:
            raise DimensionMismatchError(self.family.m, len(self.observables), "observables")
        if self.family.d != self.system.d:
            raise DimensionMismatchError(self.system.d, self.family.d, "family dimension")

    @property
    def first_index(self) -> int:
        return self.start if self.start is not None else start_index(self.mode)

    def run(self, stream_ids: Sequence[int]) -> list[SeriesRow]:
        points = [self.system.sample_point(s) for s in stream_ids]
        return stream_averages(self, points, stream_ids)

    def metadata(self) -> dict:
        meta = {"mode": self.mode.value, "start_index": self.first_index}
        if self.mode is IndexMode.PRIME:
            meta["regime"] = regime_for(self.family)
        if self.weights is not None:
            meta["weight_sequence"] = self.weights.to_dict()
        return meta


ChunkRunner = Callable[[SeriesTask, Sequence[int]], list[SeriesRow]]


def run_sequential(task: SeriesTask, stream_ids: Sequence[int]) -> list[SeriesRow]:
    return task.run(stream_ids)


def _index_source(task: SeriesTask) -> Callable[[int, int], list[int]]:
    if task.mode is IndexMode.PRIME:
        primes = PrimeStream().take(task.schedule.last)
        if int(primes[-1]) > config.max_orbit_n:
            raise SizeGuardError("prime orbit index", int(primes[-1]), config.max_orbit_n)
        return lambda t0, t1: primes[t0:t1].tolist()
    first = task.first_index
    return lambda t0, t1: list(range(first + t0, first + t1))


def stream_averages(task: SeriesTask, points: Sequence[Point], stream_ids: Sequence[int]) -> list[SeriesRow]:
    """
    The streaming core: averages of every point at every checkpoint.

    Raises:
        ArithmeticOverflowError: If an orbit exponent leaves the 128-bit range.
    """
    schedule = task.schedule
    n_max = schedule.last
    indices = _index_source(task)
    totals = np.zeros(len(points), dtype=np.float64)
    values = np.zeros((len(points), len(schedule)), dtype=np.float64)
    maxima = np.zeros(len(points), dtype=np.float64)

    for t0 in range(0, n_max, config.block_size):
        t1 = min(t0 + config.block_size, n_max)
        ns = indices(t0, t1)
        blocks = [
            OrbitBlock([poly.eval_many(ns) for poly in task.family.column(j)])
            for j in range(task.family.m)
        ]
        weights = task.weights.values(ns) if task.weights is not None else None
        hits = [(k, n) for k, n in enumerate(schedule.checkpoints) if t0 < n <= t1]
        counts = np.arange(t0 + 1, t1 + 1, dtype=np.float64) if task.track_max else None

        for p, x in enumerate(points):
            terms = np.ones(t1 - t0, dtype=np.float64)
            for obs, block in zip(task.observables, blocks):
                terms = terms * task.system.orbit_values(obs, x, block)
            if weights is not None:
                terms = terms * weights
            partial = totals[p] + np.cumsum(terms)
            totals[p] = partial[-1]
            for k, n in hits:
                values[p, k] = partial[n - 1 - t0] / n
            if counts is not None:
                maxima[p] = max(maxima[p], float(np.max(np.abs(partial / counts))))

    return [
        SeriesRow(
            stream_id=int(s),
            values=tuple(float(v) for v in values[p]),
            running_max=float(maxima[p]) if task.track_max else None,
        )
        for p, s in enumerate(stream_ids)
    ]


def collect_series(task: SeriesTask, stream_ids: Sequence[int], runner: ChunkRunner | None = None) -> AverageSeries:
    """Rows for every stream id, computed by `runner` (sequentially by default)."""
    rows = (runner or run_sequential)(task, list(stream_ids))
    return AverageSeries(schedule=task.schedule, rows=rows, metadata=task.metadata())


def _single(task: SeriesTask, x: Point, stream_id: int) -> SeriesRow:
    return stream_averages(task, [x], [stream_id])[0]


def cesaro_series(
        sys: SystemInstance,
        obs_list: Sequence[Observable],
        fam: PolynomialFamily,
        x: Point,
        sched: CheckpointSchedule,
        start: int = 0,
        stream_id: int = 0
) -> SeriesRow:
    """(1/N) Σ_{n=start}^{start+N-1} Π_j f_j(T^{p_j(n)} x) at every checkpoint N."""
    task = SeriesTask(sys, tuple(obs_list), fam, sched, IndexMode.CESARO, start=start)
    return _single(task, x, stream_id)


def weighted_series(
        sys: SystemInstance,
        obs_list: Sequence[Observable],
        fam: PolynomialFamily,
        x: Point,
        sched: CheckpointSchedule,
        wseq: WeightSequence,
        stream_id: int = 0
) -> SeriesRow:
    """(1/N) Σ_{n=1}^{N} g(n) Π_j f_j(T^{p_j(n)} x) at every checkpoint N."""
    task = SeriesTask(sys, tuple(obs_list), fam, sched, IndexMode.WEIGHTED, weights=wseq)
    return _single(task, x, stream_id)


def prime_series(
        sys: SystemInstance,
        obs_list: Sequence[Observable],
        fam: PolynomialFamily,
        x: Point,
        sched: CheckpointSchedule,
        stream_id: int = 0
) -> SeriesRow:
    """(1/N) Σ_{t<N} Π_j f_j(T^{p_j(a_t)} x) with a_t the t-th prime."""
    task = SeriesTask(sys, tuple(obs_list), fam, sched, IndexMode.PRIME)
    return _single(task, x, stream_id)


@dataclass(frozen=True)
class MaximalEstimate:
    """
    Empirical ‖sup_{N <= N_max} |A_N|‖_p / ‖f‖_p.

    Attributes:
        ratio (float): The estimate; a lower-bound witness, not a constant.
        maximal_norm (float): Monte Carlo L^p norm of the maximal function.
        observable_norm (float): Exact ‖f‖_p.
        p (float): Exponent.
        n_max (int): Largest averaging length.
        within_sup_bound (bool): Every per-sample maximum is at most ‖f‖_∞.
        per_sample (tuple[float, ...]): sup_N |A_N| per sample.
    """

    ratio: float
    maximal_norm: float
    observable_norm: float
    p: float
    n_max: int
    within_sup_bound: bool
    per_sample: tuple[float, ...] = ()

    def to_dict(self) -> dict:
        return {
            "ratio": self.ratio,
            "maximal_norm": self.maximal_norm,
            "observable_norm": self.observable_norm,
            "p": self.p,
            "N_max": self.n_max,
            "within_sup_bound": self.within_sup_bound,
        }


def maximal_estimate(
        sys: SystemInstance,
        f: Observable,
        fam_column: Sequence[IntPoly],
        samples: int,
        n_max: int,
        p_norm: float,
        runner: ChunkRunner | None = None
) -> MaximalEstimate:
    """
    Monte Carlo estimate of the maximal-function ratio over `samples` points.

    Raises:
        ValueError: If p_norm <= 1.
        ZeroNormError: If ‖f‖_p = 0.
    """
    if p_norm <= 1:
        raise ValueError(f"The maximal estimate needs p > 1, got {p_norm}")
    norm = lp_norm(f, sys, p_norm)
    if norm == 0:
        raise ZeroNormError(f"‖f‖_{p_norm} vanishes")
    family = PolynomialFamily(d=sys.d, columns=(tuple(fam_column),))
    task = SeriesTask(sys, (f,), family, CheckpointSchedule((n_max,)), track_max=True)
    rows = (runner or run_sequential)(task, list(range(samples)))
    maxima = np.array([row.running_max for row in sorted(rows, key=lambda r: r.stream_id)], dtype=np.float64)
    maximal_norm = float(np.mean(maxima ** p_norm)) ** (1.0 / p_norm)
    estimate = MaximalEstimate(
        ratio=maximal_norm / norm,
        maximal_norm=maximal_norm,
        observable_norm=norm,
        p=p_norm,
        n_max=n_max,
        within_sup_bound=bool(np.all(maxima <= f.bound * (1 + 1e-12))),
        per_sample=tuple(float(v) for v in maxima),
    )
    logger.debug(f"Maximal estimate p={p_norm}: ratio {estimate.ratio:.6f}")
    return estimate


@dataclass(frozen=True)
class PairOutcome:
    """
    E[X_n X_m] for one probed pair.

    Attributes:
        n (int): First requested index.
        m (int): Second requested index.
        orbit_indices (tuple[int, int]): nQ + i and mQ + i, the indices actually used.
        value (Fraction | float): The exact expectation.
        precondition_met (bool): The centred exponents are strictly <_Φ-ordered, both
            indices exceed N_2 when it is known, and the integrated-out coordinates of
            one centred factor avoid every other coordinate of X_n X_m.
        order (str): <_Φ comparison of the centred column's exponents at the two indices.
        beyond_threshold (bool | None): Both indices exceed N_2 (None when N_2 is unknown).
    """

    n: int
    m: int
    orbit_indices: tuple[int, int]
    value: Fraction | float
    precondition_met: bool
    order: str
    beyond_threshold: bool | None = None

    def vanishes(self, tolerance: float) -> bool:
        if isinstance(self.value, Fraction):
            return self.value == 0
        return abs(self.value) <= tolerance

    def to_dict(self) -> dict:
        value = str(self.value) if isinstance(self.value, Fraction) else self.value
        return {
            "n": self.n,
            "m": self.m,
            "orbit_indices": list(self.orbit_indices),
            "value": value,
            "float_value": float(self.value),
            "precondition_met": self.precondition_met,
            "order": self.order,
            "beyond_threshold": self.beyond_threshold,
        }


@dataclass(frozen=True)
class OrthogonalityReport:
    """Exact martingale-difference correlations for one column."""

    column: int
    anchor: GroupElement
    half_space_anchor: GroupElement
    pairs: tuple[PairOutcome, ...]
    tolerance: float = 1e-12

    @property
    def passed(self) -> bool:
        """Every pair that meets the precondition has a vanishing correlation."""
        return all(pair.vanishes(self.tolerance) for pair in self.pairs if pair.precondition_met)

    def to_dict(self) -> dict:
        return {
            "column": self.column,
            "anchor": list(self.anchor.coords),
            "half_space_anchor": list(self.half_space_anchor.coords),
            "passed": self.passed,
            "pairs_meeting_precondition": sum(pair.precondition_met for pair in self.pairs),
            "pairs": [pair.to_dict() for pair in self.pairs],
        }


def _as_cylinder(obs: Observable, sys: BernoulliShiftSystem) -> CylinderObservable:
    if isinstance(obs, CylinderObservable):
        return obs
    if isinstance(obs, ConstantObservable):
        return CylinderObservable.constant(obs.value, sys.alphabet_size)
    raise IncompatibleObservableError(f"The orthogonality probe needs cylinder observables, got {type(obs).__name__}")


def orthogonality_probe(
        sys: BernoulliShiftSystem,
        fam: PolynomialFamily,
        obs_list: Sequence[Observable],
        w: PastWeights,
        g_0: GroupElement,
        j: int,
        n_pairs: Sequence[tuple[int, int]],
        modulus: int = 1,
        residue: int = 0,
        threshold: int | None = None,
        tolerance: float = 1e-12
) -> OrthogonalityReport:
    """
    Exact E[X_{j,n} X_{j,m}] for the martingale differences of column j.

    X_{j,n} = Π_{k<j} f_k∘T^{e_k(n)} · (f_j − E(f_j|𝒜_{g_0}))∘T^{e_j(n)} · Π_{l>j} ∫f_l,
    with e_k(n) the orbit exponent of column k and 𝒜 trivial on the Bernoulli shift.
    Pairs are taken along n ↦ nQ + i.

    Raises:
        IncompatibleObservableError: For non-Bernoulli systems or non-cylinder observables.
        SizeGuardError: If a product window is too large.
    """
    if not isinstance(sys, BernoulliShiftSystem):
        raise IncompatibleObservableError("The orthogonality probe runs on Bernoulli shifts only")
    if len(obs_list) != fam.m:
        raise DimensionMismatchError(fam.m, len(obs_list), "observables")
    if not 0 <= j < fam.m:
        raise IndexError(f"Column {j} outside 0..{fam.m - 1}")
    if modulus < 1 or not 0 <= residue < modulus:
        raise ValueError(f"Residue class {residue} mod {modulus} is invalid")

    prob = sys.prob
    cylinders = [_as_cylinder(obs, sys) for obs in obs_list]
    half_space = generated_half_space(w, g_0, [c.window for c in cylinders])
    f_j = cylinders[j]
    centred = f_j - condition_cylinder(f_j, half_space, prob)
    integrated_out = [v for v in f_j.window if not half_space.contains(v)]
    tail_constant = Fraction(1) if prob.exact else 1.0
    for f_l in cylinders[j + 1:]:
        tail_constant = tail_constant * f_l.integral(prob)

    def factors(index: int):
        exponents = [fam.orbit_exponent(k, index) for k in range(j + 1)]
        leading = [cylinders[k].translate(exponents[k]) for k in range(j)]
        difference = centred.translate(exponents[j])
        removed = {v + exponents[j] for v in integrated_out}
        return leading, difference, removed, exponents[j]

    pairs = []
    for n, m in n_pairs:
        index_n, index_m = n * modulus + residue, m * modulus + residue
        leading_n, centred_n, removed_n, e_n = factors(index_n)
        leading_m, centred_m, removed_m, e_m = factors(index_m)
        others_n = {v for c in leading_n for v in c.window}
        others_m = {v for c in leading_m for v in c.window}
        separated = (
            removed_n.isdisjoint(others_n | others_m | set(centred_m.window))
            or removed_m.isdisjoint(others_m | others_n | set(centred_n.window))
        )
        order = phi_compare(w, e_n, e_m)
        beyond = None if threshold is None else min(index_n, index_m) > threshold
        met = separated and order is not OrderOutcome.EQUAL and beyond is not False

        pieces = leading_n + [centred_n] + leading_m + [centred_m]
        union = {v for c in pieces for v in c.window}
        if prob.size ** len(union) > config.rational_table_cap:
            pieces = [c.to_float() for c in pieces]
        product = pieces[0]
        for piece in pieces[1:]:
            product = product * piece
        value = product.integral(prob) * tail_constant * tail_constant
        if not isinstance(value, Fraction):
            value = float(value)

        pairs.append(PairOutcome(
            n=n,
            m=m,
            orbit_indices=(index_n, index_m),
            value=value,
            precondition_met=met,
            order=order.value,
            beyond_threshold=beyond,
        ))

    report = OrthogonalityReport(
        column=j,
        anchor=g_0,
        half_space_anchor=half_space.anchor,
        pairs=tuple(pairs),
        tolerance=tolerance,
    )
    logger.debug(f"Orthogonality probe on column {j}: {len(pairs)} pairs, passed={report.passed}")
    return report
