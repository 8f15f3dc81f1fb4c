"""Model measure-preserving Z^d systems and their observables.

Three systems are available:

- `BernoulliShiftSystem`: the product measure on alphabet^{Z^d}. A point is a
  (seed, offset) pair; the symbol at lattice coordinate v is a keyed hash of
  the absolute coordinate offset + v mapped through the inverse CDF, so a point
  occupies constant memory whatever orbit it follows.
- `TorusRotationSystem`: commuting rotations of the k-torus in 64-bit fixed
  point; act is exact wrap-around addition.
- `ProductSystem`: a Bernoulli factor times a torus factor. Its Pinsker
  factor is the torus coordinate (trivial on the K-factor times everything on
  the zero-entropy factor), which is what `pinsker_project` relies on.

Orbit evaluation works on `OrbitBlock`s: the exponents of one column for a
run of consecutive n, split into 64-bit halves once and shared by every
sample point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence, Union

import numpy as np

from ergodic.arith import (
    INT128_MAX,
    MASK64,
    add128_array,
    field_hash,
    field_hash_array,
    mix64,
    point_seed,
    point_seed_array,
    split128,
    split128_array,
)
from ergodic.errors import (
    ArithmeticOverflowError,
    DimensionMismatchError,
    IncompatibleObservableError,
    SizeGuardError,
)
from ergodic.lattice import GroupElement
from settings import config

TWO_64 = 1 << 64

Number = Union[Fraction, float]


def parse_probability(value) -> Number:
    """Reads a probability given as int, float, Fraction or a rational string like "1/3"."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("Probabilities cannot be booleans")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    return float(value)


@dataclass(frozen=True)
class ProbabilityVector:
    """
    Symbol distribution of a Bernoulli shift.

    Exact when every entry is rational; otherwise every entry is a float.

    Attributes:
        values (tuple[Fraction | float, ...]): p_0, ..., p_{a-1}.
    """

    values: tuple[Number, ...]

    def __post_init__(self):
        parsed = [parse_probability(v) for v in self.values]
        if len(parsed) < 2:
            raise ValueError("An alphabet needs at least two symbols")
        if any(isinstance(v, float) for v in parsed):
            parsed = [float(v) for v in parsed]
            if abs(math.fsum(parsed) - 1.0) > 1e-12:
                raise ValueError(f"Probabilities sum to {math.fsum(parsed)}, not 1")
        elif sum(parsed) != 1:
            raise ValueError(f"Probabilities sum to {sum(parsed)}, not 1")
        if any(v < 0 for v in parsed):
            raise ValueError("Probabilities must be nonnegative")
        object.__setattr__(self, "values", tuple(parsed))

    @classmethod
    def uniform(cls, a: int) -> ProbabilityVector:
        return cls(tuple(Fraction(1, a) for _ in range(a)))

    @property
    def size(self) -> int:
        return len(self.values)

    @property
    def exact(self) -> bool:
        return all(isinstance(v, Fraction) for v in self.values)

    def as_array(self) -> np.ndarray:
        if self.exact:
            return np.array(self.values, dtype=object)
        return np.array(self.values, dtype=np.float64)

    @cached_property
    def thresholds(self) -> tuple[int, ...]:
        """
        Integer cut points: symbol i covers hashes h with c_{i-1} <= h / 2^64 < c_i.

        Cut points equal to 2^64 are dropped because no 64-bit hash reaches them.
        """
        cuts = []
        cumulative = Fraction(0)
        for v in self.values[:-1]:
            cumulative += Fraction(v)
            cut = math.ceil(cumulative * TWO_64)
            if cut < TWO_64:
                cuts.append(cut)
        return tuple(cuts)

    def symbol(self, h: int) -> int:
        return sum(1 for cut in self.thresholds if h >= cut)

    def symbols(self, hashes: np.ndarray) -> np.ndarray:
        result = np.zeros(hashes.shape, dtype=np.int64)
        for cut in self.thresholds:
            result += hashes >= np.uint64(cut)
        return result

    def entropy(self) -> float:
        """-sum p_i log p_i in nats."""
        return -math.fsum(float(p) * math.log(float(p)) for p in self.values if p > 0)

    def to_json(self) -> list:
        return [str(v) if isinstance(v, Fraction) else v for v in self.values]


@dataclass(frozen=True)
class BernoulliPoint:
    """A Bernoulli point: symbols are keyed hashes of offset + v under `seed`."""
    seed: int
    offset: GroupElement


@dataclass(frozen=True)
class TorusPoint:
    """A point of the discretised k-torus; coordinate value / 2^64 lies in [0, 1)."""
    coords: tuple[int, ...]


@dataclass(frozen=True)
class ProductPoint:
    first: BernoulliPoint
    second: TorusPoint


Point = Union[BernoulliPoint, TorusPoint, ProductPoint]


class OrbitBlock:
    """
    Exponents of one family column for consecutive orbit indices.

    Attributes:
        values (list[list[int]]): values[i][t] is the i-th exponent coordinate at the t-th index.
    """

    def __init__(self, values: Sequence[Sequence[int]]):
        self.values = [list(row) for row in values]
        self.size = len(self.values[0]) if self.values else 0

    @classmethod
    def constant(cls, g: GroupElement, size: int = 1) -> OrbitBlock:
        return cls([[c] * size for c in g.coords])

    @property
    def dim(self) -> int:
        return len(self.values)

    @cached_property
    def split(self) -> list[tuple[np.ndarray, np.ndarray]]:
        return [split128_array(row) for row in self.values]

    @cached_property
    def max_abs(self) -> list[int]:
        return [max((abs(v) for v in row), default=0) for row in self.values]

    @cached_property
    def low(self) -> list[np.ndarray]:
        """Exponents modulo 2^64 as `uint64` (the low halves)."""
        return [low for low, _ in self.split]


# ---------------------------------------------------------------------------
# Observables
# ---------------------------------------------------------------------------


def _exact_scalar(value) -> Number:
    if isinstance(value, (Fraction, int)) and not isinstance(value, bool):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    return float(value)


@dataclass(frozen=True)
class ConstantObservable:
    """The constant function c; compatible with every system."""

    value: Number = Fraction(1)

    def __post_init__(self):
        object.__setattr__(self, "value", _exact_scalar(self.value))

    @property
    def bound(self) -> float:
        return abs(float(self.value))

    def integral(self) -> Number:
        return self.value

    def lp_norm(self, p: float) -> float:
        return abs(float(self.value))


class CylinderObservable:
    """
    A function of the symbols on a finite window W of lattice coordinates.

    The table has shape (a,) * |W|; axis k indexes the symbol at window[k]. Tables
    hold `Fraction` objects on the exact path and float64 otherwise.

    Attributes:
        window (tuple[GroupElement, ...]): Distinct coordinates.
        table (np.ndarray): Values per assignment.
        alphabet_size (int): a.
    """

    def __init__(self, window: Sequence[GroupElement], table: np.ndarray, alphabet_size: int | None = None):
        self.window = tuple(window)
        table = np.asarray(table)
        if len(set(self.window)) != len(self.window):
            raise ValueError(f"Window coordinates must be distinct: {self.window}")
        if len(self.window) > config.max_window:
            raise SizeGuardError("cylinder window", len(self.window), config.max_window)
        if table.ndim != len(self.window):
            raise DimensionMismatchError(len(self.window), table.ndim, "cylinder table rank")
        if self.window:
            dims = {g.dim for g in self.window}
            if len(dims) != 1:
                raise ValueError("Window coordinates must share one dimension")
            if len(set(table.shape)) != 1:
                raise ValueError(f"Table must have equal axes, got {table.shape}")
            alphabet_size = table.shape[0]
        if alphabet_size is None:
            raise ValueError("A constant cylinder needs an explicit alphabet size")
        if table.size > config.table_cap:
            raise SizeGuardError("cylinder table", table.size, config.table_cap)
        self.alphabet_size = alphabet_size
        self.table = table

    @classmethod
    def indicator(
            cls,
            window: Sequence[GroupElement],
            symbols: Sequence[int],
            alphabet_size: int,
            exact: bool = True
    ) -> CylinderObservable:
        """1 when x_{window[k]} = symbols[k] for every k."""
        if len(window) != len(symbols):
            raise DimensionMismatchError(len(window), len(symbols), "indicator symbols")
        shape = (alphabet_size,) * len(window)
        if exact:
            table = np.full(shape, Fraction(0), dtype=object)
            table[tuple(symbols)] = Fraction(1)
        else:
            table = np.zeros(shape, dtype=np.float64)
            table[tuple(symbols)] = 1.0
        return cls(window, table, alphabet_size)

    @classmethod
    def constant(cls, value: Number, alphabet_size: int) -> CylinderObservable:
        value = _exact_scalar(value)
        dtype = object if isinstance(value, Fraction) else np.float64
        return cls((), np.array(value, dtype=dtype), alphabet_size)

    @property
    def dim(self) -> int | None:
        return self.window[0].dim if self.window else None

    @property
    def exact(self) -> bool:
        return self.table.dtype == object

    @property
    def bound(self) -> float:
        return float(np.max(np.abs(self.float_table))) if self.table.size else 0.0

    @cached_property
    def float_table(self) -> np.ndarray:
        return np.asarray(self.table, dtype=np.float64)

    @cached_property
    def flat_float_table(self) -> np.ndarray:
        return self.float_table.reshape(-1)

    def translate(self, g: GroupElement) -> CylinderObservable:
        """f∘T^g, the cylinder on window W + g with the same table."""
        return CylinderObservable(tuple(w + g for w in self.window), self.table, self.alphabet_size)

    def marginalize(self, keep: Sequence[bool], prob: ProbabilityVector) -> CylinderObservable:
        """
        Integrates out the window coordinates whose `keep` flag is False under `prob`.

        The kept coordinates stay in window order. Exact tables stay exact only when
        `prob` is exact.
        """
        if prob.size != self.alphabet_size:
            raise DimensionMismatchError(self.alphabet_size, prob.size, "alphabet")
        table = self.table
        weights = prob.as_array()
        if table.dtype == object and not prob.exact:
            table = table.astype(np.float64)
        elif table.dtype != object:
            weights = weights.astype(np.float64)
        dtype = table.dtype
        for axis in sorted((k for k, flag in enumerate(keep) if not flag), reverse=True):
            shape = [1] * table.ndim
            shape[axis] = self.alphabet_size
            table = (table * weights.reshape(shape)).sum(axis=axis)
        kept = tuple(w for w, flag in zip(self.window, keep) if flag)
        return CylinderObservable(kept, np.asarray(table, dtype=dtype), self.alphabet_size)

    def extend(self, window: Sequence[GroupElement]) -> CylinderObservable:
        """
        The same function written on a larger window (a superset of the current one).

        Raises:
            ValueError: If a coordinate of the current window is missing from `window`.
        """
        window = tuple(window)
        if window == self.window:
            return self
        missing = [w for w in self.window if w not in window]
        if missing:
            raise ValueError(f"Target window lacks {[w.coords for w in missing]}")
        positions = [window.index(w) for w in self.window]
        order = sorted(range(len(positions)), key=lambda k: positions[k])
        table = np.transpose(self.table, order) if order else np.asarray(self.table)
        shape = [1] * len(window)
        for position in positions:
            shape[position] = self.alphabet_size
        expanded = np.broadcast_to(table.reshape(shape), (self.alphabet_size,) * len(window)).copy()
        return CylinderObservable(window, expanded, self.alphabet_size)

    def _aligned(self, other: CylinderObservable) -> tuple[np.ndarray, np.ndarray, tuple[GroupElement, ...]]:
        if other.alphabet_size != self.alphabet_size:
            raise DimensionMismatchError(self.alphabet_size, other.alphabet_size, "alphabet")
        window = self.window + tuple(w for w in other.window if w not in self.window)
        left, right = self.extend(window).table, other.extend(window).table
        if left.dtype != right.dtype:
            left, right = left.astype(np.float64), right.astype(np.float64)
        return left, right, window

    def __add__(self, other: CylinderObservable) -> CylinderObservable:
        left, right, window = self._aligned(other)
        return CylinderObservable(window, left + right, self.alphabet_size)

    def __sub__(self, other: CylinderObservable) -> CylinderObservable:
        left, right, window = self._aligned(other)
        return CylinderObservable(window, left - right, self.alphabet_size)

    def __mul__(self, other: CylinderObservable) -> CylinderObservable:
        left, right, window = self._aligned(other)
        return CylinderObservable(window, left * right, self.alphabet_size)

    def scaled(self, factor: Number) -> CylinderObservable:
        factor = _exact_scalar(factor)
        table = self.table
        if isinstance(factor, float) and table.dtype == object:
            table = table.astype(np.float64)
        return CylinderObservable(self.window, table * factor, self.alphabet_size)

    def to_float(self) -> CylinderObservable:
        return CylinderObservable(self.window, self.float_table.copy(), self.alphabet_size)

    def integral(self, prob: ProbabilityVector) -> Number:
        """Exact ∫f dμ under the product measure (Fraction on the exact path)."""
        result = self.marginalize([False] * len(self.window), prob).table
        value = result.item() if hasattr(result, "item") else result
        return value if isinstance(value, Fraction) else float(value)

    def lp_norm(self, prob: ProbabilityVector, p: float) -> float:
        absolute = CylinderObservable(self.window, np.abs(self.float_table) ** p, self.alphabet_size)
        return float(absolute.integral(prob)) ** (1.0 / p)

    def value_at(self, symbols: Sequence[int]) -> Number:
        value = self.table[tuple(symbols)] if self.window else self.table.item()
        return value

    def evaluate_symbols(self, symbols: Sequence[np.ndarray]) -> np.ndarray:
        """Vectorised lookup; symbols[k] is the array of symbols at window[k]."""
        if not self.window:
            return np.full(len(symbols[0]) if symbols else 1, float(self.table.item()), dtype=np.float64)
        index = np.zeros_like(symbols[0], dtype=np.int64)
        for column in symbols:
            index = index * self.alphabet_size + column
        return self.flat_float_table[index]

    def equals(self, other: CylinderObservable, tolerance: float = 0.0) -> bool:
        """Same function: same coordinates (in any order) and matching tables."""
        if set(self.window) != set(other.window):
            return False
        order = [other.window.index(w) for w in self.window]
        other_table = np.transpose(other.table, order) if order else other.table
        if self.exact and other.exact and tolerance == 0.0:
            return bool(np.all(self.table == other_table))
        return bool(np.allclose(self.float_table, np.asarray(other_table, dtype=np.float64), rtol=0.0,
                                atol=max(tolerance, 0.0)))

    def __repr__(self) -> str:
        return f"CylinderObservable(window={[w.coords for w in self.window]}, a={self.alphabet_size})"


@dataclass(frozen=True)
class BoxIndicator:
    """
    scale * indicator of the box prod_c [low_c, high_c) on the discretised torus.

    Attributes:
        lows (tuple[int, ...]): Fixed-point lower corners.
        highs (tuple[int, ...]): Fixed-point upper corners, low_c <= high_c <= 2^64.
        scale (Fraction | float): Multiplier.
    """

    lows: tuple[int, ...]
    highs: tuple[int, ...]
    scale: Number = Fraction(1)

    def __post_init__(self):
        object.__setattr__(self, "scale", _exact_scalar(self.scale))
        if len(self.lows) != len(self.highs):
            raise DimensionMismatchError(len(self.lows), len(self.highs), "box corners")
        for low, high in zip(self.lows, self.highs):
            if not 0 <= low <= high <= TWO_64:
                raise ValueError(f"Box side [{low}, {high}) is not inside [0, 2^64]")

    @property
    def k(self) -> int:
        return len(self.lows)

    @property
    def bound(self) -> float:
        return abs(float(self.scale))

    def volume(self) -> Fraction:
        volume = Fraction(1)
        for low, high in zip(self.lows, self.highs):
            volume *= Fraction(high - low, TWO_64)
        return volume

    def integral(self) -> Number:
        return self.scale * self.volume()

    def lp_norm(self, p: float) -> float:
        return abs(float(self.scale)) * float(self.volume()) ** (1.0 / p)

    def scaled(self, factor: Number) -> BoxIndicator:
        return BoxIndicator(self.lows, self.highs, self.scale * _exact_scalar(factor))

    def value(self, coords: Sequence[int]) -> float:
        inside = all(low <= x < high for x, low, high in zip(coords, self.lows, self.highs))
        return float(self.scale) if inside else 0.0

    def values(self, coords: Sequence[np.ndarray]) -> np.ndarray:
        inside = np.ones(coords[0].shape, dtype=bool)
        for x, low, high in zip(coords, self.lows, self.highs):
            inside &= x >= np.uint64(low)
            if high < TWO_64:
                inside &= x < np.uint64(high)
        return inside * float(self.scale)


@dataclass(frozen=True)
class Character:
    """
    scale * Re exp(2πi <frequencies, x>) on the torus.

    Attributes:
        frequencies (tuple[int, ...]): Integer frequency vector.
        scale (Fraction | float): Multiplier.
    """

    frequencies: tuple[int, ...]
    scale: Number = Fraction(1)

    def __post_init__(self):
        object.__setattr__(self, "scale", _exact_scalar(self.scale))

    @property
    def k(self) -> int:
        return len(self.frequencies)

    @property
    def bound(self) -> float:
        return abs(float(self.scale))

    def is_trivial(self) -> bool:
        return not any(self.frequencies)

    def integral(self) -> Number:
        return self.scale if self.is_trivial() else Fraction(0) * self.scale

    def lp_norm(self, p: float) -> float:
        if self.is_trivial():
            return abs(float(self.scale))
        # E|cos 2πU|^p for U uniform on [0, 1)
        moment = math.gamma((p + 1) / 2) / (math.sqrt(math.pi) * math.gamma(p / 2 + 1))
        return abs(float(self.scale)) * moment ** (1.0 / p)

    def scaled(self, factor: Number) -> Character:
        return Character(self.frequencies, self.scale * _exact_scalar(factor))

    def value(self, coords: Sequence[int]) -> float:
        phase = sum(f * x for f, x in zip(self.frequencies, coords)) & MASK64
        return float(self.scale) * math.cos(2.0 * math.pi * phase / TWO_64)

    def values(self, coords: Sequence[np.ndarray]) -> np.ndarray:
        phase = np.zeros(coords[0].shape, dtype=np.uint64)
        for f, x in zip(self.frequencies, coords):
            phase = phase + np.uint64(f & MASK64) * x
        return float(self.scale) * np.cos(2.0 * np.pi * (phase.astype(np.float64) / float(TWO_64)))


TorusObservable = Union[BoxIndicator, Character]


@dataclass(frozen=True)
class ProductObservable:
    """u ⊗ v on a product system: u on the Bernoulli factor, v on the torus factor."""

    u: Union[CylinderObservable, ConstantObservable]
    v: Union[BoxIndicator, Character, ConstantObservable]

    @property
    def bound(self) -> float:
        return self.u.bound * self.v.bound


Observable = Union[ConstantObservable, CylinderObservable, BoxIndicator, Character, ProductObservable]


# ---------------------------------------------------------------------------
# Systems
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BernoulliShiftSystem:
    """
    Bernoulli shift on alphabet^{Z^d} with i.i.d. symbols of law `prob`.

    Attributes:
        d (int): Dimension of the acting group.
        prob (ProbabilityVector): Symbol law.
        master_seed (int): 64-bit seed of the experiment.
    """

    d: int
    prob: ProbabilityVector
    master_seed: int = 0

    is_k_system = True

    @property
    def alphabet_size(self) -> int:
        return self.prob.size

    def sample_point(self, stream_id: int) -> BernoulliPoint:
        return BernoulliPoint(seed=point_seed(self.master_seed, stream_id), offset=GroupElement.zero(self.d))

    def act(self, g: GroupElement, x: BernoulliPoint) -> BernoulliPoint:
        if g.dim != self.d:
            raise DimensionMismatchError(self.d, g.dim, "acting element")
        return BernoulliPoint(seed=x.seed, offset=x.offset + g)

    def symbol_at(self, x: BernoulliPoint, v: GroupElement) -> int:
        return self.prob.symbol(field_hash(x.seed, (x.offset + v).coords))

    def _check_observable(self, obs) -> None:
        if isinstance(obs, ConstantObservable):
            return
        if not isinstance(obs, CylinderObservable):
            raise IncompatibleObservableError(f"{type(obs).__name__} cannot be evaluated on a Bernoulli shift")
        if obs.alphabet_size != self.alphabet_size:
            raise IncompatibleObservableError(
                f"Observable alphabet {obs.alphabet_size} differs from system alphabet {self.alphabet_size}"
            )
        if obs.window and obs.dim != self.d:
            raise IncompatibleObservableError(f"Observable dimension {obs.dim} differs from system dimension {self.d}")

    def evaluate(self, obs: Observable, x: BernoulliPoint) -> float:
        self._check_observable(obs)
        if isinstance(obs, ConstantObservable):
            return float(obs.value)
        symbols = [self.symbol_at(x, w) for w in obs.window]
        return float(obs.value_at(symbols))

    def orbit_values(self, obs: Observable, x: BernoulliPoint, block: OrbitBlock) -> np.ndarray:
        """f(T^{e_t} x) for every exponent e_t of the block."""
        self._check_observable(obs)
        if isinstance(obs, ConstantObservable) or not obs.window:
            value = float(obs.value) if isinstance(obs, ConstantObservable) else float(obs.table.item())
            return np.full(block.size, value, dtype=np.float64)
        for i in range(self.d):
            reach = block.max_abs[i] + abs(x.offset[i]) + max(abs(w[i]) for w in obs.window)
            if reach > INT128_MAX:
                raise ArithmeticOverflowError("orbit coordinate leaves the signed 128-bit range",
                                              dimension=i, reach=reach)
        symbols = []
        for w in obs.window:
            components = [
                add128_array(low, high, x.offset[i] + w[i])
                for i, (low, high) in enumerate(block.split)
            ]
            symbols.append(self.prob.symbols(field_hash_array(x.seed, components)))
        return obs.evaluate_symbols(symbols)

    def sample_blocks(self, stream_ids: np.ndarray, box: Sequence[GroupElement]) -> np.ndarray:
        """Symbols of many sampled points on the coordinates of `box`, shape (len(stream_ids), len(box))."""
        seeds = point_seed_array(self.master_seed, stream_ids)
        columns = []
        for v in box:
            components = [tuple(np.uint64(part) for part in split128(c)) for c in v.coords]
            columns.append(self.prob.symbols(field_hash_array(seeds, components)))
        return np.stack(columns, axis=1)


@dataclass(frozen=True)
class TorusRotationSystem:
    """
    Z^d acting on the k-torus by T_i x = x + alpha_i in 64-bit fixed point.

    Attributes:
        d (int): Dimension of the acting group.
        k (int): Torus dimension.
        alphas (tuple[tuple[int, ...], ...]): d x k fixed-point rotation vectors.
        master_seed (int): 64-bit seed.
    """

    d: int
    k: int
    alphas: tuple[tuple[int, ...], ...]
    master_seed: int = 0

    is_k_system = False

    def __post_init__(self):
        if len(self.alphas) != self.d:
            raise DimensionMismatchError(self.d, len(self.alphas), "rotation rows")
        for row in self.alphas:
            if len(row) != self.k:
                raise DimensionMismatchError(self.k, len(row), "rotation vector")
            if any(not 0 <= a < TWO_64 for a in row):
                raise ValueError("Rotation coordinates must lie in [0, 2^64)")

    def sample_point(self, stream_id: int) -> TorusPoint:
        seed = point_seed(self.master_seed, stream_id)
        return TorusPoint(tuple(mix64(seed ^ c) for c in range(self.k)))

    def act(self, g: GroupElement, x: TorusPoint) -> TorusPoint:
        if g.dim != self.d:
            raise DimensionMismatchError(self.d, g.dim, "acting element")
        coords = []
        for c, value in enumerate(x.coords):
            shift = sum(g_i * row[c] for g_i, row in zip(g.coords, self.alphas))
            coords.append((value + shift) & MASK64)
        return TorusPoint(tuple(coords))

    def _check_observable(self, obs) -> None:
        if isinstance(obs, ConstantObservable):
            return
        if not isinstance(obs, (BoxIndicator, Character)):
            raise IncompatibleObservableError(f"{type(obs).__name__} cannot be evaluated on a torus rotation")
        if obs.k != self.k:
            raise IncompatibleObservableError(f"Observable torus dimension {obs.k} differs from {self.k}")

    def evaluate(self, obs: Observable, x: TorusPoint) -> float:
        self._check_observable(obs)
        if isinstance(obs, ConstantObservable):
            return float(obs.value)
        return obs.value(x.coords)

    def orbit_coords(self, x: TorusPoint, block: OrbitBlock) -> list[np.ndarray]:
        coords = []
        for c, value in enumerate(x.coords):
            acc = np.full(block.size, value, dtype=np.uint64)
            for low, row in zip(block.low, self.alphas):
                acc = acc + low * np.uint64(row[c])
            coords.append(acc)
        return coords

    def orbit_values(self, obs: Observable, x: TorusPoint, block: OrbitBlock) -> np.ndarray:
        self._check_observable(obs)
        if isinstance(obs, ConstantObservable):
            return np.full(block.size, float(obs.value), dtype=np.float64)
        return obs.values(self.orbit_coords(x, block))


@dataclass(frozen=True)
class ProductSystem:
    """Bernoulli factor times torus factor, acted on componentwise by the same Z^d."""

    first: BernoulliShiftSystem
    second: TorusRotationSystem

    is_k_system = False

    def __post_init__(self):
        if self.first.d != self.second.d:
            raise DimensionMismatchError(self.first.d, self.second.d, "factor acting dimension")

    @property
    def d(self) -> int:
        return self.first.d

    def sample_point(self, stream_id: int) -> ProductPoint:
        return ProductPoint(self.first.sample_point(stream_id), self.second.sample_point(stream_id))

    def act(self, g: GroupElement, x: ProductPoint) -> ProductPoint:
        return ProductPoint(self.first.act(g, x.first), self.second.act(g, x.second))

    def _check_observable(self, obs) -> None:
        if not isinstance(obs, (ProductObservable, ConstantObservable)):
            raise IncompatibleObservableError(f"{type(obs).__name__} cannot be evaluated on a product system")

    def evaluate(self, obs: Observable, x: ProductPoint) -> float:
        self._check_observable(obs)
        if isinstance(obs, ConstantObservable):
            return float(obs.value)
        return self.first.evaluate(obs.u, x.first) * self.second.evaluate(obs.v, x.second)

    def orbit_values(self, obs: Observable, x: ProductPoint, block: OrbitBlock) -> np.ndarray:
        self._check_observable(obs)
        if isinstance(obs, ConstantObservable):
            return np.full(block.size, float(obs.value), dtype=np.float64)
        return self.first.orbit_values(obs.u, x.first, block) * self.second.orbit_values(obs.v, x.second, block)


SystemInstance = Union[BernoulliShiftSystem, TorusRotationSystem, ProductSystem]


def sample_point(sys: SystemInstance, stream_id: int) -> Point:
    """Deterministic sample of μ for (master_seed, stream_id)."""
    return sys.sample_point(stream_id)


def act(sys: SystemInstance, g: GroupElement, x: Point) -> Point:
    """The Z^d action T^g x."""
    return sys.act(g, x)


def evaluate(obs: Observable, sys: SystemInstance, x: Point) -> float:
    """f(x) for an observable compatible with the system."""
    return sys.evaluate(obs, x)


def integral(obs: Observable, sys: SystemInstance) -> Number:
    """Exact ∫f dμ (Fraction whenever every ingredient is rational)."""
    if isinstance(obs, ConstantObservable):
        return obs.value
    if isinstance(obs, CylinderObservable):
        prob = sys.prob if isinstance(sys, BernoulliShiftSystem) else sys.first.prob
        return obs.integral(prob)
    if isinstance(obs, (BoxIndicator, Character)):
        return obs.integral()
    if isinstance(obs, ProductObservable):
        if not isinstance(sys, ProductSystem):
            raise IncompatibleObservableError("Product observables need a product system")
        return integral(obs.u, sys.first) * integral(obs.v, sys.second)
    raise IncompatibleObservableError(f"Unknown observable {type(obs).__name__}")


def lp_norm(obs: Observable, sys: SystemInstance, p: float) -> float:
    """Exact ‖f‖_p (closed forms for torus observables, summation for cylinders)."""
    if isinstance(obs, ConstantObservable):
        return obs.lp_norm(p)
    if isinstance(obs, CylinderObservable):
        prob = sys.prob if isinstance(sys, BernoulliShiftSystem) else sys.first.prob
        return obs.lp_norm(prob, p)
    if isinstance(obs, (BoxIndicator, Character)):
        return obs.lp_norm(p)
    if isinstance(obs, ProductObservable):
        return lp_norm(obs.u, sys.first, p) * lp_norm(obs.v, sys.second, p)
    raise IncompatibleObservableError(f"Unknown observable {type(obs).__name__}")


def pinsker_project(obs: Observable, sys: ProductSystem | None = None) -> Union[BoxIndicator, Character, ConstantObservable]:
    """
    E(u ⊗ v | Pinsker factor) = (∫u dμ_1) · v for the Bernoulli x torus product.

    Relies on the product-Pinsker identity P(X x Y) = P(X) ⊗ P(Y) with P(X) trivial
    (Bernoulli) and P(Y) everything (rotation).

    Raises:
        IncompatibleObservableError: If `obs` is not a product observable.
    """
    if not isinstance(obs, ProductObservable):
        raise IncompatibleObservableError(f"pinsker_project needs a product observable, got {type(obs).__name__}")
    if isinstance(obs.u, ConstantObservable):
        mean = obs.u.value
    else:
        if sys is None:
            raise IncompatibleObservableError("Projecting a cylinder factor needs the product system")
        mean = obs.u.integral(sys.first.prob)
    if isinstance(obs.v, ConstantObservable):
        return ConstantObservable(mean * obs.v.value)
    return obs.v.scaled(mean)
