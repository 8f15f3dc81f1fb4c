"""Checked 128-bit integers and the keyed-mix random field.

Exact values live in Python integers and are checked against the signed
128-bit range after every operation that can grow them. Hot paths split such
integers into two 64-bit halves and hash them with numpy `uint64` arithmetic,
which wraps modulo 2^64 exactly like the reference mixer.

Random field (bit-exact, reproducible across implementations):

    mix(z):  z += 0x9E3779B97F4A7C15
             z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
             z = (z ^ (z >> 27)) * 0x94D049BB133111EB
             return z ^ (z >> 31)                      (all mod 2^64)

    point seed:          mix(master_seed ^ mix(stream_id))
    symbol hash at v:    h = point_seed; for c in v: h = mix(h ^ low64(c)); h = mix(h ^ high64(c))
"""

from collections.abc import Iterable, Sequence

import numpy as np

from ergodic.errors import ArithmeticOverflowError

MASK64 = (1 << 64) - 1
INT128_MIN = -(1 << 127)
INT128_MAX = (1 << 127) - 1

GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_MIX_M1 = 0xBF58476D1CE4E5B9
_MIX_M2 = 0x94D049BB133111EB

_U_GAMMA = np.uint64(GOLDEN_GAMMA)
_U_M1 = np.uint64(_MIX_M1)
_U_M2 = np.uint64(_MIX_M2)
_U30 = np.uint64(30)
_U27 = np.uint64(27)
_U31 = np.uint64(31)


def check_int128(value: int, what: str = "value", **operands) -> int:
    """
    Returns `value` unchanged if it fits the signed 128-bit range.

    Raises:
        ArithmeticOverflowError: If the value does not fit.
    """
    if value < INT128_MIN or value > INT128_MAX:
        raise ArithmeticOverflowError(f"{what} leaves the signed 128-bit range", value=value, **operands)
    return value


def checked_add(a: int, b: int, what: str = "sum") -> int:
    return check_int128(a + b, what, a=a, b=b)


def checked_mul(a: int, b: int, what: str = "product") -> int:
    return check_int128(a * b, what, a=a, b=b)


def mix64(z: int) -> int:
    """Scalar 64-bit mixer on Python integers."""
    z = (z + GOLDEN_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * _MIX_M1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX_M2) & MASK64
    return z ^ (z >> 31)


def mix64_array(z: np.ndarray) -> np.ndarray:
    """Vectorised mixer; `z` must have dtype uint64. Returns a new array."""
    z = z + _U_GAMMA
    z = (z ^ (z >> _U30)) * _U_M1
    z = (z ^ (z >> _U27)) * _U_M2
    return z ^ (z >> _U31)


def split128(value: int) -> tuple[int, int]:
    """Two's complement halves (low64, high64) of a signed 128-bit integer."""
    check_int128(value, "coordinate")
    return value & MASK64, (value >> 64) & MASK64


def split128_array(values: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """Splits checked integers into low and high `uint64` arrays."""
    low = np.fromiter((v & MASK64 for v in values), dtype=np.uint64, count=len(values))
    high = np.fromiter(((v >> 64) & MASK64 for v in values), dtype=np.uint64, count=len(values))
    return low, high


def add128_array(
        low: np.ndarray,
        high: np.ndarray,
        shift: int
) -> tuple[np.ndarray, np.ndarray]:
    """Adds a constant to split 128-bit values, propagating the carry (wraps modulo 2^128)."""
    shift_low, shift_high = shift & MASK64, (shift >> 64) & MASK64
    new_low = low + np.uint64(shift_low)
    carry = (new_low < low).astype(np.uint64)
    new_high = high + np.uint64(shift_high) + carry
    return new_low, new_high


def point_seed(master_seed: int, stream_id: int) -> int:
    """Seed of the sample point drawn for `stream_id`."""
    return mix64((master_seed & MASK64) ^ mix64(stream_id & MASK64))


def point_seed_array(master_seed: int, stream_ids: np.ndarray) -> np.ndarray:
    """Vectorised `point_seed` over a `uint64` array of stream ids."""
    return mix64_array(np.uint64(master_seed & MASK64) ^ mix64_array(stream_ids.astype(np.uint64)))


def field_hash(seed: int, coordinate: Iterable[int]) -> int:
    """Keyed hash of one lattice coordinate (scalar reference path)."""
    h = seed & MASK64
    for component in coordinate:
        low, high = split128(component)
        h = mix64(h ^ low)
        h = mix64(h ^ high)
    return h


def field_hash_array(
        seed: int | np.ndarray,
        components: Sequence[tuple[np.ndarray, np.ndarray]]
) -> np.ndarray:
    """
    Vectorised keyed hash of many coordinates.

    Args:
        seed (int | np.ndarray): Point seed, or one seed per row as a `uint64` array.
        components (Sequence[tuple[np.ndarray, np.ndarray]]): One (low, high) pair of
            `uint64` arrays (or `uint64` scalars) per lattice dimension, broadcastable
            against the seed.

    Returns:
        np.ndarray: `uint64` hashes, one per coordinate.
    """
    if isinstance(seed, np.ndarray):
        h = seed.astype(np.uint64, copy=True)
    else:
        size = np.broadcast(*[part for pair in components for part in pair]).shape if components else (1,)
        h = np.full(size, seed & MASK64, dtype=np.uint64)
    for low, high in components:
        h = mix64_array(h ^ low)
        h = mix64_array(h ^ high)
    return h
