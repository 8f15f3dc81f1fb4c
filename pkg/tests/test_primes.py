import math

import pytest
from hypothesis import given, settings, strategies as st

from ergodic.primes import PrimeStream


def is_prime(n: int) -> bool:
    return n >= 2 and all(n % p for p in range(2, math.isqrt(n) + 1))


def test_first_primes():
    stream = PrimeStream()
    assert stream.nth(0) == 2
    assert stream.nth(4) == 11
    assert stream.take(10).tolist() == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]


def test_up_to():
    assert PrimeStream().up_to(30).tolist() == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
    assert PrimeStream().up_to(1).tolist() == []


def test_iteration_is_ordered():
    stream = iter(PrimeStream(segment_size=8))
    assert [next(stream) for _ in range(6)] == [2, 3, 5, 7, 11, 13]


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=2, max_value=97))
def test_segment_size_does_not_change_the_stream(segment_size):
    assert PrimeStream(segment_size).take(300).tolist() == PrimeStream().take(300).tolist()


def test_every_sieved_number_is_prime_and_none_is_missed():
    primes = PrimeStream(segment_size=50).up_to(5000).tolist()
    assert primes == [n for n in range(5001) if is_prime(n)]
    assert len(primes) == 669


def test_segment_size_must_be_at_least_two():
    with pytest.raises(ValueError):
        PrimeStream(segment_size=1)
