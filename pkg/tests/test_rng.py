import math

import pytest

from heurevo.rng import Pcg32, weighted_index


def test_default_stream_is_reproducible():
    a = Pcg32(42)
    b = Pcg32(42)
    assert [a.next_u32() for _ in range(8)] == [b.next_u32() for _ in range(8)]


def test_known_values_are_frozen():
    # pinned outputs guard against accidental algorithm changes; any edit to
    # the generator is a format break for journals and instance files
    rng = Pcg32(seed=12345, stream=0)
    assert [rng.next_u32() for _ in range(4)] == [
        304133009,
        2564000426,
        1539170214,
        2267019874,
    ]


def test_streams_differ():
    a = Pcg32(7, stream=1)
    b = Pcg32(7, stream=2)
    assert [a.next_u32() for _ in range(4)] != [b.next_u32() for _ in range(4)]


def test_random_in_unit_interval():
    rng = Pcg32(3)
    values = [rng.random() for _ in range(10_000)]
    assert all(0.0 <= v < 1.0 for v in values)
    assert abs(sum(values) / len(values) - 0.5) < 0.02


def test_randrange_unbiased_bounds():
    rng = Pcg32(9)
    draws = [rng.randrange(7) for _ in range(20_000)]
    assert set(draws) == set(range(7))
    counts = [draws.count(k) for k in range(7)]
    for c in counts:
        assert abs(c / len(draws) - 1 / 7) < 0.02


def test_randrange_rejects_nonpositive():
    with pytest.raises(ValueError):
        Pcg32(1).randrange(0)


def test_randint_inclusive():
    rng = Pcg32(4)
    draws = {rng.randint(1, 9) for _ in range(5000)}
    assert draws == set(range(1, 10))


def test_weibull_moment():
    rng = Pcg32(11)
    n = 50_000
    mean = sum(rng.weibull(3.0, 45.0) for _ in range(n)) / n
    expected = 45.0 * math.gamma(1 + 1 / 3.0)
    assert abs(mean - expected) / expected < 0.02


def test_state_roundtrip():
    rng = Pcg32(5, stream=3)
    rng.next_u32()
    state = rng.getstate()
    expected = [rng.next_u32() for _ in range(5)]
    rng.setstate(state)
    assert [rng.next_u32() for _ in range(5)] == expected


def test_weighted_index_distribution():
    rng = Pcg32(21)
    counts = [0, 0, 0]
    for _ in range(30_000):
        counts[weighted_index([1.0, 2.0, 1.0], rng)] += 1
    assert abs(counts[1] / 30_000 - 0.5) < 0.02


def test_weighted_index_rejects_bad_weights():
    rng = Pcg32(1)
    with pytest.raises(ValueError):
        weighted_index([0.0, 0.0], rng)
    with pytest.raises(ValueError):
        weighted_index([-1.0, 2.0], rng)
