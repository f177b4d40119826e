import itertools
from fractions import Fraction

import numpy as np
import pytest

from codedcaching.caching import (
    CachingConfig,
    ConfigError,
    FileLibrary,
    IntegrityError,
    canonical_subsets,
    deliver,
    dump_batch,
    dump_partition,
    kappa_units,
    load_batch,
    load_partition,
    place_bernoulli,
    place_idealized,
    rate_formula,
    unit_split,
    user_decode,
    zero_error_rate,
)

from conftest import make_partition

PS = ["1/4", "1/3", "1/2", "2/3", "3/4"]


def mask(*users):
    """1-based users to a bitmask."""
    return sum(1 << (u - 1) for u in users)


def test_config_validation():
    with pytest.raises(ConfigError):
        CachingConfig(2, 3, Fraction(1, 2), 8)
    with pytest.raises(ConfigError, match="multiple of b\\^K = 64"):
        CachingConfig(4, 3, Fraction(1, 4), 100)
    with pytest.raises(ConfigError):
        CachingConfig(2, 2, Fraction(3, 2), 4)
    CachingConfig(4, 3, Fraction(1, 4), 100, "bernoulli")


def test_canonical_order():
    assert canonical_subsets(3) == [mask(1, 2, 3), mask(1, 2), mask(1, 3), mask(2, 3), mask(1), mask(2), mask(3), 0]


def test_idealized_example2_sizes(example2):
    part, _ = example2
    for i in range(2):
        for S in range(4):
            assert part.size(i, S) == 1


def test_idealized_example3_sizes(example3):
    part, _ = example3
    expected = {0: 27, mask(1): 9, mask(2): 9, mask(3): 9, mask(1, 2): 3, mask(1, 3): 3, mask(2, 3): 3, mask(1, 2, 3): 1}
    for i in range(4):
        assert {S: part.size(i, S) for S in range(8)} == expected


def test_no_caching_puts_everything_in_empty_subfile():
    part, lib = make_partition(3, 2, 0, 5)
    for i in range(3):
        assert np.array_equal(part.payload(i, 0), lib[i])
        assert all(part.size(i, S) == 0 for S in range(1, 4))


@pytest.mark.parametrize("N, K", [(2, 2), (4, 3), (5, 4)])
@pytest.mark.parametrize("p", PS)
def test_partition_exact(N, K, p):
    part, lib = make_partition(N, K, p)
    c = part.config
    for i in range(N):
        assert np.array_equal(part.reconstruct(i), lib[i])
        assert sum(part.size(i, S) for S in range(1 << K)) == c.F
        for S in range(1 << K):
            assert part.size(i, S) == c.a ** S.bit_count() * (c.b - c.a) ** (K - S.bit_count()) * c.F // c.b**K
    for k in range(K):
        assert part.cache_bits(k) == N * c.F * c.a // c.b


def test_bernoulli_extremes():
    for p, full in [(1, (1 << 3) - 1), (0, 0)]:
        config = CachingConfig(3, 3, Fraction(p), 50, "bernoulli", seed=4)
        part = place_bernoulli(config, FileLibrary.random(3, 50, 1))
        for i in range(3):
            assert part.size(i, full) == 50


def test_bernoulli_concentration():
    F = 10**5
    config = CachingConfig(2, 2, Fraction(1, 2), F, "bernoulli", seed=0)
    part = place_bernoulli(config, FileLibrary.random(2, F, 0))
    # binomial std of the fraction is sqrt(.25*.75/F) ~ 0.0014, so 0.01 is ~7 sigma
    assert abs(part.size(0, 0) / F - 0.25) < 0.01


def test_place_mode_guards():
    config = CachingConfig(2, 2, Fraction(1, 2), 8, "bernoulli")
    with pytest.raises(ConfigError):
        place_idealized(config, FileLibrary.random(2, 8))


def test_deliver_example2(example2):
    part, _ = example2
    batch = deliver(part, (0, 1))
    X = part.payload
    expected = [X(0, mask(2)) ^ X(1, mask(1)), X(0, 0), X(1, 0)]
    assert [t.subset for t in batch] == [mask(1, 2), mask(1), mask(2)]
    assert all(np.array_equal(t.payload, e) for t, e in zip(batch, expected))


def test_deliver_example3(example3):
    part, _ = example3
    batch = deliver(part, (0, 1, 2))
    X = part.payload
    expected = {
        mask(1, 2, 3): X(0, mask(2, 3)) ^ X(1, mask(1, 3)) ^ X(2, mask(1, 2)),
        mask(1, 2): X(0, mask(2)) ^ X(1, mask(1)),
        mask(2, 3): X(1, mask(3)) ^ X(2, mask(2)),
        mask(1, 3): X(0, mask(3)) ^ X(2, mask(1)),
        mask(1): X(0, 0),
        mask(2): X(1, 0),
        mask(3): X(2, 0),
    }
    assert len(batch) == 7
    for t in batch:
        assert np.array_equal(t.payload, expected[t.subset])
    assert batch.total_bits == 111
    assert len(unit_split(batch)) == 111


def test_deliver_without_caching_sends_whole_files():
    part, lib = make_partition(3, 3, 0, 7)
    batch = deliver(part, (2, 0, 1))
    assert len(batch) == 3 and batch.total_bits == 21
    assert np.array_equal(batch.items[0].payload, lib[2])


def test_deliver_rejects_bad_demand(example2):
    part, _ = example2
    with pytest.raises(ConfigError):
        deliver(part, (0, 2))
    with pytest.raises(ConfigError):
        deliver(part, (0,))


def test_batch_labels_ordered(example3):
    part, _ = example3
    sizes = [t.subset.bit_count() for t in deliver(part, (3, 1, 0))]
    assert sizes == sorted(sizes, reverse=True)


def test_user_decode_example2(example2):
    part, lib = example2
    batch = deliver(part, (0, 1))
    assert np.array_equal(user_decode(part, batch, (0, 1), 0), lib[0])
    assert np.array_equal(user_decode(part, batch, (0, 1), 1), lib[1])


def test_user_decode_detects_inconsistent_inputs():
    part_a, _ = make_partition(3, 3, "1/2", 400, "bernoulli", 1)
    part_b, _ = make_partition(3, 3, "1/2", 400, "bernoulli", 2)
    batch = deliver(part_a, (0, 1, 2))
    with pytest.raises(IntegrityError):
        user_decode(part_b, batch, (0, 1, 2), 0)


def _all_demands(N, K):
    return itertools.product(range(N), repeat=K)


@pytest.mark.parametrize("N, K", [(1, 1), (2, 2), (3, 2), (3, 3), (4, 3), (6, 2)])
@pytest.mark.parametrize("p", ["0", "1/3", "1/2", "3/4", "1"])
def test_idealized_round_trip_all_demands(N, K, p):
    part, lib = make_partition(N, K, p)
    for d in _all_demands(N, K):
        batch = deliver(part, d)
        for k in range(K):
            assert np.array_equal(user_decode(part, batch, d, k), lib[d[k]])


@pytest.mark.parametrize("N, K", [(2, 2), (4, 3), (5, 5), (6, 4)])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_bernoulli_round_trip(N, K, seed):
    rng = np.random.default_rng(seed)
    part, lib = make_partition(N, K, "1/3", 301, "bernoulli", seed)
    for _ in range(5):
        d = tuple(int(x) for x in rng.integers(0, N, size=K))
        batch = deliver(part, d)
        for k in range(K):
            assert np.array_equal(user_decode(part, batch, d, k), lib[d[k]])


@pytest.mark.parametrize("N, K", [(2, 2), (3, 3), (5, 4), (6, 5)])
@pytest.mark.parametrize("p", PS)
def test_delivery_bits_equal_rate_formula(N, K, p):
    part, _ = make_partition(N, K, p)
    for d in itertools.islice(itertools.permutations(range(N), K), 30):
        assert deliver(part, d).total_bits == zero_error_rate(part.config) * part.config.F
    assert kappa_units(part.config) * part.config.unit == zero_error_rate(part.config) * part.config.F


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_bernoulli_delivery_converges(seed):
    F = 10**5
    part, _ = make_partition(4, 3, "1/4", F, "bernoulli", seed)
    rate = Fraction(deliver(part, (0, 1, 2)).total_bits, F)
    target = Fraction(111, 64)
    assert abs(rate - target) / target < Fraction(2, 100)


def test_zero_error_rate_values():
    assert rate_formula(Fraction(1, 2), 2) == Fraction(3, 4)
    assert rate_formula(Fraction(1, 4), 3) == Fraction(111, 64)
    assert rate_formula(Fraction(1, 2), 1) == Fraction(1, 2)
    with pytest.raises(ConfigError):
        rate_formula(Fraction(0), 3)


def test_unit_split():
    part, _ = make_partition(2, 2, "1/2", 4)
    syms = unit_split(deliver(part, (0, 1)))
    assert len(syms) == 3 and all(s.size == 1 for s in syms)
    part, _ = make_partition(2, 2, "1/2", 12)
    assert len(unit_split(deliver(part, (0, 1)))) == 3
    empty = deliver(make_partition(2, 2, "1", 4)[0], (0, 1))
    assert unit_split(empty) == []
    ragged = deliver(make_partition(2, 2, "1/2", 11, "bernoulli")[0], (0, 1))
    ragged = type(ragged)(ragged.items, 4)
    with pytest.raises(ConfigError):
        unit_split(ragged)
    assert sum(s.size for s in unit_split(ragged, pad=True)) >= ragged.total_bits


def test_partition_text_roundtrip(example3):
    part, _ = example3
    text = dump_partition(part)
    assert text.splitlines()[0] == "4 3 1 4 64 idealized"
    back = load_partition(text)
    for key, v in part.payloads.items():
        assert np.array_equal(back.payloads[key], v)


def test_batch_text_roundtrip():
    part, _ = make_partition(3, 3, "1/3", 200, "bernoulli", 5)
    batch = deliver(part, (2, 0, 1))
    back = load_batch(dump_batch(batch))
    assert back.header() == batch.header()
    assert all(np.array_equal(a.payload, b.payload) for a, b in zip(back, batch))
