import itertools
from fractions import Fraction

import numpy as np
import pytest

from codedcaching import blockcodes as bc
from codedcaching.caching import CachingConfig, deliver, unit_split, user_decode, zero_error_rate
from codedcaching.ecc import (
    ADVERSARIAL,
    ChannelSpec,
    adversarial_failures,
    build_scheme,
    correct_and_decode,
    dump_encoded,
    load_encoded,
    sweep,
    transmit,
    worst_case_rate,
)

from conftest import make_partition


def mask(*users):
    return sum(1 << (u - 1) for u in users)


def test_example2_six_transmissions(example2):
    part, _ = example2
    X = part.payload
    scheme, enc = build_scheme(part, (0, 1), 1)
    assert scheme.code.params == (6, 3, 3)
    T1 = X(0, mask(2)) ^ X(1, mask(1))
    T2, T3 = X(0, 0), X(1, 0)
    expected = [T1, T2, T3, T1 ^ T2, T1 ^ T3, T2 ^ T3]
    assert enc.shape == (6, 1)
    assert all(np.array_equal(enc[j], e) for j, e in enumerate(expected))


def test_example3_code_length(example3):
    part, _ = example3
    scheme, enc = build_scheme(part, (0, 1, 2), 1)
    assert enc.shape[0] == 118 and scheme.code.params == (118, 111, 3)


@pytest.mark.parametrize("N, K, p", [(2, 2, "1/2"), (4, 3, "1/4"), (3, 2, "2/3")])
def test_delta_zero_is_identity(N, K, p):
    part, _ = make_partition(N, K, p, None)
    d = tuple(range(K))
    scheme, enc = build_scheme(part, d, 0)
    assert np.array_equal(enc, np.stack(unit_split(deliver(part, d))))
    assert scheme.n == scheme.kappa_units


def test_transmit_channel():
    enc = np.zeros((6, 3), dtype=np.uint8)
    assert np.array_equal(transmit(enc, ChannelSpec(0)), enc)
    rx = transmit(enc, ChannelSpec(1, seed=5))
    assert (rx != enc).any(axis=1).sum() == 1
    assert np.array_equal(transmit(enc, ChannelSpec(2, seed=9)), transmit(enc, ChannelSpec(2, seed=9)))
    with pytest.raises(ValueError):
        transmit(enc, ChannelSpec(1, ADVERSARIAL))


def test_sweep_counts():
    enc = np.zeros((6, 1), dtype=np.uint8)
    assert len(list(sweep(enc, 1))) == 6
    enc = np.zeros((5, 2), dtype=np.uint8)
    assert len(list(sweep(enc, 2))) == 5 * 3 + 10 * 9
    enc = np.zeros((4, 8), dtype=np.uint8)
    outs = list(sweep(enc, 1))
    assert len(outs) == 4 and all(rx.sum() == 8 for _, rx in outs)


def test_example2_flip_T4(example2):
    part, lib = example2
    scheme, enc = build_scheme(part, (0, 1), 1)
    rx = enc.copy()
    rx[3] ^= 1
    assert np.array_equal(correct_and_decode(rx, scheme, part, (0, 1), 0), lib[0])


def test_clean_channel_matches_plain_decode(example3):
    part, _ = example3
    d = (3, 0, 2)
    scheme, enc = build_scheme(part, d, 1)
    batch = deliver(part, d)
    for k in range(3):
        assert np.array_equal(correct_and_decode(enc, scheme, part, d, k), user_decode(part, batch, d, k))


def test_too_many_errors_detected_or_wrong(example2):
    part, _ = example2
    scheme, enc = build_scheme(part, (0, 1), 1)
    rx = enc.copy()
    rx[0] ^= 1
    rx[1] ^= 1
    try:
        correct_and_decode(rx, scheme, part, (0, 1), 0)
    except bc.UncorrectableError:
        pass


GRID = [(N, K, p) for K in range(1, 5) for N in range(K, 6) for p in ("1/4", "1/2", "3/4")]


@pytest.mark.parametrize("N, K, p", GRID)
def test_end_to_end_adversarial(N, K, p):
    part, lib = make_partition(N, K, p)
    for d in itertools.permutations(range(N), K):
        for delta in (0, 1):
            scheme, enc = build_scheme(part, d, delta)
            count, bad = adversarial_failures(scheme, enc, part, d, [lib[i] for i in d])
            assert bad == []
            assert count == 1 + (scheme.n * (2**scheme.unit - 1) if delta else 0)


def test_batched_checker_matches_direct_decode(example2):
    part, lib = example2
    d = (1, 0)
    scheme, enc = build_scheme(part, d, 1)
    direct = 0
    for _, rx in sweep(enc, 1):
        for k in range(2):
            assert np.array_equal(correct_and_decode(rx, scheme, part, d, k), lib[d[k]])
        direct += 1
    count, bad = adversarial_failures(scheme, enc, part, d, [lib[1], lib[0]], chunk=2)
    assert (count, bad) == (direct + 1, [])


def test_batched_checker_reports_failures(example2):
    part, lib = example2
    scheme, enc = build_scheme(part, (0, 1), 1)
    count, bad = adversarial_failures(scheme, enc, part, (0, 1), [lib[1], lib[0]])
    assert len(bad) == count == 7
    # δ=2 corruptions overwhelm a distance-3 code; some must fail
    wide = type(scheme)(scheme.kappa_units, scheme.code, scheme.table, scheme.unit, 2, scheme.header)
    _, bad = adversarial_failures(wide, enc, part, (0, 1), [lib[0], lib[1]])
    assert any(len(pos) == 2 for pos in bad)


def test_bernoulli_scheme_pads_and_corrects():
    part, lib = make_partition(4, 3, "1/4", 2000, "bernoulli", 7)
    d = (2, 3, 0)
    scheme, enc = build_scheme(part, d, 1)
    assert scheme.unit == -(-2000 // 64)
    rng = np.random.default_rng(0)
    for t in range(20):
        rx = transmit(enc, ChannelSpec(1), rng)
        for k in range(3):
            assert np.array_equal(correct_and_decode(rx, scheme, part, d, k), lib[d[k]])


def test_supplied_code_must_match(example2):
    part, _ = example2
    with pytest.raises(ValueError):
        build_scheme(part, (0, 1), 1, code=bc.shortened_hamming(4))
    given = bc.LinearCode(bc.shortened_hamming(3).G, 3)
    scheme, enc = build_scheme(part, (0, 1), 1, code=given)
    assert enc.shape == (6, 1)


def test_delta_two_uses_lexicode(example2):
    part, lib = example2
    scheme, enc = build_scheme(part, (0, 1), 2)
    assert scheme.code.k == 3 and scheme.code.d >= 5 and scheme.n == 10
    for _, rx in sweep(enc, 2):
        for k in range(2):
            assert np.array_equal(correct_and_decode(rx, scheme, part, (0, 1), k), lib[k])


def cfg(N, K, p):
    p = Fraction(p)
    return CachingConfig(N, K, p, p.denominator**K)


def test_worst_case_rate_examples():
    assert worst_case_rate(cfg(2, 2, "1/2"), 1) == (Fraction(3, 2), True)
    assert worst_case_rate(cfg(4, 3, "1/4"), 1) == (Fraction(118, 64), True)
    assert worst_case_rate(cfg(2, 2, "1/2"), 2) == (Fraction(10, 4), True)
    assert worst_case_rate(cfg(3, 3, "1"), 1)[0] == 0
    assert worst_case_rate(CachingConfig(3, 3, Fraction(0), 5), 0)[0] == 3


@pytest.mark.parametrize("N, K, p", [(2, 2, "1/2"), (4, 3, "1/4"), (5, 4, "1/3"), (6, 5, "3/4")])
def test_worst_case_rate_delta_zero_and_monotone(N, K, p):
    c = cfg(N, K, p)
    assert worst_case_rate(c, 0)[0] == zero_error_rate(c)
    assert worst_case_rate(c, 1)[0] >= worst_case_rate(c, 0)[0]


def test_worst_case_rate_unresolvable():
    with pytest.raises(bc.NoConstruction):
        worst_case_rate(cfg(4, 3, "1/4"), 2)


def test_encoded_text_roundtrip(example3):
    part, lib = example3
    scheme, enc = build_scheme(part, (0, 1, 2), 1)
    text = dump_encoded(scheme, enc)
    assert text.splitlines()[0] == "111 118 3 1 1"
    scheme2, enc2 = load_encoded(text)
    assert np.array_equal(enc2, enc)
    rx = enc2.copy()
    rx[50] ^= 1
    assert np.array_equal(correct_and_decode(rx, scheme2, part, (0, 1, 2), 1), lib[1])
