"""Randomized and exhaustive property checks runnable outside pytest."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import blockcodes as bc
from .caching import CachingConfig
from .ecc import worst_case_rate
from .gf2 import BitMatrix, BitVector
from .indexcoding import IndexInstance, alpha_brute, kappa_brute


@dataclass
class PropertyResult:
    name: str
    cases: int
    failures: list

    @property
    def passed(self) -> bool:
        return not self.failures

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f" first failure: {self.failures[0]}" if self.failures else ""
        return f"{status} {self.name} ({self.cases} cases){extra}"


def random_instance(
    rng: np.random.Generator, n_max: int = 8, side_max: int = 4, side_total_max: int = 14
) -> IndexInstance:
    n = int(rng.integers(1, n_max + 1))
    n_recv = int(rng.integers(1, n + 1))
    receivers = []
    budget = side_total_max
    for _ in range(n_recv):
        f = int(rng.integers(0, n))
        others = [x for x in range(n) if x != f]
        size = int(rng.integers(0, min(side_max, len(others), budget) + 1))
        side = rng.choice(others, size=size, replace=False).tolist() if size else []
        budget -= size
        receivers.append((f, side))
    return IndexInstance.build(n, receivers)


def check_alpha_le_kappa(count: int = 200, seed: int = 0) -> PropertyResult:
    rng = np.random.default_rng(seed)
    failures = []
    for t in range(count):
        inst = random_instance(rng)
        alpha, _ = alpha_brute(inst)
        kappa = kappa_brute(inst)
        if alpha > kappa:
            failures.append((t, alpha, kappa))
    return PropertyResult("alpha <= kappa on random instances", count, failures)


G633 = BitMatrix.from_strings(["100110", "010101", "001011"])


def _roundtrip_codes() -> list[bc.LinearCode]:
    codes = [bc.LinearCode(G633, 3, "633")]
    codes += [bc.shortened_hamming(k) for k in (1, 2, 3, 4, 5, 8, 11)]
    codes += [bc.greedy_lexicode(n, d) for n, d in ((8, 5), (10, 5), (12, 5), (11, 7))]
    codes += [bc.extend_parity(bc.shortened_hamming(4)), bc.parity_code(5), bc.repetition(5)]
    return codes


def check_code_roundtrips(seed: int = 0, samples: int = 200) -> PropertyResult:
    """decode(encode(m) + e) == m for every error of weight <= δ.

    Exhaustive over messages and patterns when n <= 12, sampled otherwise.
    """
    rng = np.random.default_rng(seed)
    failures = []
    cases = 0
    for code in _roundtrip_codes():
        if code.d is None:
            code = code.with_distance(bc.min_distance(code))
        delta = (code.d - 1) // 2
        table = bc.build_syndrome_table(code, delta)
        if code.n <= 12:
            msgs = range(1 << code.k)
            patterns = [
                sum(1 << p for p in pos)
                for w in range(delta + 1)
                for pos in itertools.combinations(range(code.n), w)
            ]
            pairs = ((m, e) for m in msgs for e in patterns)
        else:
            pairs = []
            for _ in range(samples):
                m = int(rng.integers(0, 1 << code.k))
                w = int(rng.integers(0, delta + 1))
                pos = rng.choice(code.n, size=w, replace=False)
                pairs.append((m, sum(1 << int(p) for p in pos)))
        for m, e in pairs:
            cases += 1
            word = bc.encode(code, BitVector(m, code.k)).bits ^ e
            got = bc.decode(table, BitVector(word, code.n)).bits
            if got != m:
                failures.append((repr(code), m, e))
    return PropertyResult("block code encode/decode round trips", cases, failures)


def check_rate_monotonic() -> PropertyResult:
    failures = []
    cases = 0
    ps = [Fraction(1, 4), Fraction(1, 3), Fraction(1, 2), Fraction(2, 3), Fraction(3, 4)]
    for K in range(1, 5):
        for p in ps:
            config = CachingConfig(K, K, p, p.denominator**K)
            prev = None
            for delta in range(0, 3):
                try:
                    rate, _ = worst_case_rate(config, delta)
                except bc.NoConstruction:
                    break
                cases += 1
                if prev is not None and rate < prev:
                    failures.append((K, str(p), delta, str(prev), str(rate)))
                prev = rate
    return PropertyResult("worst-case rate non-decreasing in delta", cases, failures)


def run_all(seed: int = 0, count: int = 200) -> list[PropertyResult]:
    return [
        check_alpha_le_kappa(count, seed),
        check_code_roundtrips(seed),
        check_rate_monotonic(),
    ]
