"""Error-correcting delivery by concatenation with a binary block code.

The clean delivery batch is cut into kappa unit symbols.  Bit position j
of those symbols forms a kappa-bit message, encoded by an ``[n, kappa,
2δ+1]`` code, so the broadcast is n unit symbols.  Corrupting one symbol
touches one coordinate of every column codeword, hence up to δ corrupted
symbols are corrected column by column before the usual cache-aided
decode.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from .blockcodes import (
    LinearCode,
    UncorrectableError,
    SyndromeTable,
    best_known_length,
    build_syndrome_table,
    decode_columns,
    encode_columns,
    find_code,
    format_generator,
)
from .caching import (
    BERNOULLI,
    CachingConfig,
    IntegrityError,
    SubfilePartition,
    TransmissionBatch,
    bits_to_hex,
    deliver,
    hex_to_bits,
    join_units,
    kappa_units,
    unit_split,
    user_decode,
)
from .gf2 import BitMatrix

RANDOM = "random"
ADVERSARIAL = "adversarial-exhaustive"


@dataclass(frozen=True, eq=False)
class ConcatenatedScheme:
    kappa_units: int
    code: LinearCode
    table: SyndromeTable
    unit: int
    delta: int
    header: tuple  # layout of the clean batch: (subset, length, operand lengths)
    exact: bool = True  # code length known optimal

    @property
    def n(self) -> int:
        return self.code.n


@dataclass(frozen=True)
class ChannelSpec:
    delta: int
    mode: str = RANDOM
    seed: int = 0

    def __post_init__(self):
        if self.delta < 0:
            raise ValueError("delta must be >= 0")
        if self.mode not in (RANDOM, ADVERSARIAL):
            raise ValueError(f"unknown channel mode {self.mode!r}")


def symbols_of(batch: TransmissionBatch, pad: bool = False) -> np.ndarray:
    syms = unit_split(batch, pad=pad)
    if not syms:
        return np.zeros((0, batch.unit), dtype=np.uint8)
    return np.stack(syms)


def build_scheme(
    part: SubfilePartition,
    d: Sequence[int],
    delta: int,
    code: LinearCode | None = None,
) -> tuple[ConcatenatedScheme, np.ndarray]:
    """Deliver, split into unit symbols, and encode the symbol columns.

    Returns the scheme and the encoded ``n x unit`` symbol block.  Under
    Bernoulli placement payload tails are zero-padded to whole symbols.
    A caller-supplied ``code`` must have ``k`` equal to the symbol count.
    """
    if delta < 0:
        raise ValueError("delta must be >= 0")
    batch = deliver(part, d)
    block = symbols_of(batch, pad=part.config.mode == BERNOULLI)
    kappa = block.shape[0]
    exact = True
    if code is None:
        choice = find_code(kappa, 2 * delta + 1)
        code, exact = choice.code, choice.exact
    elif code.k != kappa:
        raise ValueError(f"supplied code has k={code.k}, batch has {kappa} symbols")
    table = build_syndrome_table(code, delta)
    scheme = ConcatenatedScheme(kappa, table.code, table, batch.unit, delta, tuple(batch.header()), exact)
    return scheme, encode_columns(code, block)


def transmit(encoded: np.ndarray, chan: ChannelSpec, rng: np.random.Generator | None = None) -> np.ndarray:
    """Replace up to ``chan.delta`` whole symbols with random bit strings.

    Exactly ``min(delta, n)`` distinct positions are hit and each gets a
    nonzero error, so every chosen symbol differs from what was sent.
    """
    if chan.mode != RANDOM:
        raise ValueError("transmit draws one random channel use; use sweep() for exhaustive modes")
    rng = rng if rng is not None else np.random.default_rng(chan.seed)
    out = encoded.copy()
    n, unit = out.shape
    hits = min(chan.delta, n)
    if hits == 0 or unit == 0:
        return out
    for pos in rng.choice(n, size=hits, replace=False):
        err = rng.integers(0, 2, size=unit, dtype=np.uint8)
        while not err.any():
            err = rng.integers(0, 2, size=unit, dtype=np.uint8)
        out[pos] ^= err
    return out


def _error_values(unit: int, all_values: bool) -> list[np.ndarray]:
    if not all_values:
        return [np.ones(unit, dtype=np.uint8)]
    vals = []
    for x in range(1, 1 << unit):
        vals.append(np.array([(x >> j) & 1 for j in range(unit)], dtype=np.uint8))
    return vals


def sweep(encoded: np.ndarray, delta: int, all_values: bool | None = None) -> Iterator[tuple[tuple[int, ...], np.ndarray]]:
    """Every corruption of at most ``delta`` symbols, yielded as (positions, received).

    The corruption is all-ones unless ``all_values``; by default every
    nonzero error value is tried when the unit is at most 4 bits.
    """
    n, unit = encoded.shape
    if all_values is None:
        all_values = unit <= 4
    values = _error_values(unit, all_values)
    for w in range(1, delta + 1):
        for pos in itertools.combinations(range(n), w):
            for errs in itertools.product(values, repeat=w):
                out = encoded.copy()
                for p, e in zip(pos, errs):
                    out[p] ^= e
                yield pos, out


def recover_batch(received: np.ndarray, scheme: ConcatenatedScheme) -> TransmissionBatch:
    clean = decode_columns(scheme.table, received)
    return join_units(scheme.header, clean, scheme.unit)


def correct_and_decode(
    received: np.ndarray,
    scheme: ConcatenatedScheme,
    part: SubfilePartition,
    d: Sequence[int],
    k: int,
) -> np.ndarray:
    """Syndrome-decode every column, then run user ``k``'s cache-aided decode."""
    return user_decode(part, recover_batch(received, scheme), d, k)


def _users_ok(block: np.ndarray, scheme, part, d, targets) -> bool:
    batch = join_units(scheme.header, block, scheme.unit)
    try:
        return all(
            np.array_equal(user_decode(part, batch, d, k), targets[k]) for k in range(len(d))
        )
    except IntegrityError:
        return False


def adversarial_failures(
    scheme: ConcatenatedScheme,
    encoded: np.ndarray,
    part: SubfilePartition,
    d: Sequence[int],
    targets: Sequence[np.ndarray],
    all_values: bool | None = None,
    chunk: int = 4096,
) -> tuple[int, list[tuple[int, ...]]]:
    """Run every :func:`sweep` corruption through correction and all K decodes.

    Received words are laid side by side so one column-decoding call handles
    many of them; the cache-aided decode then runs once per distinct
    corrected batch, which is exact since it depends on nothing else.
    Returns the number of patterns tried and the failing positions.
    """
    unit = encoded.shape[1]
    known: dict[bytes, bool] = {}
    failed: list[tuple[int, ...]] = []
    count = 0

    def verdict(block: np.ndarray) -> bool:
        key = np.packbits(block).tobytes()
        if key not in known:
            known[key] = _users_ok(block, scheme, part, d, targets)
        return known[key]

    def flush(pos_list, words):
        if not words:
            return
        wide = np.concatenate(words, axis=1)
        try:
            clean = decode_columns(scheme.table, wide)
        except UncorrectableError:
            clean = None
        for i, pos in enumerate(pos_list):
            if clean is not None:
                ok = verdict(clean[:, i * unit : (i + 1) * unit])
            else:
                try:
                    ok = verdict(decode_columns(scheme.table, words[i]))
                except UncorrectableError:
                    ok = False
            if not ok:
                failed.append(pos)

    per = max(1, chunk // max(unit, 1))
    pos_list, words = [], []
    for pos, rx in itertools.chain([((), encoded)], sweep(encoded, scheme.delta, all_values)):
        count += 1
        pos_list.append(pos)
        words.append(rx)
        if len(words) >= per:
            flush(pos_list, words)
            pos_list, words = [], []
    flush(pos_list, words)
    return count, failed


def worst_case_rate(config: CachingConfig, delta: int) -> tuple[Fraction, bool]:
    """``N_2[kappa, 2δ+1] / b^K`` and whether that length is known optimal.

    At p = 0 the delivery sends K whole files and the same expression holds.
    """
    length, exact = best_known_length(kappa_units(config), 2 * delta + 1)
    return Fraction(length, config.granularity), exact


def dump_encoded(scheme: ConcatenatedScheme, encoded: np.ndarray) -> str:
    """Scheme header, clean-batch layout, then one record per coded symbol."""
    d = scheme.code.d if scheme.code.d is not None else "?"
    lines = [f"{scheme.kappa_units} {scheme.n} {d} {scheme.delta} {scheme.unit}"]
    for subset, length, lens in scheme.header:
        lines.append(f"L {subset} {length} {','.join(map(str, lens))}")
    for j, sym in enumerate(encoded):
        lines.append(f"S {j} {bits_to_hex(sym)}")
    lines.append("G")
    lines.append(format_generator(scheme.code).rstrip("\n"))
    return "\n".join(lines) + "\n"


def load_encoded(text: str) -> tuple[ConcatenatedScheme, np.ndarray]:
    lines = text.splitlines()
    kappa, n, dist, delta, unit = lines[0].split()
    kappa, n, delta, unit = int(kappa), int(n), int(delta), int(unit)
    header, symbols = [], []
    pos = 1
    while lines[pos] != "G":
        rec = lines[pos].split()
        if rec[0] == "L":
            header.append((int(rec[1]), int(rec[2]), tuple(int(x) for x in rec[3].split(","))))
        else:
            symbols.append(hex_to_bits(rec[2], unit))
        pos += 1
    gn, gk = (int(x) for x in lines[pos + 1].split())
    G = BitMatrix.from_strings(lines[pos + 2 : pos + 2 + gk], gn)
    code = LinearCode(G, None if dist == "?" else int(dist), "loaded")
    table = build_syndrome_table(code, delta)
    encoded = np.stack(symbols) if symbols else np.zeros((0, unit), dtype=np.uint8)
    scheme = ConcatenatedScheme(kappa, table.code, table, unit, delta, tuple(header))
    if encoded.shape[0] != n:
        raise ValueError(f"header says n={n}, found {encoded.shape[0]} symbols")
    return scheme, encoded
