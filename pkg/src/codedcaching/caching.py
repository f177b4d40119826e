"""Decentralized placement and the N >= K delivery procedure.

Bit strings are 0/1 ``uint8`` numpy arrays.  Users are 0-based and a user
subset is an int bitmask (bit ``k`` set iff user ``k`` is in the subset).

Placement records, for every bit of every file, the set of users caching
it (``owners``).  The subfile ``X[i, S]`` is the bits of file ``i`` whose
owner set is exactly ``S``, in file order.  Idealized placement assigns
owner sets in contiguous runs whose lengths are the expected subfile sizes,
which makes every size exact; Bernoulli placement draws them at random.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

IDEALIZED = "idealized"
BERNOULLI = "bernoulli"


class ConfigError(ValueError):
    pass


class IntegrityError(RuntimeError):
    pass


def subset_members(mask: int) -> list[int]:
    return [k for k in range(mask.bit_length()) if (mask >> k) & 1]


def canonical_subsets(K: int, include_empty: bool = True) -> list[int]:
    """Subsets of ``range(K)``: size descending, lexicographic within a size."""
    out = []
    for s in range(K, -1 if include_empty else 0, -1):
        for combo in itertools.combinations(range(K), s):
            out.append(sum(1 << k for k in combo))
    return out


def format_subset(mask: int) -> str:
    """1-based set notation, ``{}`` for the empty set."""
    return "{" + ",".join(str(k + 1) for k in subset_members(mask)) + "}"


@dataclass(frozen=True)
class CachingConfig:
    N: int
    K: int
    p: Fraction
    F: int
    mode: str = IDEALIZED
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "p", Fraction(self.p))
        if not self.N >= self.K >= 1:
            raise ConfigError(f"need N >= K >= 1, got N={self.N}, K={self.K}")
        if not 0 <= self.p <= 1:
            raise ConfigError(f"cache fraction {self.p} outside [0, 1]")
        if self.mode not in (IDEALIZED, BERNOULLI):
            raise ConfigError(f"unknown placement mode {self.mode!r}")
        if self.F < 1:
            raise ConfigError("file size must be positive")
        if self.mode == IDEALIZED and self.F % self.granularity:
            raise ConfigError(
                f"idealized placement needs F to be a multiple of b^K = {self.granularity}"
            )

    @property
    def a(self) -> int:
        return self.p.numerator

    @property
    def b(self) -> int:
        return self.p.denominator

    @property
    def granularity(self) -> int:
        return self.b**self.K

    @property
    def unit(self) -> int:
        """Bits per unit symbol, ``ceil(F / b^K)``."""
        return -(-self.F // self.granularity)

    def subfile_units(self, size: int) -> int:
        """Expected subfile size in units for an owner set of ``size`` users."""
        return self.a**size * (self.b - self.a) ** (self.K - size)


@dataclass
class FileLibrary:
    files: np.ndarray  # (N, F) uint8

    @classmethod
    def random(cls, N: int, F: int, seed: int = 0) -> "FileLibrary":
        rng = np.random.default_rng(seed)
        return cls(rng.integers(0, 2, size=(N, F), dtype=np.uint8))

    @property
    def N(self) -> int:
        return self.files.shape[0]

    @property
    def F(self) -> int:
        return self.files.shape[1]

    def __getitem__(self, i: int) -> np.ndarray:
        return self.files[i]


@dataclass
class SubfilePartition:
    config: CachingConfig
    owners: np.ndarray  # (N, F) owner-set bitmask per bit
    payloads: dict[tuple[int, int], np.ndarray] = field(repr=False)

    def payload(self, i: int, S: int) -> np.ndarray:
        return self.payloads[(i, S)]

    def size(self, i: int, S: int) -> int:
        return self.payloads[(i, S)].size

    def cache(self, k: int) -> dict[tuple[int, int], np.ndarray]:
        """Contents of user ``k``'s cache: every subfile whose owner set contains k."""
        return {key: v for key, v in self.payloads.items() if (key[1] >> k) & 1}

    def cache_bits(self, k: int) -> int:
        return sum(v.size for v in self.cache(k).values())

    def reassemble(self, i: int, subfiles: dict[int, np.ndarray]) -> np.ndarray:
        """Rebuild file ``i`` from its subfiles keyed by owner set."""
        out = np.zeros(self.config.F, dtype=np.uint8)
        for S in canonical_subsets(self.config.K):
            where = self.owners[i] == S
            chunk = subfiles.get(S, np.zeros(0, dtype=np.uint8))
            if chunk.size != np.count_nonzero(where):
                raise IntegrityError(
                    f"subfile X[{i},{format_subset(S)}] has {chunk.size} bits, "
                    f"layout expects {np.count_nonzero(where)}"
                )
            out[where] = chunk
        return out

    def reconstruct(self, i: int) -> np.ndarray:
        return self.reassemble(i, {S: self.payload(i, S) for S in canonical_subsets(self.config.K)})


def _split(config: CachingConfig, lib: FileLibrary, owners: np.ndarray) -> SubfilePartition:
    if lib.files.shape != (config.N, config.F):
        raise ConfigError(f"library shape {lib.files.shape} != ({config.N}, {config.F})")
    payloads = {}
    for i in range(config.N):
        for S in canonical_subsets(config.K):
            payloads[(i, S)] = lib.files[i][owners[i] == S].copy()
    return SubfilePartition(config, owners, payloads)


def idealized_owners(config: CachingConfig) -> np.ndarray:
    masks = canonical_subsets(config.K)
    unit = config.F // config.granularity
    counts = [config.subfile_units(m.bit_count()) * unit for m in masks]
    row = np.repeat(np.array(masks, dtype=np.int64), counts)
    return np.tile(row, (config.N, 1))


def place_idealized(config: CachingConfig, lib: FileLibrary) -> SubfilePartition:
    if config.mode != IDEALIZED:
        raise ConfigError("place_idealized needs an idealized config")
    return _split(config, lib, idealized_owners(config))


def place_bernoulli(config: CachingConfig, lib: FileLibrary) -> SubfilePartition:
    """Each (bit, user) pair cached independently with probability a/b."""
    rng = np.random.default_rng(config.seed)
    draws = rng.integers(0, config.b, size=(config.N, config.F, config.K)) < config.a
    weights = np.int64(1) << np.arange(config.K, dtype=np.int64)
    owners = (draws.astype(np.int64) * weights).sum(axis=2)
    return _split(config, lib, owners)


def place(config: CachingConfig, lib: FileLibrary) -> SubfilePartition:
    if config.mode == IDEALIZED:
        return place_idealized(config, lib)
    return place_bernoulli(config, lib)


@dataclass(frozen=True)
class Transmission:
    subset: int
    payload: np.ndarray = field(compare=False)
    # bit lengths of the XORed operands, one per member of ``subset`` in user order
    operand_lengths: tuple[int, ...]

    @property
    def length(self) -> int:
        return self.payload.size


@dataclass(frozen=True)
class TransmissionBatch:
    items: tuple[Transmission, ...]
    unit: int

    @property
    def total_bits(self) -> int:
        return sum(t.length for t in self.items)

    def header(self) -> list[tuple[int, int, tuple[int, ...]]]:
        return [(t.subset, t.length, t.operand_lengths) for t in self.items]

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self) -> Iterator[Transmission]:
        return iter(self.items)


def check_demand(config: CachingConfig, d: Sequence[int]) -> tuple[int, ...]:
    d = tuple(int(x) for x in d)
    if len(d) != config.K:
        raise ConfigError(f"demand has {len(d)} entries, expected K={config.K}")
    for x in d:
        if not 0 <= x < config.N:
            raise ConfigError(f"demanded file {x} outside [0, {config.N})")
    return d


def xor_padded(chunks: Sequence[np.ndarray]) -> np.ndarray:
    width = max((c.size for c in chunks), default=0)
    out = np.zeros(width, dtype=np.uint8)
    for c in chunks:
        out[: c.size] ^= c
    return out


def deliver(part: SubfilePartition, d: Sequence[int]) -> TransmissionBatch:
    """For |S| = K..1, send the XOR over k in S of X[d_k, S \\ {k}]."""
    config = part.config
    d = check_demand(config, d)
    items = []
    for S in canonical_subsets(config.K, include_empty=False):
        operands = [part.payload(d[k], S & ~(1 << k)) for k in subset_members(S)]
        lengths = tuple(o.size for o in operands)
        if not any(lengths):
            continue
        items.append(Transmission(S, xor_padded(operands), lengths))
    return TransmissionBatch(tuple(items), config.unit)


def user_decode(
    part: SubfilePartition, batch: TransmissionBatch, d: Sequence[int], k: int
) -> np.ndarray:
    """Recover file ``d[k]`` from user ``k``'s cache and the broadcast."""
    config = part.config
    d = check_demand(config, d)
    cache = part.cache(k)
    want = d[k]
    subfiles = {S: v for (i, S), v in cache.items() if i == want}
    for t in batch:
        if not (t.subset >> k) & 1:
            continue
        members = subset_members(t.subset)
        acc = t.payload.copy()
        for j in members:
            if j == k:
                continue
            key = (d[j], t.subset & ~(1 << j))
            operand = cache.get(key)
            if operand is None:
                raise IntegrityError(f"user {k} lacks cached operand {key}")
            if operand.size > acc.size:
                raise IntegrityError(f"cached operand {key} is longer than transmission {t.subset}")
            acc[: operand.size] ^= operand
        own_len = t.operand_lengths[members.index(k)]
        subfiles[t.subset & ~(1 << k)] = acc[:own_len]
    return part.reassemble(want, subfiles)


def rate_formula(p: Fraction, K: int) -> Fraction:
    """(1 - p) (1/p) (1 - (1 - p)^K)."""
    p = Fraction(p)
    if p == 0:
        raise ConfigError("rate formula has a pole at p = 0")
    return (1 - p) / p * (1 - (1 - p) ** K)


def zero_error_rate(config: CachingConfig) -> Fraction:
    return rate_formula(config.p, config.K)


def kappa_units(config: CachingConfig) -> int:
    """Unit symbols sent by the delivery for distinct demands."""
    a, b, K = config.a, config.b, config.K
    return sum(math.comb(K, s) * a ** (s - 1) * (b - a) ** (K - s + 1) for s in range(1, K + 1))


def unit_split(batch: TransmissionBatch, pad: bool = False) -> list[np.ndarray]:
    """Cut every payload into ``unit``-bit symbols.

    With ``pad`` a ragged tail is zero-filled (Bernoulli placement);
    otherwise every payload must be unit aligned.
    """
    unit = batch.unit
    out = []
    for t in batch:
        n_sym, rem = divmod(t.length, unit)
        if rem:
            if not pad:
                raise ConfigError(f"payload of {t.length} bits is not a multiple of unit={unit}")
            n_sym += 1
        buf = np.zeros(n_sym * unit, dtype=np.uint8)
        buf[: t.length] = t.payload
        out.extend(buf.reshape(n_sym, unit))
    return out


def join_units(
    header: Sequence[tuple[int, int, tuple[int, ...]]], symbols: np.ndarray, unit: int
) -> TransmissionBatch:
    """Inverse of ``unit_split`` given the batch header."""
    items = []
    pos = 0
    for subset, length, lens in header:
        n_sym = -(-length // unit)
        bits = symbols[pos : pos + n_sym].reshape(-1)[:length].copy()
        items.append(Transmission(subset, bits, lens))
        pos += n_sym
    if pos != len(symbols):
        raise IntegrityError(f"header covers {pos} symbols, got {len(symbols)}")
    return TransmissionBatch(tuple(items), unit)


def distinct_demands(N: int, K: int) -> Iterator[tuple[int, ...]]:
    """Ordered tuples of distinct files, lexicographic."""
    return itertools.permutations(range(N), K)


# Text serialization.  Bit payloads are written MSB-first as hex with an
# explicit bit length, since lengths need not be multiples of 4.

def bits_to_hex(bits: np.ndarray) -> str:
    if bits.size == 0:
        return "-"
    return np.packbits(bits).tobytes().hex()


def hex_to_bits(text: str, length: int) -> np.ndarray:
    if text == "-":
        return np.zeros(0, dtype=np.uint8)
    raw = np.frombuffer(bytes.fromhex(text), dtype=np.uint8)
    return np.unpackbits(raw)[:length].copy()


def dump_partition(part: SubfilePartition) -> str:
    c = part.config
    lines = [f"{c.N} {c.K} {c.a} {c.b} {c.F} {c.mode}"]
    for i in range(c.N):
        for S in canonical_subsets(c.K):
            v = part.payload(i, S)
            if v.size:
                lines.append(f"{i} {S} {v.size} {bits_to_hex(v)}")
    return "\n".join(lines) + "\n"


def load_partition(text: str) -> SubfilePartition:
    """Parse ``dump_partition`` output.  Only idealized partitions carry
    enough information to rebuild the bit layout."""
    lines = [ln.split() for ln in text.splitlines() if ln.strip()]
    N, K, a, b, F = (int(x) for x in lines[0][:5])
    config = CachingConfig(N, K, Fraction(a, b), F, lines[0][5])
    if config.mode != IDEALIZED:
        raise ConfigError("Bernoulli partitions do not record their bit layout")
    payloads = {(i, S): np.zeros(0, dtype=np.uint8) for i in range(N) for S in canonical_subsets(K)}
    for rec in lines[1:]:
        i, S, length = int(rec[0]), int(rec[1]), int(rec[2])
        payloads[(i, S)] = hex_to_bits(rec[3], length)
    owners = idealized_owners(config)
    part = SubfilePartition(config, owners, payloads)
    for i in range(N):
        for S in canonical_subsets(K):
            if part.size(i, S) != np.count_nonzero(owners[i] == S):
                raise IntegrityError(f"subfile ({i}, {S}) has the wrong size")
    return part


def dump_batch(batch: TransmissionBatch) -> str:
    lines = [f"unit {batch.unit}"]
    for t in batch:
        lens = ",".join(map(str, t.operand_lengths))
        lines.append(f"{t.subset} {t.length} {lens} {bits_to_hex(t.payload)}")
    return "\n".join(lines) + "\n"


def load_batch(text: str) -> TransmissionBatch:
    lines = [ln.split() for ln in text.splitlines() if ln.strip()]
    unit = int(lines[0][1])
    items = []
    for rec in lines[1:]:
        length = int(rec[1])
        lens = tuple(int(x) for x in rec[2].split(","))
        items.append(Transmission(int(rec[0]), hex_to_bits(rec[3], length), lens))
    return TransmissionBatch(tuple(items), unit)
