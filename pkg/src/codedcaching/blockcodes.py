"""Binary linear block codes.

Constructions cover what the concatenated delivery needs: repetition,
single parity, shortened Hamming (d=3), parity-extended shortened Hamming
(d=4), greedy lexicodes for small lengths, and user-supplied generators.
Decoding is bounded-distance syndrome decoding with a coset-leader table.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from pathlib import Path

import numpy as np

from .gf2 import BitMatrix, BitVector, inverse, mat_vec_mul, matmul_array, null_space, rank, rref

EXHAUSTIVE_LIMIT = 24
LEXICODE_LIMIT = 24

# Optimal lengths N_2[k, d] quoted from published code tables.
KNOWN_LENGTHS: dict[tuple[int, int], int] = {
    (2, 5): 8,
    (3, 5): 10,
    (3, 3): 6,
    (111, 3): 118,
}


class CodeError(ValueError):
    pass


class NoConstruction(CodeError):
    pass


class UncorrectableError(CodeError):
    pass


@dataclass(frozen=True, eq=False)
class LinearCode:
    G: BitMatrix
    d: int | None = None
    name: str = ""
    H: BitMatrix = field(init=False, repr=False)

    def __post_init__(self):
        if rank(self.G) != self.G.nrows:
            raise CodeError("generator rows are linearly dependent")
        object.__setattr__(self, "H", null_space(self.G))

    @property
    def n(self) -> int:
        return self.G.ncols

    @property
    def k(self) -> int:
        return self.G.nrows

    @property
    def params(self) -> tuple[int, int, int | None]:
        return (self.n, self.k, self.d)

    def with_distance(self, d: int) -> "LinearCode":
        return LinearCode(self.G, d, self.name)

    @cached_property
    def _info(self) -> tuple[list[int], BitMatrix]:
        # msg = codeword[info_set] @ inv(G[:, info_set])
        _, cols = rref(self.G)
        sub = BitMatrix(
            tuple(sum(((r >> c) & 1) << j for j, c in enumerate(cols)) for r in self.G.rows),
            self.k,
        )
        return cols, inverse(sub)

    @cached_property
    def _arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """G^T, H and inv^T as 0/1 arrays for the column codecs."""
        return self.G.to_array().T.copy(), self.H.to_array(), self._info[1].to_array().T.copy()

    def message_of(self, codeword: int) -> int:
        cols, inv = self._info
        picked = sum(((codeword >> c) & 1) << j for j, c in enumerate(cols))
        return mat_vec_mul(BitVector(picked, self.k), inv).bits

    def __repr__(self) -> str:
        d = "?" if self.d is None else self.d
        return f"LinearCode[{self.n},{self.k},{d}]({self.name})"


def encode(code: LinearCode, msg: BitVector) -> BitVector:
    if msg.len != code.k:
        raise CodeError(f"message length {msg.len} != k={code.k}")
    return mat_vec_mul(msg, code.G)


def syndrome(code: LinearCode, word: int) -> int:
    s = 0
    for i, h in enumerate(code.H.rows):
        s |= ((h & word).bit_count() & 1) << i
    return s


def min_distance(code: LinearCode, limit: int = EXHAUSTIVE_LIMIT) -> int:
    """Minimum weight over all nonzero codewords, by Gray-code enumeration."""
    if code.k > limit:
        raise CodeError(f"k={code.k} exceeds exhaustive limit {limit}")
    if code.k == 0:
        return code.n + 1  # no nonzero codewords; conventionally infinite
    best = code.n
    word = 0
    for i in range(1, 1 << code.k):
        word ^= code.G.rows[(i & -i).bit_length() - 1]
        w = word.bit_count()
        if w < best:
            best = w
    return best


def repetition(n: int) -> LinearCode:
    return LinearCode(BitMatrix(((1 << n) - 1,), n), n, "repetition")


def identity_code(k: int) -> LinearCode:
    return LinearCode(BitMatrix.identity(k), 1 if k else None, "identity")


def parity_code(k: int) -> LinearCode:
    rows = tuple((1 << i) | (1 << k) for i in range(k))
    return LinearCode(BitMatrix(rows, k + 1), 2, "parity")


def hamming_redundancy(k: int) -> int:
    r = 2
    while (1 << r) - r - 1 < k:
        r += 1
    return r


def shortened_hamming(k: int) -> LinearCode:
    """Systematic ``[k + r, k, 3]`` code with ``r`` minimal.

    The parity-check columns on message positions are the nonzero r-bit
    vectors of weight >= 2, taken in order of increasing weight and
    decreasing binary value; shortening drops the tail of that list.  For
    k=3 this reproduces the generator rows 100110, 010101, 001011.
    """
    if k < 1:
        raise CodeError("k must be >= 1")
    r = hamming_redundancy(k)
    # as MSB-first strings, so "110" sorts above "101"
    cols = sorted(
        (c for c in range(1, 1 << r) if c.bit_count() >= 2),
        key=lambda c: (c.bit_count(), -c),
    )[:k]
    rows = []
    for i, c in enumerate(cols):
        parity = 0
        for j in range(r):
            if (c >> (r - 1 - j)) & 1:
                parity |= 1 << (k + j)
        rows.append((1 << i) | parity)
    return LinearCode(BitMatrix(tuple(rows), k + r), 3, "shortened-hamming")


def extend_parity(code: LinearCode) -> LinearCode:
    """Append an overall parity bit; an odd distance d becomes d + 1."""
    n = code.n
    rows = tuple(r | ((r.bit_count() & 1) << n) for r in code.G.rows)
    d = None
    if code.d is not None:
        d = code.d + 1 if code.d % 2 else code.d
    return LinearCode(BitMatrix(rows, n + 1), d, code.name + "+parity")


def _lex_to_int(v: int, n: int) -> int:
    # lexicographic index: position 0 is the most significant bit
    out = 0
    for j in range(n):
        if (v >> (n - 1 - j)) & 1:
            out |= 1 << j
    return out


def greedy_lexicode(n: int, d: int, limit: int = LEXICODE_LIMIT) -> LinearCode:
    """Linear lexicode of length ``n`` and distance >= ``d``.

    Walks words in lexicographic order and adds the first one at distance
    >= d from the current code as a new basis vector.  ``dist`` holds the
    distance from every word of F_2^n to the code, updated in place when
    the code doubles.
    """
    if n > limit:
        raise CodeError(f"n={n} exceeds lexicode limit {limit}")
    if d < 1 or n < 1:
        raise CodeError("need n >= 1 and d >= 1")
    idx = np.arange(1 << n, dtype=np.int64)
    dist = np.bitwise_count(idx).astype(np.uint8)
    basis = []
    while True:
        hits = np.flatnonzero(dist >= d)
        if hits.size == 0:
            break
        b = int(hits[0])
        basis.append(b)
        dist = np.minimum(dist, dist[idx ^ b])
    if not basis:
        raise NoConstruction(f"no nonzero word of length {n} has weight >= {d}")
    G = BitMatrix(tuple(_lex_to_int(b, n) for b in basis), n)
    code = LinearCode(G, None, "lexicode")
    if code.k <= EXHAUSTIVE_LIMIT:
        code = code.with_distance(min_distance(code))
    return code


def subcode(code: LinearCode, k: int) -> LinearCode:
    """First ``k`` generator rows; the distance can only grow."""
    if k > code.k:
        raise CodeError(f"cannot take {k} rows from a {code.k}-dimensional code")
    sub = LinearCode(BitMatrix(code.G.rows[:k], code.n), None, code.name)
    if code.d is not None and k:
        d = min_distance(sub) if k <= EXHAUSTIVE_LIMIT else code.d
        sub = sub.with_distance(d)
    return sub


@dataclass(frozen=True)
class CodeChoice:
    code: LinearCode
    length: int
    exact: bool


@lru_cache(maxsize=256)
def find_code(k: int, d: int) -> CodeChoice:
    """Shortest available ``[n, k, >=d]`` code, flagged when known optimal."""
    if k < 0 or d < 1:
        raise NoConstruction(f"no construction for k={k}, d={d}")
    if k == 0:
        return CodeChoice(LinearCode(BitMatrix((), 0), None, "empty"), 0, True)
    if d == 1:
        return CodeChoice(identity_code(k), k, True)
    if d == 2:
        return CodeChoice(parity_code(k), k + 1, True)
    if k == 1:
        return CodeChoice(repetition(d), d, True)
    if d == 3:
        code = shortened_hamming(k)
        return CodeChoice(code, code.n, True)
    if d == 4:
        code = extend_parity(shortened_hamming(k))
        return CodeChoice(code, code.n, True)
    known = KNOWN_LENGTHS.get((k, d))
    start = known if known is not None else k + d - 1  # Singleton bound
    for n in range(start, LEXICODE_LIMIT + 1):
        lex = greedy_lexicode(n, d)
        if lex.k >= k:
            code = subcode(lex, k)
            if known is not None and n == known:
                return CodeChoice(code, n, True)
            return CodeChoice(code, n, False)
    if known is not None:
        raise NoConstruction(
            f"N_2[{k},{d}]={known} is tabulated but no construction reaches it"
        )
    raise NoConstruction(f"no construction for k={k}, d={d} within n <= {LEXICODE_LIMIT}")


def best_known_length(k: int, d: int) -> tuple[int, bool]:
    """``(N_2[k, d], exact)``; ``exact`` is False for an upper bound only."""
    if k == 0:
        return 0, True
    if d <= 4 or k == 1:
        return find_code(k, d).length, True
    known = KNOWN_LENGTHS.get((k, d))
    if known is not None:
        return known, True
    choice = find_code(k, d)
    return choice.length, choice.exact


@dataclass(frozen=True, eq=False)
class SyndromeTable:
    code: LinearCode
    radius: int
    table: dict[int, int]

    def __len__(self) -> int:
        return len(self.table)

    @staticmethod
    def positions(e: int) -> list[int]:
        out = []
        while e:
            low = e & -e
            out.append(low.bit_length() - 1)
            e ^= low
        return out


def build_syndrome_table(code: LinearCode, delta: int) -> SyndromeTable:
    if delta < 0:
        raise CodeError("negative radius")
    if delta == 0 or code.k == 0:
        return SyndromeTable(code, delta, {0: 0})
    if code.d is None:
        code = code.with_distance(min_distance(code))
    if 2 * delta + 1 > code.d:
        raise CodeError(f"radius {delta} needs d >= {2 * delta + 1}, code has d={code.d}")
    table: dict[int, int] = {0: 0}
    for w in range(1, delta + 1):
        for pos in itertools.combinations(range(code.n), w):
            e = sum(1 << p for p in pos)
            s = syndrome(code, e)
            if s in table:
                raise CodeError("syndrome collision below the decoding radius")
            table[s] = e
    return SyndromeTable(code, delta, table)


def correct(table: SyndromeTable, received: int) -> int:
    """Nearest codeword to ``received`` within the table radius."""
    e = table.table.get(syndrome(table.code, received))
    if e is None:
        raise UncorrectableError("syndrome outside the decoding radius")
    return received ^ e


def decode(table: SyndromeTable, received: BitVector) -> BitVector:
    code = table.code
    if received.len != code.n:
        raise CodeError(f"received length {received.len} != n={code.n}")
    return BitVector(code.message_of(correct(table, received.bits)), code.k)


# Column-wise operations on unit-symbol blocks.  Row i of a block is symbol i;
# each bit position (column) is one codeword.

def encode_columns(code: LinearCode, block: np.ndarray) -> np.ndarray:
    """Encode a ``k x unit`` 0/1 block into an ``n x unit`` block."""
    if block.shape[0] != code.k:
        raise CodeError(f"block has {block.shape[0]} symbols, code expects k={code.k}")
    return matmul_array(code._arrays[0], block)


def decode_columns(table: SyndromeTable, block: np.ndarray) -> np.ndarray:
    """Correct each column of an ``n x unit`` block and return the ``k x unit`` messages."""
    code = table.code
    if block.shape[0] != code.n:
        raise CodeError(f"block has {block.shape[0]} symbols, code has n={code.n}")
    block = block.astype(np.uint8).copy()
    if code.H.nrows:
        syn = matmul_array(code._arrays[1], block)
        keys = np.zeros(block.shape[1], dtype=object)
        for i in range(code.H.nrows):
            keys += syn[i].astype(object) << i
        for s in set(keys.tolist()):
            if s == 0:
                continue
            e = table.table.get(s)
            if e is None:
                raise UncorrectableError(f"syndrome {s:#x} outside the decoding radius")
            cols = np.flatnonzero(keys == s)
            pos = table.positions(e)
            block[np.ix_(pos, cols)] ^= 1
    cols = code._info[0]
    return matmul_array(code._arrays[2], block[cols, :])


def read_generator(path: str | Path) -> LinearCode:
    """Load ``n k`` followed by ``k`` rows of ``n`` '0'/'1' characters."""
    lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    n, k = (int(x) for x in lines[0].split())
    rows = lines[1 : 1 + k]
    if len(rows) != k:
        raise CodeError(f"expected {k} generator rows, found {len(rows)}")
    return LinearCode(BitMatrix.from_strings(rows, n), None, Path(path).stem)


def format_generator(code: LinearCode) -> str:
    return "\n".join([f"{code.n} {code.k}", *code.G.to_strings()]) + "\n"
