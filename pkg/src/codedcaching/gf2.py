"""Dense bit-matrix arithmetic over GF(2).

Rows are packed into Python ints with bit ``j`` holding column ``j``, so a
row operation is a single XOR regardless of width.  String forms list
column 0 first (``"110"`` has bits at columns 0 and 1).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


def _parse_bits(s: str) -> int:
    s = s.strip()
    if any(ch not in "01" for ch in s):
        raise ValueError(f"not a bit string: {s!r}")
    return int(s[::-1], 2) if s else 0


def _format_bits(x: int, length: int) -> str:
    return "".join("1" if (x >> j) & 1 else "0" for j in range(length))


@dataclass(frozen=True)
class BitVector:
    bits: int
    len: int

    def __post_init__(self):
        if self.len < 0:
            raise ValueError("negative length")
        if self.bits < 0 or self.bits >> self.len:
            raise ValueError(f"bits do not fit in length {self.len}")

    @classmethod
    def from_str(cls, s: str) -> "BitVector":
        s = s.strip()
        return cls(_parse_bits(s), len(s))

    @classmethod
    def from_array(cls, arr) -> "BitVector":
        arr = np.asarray(arr, dtype=np.uint8).ravel()
        return cls(_pack_array(arr), arr.size)

    @classmethod
    def zeros(cls, length: int) -> "BitVector":
        return cls(0, length)

    def to_array(self) -> np.ndarray:
        return _unpack_int(self.bits, self.len)

    def weight(self) -> int:
        return self.bits.bit_count()

    def __getitem__(self, j: int) -> int:
        if not 0 <= j < self.len:
            raise IndexError(j)
        return (self.bits >> j) & 1

    def __xor__(self, other: "BitVector") -> "BitVector":
        if other.len != self.len:
            raise ValueError(f"length mismatch: {self.len} vs {other.len}")
        return BitVector(self.bits ^ other.bits, self.len)

    def __str__(self) -> str:
        return _format_bits(self.bits, self.len)


@dataclass(frozen=True)
class BitMatrix:
    """Immutable ``nrows x ncols`` matrix over GF(2), one packed int per row."""

    rows: tuple[int, ...]
    ncols: int

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(self.rows))
        if self.ncols < 0:
            raise ValueError("negative column count")
        for r in self.rows:
            if r < 0 or r >> self.ncols:
                raise ValueError(f"row does not fit in {self.ncols} columns")

    @property
    def nrows(self) -> int:
        return len(self.rows)

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.rows), self.ncols)

    @classmethod
    def from_strings(cls, rows: Sequence[str], ncols: int | None = None) -> "BitMatrix":
        rows = [r.strip() for r in rows]
        if ncols is None:
            ncols = len(rows[0]) if rows else 0
        if any(len(r) != ncols for r in rows):
            raise ValueError("ragged rows")
        return cls(tuple(_parse_bits(r) for r in rows), ncols)

    @classmethod
    def from_array(cls, arr) -> "BitMatrix":
        arr = np.atleast_2d(np.asarray(arr, dtype=np.uint8) & 1)
        return cls(tuple(_pack_array(row) for row in arr), arr.shape[1])

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        return cls(tuple(1 << i for i in range(n)), n)

    @classmethod
    def zeros(cls, nrows: int, ncols: int) -> "BitMatrix":
        return cls((0,) * nrows, ncols)

    def to_array(self) -> np.ndarray:
        out = np.zeros((self.nrows, self.ncols), dtype=np.uint8)
        for i, r in enumerate(self.rows):
            out[i] = _unpack_int(r, self.ncols)
        return out

    def to_strings(self) -> list[str]:
        return [_format_bits(r, self.ncols) for r in self.rows]

    def row(self, i: int) -> BitVector:
        return BitVector(self.rows[i], self.ncols)

    def transpose(self) -> "BitMatrix":
        cols = []
        for j in range(self.ncols):
            c = 0
            for i, r in enumerate(self.rows):
                if (r >> j) & 1:
                    c |= 1 << i
            cols.append(c)
        return BitMatrix(tuple(cols), self.nrows)

    def __matmul__(self, other: "BitMatrix") -> "BitMatrix":
        if self.ncols != other.nrows:
            raise ValueError(f"shape mismatch: {self.shape} @ {other.shape}")
        return BitMatrix(tuple(_combine(r, other.rows) for r in self.rows), other.ncols)

    def __str__(self) -> str:
        return "\n".join(self.to_strings())


def _pack_array(arr: np.ndarray) -> int:
    if arr.size == 0:
        return 0
    packed = np.packbits(arr.astype(np.uint8), bitorder="little")
    return int.from_bytes(packed.tobytes(), "little")


def _unpack_int(x: int, length: int) -> np.ndarray:
    nbytes = (length + 7) // 8
    raw = np.frombuffer(x.to_bytes(nbytes, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:length].copy()


def _combine(selector: int, rows: Sequence[int]) -> int:
    """XOR of ``rows[i]`` over the set bits ``i`` of ``selector``."""
    acc = 0
    i = 0
    while selector:
        if selector & 1:
            acc ^= rows[i]
        selector >>= 1
        i += 1
    return acc


def reduce_basis(basis: dict[int, int], row: int) -> int:
    """Reduce ``row`` against an echelon basis keyed by pivot bit.

    ``basis`` maps a pivot column to the unique basis row whose lowest set
    bit is that column.  Returns the residue (0 iff ``row`` is in the span).
    """
    while row:
        low = row & -row
        piv = basis.get(low)
        if piv is None:
            return row
        row ^= piv
    return 0


def rank_of_rows(rows: Iterable[int]) -> int:
    basis: dict[int, int] = {}
    for r in rows:
        r = reduce_basis(basis, r)
        if r:
            basis[r & -r] = r
    return len(basis)


def rank(m: BitMatrix) -> int:
    return rank_of_rows(m.rows)


def rref(m: BitMatrix) -> tuple[BitMatrix, list[int]]:
    """Reduced row echelon form and pivot columns.

    Zero rows are kept at the bottom so the shape is unchanged.
    """
    rows = list(m.rows)
    pivots: list[int] = []
    r = 0
    for col in range(m.ncols):
        bit = 1 << col
        sel = next((i for i in range(r, len(rows)) if rows[i] & bit), None)
        if sel is None:
            continue
        rows[r], rows[sel] = rows[sel], rows[r]
        for i in range(len(rows)):
            if i != r and rows[i] & bit:
                rows[i] ^= rows[r]
        pivots.append(col)
        r += 1
        if r == len(rows):
            break
    return BitMatrix(tuple(rows), m.ncols), pivots


def mat_vec_mul(v: BitVector, m: BitMatrix) -> BitVector:
    """Row vector times matrix, ``v @ m``."""
    if v.len != m.nrows:
        raise ValueError(f"vector length {v.len} != matrix rows {m.nrows}")
    return BitVector(_combine(v.bits, m.rows), m.ncols)


def in_row_space(v: BitVector, m: BitMatrix) -> bool:
    if v.len != m.ncols:
        raise ValueError(f"vector length {v.len} != matrix columns {m.ncols}")
    basis: dict[int, int] = {}
    for r in m.rows:
        r = reduce_basis(basis, r)
        if r:
            basis[r & -r] = r
    return reduce_basis(basis, v.bits) == 0


def inverse(m: BitMatrix) -> BitMatrix:
    """Inverse of a square nonsingular matrix."""
    n = m.nrows
    if m.ncols != n:
        raise ValueError(f"not square: {m.shape}")
    aug = BitMatrix(tuple(r | (1 << (n + i)) for i, r in enumerate(m.rows)), 2 * n)
    red, pivots = rref(aug)
    if pivots[:n] != list(range(n)):
        raise ValueError("matrix is singular")
    mask = (1 << n) - 1
    return BitMatrix(tuple((r >> n) & mask for r in red.rows), n)


def null_space(m: BitMatrix) -> BitMatrix:
    """Basis of ``{x : m @ x^T = 0}`` as rows."""
    red, pivots = rref(m)
    free = [c for c in range(m.ncols) if c not in set(pivots)]
    basis = []
    for f in free:
        x = 1 << f
        for i, p in enumerate(pivots):
            if (red.rows[i] >> f) & 1:
                x |= 1 << p
        basis.append(x)
    return BitMatrix(tuple(basis), m.ncols)


def matmul_array(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """GF(2) product of two 0/1 numpy arrays.

    Done in float64 so BLAS does the work; integer sums stay exact far
    beyond any inner dimension used here.
    """
    prod = a.astype(np.float64) @ b.astype(np.float64)
    return (prod.astype(np.int64) & 1).astype(np.uint8)
