import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from codedcaching.gf2 import (
    BitMatrix,
    BitVector,
    in_row_space,
    inverse,
    mat_vec_mul,
    null_space,
    rank,
    rref,
)


def M(*rows):
    return BitMatrix.from_strings(rows)


def V(s):
    return BitVector.from_str(s)


@pytest.mark.parametrize(
    "m, expected",
    [
        (BitMatrix.identity(3), 3),
        (BitMatrix.zeros(2, 5), 0),
        (M("110", "011", "101"), 2),
        (BitMatrix.zeros(0, 4), 0),
        (BitMatrix.zeros(3, 0), 0),
    ],
)
def test_rank(m, expected):
    assert rank(m) == expected


def test_rref_examples():
    red, piv = rref(BitMatrix.identity(3))
    assert red == BitMatrix.identity(3) and piv == [0, 1, 2]
    red, piv = rref(M("11", "11"))
    assert red.to_strings() == ["11", "00"] and piv == [0]
    red, piv = rref(M("01", "10"))
    assert red.to_strings() == ["10", "01"] and piv == [0, 1]


def test_mat_vec_mul():
    assert str(mat_vec_mul(V("100"), BitMatrix.identity(3))) == "100"
    assert str(mat_vec_mul(V("111"), M("100", "010", "001"))) == "111"
    assert str(mat_vec_mul(V("11"), M("101", "011"))) == "110"
    with pytest.raises(ValueError):
        mat_vec_mul(V("11"), BitMatrix.identity(3))


def test_in_row_space():
    assert in_row_space(V("000"), M("110", "011"))
    assert in_row_space(V("110"), M("100", "010"))
    assert not in_row_space(V("001"), M("100", "010"))
    with pytest.raises(ValueError):
        in_row_space(V("00"), M("100"))


def test_bit_string_convention():
    v = V("1101")
    assert [v[j] for j in range(4)] == [1, 1, 0, 1]
    assert v.to_array().tolist() == [1, 1, 0, 1]
    assert BitVector.from_array([1, 1, 0, 1]) == v


def test_inverse_and_null_space():
    m = M("110", "011", "001")
    assert inverse(m) @ m == BitMatrix.identity(3)
    with pytest.raises(ValueError):
        inverse(M("110", "011", "101"))
    G = M("100110", "010101", "001011")
    H = null_space(G)
    assert H.nrows == 3
    assert G @ H.transpose() == BitMatrix.zeros(3, 3)


def _numpy_rank(arr):
    # independent elimination on a dense array
    a = arr.copy() % 2
    r = 0
    for c in range(a.shape[1]):
        piv = np.flatnonzero(a[r:, c])
        if piv.size == 0:
            continue
        a[[r, r + piv[0]]] = a[[r + piv[0], r]]
        for i in range(a.shape[0]):
            if i != r and a[i, c]:
                a[i] ^= a[r]
        r += 1
        if r == a.shape[0]:
            break
    return r


matrices = st.integers(0, 7).flatmap(
    lambda rows: st.integers(0, 9).flatmap(
        lambda cols: st.lists(
            st.integers(0, (1 << cols) - 1), min_size=rows, max_size=rows
        ).map(lambda rs: BitMatrix(tuple(rs), cols))
    )
)


@settings(max_examples=200, deadline=None)
@given(matrices)
def test_rank_matches_rref_and_dense_oracle(m):
    red, piv = rref(m)
    assert rank(m) == len(piv) == _numpy_rank(m.to_array())
    assert rank(m) <= min(m.shape)
    # reduced: each pivot column is a unit column
    for i, c in enumerate(piv):
        assert [((r >> c) & 1) for r in red.rows] == [int(j == i) for j in range(m.nrows)]
    # row space preserved
    assert all(in_row_space(m.row(i), red) for i in range(m.nrows))
    assert all(in_row_space(red.row(i), m) for i in range(m.nrows))


@settings(max_examples=200, deadline=None)
@given(matrices, st.randoms(use_true_random=False))
def test_rank_invariant_under_row_operations(m, rnd):
    rows = list(m.rows)
    rnd.shuffle(rows)
    if len(rows) >= 2:
        i, j = rnd.sample(range(len(rows)), 2)
        rows[i] ^= rows[j]
    assert rank(BitMatrix(tuple(rows), m.ncols)) == rank(m)


@settings(max_examples=100, deadline=None)
@given(matrices)
def test_every_row_in_row_space(m):
    for i in range(m.nrows):
        assert in_row_space(m.row(i), m)
