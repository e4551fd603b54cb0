import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nclab.errors import UsageError
from nclab.lattice import (
    TruncationBox,
    box_enumerate,
    box_index,
    multi_index,
    negate_index_permutation,
    torus_point,
)


def test_torus_point_reduces_mod_1():
    assert torus_point([1.25, -0.25]).tolist() == [0.25, 0.75]
    assert torus_point([0.0, 0.999]).tolist() == [0.0, 0.999]


def test_multi_index_validation():
    assert multi_index([0, 2, 1]).tolist() == [0, 2, 1]
    with pytest.raises(UsageError):
        multi_index([1, -1])
    with pytest.raises(UsageError):
        multi_index([])


def test_enumerate_1d():
    box = TruncationBox(1, 1)
    assert box_enumerate(box).ravel().tolist() == [-1, 0, 1]


def test_enumerate_single_point():
    box = TruncationBox(2, 0)
    pts = box_enumerate(box)
    assert pts.shape == (1, 2)
    assert pts[0].tolist() == [0, 0]


def test_enumerate_2d_lexicographic():
    box = TruncationBox(2, 1)
    pts = box_enumerate(box)
    assert len(pts) == 9
    assert pts[:4].tolist() == [[-1, -1], [-1, 0], [-1, 1], [0, -1]]
    assert len({tuple(p) for p in pts.tolist()}) == 9


def test_index_examples():
    box = TruncationBox(1, 2)
    assert box_index(box, [-2]) == 0
    assert box_index(box, [0]) == 2
    assert box_index(TruncationBox(2, 1), [0, -1]) == 3


def test_index_out_of_box():
    box = TruncationBox(1, 2)
    with pytest.raises(UsageError):
        box_index(box, [3])


def test_invalid_box():
    with pytest.raises(UsageError):
        TruncationBox(0, 1)
    with pytest.raises(UsageError):
        TruncationBox(1, -1)


def test_negation_permutation_1d():
    box = TruncationBox(1, 1)
    assert negate_index_permutation(box).tolist() == [2, 1, 0]


def test_negation_permutation_2d_example():
    box = TruncationBox(2, 1)
    perm = negate_index_permutation(box)
    assert perm[box.index_of([1, 0])] == box.index_of([-1, 0])


@given(st.integers(1, 3), st.integers(0, 4))
@settings(max_examples=40)
def test_roundtrip_and_involution(n, M):
    box = TruncationBox(n, M)
    if box.size > 10**5:
        return
    pts = box.points()
    assert box.indices_of(pts).tolist() == list(range(box.size))
    perm = box.negation_permutation()
    assert perm[perm].tolist() == list(range(box.size))
    assert perm[box.index_of(np.zeros(n, dtype=int))] == box.index_of(np.zeros(n, dtype=int))
