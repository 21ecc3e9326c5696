from math import comb

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mblab.basis import SectorError, enumerate_sector, lookup, lookup_many, spins


@pytest.mark.parametrize("L,dim", [(2, 2), (4, 6), (16, 12870)])
def test_dimension(L, dim):
    assert enumerate_sector(L).dim == dim


def test_l2_states():
    b = enumerate_sector(2)
    assert list(b.states) == [0b01, 0b10]
    assert lookup(b, 0b01) == 0
    assert lookup(b, 0b10) == 1


def test_l4_ordering():
    b = enumerate_sector(4)
    assert list(b.states) == [3, 5, 6, 9, 10, 12]
    assert lookup(b, 0b0101) == 1


@pytest.mark.parametrize("L", range(2, 15, 2))
def test_roundtrip_exhaustive(L):
    b = enumerate_sector(L)
    assert b.dim == comb(L, L // 2)
    assert np.all(np.diff(b.states) > 0)
    assert all(lookup(b, s) == k for k, s in enumerate(b.states))
    np.testing.assert_array_equal(lookup_many(b, b.states), np.arange(b.dim))
    assert np.all(np.array([bin(int(s)).count("1") for s in b.states]) == L // 2)


@pytest.mark.parametrize("L", [1, 3, 7])
def test_odd_rejected(L):
    with pytest.raises(SectorError, match="undefined"):
        enumerate_sector(L)


@pytest.mark.parametrize("L", [0, 26, -2])
def test_capacity(L):
    with pytest.raises(SectorError, match="capacity"):
        enumerate_sector(L)


def test_lookup_outside_sector():
    b = enumerate_sector(4)
    with pytest.raises(SectorError):
        lookup(b, 0b0111)
    with pytest.raises(SectorError):
        lookup_many(b, [3, 7])


@given(st.integers(min_value=0, max_value=2 ** 10 - 1))
def test_spins_match_bits(n):
    z = spins(np.array([n]), 10)[0]
    assert all(z[i] == (1 if (n >> i) & 1 else -1) for i in range(10))
