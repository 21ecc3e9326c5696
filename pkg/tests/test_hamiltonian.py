import numpy as np
import pytest

from mblab.basis import enumerate_sector
from mblab.hamiltonian import ChainSpec, FieldProfile, build_hamiltonian, sample_fields

from oracles import full_hamiltonian, sector_indices, total_sz


@pytest.mark.parametrize("L,P,sites", [(16, 4, range(7, 11)), (12, 3, range(5, 8)),
                                       (10, 0, range(6, 6)), (10, 10, range(1, 11))])
def test_region_placement(L, P, sites):
    assert list(ChainSpec(L, P, 5.0).region) == list(sites)


def test_field_bounds_and_reproducibility():
    spec = ChainSpec(16, 4, W=9.0)
    f1 = sample_fields(spec, 12345)
    f2 = sample_fields(spec, 12345)
    np.testing.assert_array_equal(f1.h, f2.h)
    mask = spec.region_mask()
    assert np.all(np.abs(f1.h[~mask]) <= 9.0)
    assert np.all(np.abs(f1.h[mask]) <= 0.5)
    np.testing.assert_array_equal(f1.h[mask], 0.5 * f1.r[mask])
    assert not np.array_equal(f1.h, sample_fields(spec, 12346).h)


def test_no_region_bound():
    f = sample_fields(ChainSpec(10, 0, W=9.0), 7)
    assert np.all(np.abs(f.h) <= 9.0)


def test_field_statistics():
    spec = ChainSpec(10, 0, W=1.0)
    r = np.concatenate([sample_fields(spec, s).r for s in range(10_000)])
    assert r.size >= 10 ** 5
    assert abs(r.mean()) < 0.01
    assert abs(r.var() - 1 / 3) < 0.01
    assert r.min() >= -1 and r.max() <= 1


@pytest.mark.parametrize("bad", [dict(L=3), dict(L=4, P=5), dict(L=4, W=-1.0),
                                 dict(L=4, w=-0.1), dict(L=4, W=float("inf"))])
def test_spec_validation(bad):
    with pytest.raises(ValueError):
        ChainSpec(**bad)


def test_two_site_matrix():
    h1, h2 = 0.3, -0.7
    spec = ChainSpec(2, 0, 1.0)
    f = FieldProfile(h=np.array([h1, h2]), r=np.array([h1, h2]), seed=0)
    H = build_hamiltonian(spec, f, enumerate_sector(2))
    # basis order: |01> (site 1 up) then |10> (site 2 up)
    np.testing.assert_array_equal(H, [[-1 + h1 - h2, 2], [2, -1 - h1 + h2]])


def test_two_site_zero_field_spectrum():
    spec = ChainSpec(2, 0, 0.0)
    H = build_hamiltonian(spec, sample_fields(spec, 0), enumerate_sector(2))
    np.testing.assert_allclose(np.linalg.eigvalsh(H), [-3, 1], atol=1e-14)


@pytest.mark.parametrize("seed", range(5))
def test_matches_full_space_projection(seed):
    L = 6
    spec = ChainSpec(L, 2, W=3.0)
    f = sample_fields(spec, seed)
    H = build_hamiltonian(spec, f, enumerate_sector(L))
    full = full_hamiltonian(L, f.h)
    idx = sector_indices(L)
    assert len(idx) == 20
    np.testing.assert_allclose(H, full[np.ix_(idx, idx)], atol=1e-13)


def test_full_space_conserves_magnetization():
    for L in (4, 6):
        full = full_hamiltonian(L, np.random.default_rng(L).uniform(-2, 2, L))
        Sz = total_sz(L)
        assert np.max(np.abs(full @ Sz - Sz @ full)) < 1e-12


@pytest.mark.parametrize("L,P,W", [(8, 0, 5.0), (10, 3, 9.0), (12, 12, 1.0)])
def test_structure(L, P, W):
    spec = ChainSpec(L, P, W)
    basis = enumerate_sector(L)
    H = build_hamiltonian(spec, sample_fields(spec, 99), basis)
    assert np.array_equal(H, H.T)
    rows, cols = np.nonzero(H - np.diag(np.diag(H)))
    pop = np.array([bin(int(s)).count("1") for s in basis.states])
    assert np.all(pop[rows] == pop[cols])
    xor = basis.states[rows] ^ basis.states[cols]
    # exactly two adjacent bits differ
    assert np.all([bin(int(x)).count("1") == 2 and (int(x) & (int(x) >> 1)) for x in xor])
    assert np.all(H[rows, cols] == 2.0)


def test_dimension_mismatch():
    spec = ChainSpec(4, 0, 1.0)
    with pytest.raises(ValueError, match="mismatch"):
        build_hamiltonian(spec, sample_fields(spec, 0), enumerate_sector(6))
