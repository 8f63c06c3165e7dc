import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flucguide import domain_wall as dw
from flucguide.acceptance import chain_for
from flucguide.chimera import build_chimera
from flucguide.ising import from_bitstring


def feature_cost(spec, x):
    """Chain energy plus boundary couplers (anchors planted) relative to x = 0."""
    def total(v):
        z = dw.encode_value(v)
        pos = {q: t for t, q in enumerate(spec.qubits)}
        bnd = sum(j * z[pos[c]] for c, _e, j in spec.boundary)   # anchors at +1 canonical
        return dw.chain_energy(spec, z) + bnd
    return total(x) - total(0)


def test_encode_examples():
    assert dw.encode_value(0).tolist() == [1] * 15
    assert dw.encode_value(15).tolist() == [-1] * 15
    assert dw.encode_value(7).tolist() == [-1] * 7 + [1] * 8


def test_encode_range():
    with pytest.raises(ValueError):
        dw.encode_value(16)
    with pytest.raises(ValueError):
        dw.encode_value(-1)


def test_round_trip():
    for x in range(16):
        r = dw.decode_chain(dw.encode_value(x))
        assert r.valid and r.value == x and r.wall == x


def test_two_walls_invalid():
    r = dw.decode_chain(from_bitstring("101000000000000"))
    assert not r.valid and r.value is None


def test_all_zero_valid():
    assert dw.decode_chain(from_bitstring("0" * 15)).value == 0


@settings(max_examples=200, deadline=None)
@given(st.lists(st.sampled_from([1, -1]), min_size=15, max_size=15))
def test_decode_validity_matches_wall_count(bits):
    z = np.array(bits, np.int8)
    ext = np.concatenate(([-1], z, [1]))
    walls = int(np.sum((ext[:-1] == -1) & (ext[1:] == 1)))
    r = dw.decode_chain(z)
    assert r.valid == (walls == 1)
    if r.valid:
        np.testing.assert_array_equal(dw.encode_value(r.value), z)


def test_flat_potential_gives_zero_fields():
    h, _ = dw.synthesize_fields(np.full(16, 0.7))
    assert np.all(h == 0)


def test_single_value_penalty():
    tab = np.zeros(16)
    tab[5] = 1.0
    h, c = dw.synthesize_fields(tab)
    got = [dw.field_energy(h, dw.encode_value(x)) + c for x in range(16)]
    assert got == tab.tolist()
    h2, c2 = dw.value_penalty(5)
    got2 = [dw.field_energy(h2, dw.encode_value(x)) + c2 for x in range(16)]
    assert got2 == tab.tolist()


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=16, max_size=16))
def test_synthesis_exact(tab):
    tab = np.array(tab)
    for synth in (dw.synthesize_fields, dw.penalty_fields):
        h, c = synth(tab)
        got = np.array([dw.field_energy(h, dw.encode_value(x)) + c for x in range(16)])
        assert np.abs(got - tab).max() <= 1e-12


def test_soft_table_a4_flat():
    tab = dw.soft_potential(4, 0.0)
    assert tab[0] == 0 and np.all(tab[4:11] == 0)
    assert np.all(tab[1:4] == 2) and np.all(tab[11:] == 2)


@pytest.mark.parametrize("a", range(2, 7))
@pytest.mark.parametrize("s", [0.0, 0.5, 1.0])
def test_soft_table_invariants(a, s):
    tab = dw.soft_potential(a, s)
    m = a + 3
    assert tab[0] == tab[m] == 0
    for j in range(-3, 4):
        assert tab[m + j] == s * abs(j) / 2
    assert tab[a:a + 7].max() <= 1.5 < 2
    plateau = [x for x in range(1, 16) if not a <= x <= a + 6]
    assert np.all(tab[plateau] == 2)
    assert tab[plateau].min() - min(tab[0], tab[a:a + 7].min()) == 2


def test_soft_region_must_fit():
    with pytest.raises(ValueError):
        dw.soft_potential(10, 0.0)


@pytest.mark.parametrize("a", range(2, 7))
@pytest.mark.parametrize("s", [0.0, 1.0])
def test_chain_energetics(a, s):
    spec = chain_for(a, s)
    assert spec.start == a and list(spec.soft_values) == list(range(a, a + 7))
    e = np.array([dw.chain_energy(spec, dw.encode_value(x)) for x in range(16)])
    np.testing.assert_allclose(e - e[0], spec.potential, atol=1e-12)
    assert dw.boundary_frustrations(spec, 0) == 0
    for x in range(1, 16):
        want = 0 if x < a else (1 if x <= a + 6 else 2)
        assert dw.boundary_frustrations(spec, x) == want


def test_feature_costs():
    spec = chain_for(4, 0.0)
    assert feature_cost(spec, 0) == 0
    assert feature_cost(spec, spec.midpoint) == 2.0
    spec1 = chain_for(4, 1.0)
    assert feature_cost(spec1, spec1.midpoint + 3) == pytest.approx(3.5, abs=1e-12)
    assert feature_cost(spec1, spec1.midpoint - 3) == pytest.approx(3.5, abs=1e-12)


def test_valid_states_are_local_minima():
    for s in (0.0, 1.0):
        spec = chain_for(3, s)
        for x in range(16):
            z = dw.encode_value(x)
            base = dw.chain_energy(spec, z)
            for i in range(15):
                zz = z.copy()
                zz[i] = -zz[i]
                if dw.decode_chain(zz).valid:
                    continue                       # wall moved by one step
                assert dw.chain_energy(spec, zz) > base


def test_is_soft():
    spec = chain_for(2, 0.0)
    assert not dw.is_soft(dw.encode_value(0), spec)
    assert dw.is_soft(dw.encode_value(2), spec)
    assert dw.is_soft(dw.encode_value(8), spec)
    assert not dw.is_soft(dw.encode_value(9), spec)
    assert not dw.is_soft(from_bitstring("101000000000000"), spec)


def test_path_minimum_matches_enumeration():
    rng = np.random.default_rng(0)
    for _ in range(20):
        J = rng.uniform(-1, 1, 7)
        h = rng.uniform(-1, 1, 8)
        best = np.inf
        for idx in range(1 << 8):
            z = 1 - 2 * ((idx >> np.arange(8)) & 1)
            best = min(best, float(J @ (z[:-1] * z[1:]) + h @ z))
        assert dw.path_minimum(J, h) == pytest.approx(best, abs=1e-12)


def test_build_chain_validation():
    g = build_chimera(4, 4, 4)
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        dw.build_chain(g, list(range(10)), 0.0, rng)
    spec = chain_for(2, 0.0)
    with pytest.raises(ValueError):
        dw.build_chain(g, list(spec.qubits), 1.5, rng)
    with pytest.raises(ValueError):
        dw.build_chain(g, list(spec.qubits), 0.0, rng, start=7)
