import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flucguide.ising import (ContractError, IsingProblem, all_deltas, brute_force_ground,
                             connected_components, delta_energy, energies, energy,
                             enumerate_energies, exact_ground_energy, flip, from_bitstring,
                             gauge_transform, hamming, index_to_spins, random_problem, restrict,
                             to_bitstring)


def naive_energy(problem, z):
    """Independent oracle: dense double loop over an explicit matrix."""
    n = problem.n_qubits
    J = np.zeros((n, n))
    for (i, j), v in problem.couplings.items():
        J[i, j] = v
    h = np.zeros(n)
    for i, v in problem.fields.items():
        h[i] = v
    z = np.asarray(z, float)
    return sum(J[i, j] * z[i] * z[j] for i in range(n) for j in range(n)) + h @ z


@st.composite
def problems(draw, max_n=10):
    n = draw(st.integers(1, max_n))
    seed = draw(st.integers(0, 2**32 - 1))
    density = draw(st.floats(0.0, 1.0))
    return random_problem(n, density, np.random.default_rng(seed), dyadic=True)


def spins_for(n, seed):
    return np.random.default_rng(seed).choice(np.array([-1, 1], np.int8), size=n)


# --- energy -----------------------------------------------------------------------

def test_ferromagnetic_pair_aligned():
    assert energy(IsingProblem(2, {(0, 1): -1.0}), [1, 1]) == -1.0


def test_ferromagnetic_pair_frustrated():
    assert energy(IsingProblem(2, {(0, 1): -1.0}), [1, -1]) == 1.0


def test_null_hamiltonian_is_zero():
    p = IsingProblem(5)
    for bits in itertools.product([1, -1], repeat=5):
        assert energy(p, bits) == 0.0


def test_size_mismatch_rejected():
    with pytest.raises(ContractError):
        energy(IsingProblem(3), [1, 1])


def test_non_spin_values_rejected():
    with pytest.raises(ContractError):
        energy(IsingProblem(2), [1, 0])


@pytest.mark.parametrize("bad", [{(0, 0): 1.0}, {(0, 5): 1.0}])
def test_invalid_couplers_rejected(bad):
    with pytest.raises(ContractError):
        IsingProblem(3, bad)


def test_duplicate_unordered_pair_rejected():
    with pytest.raises(ContractError):
        IsingProblem(3, {(0, 1): 1.0, (1, 0): -1.0})


def test_couplings_canonicalised():
    p = IsingProblem(3, {(2, 0): 0.5})
    assert p.couplings == {(0, 2): 0.5}


@settings(max_examples=100, deadline=None)
@given(problems(), st.integers(0, 2**32 - 1))
def test_energy_matches_dense_oracle(p, seed):
    z = spins_for(p.n_qubits, seed)
    assert energy(p, z) == pytest.approx(naive_energy(p, z), abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(problems(), st.integers(0, 2**32 - 1))
def test_batch_energies_agree(p, seed):
    rng = np.random.default_rng(seed)
    zs = rng.choice(np.array([-1, 1], np.int8), size=(7, p.n_qubits))
    np.testing.assert_allclose(energies(p, zs), [energy(p, z) for z in zs], atol=1e-12)


def test_energy_is_deterministic():
    p = random_problem(30, 0.3, np.random.default_rng(0))
    z = spins_for(30, 1)
    assert energy(p, z) == energy(p, z.copy())


# --- flips --------------------------------------------------------------------------

def test_isolated_field_flip():
    assert delta_energy(IsingProblem(1, {}, {0: 1.0}), [1], 0) == -2.0


def test_untouched_spin_flip_is_free():
    assert delta_energy(IsingProblem(3, {(0, 1): -1.0}), [1, 1, 1], 2) == 0.0


def test_delta_index_out_of_range():
    with pytest.raises(ContractError):
        delta_energy(IsingProblem(2), [1, 1], 2)


def test_delta_matches_energy_difference_12_spins():
    p = random_problem(12, 0.5, np.random.default_rng(3))
    z = spins_for(12, 4)
    for i in range(12):
        assert delta_energy(p, z, i) == pytest.approx(energy(p, flip(z, i)) - energy(p, z),
                                                      abs=1e-12)


def test_delta_exact_on_many_dyadic_instances():
    rng = np.random.default_rng(5)
    for _ in range(1000):
        n = int(rng.integers(2, 9))
        p = random_problem(n, 0.6, rng, dyadic=True)
        z = rng.choice(np.array([-1, 1], np.int8), size=n)
        i = int(rng.integers(n))
        assert energy(p, flip(z, i)) - energy(p, z) - delta_energy(p, z, i) == 0.0


@settings(max_examples=50, deadline=None)
@given(problems(), st.integers(0, 2**32 - 1))
def test_all_deltas_agree(p, seed):
    z = spins_for(p.n_qubits, seed)
    np.testing.assert_allclose(all_deltas(p, z),
                               [delta_energy(p, z, i) for i in range(p.n_qubits)], atol=1e-12)


# --- gauges --------------------------------------------------------------------------

def test_identity_gauge():
    p = random_problem(6, 0.5, np.random.default_rng(0))
    assert gauge_transform(p, np.ones(6, np.int8)) == p


def test_all_minus_gauge_negates_fields_only():
    p = random_problem(6, 0.5, np.random.default_rng(1))
    q = gauge_transform(p, -np.ones(6, np.int8))
    assert q.couplings == p.couplings
    assert q.fields == {i: -v for i, v in p.fields.items()}


def test_gauge_preserves_spectrum():
    rng = np.random.default_rng(2)
    p = random_problem(10, 0.5, rng, dyadic=True)
    g = spins_for(10, 3)
    a = np.sort(enumerate_energies(p))
    b = np.sort(enumerate_energies(gauge_transform(p, g)))
    np.testing.assert_array_equal(a, b)


@settings(max_examples=30, deadline=None)
@given(problems(max_n=12), st.integers(0, 2**32 - 1))
def test_gauge_energy_identity_exhaustive(p, seed):
    g = spins_for(p.n_qubits, seed)
    q = gauge_transform(p, g)
    states = index_to_spins(np.arange(1 << p.n_qubits), p.n_qubits)
    np.testing.assert_array_equal(energies(q, states), energies(p, states * g))


# --- exhaustive oracle -------------------------------------------------------------------

def test_single_spin_ground():
    e0, states = brute_force_ground(IsingProblem(1, {}, {0: 1.0}))
    assert e0 == -1.0
    assert [s.tolist() for s in states] == [[-1]]


def test_antiferromagnetic_pair_degenerate():
    e0, states = brute_force_ground(IsingProblem(2, {(0, 1): 1.0}))
    assert e0 == -1.0
    assert sorted(s.tolist() for s in states) == [[-1, 1], [1, -1]]


def test_size_guard():
    with pytest.raises(ContractError):
        brute_force_ground(IsingProblem(25))


def test_ground_beats_random_states():
    rng = np.random.default_rng(7)
    for _ in range(5):
        p = random_problem(14, 0.3, rng)
        e0, _ = brute_force_ground(p)
        zs = rng.choice(np.array([-1, 1], np.int8), size=(10_000, 14))
        assert e0 <= energies(p, zs).min() + 1e-12


def test_enumeration_indexing():
    p = random_problem(5, 0.8, np.random.default_rng(8))
    e = enumerate_energies(p)
    for idx in (0, 7, 19, 31):
        z = index_to_spins(np.array([idx]), 5)[0]
        assert e[idx] == pytest.approx(energy(p, z), abs=1e-12)


def test_component_wise_ground_energy():
    rng = np.random.default_rng(9)
    a = random_problem(8, 0.7, rng, dyadic=True)
    b = random_problem(8, 0.7, rng, dyadic=True)
    c = {**a.couplings, **{(i + 8, j + 8): v for (i, j), v in b.couplings.items()}}
    f = {**a.fields, **{i + 8: v for i, v in b.fields.items()}}
    both = IsingProblem(16, c, f)
    assert exact_ground_energy(both) == brute_force_ground(both)[0]
    assert len(connected_components(both)) >= 2


def test_restrict_relabels():
    p = IsingProblem(4, {(1, 3): -1.0}, {3: 0.5})
    q = restrict(p, [3, 1])
    assert q.couplings == {(0, 1): -1.0}
    assert q.fields == {0: 0.5}


# --- conversions --------------------------------------------------------------------------

@given(st.lists(st.sampled_from([1, -1]), min_size=1, max_size=64))
def test_bitstring_round_trip(bits):
    z = np.array(bits, np.int8)
    s = to_bitstring(z)
    assert set(s) <= {"0", "1"}
    np.testing.assert_array_equal(from_bitstring(s), z)


def test_bit_convention():
    assert to_bitstring([1, -1]) == "01"


def test_hamming():
    assert hamming([1, 1, -1], [1, -1, 1]) == 2
