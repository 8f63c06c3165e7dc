from dataclasses import replace

import numpy as np
import pytest

from flucguide.chimera import build_chimera
from flucguide.gadget import GadgetSpec, PlacementError
from flucguide.ising import connected_components, energy, exact_ground_energy, restrict
from flucguide.planted import (InstanceConfig, build_instance, certify_planted,
                               feature_ground_energy, instance_seeds, plant_loops)


def test_single_loop_energy():
    g = build_chimera(1, 1, 4)
    p, gauge, loops = plant_loops(g, (), 1, 5, np.random.default_rng(0))
    assert len(loops) == 1 and len(loops[0].cycle) == 4
    assert energy(p, gauge) == -2.0


def test_loop_bookkeeping_identity():
    g = build_chimera(4, 4, 4)
    p, gauge, loops = plant_loops(g, (), 300, 5, np.random.default_rng(1))
    assert energy(p, gauge) == sum(-(len(lp.cycle) - 2) for lp in loops)


def test_loops_avoid_mask_and_keep_gauge():
    g = build_chimera(4, 4, 4)
    mask = set(g.cell_qubits(1, 1)) | set(g.cell_qubits(2, 3))
    p, gauge, loops = plant_loops(g, mask, 200, 5, np.random.default_rng(2))
    for lp in loops:
        assert not mask.intersection(lp.cycle)
    assert all(i not in mask and j not in mask for i, j in p.couplings)


def test_overlaps_summed_without_clipping():
    g = build_chimera(1, 1, 4)
    p, gauge, loops = plant_loops(g, (), 50, 5, np.random.default_rng(3))
    mult = {}
    for lp in loops:
        for a, b in lp.edges():
            k = (min(a, b), max(a, b))
            mult[k] = mult.get(k, 0) + 1
    assert max(abs(v) for v in p.couplings.values()) > 1
    for k, v in p.couplings.items():
        assert abs(v) <= mult[k]


@pytest.mark.parametrize("kind", ["none", "gadget-free", "gadget-locked", "chain"])
def test_desk_instances_certified(kind):
    for seed in range(5):
        inst = build_instance(InstanceConfig(feature=kind), seed)
        assert certify_planted(inst)
        assert inst.planted_energy == energy(inst.problem, inst.planted_state)
        assert inst.planted_energy == inst.bound()
        expected = 0 if kind == "none" else 4
        assert len(inst.features) == expected


@pytest.mark.parametrize("kind", ["none", "gadget-free", "gadget-locked"])
def test_small_instances_match_exhaustive_ground(kind):
    for seed in range(4):
        cfg = InstanceConfig(rows=2, cols=2, feature=kind, n_features=1, n_loops=40)
        inst = build_instance(cfg, seed)
        assert certify_planted(inst)
        assert exact_ground_energy(inst.problem) == inst.planted_energy


def test_chain_instance_matches_exhaustive_ground_per_component():
    inst = build_instance(InstanceConfig(rows=3, cols=3, feature="chain", n_features=1,
                                         n_loops=100), 0)
    assert certify_planted(inst)
    total = 0.0
    for comp in connected_components(inst.problem):
        sub = restrict(inst.problem, comp)
        if sub.n_qubits <= 24:
            total += exact_ground_energy(sub)
        else:
            total += energy(sub, inst.planted_state[comp])      # certified part
    assert total == inst.planted_energy


def test_tampered_boundary_breaks_certificate():
    inst = build_instance(InstanceConfig(feature="gadget-free"), 0)
    g = inst.features[0]
    a, b, _ = g.boundary[0]
    key = (min(a, b), max(a, b))
    bad = inst.problem.with_terms({key: -inst.problem.couplings[key]})
    assert not certify_planted(replace(inst, problem=bad))


def test_reproducible():
    a = build_instance(InstanceConfig(feature="chain"), 11)
    b = build_instance(InstanceConfig(feature="chain"), 11)
    assert a.problem == b.problem
    np.testing.assert_array_equal(a.planted_state, b.planted_state)


def test_free_and_locked_share_geometry():
    f = build_instance(InstanceConfig(feature="gadget-free"), 4)
    lk = build_instance(InstanceConfig(feature="gadget-locked"), 4)
    np.testing.assert_array_equal(f.planted_state, lk.planted_state)
    assert [x.qubits for x in f.features] == [x.qubits for x in lk.features]
    diff = {k for k in f.problem.couplings if f.problem.couplings[k] !=
            lk.problem.couplings.get(k)}
    assert len(diff) == len(f.features)             # one halved coupler per gadget


def test_features_disjoint_from_loops():
    inst = build_instance(InstanceConfig(feature="chain"), 2)
    fq = set(inst.feature_qubits.tolist())
    for lp in inst.loops:
        assert not fq.intersection(lp.cycle)


def test_boundary_couplers_satisfied():
    for kind in ("gadget-free", "chain"):
        inst = build_instance(InstanceConfig(feature=kind), 3)
        z = inst.planted_state
        for f in inst.features:
            cpl = f.couplings() if isinstance(f, GadgetSpec) else f.boundary_couplings()
            for (i, j), v in cpl.items():
                if i in f.externals or j in f.externals:
                    assert v * z[i] * z[j] < 0


def test_feature_ground_energy_gadget():
    inst = build_instance(InstanceConfig(feature="gadget-locked"), 0)
    assert feature_ground_energy(inst.features[0]) == -(1 + 1 + 0.5 + 1 + 1)


def test_too_many_gadgets():
    with pytest.raises(PlacementError):
        build_instance(InstanceConfig(rows=2, cols=2, feature="gadget-free", n_features=5), 0)


def test_production_instance():
    inst = build_instance(InstanceConfig(rows=16, cols=16, feature="gadget-free",
                                         n_features=15, n_loops=8000), 0)
    assert inst.n_qubits == 2048 and len(inst.features) == 15
    assert inst.loop_count == 8000
    assert certify_planted(inst)


def test_seed_schedule():
    assert instance_seeds(7, 3) == [7, 8, 9]
