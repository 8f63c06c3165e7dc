import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flucguide.anneal import AnnealParams, sweep_grid
from flucguide.io import (FormatError, config_hash, dumps_problem, loads_problem, read_instance,
                          read_problem, read_samples, write_instance, write_problem,
                          write_samples)
from flucguide.ising import IsingProblem, energy
from flucguide.planted import InstanceConfig, build_instance, certify_planted


@st.composite
def problems(draw):
    n = draw(st.integers(1, 12))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    vals = st.floats(-1, 1, allow_nan=False)
    c = {p: draw(vals) for p in chosen}
    f = {i: draw(st.floats(-2, 2, allow_nan=False))
         for i in draw(st.lists(st.integers(0, n - 1), unique=True))}
    return IsingProblem(n, c, f)


@settings(max_examples=100, deadline=None)
@given(problems())
def test_problem_text_round_trip(p):
    q = loads_problem(dumps_problem(p, comments=["hello"]))
    assert q == p


def test_problem_file(tmp_path):
    p = IsingProblem(3, {(0, 1): -1.0, (1, 2): 0.1}, {2: -0.3})
    write_problem(tmp_path / "p.ising", p)
    assert read_problem(tmp_path / "p.ising") == p
    assert "c 1 2 0.10000000000000001" in (tmp_path / "p.ising").read_text()


@pytest.mark.parametrize("text", [
    "c 0 1 -1\n",                        # no header
    "n 2\nn 2\n",                        # repeated header
    "n 2\nc 0 1 -1\nc 1 0 1\n",          # duplicate coupler
    "n 2\nf 0 1\nf 0 1\n",               # duplicate field
    "n 2\nx 0\n",                        # unknown record
    "n 2\nc 0 1\n",                      # missing value
    "n 2\nc 0 5 -1\n",                   # index out of range
    "n 2\nc 0 0 -1\n",                   # self coupling
    "n two\n",
])
def test_malformed_problem(text):
    with pytest.raises(FormatError):
        loads_problem(text)


def test_comments_ignored():
    p = loads_problem("# header\nn 2  # size\n\nc 0 1 -1 # ferro\n")
    assert p == IsingProblem(2, {(0, 1): -1.0})


def test_config_hash_stable():
    assert config_hash({"a": 1, "b": 2}) == config_hash({"b": 2, "a": 1})
    assert config_hash({"a": 1}) != config_hash({"a": 2})


@pytest.mark.parametrize("kind", ["none", "gadget-free", "gadget-locked", "chain"])
def test_instance_round_trip(tmp_path, kind):
    inst = build_instance(InstanceConfig(feature=kind), 3)
    write_instance(tmp_path / "inst", inst)
    back = read_instance(tmp_path / "inst")
    assert back.problem == inst.problem
    np.testing.assert_array_equal(back.planted_state, inst.planted_state)
    assert back.planted_energy == inst.planted_energy
    assert back.features == inst.features
    assert back.loops == inst.loops
    assert back.config == inst.config and back.feature_kind == inst.feature_kind
    assert certify_planted(back)
    assert read_instance(tmp_path / "inst.json").problem == inst.problem


def test_instance_bad_metadata(tmp_path):
    inst = build_instance(InstanceConfig(feature="none"), 0)
    write_instance(tmp_path / "inst", inst)
    (tmp_path / "inst.json").write_text("{not json")
    with pytest.raises(FormatError):
        read_instance(tmp_path / "inst")
    meta = json.loads(json.dumps({"format": 1}))
    (tmp_path / "inst.json").write_text(json.dumps(meta))
    with pytest.raises(FormatError):
        read_instance(tmp_path / "inst")


def test_instance_missing_file(tmp_path):
    with pytest.raises(OSError):
        read_instance(tmp_path / "absent")


@pytest.fixture(scope="module")
def samples():
    inst = build_instance(InstanceConfig(feature="gadget-free"), 0)
    ss = sweep_grid(inst, inst.planted_state, [0.5, 1.0], [-0.04, 0.0],
                    AnnealParams(reads=2, ramp_sweeps=10, hold_sweeps=10, slices=4, seed=4))
    return inst, ss


def test_samples_round_trip(tmp_path, samples):
    inst, ss = samples
    write_samples(tmp_path / "s.json", ss, {"instance": "x", "seed": 4})
    back, header = read_samples(tmp_path / "s.json", inst.problem)
    assert header == {"instance": "x", "seed": 4}
    np.testing.assert_array_equal(back.states, ss.states)
    np.testing.assert_array_equal(back.raw, ss.raw)
    np.testing.assert_array_equal(back.s_star, ss.s_star)
    np.testing.assert_array_equal(back.offset, ss.offset)
    np.testing.assert_array_equal(back.seeds, ss.seeds)
    assert back.energies[0] == energy(inst.problem, back.states[0])


def test_samples_wrong_problem(tmp_path, samples):
    _, ss = samples
    write_samples(tmp_path / "s.json", ss, {})
    with pytest.raises(FormatError):
        read_samples(tmp_path / "s.json", IsingProblem(4))


def test_samples_malformed(tmp_path, samples):
    inst, _ = samples
    (tmp_path / "s.json").write_text('{"records": [{"state": "01"}]}')
    with pytest.raises(FormatError):
        read_samples(tmp_path / "s.json", inst.problem)
