"""
Planted instances with embedded gadgets and chains
==================================================

Build a desk-sized problem, check that the planted state is a provable
ground state, and look at what a single gadget does when its two anchors
disagree.
"""

import numpy as np

from flucguide import analysis as an
from flucguide.gadget import gadget_ground_manifold
from flucguide.planted import InstanceConfig, build_instance, certify_planted

# A 4x4 grid of unit cells with four free gadgets and 400 frustrated loops.
cfg = InstanceConfig(rows=4, cols=4, feature="gadget-free", n_features=4, n_loops=400)
inst = build_instance(cfg, seed=0)
print(f"{inst.n_qubits} qubits, {len(inst.problem.couplings)} couplers, "
      f"{len(inst.features)} gadgets")
print(f"planted energy {inst.planted_energy}, certified: {certify_planted(inst)}")

# Every loop contributes -(len - 2) and every gadget its own ground energy;
# the certificate checks that these local bounds add up to the planted energy.
print(f"lower bound from loops and features: {inst.bound()}")

# The gadget's four qubits sit in one unit cell.  With aligned anchors there
# is one minimum; with disagreeing anchors the wall can sit on any of five
# couplers, and every one of those states has a zero-cost flip.
spec = inst.features[0]
for boundary in [(1, 1), (1, -1)]:
    e0, states = gadget_ground_manifold(spec, boundary)
    print(f"anchors {boundary}: minimum {e0:+.1f}, {len(states)} ground states")

# The trivial way to make gadgets free is to flip an anchor's unit cell,
# which frustrates one boundary coupler at a cost of 2.
base = an.trivial_baseline(inst)
for e, k in zip(base.energy, base.k):
    print(f"trivial strategy: k = {k} free at energy +{e:g}")

# The locked variant shares the geometry, but one internal coupler is halved.
locked = build_instance(InstanceConfig(rows=4, cols=4, feature="gadget-locked",
                                       n_features=4, n_loops=400), seed=0)
e0, states = gadget_ground_manifold(locked.features[0], (1, -1))
print(f"locked gadget, disagreeing anchors: {len(states)} ground state at {e0:+.1f}")
assert np.array_equal(locked.planted_state, inst.planted_state)
