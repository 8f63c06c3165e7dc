"""
Flexible starting points for a penalised greedy search
======================================================

A 16-qubit problem has a unique ground state and, two units above it, a
manifold of 256 states in which eight qubits flip for free.  Add a penalty
that rewards being a particular distance from a random reference and run
greedy descent from either start.
"""

import numpy as np

from flucguide.penalty import (build_dickson, flexibility_tradeoff_16, nonlinear_penalty,
                               penalty_centre)

n = 16
print(f"penalty centre for n = {n}: {penalty_centre(n):.3f}")
print("E(D):", np.round(nonlinear_penalty(np.arange(n + 1), n), 3))

p = build_dickson()
print(f"{p.n_qubits} qubits, {len(p.couplings)} couplers")

tc = flexibility_tradeoff_16(np.linspace(0, 20, 11), n_refs=2000, rng=0)
print(" lambda   ground start   flexible start   difference")
for lam, g, f, d, s in zip(tc.lam, tc.ground_mean, tc.flexible_mean, tc.diff_mean,
                           tc.diff_se):
    print(f"{lam:7.1f}   {g:12.3f}   {f:14.3f}   {d:+.3f} +- {s:.3f}")
