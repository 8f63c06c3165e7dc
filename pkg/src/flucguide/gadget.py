"""Free-spin and locked gadgets living inside one chimera unit cell.

A gadget is a ferromagnetic path ``q_1 .. q_k`` through one cell, alternating
between the horizontal and vertical shore, anchored by one boundary coupler
from ``q_1`` to a horizontally adjacent external qubit and one from ``q_k`` to
a vertically adjacent external qubit.  When the two anchors agree the aligned
configuration is the unique minimum; when they disagree a single domain wall
can sit on any of the ``k + 1`` unit couplers at equal cost, so internal
spins become free.  The locked variant halves the middle internal coupler,
which pins the wall there and removes the degeneracy.

Couplers are stored in the gadget's canonical frame (all ferromagnetic).  The
``orient`` map carries the planted spin of every gadget and anchor qubit;
the physical coupler is ``J * orient[a] * orient[b]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .chimera import HORIZONTAL, VERTICAL, ChimeraGraph
from .ising import all_deltas, index_to_spins

FREE, LOCKED = "free", "locked"


class PlacementError(RuntimeError):
    """A feature could not be placed at the requested location."""


@dataclass(frozen=True)
class GadgetSpec:
    cell: tuple[int, int]
    qubits: tuple[int, ...]
    internal: tuple[tuple[int, int, float], ...]
    boundary: tuple[tuple[int, int, float], ...]   # (gadget qubit, external qubit, J)
    variant: str
    unused: tuple[int, ...] = ()
    orient: dict = field(default_factory=dict)

    @property
    def externals(self) -> tuple[int, int]:
        return self.boundary[0][1], self.boundary[1][1]

    @property
    def locked_coupler(self) -> int:
        """Index (0-based) of the internal coupler halved in the locked variant."""
        return math.ceil(len(self.qubits) / 2) - 1

    def _o(self, q):
        return self.orient.get(q, 1)

    def couplings(self) -> dict[tuple[int, int], float]:
        """Physical (gauged) couplers, internal and boundary."""
        out = {}
        for a, b, j in self.internal + self.boundary:
            out[(min(a, b), max(a, b))] = j * self._o(a) * self._o(b)
        return out

    def with_orientation(self, planted) -> "GadgetSpec":
        qs = self.qubits + self.externals
        return replace(self, orient={int(q): int(planted[q]) for q in qs})


def _path_shores(k: int):
    return [HORIZONTAL if t % 2 == 0 else VERTICAL for t in range(k)]


def build_gadget(graph: ChimeraGraph, cell, variant: str, rng, *, size: int = 4,
                 allowed=None) -> GadgetSpec:
    """Place a gadget of ``size`` path qubits in ``cell``.

    External anchors are drawn uniformly among the horizontally (for
    ``q_1``) and vertically (for ``q_k``) adjacent qubits, restricted to
    ``allowed`` when given.  Raises :class:`PlacementError` when a border
    cell lacks a usable neighbour on either side.
    """
    if variant not in (FREE, LOCKED):
        raise ValueError(f"unknown gadget variant {variant!r}")
    L = graph.shore
    if size < 2 or size % 2 or size > 2 * L:
        raise ValueError(f"gadget size must be even and in 2..{2 * L}")
    row, col = cell
    if not (0 <= row < graph.rows and 0 <= col < graph.cols):
        raise PlacementError(f"cell {cell} outside the graph")

    half = size // 2
    h_idx = rng.permutation(L)[:half]
    v_idx = rng.permutation(L)[:half]
    shores = _path_shores(size)
    qubits = []
    for t, side in enumerate(shores):
        k = h_idx[t // 2] if side == HORIZONTAL else v_idx[t // 2]
        qubits.append(graph.qubit(row, col, side, int(k)))

    first, last = qubits[0], qubits[-1]
    _, _, _, kf = graph.coords(first)
    _, _, _, kl = graph.coords(last)
    left_opts = [graph.qubit(row, c, HORIZONTAL, kf) for c in (col - 1, col + 1)
                 if 0 <= c < graph.cols]
    right_opts = [graph.qubit(r, col, VERTICAL, kl) for r in (row - 1, row + 1)
                  if 0 <= r < graph.rows]
    if allowed is not None:
        left_opts = [q for q in left_opts if q in allowed]
        right_opts = [q for q in right_opts if q in allowed]
    if not left_opts or not right_opts:
        raise PlacementError(f"cell {cell} lacks free external neighbours")
    ext_left = left_opts[int(rng.integers(len(left_opts)))]
    ext_right = right_opts[int(rng.integers(len(right_opts)))]

    internal = []
    lock = math.ceil(size / 2) - 1
    for t in range(size - 1):
        j = -1.0
        if variant == LOCKED and t == lock:
            j = -0.5
        internal.append((qubits[t], qubits[t + 1], j))
    boundary = ((first, ext_left, -1.0), (last, ext_right, -1.0))
    unused = tuple(q for q in graph.cell_qubits(row, col) if q not in qubits)
    return GadgetSpec((row, col), tuple(qubits), tuple(internal), boundary, variant, unused)


def _canonical_energy(spec: GadgetSpec, internal_states: np.ndarray, boundary) -> np.ndarray:
    pos = {q: t for t, q in enumerate(spec.qubits)}
    z = internal_states.astype(np.float64)
    e = np.zeros(len(z))
    for a, b, j in spec.internal:
        e += j * z[:, pos[a]] * z[:, pos[b]]
    for (q, _ext, j), zb in zip(spec.boundary, boundary):
        e += j * zb * z[:, pos[q]]
    return e


def gadget_ground_manifold(spec: GadgetSpec, boundary, atol: float = 1e-12):
    """Minimum gadget energy and all minimising internal states.

    ``boundary`` gives the two anchor spins ``(z_left, z_right)`` in the
    gadget's canonical frame (+1 means "equal to the planted value").
    Energies include the two boundary couplers.
    """
    k = len(spec.qubits)
    states = index_to_spins(np.arange(1 << k), k)
    e = _canonical_energy(spec, states, boundary)
    e0 = float(e.min())
    return e0, [s for s in states[e <= e0 + atol]]


def internal_flip_costs(spec: GadgetSpec, internal, boundary) -> np.ndarray:
    """Canonical-frame cost of flipping each internal qubit."""
    z = np.asarray(internal, dtype=np.int8)
    base = _canonical_energy(spec, z[None, :], boundary)[0]
    out = np.empty(len(z))
    for t in range(len(z)):
        zz = z.copy()
        zz[t] = -zz[t]
        out[t] = _canonical_energy(spec, zz[None, :], boundary)[0] - base
    return out


def is_free(problem, state, gadget: GadgetSpec, deltas=None) -> bool:
    """True when some gadget qubit can be flipped at zero cost in the full problem.

    ``deltas`` may carry precomputed flip costs for all qubits.
    """
    if deltas is None:
        deltas = all_deltas(problem, state)
    return bool(np.any(np.abs(deltas[list(gadget.qubits)]) < 1e-9))
