"""Domain-wall encoding of a 16-valued variable on a 15-qubit ferromagnetic chain.

Value ``x`` is stored as ``q_i = 1`` (spin -1) for ``i <= x`` and ``q_i = 0``
(spin +1) otherwise, i.e. the wall sits between ``q_x`` and ``q_{x+1}`` in the
extended string ``(virtual 1, q_1 .. q_15, virtual 0)``.  The two virtual
qubits are realised as end fields (+1 on ``q_1``, -1 on ``q_15``), so every
valid value has the same coupler-plus-end-field energy and the potential
over values is carried entirely by additional single-qubit fields.

Chain instances carry a *soft region*: seven consecutive values ``a .. a+6``
(``a`` in 2..6) with midpoint ``m = a + 3``, where the potential is
``E(m + j) = softness * |j| / 2`` and ``E(0) = E(m) = 0``; all remaining
values sit at +2.  Two unit boundary couplers tie the chain to the planted
problem at ``q_a`` and ``q_{a+7}``, the qubits flipped when the wall enters
and leaves the soft region.  Under planted external values both couplers are
satisfied for ``x < a``, exactly one is frustrated for ``a <= x <= a+6``
and both are frustrated above.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .gadget import PlacementError

N_QUBITS = 15
N_VALUES = N_QUBITS + 1
SOFT_WIDTH = 7
PLATEAU = 2.0


@dataclass(frozen=True)
class ChainReadout:
    value: int | None
    valid: bool

    @property
    def wall(self) -> int | None:
        """Wall position: the wall lies between q_value and q_value+1."""
        return self.value


def encode_value(x: int, n_qubits: int = N_QUBITS) -> np.ndarray:
    """Spin fragment for value ``x`` (spin -1 on the first ``x`` qubits)."""
    if not 0 <= x <= n_qubits:
        raise ValueError(f"value {x} outside 0..{n_qubits}")
    z = np.ones(n_qubits, dtype=np.int8)
    z[:x] = -1
    return z


def decode_chain(fragment) -> ChainReadout:
    """Read the wall position; more than one wall gives an invalid readout."""
    bits = (np.asarray(fragment) < 0).astype(np.int8)
    ext = np.concatenate(([1], bits, [0]))
    falls = int(np.count_nonzero((ext[:-1] == 1) & (ext[1:] == 0)))
    if falls != 1:
        return ChainReadout(None, False)
    return ChainReadout(int(bits.sum()), True)


def soft_potential(a: int, softness: float, n_values: int = N_VALUES) -> np.ndarray:
    """Potential table over the 16 values for a soft region starting at ``a``."""
    if not (0 < a and a + SOFT_WIDTH < n_values):
        raise ValueError(f"soft region start {a} does not fit")
    m = a + SOFT_WIDTH // 2
    table = np.full(n_values, PLATEAU)
    table[0] = 0.0
    for x in range(a, a + SOFT_WIDTH):
        table[x] = softness * abs(x - m) / 2
    return table


def synthesize_fields(potential) -> tuple[np.ndarray, float]:
    """Fields reproducing a potential table on the encoded values.

    Moving the wall from ``x`` to ``x + 1`` flips ``q_{x+1}`` from +1 to -1,
    changing the field energy by ``-2 h_{x+1}``; the fields are therefore
    ``h_{x+1} = -(E(x+1) - E(x)) / 2``.  Returns ``(h, offset)`` with
    ``sum_i h_i z_i + offset == E(x)`` on ``encode_value(x)``.
    """
    e = np.asarray(potential, dtype=np.float64)
    if not np.all(np.isfinite(e)):
        raise ValueError("potential must be finite")
    h = -np.diff(e) / 2.0
    return h, float(e[0] - h.sum())


def value_penalty(x: int, weight: float = 1.0, n_qubits: int = N_QUBITS):
    """Fields and constant for ``weight * (Z_{x+1} - Z_x) / 2``.

    On valid chain states the term equals ``weight`` exactly when the
    variable takes value ``x`` and 0 otherwise.  Virtual qubits
    (``Z_0 = -1``, ``Z_{n+1} = +1``) contribute to the constant.
    """
    if not 0 <= x <= n_qubits:
        raise ValueError(f"value {x} outside 0..{n_qubits}")
    h = np.zeros(n_qubits)
    const = 0.0
    half = weight / 2.0
    if x + 1 <= n_qubits:
        h[x] += half             # q_{x+1}
    else:
        const += half            # Z_{n+1} = +1
    if x >= 1:
        h[x - 1] -= half         # q_x
    else:
        const += half            # -Z_0 = +1
    return h, const


def penalty_fields(potential) -> tuple[np.ndarray, float]:
    """Same as :func:`synthesize_fields` but assembled from single-value penalties."""
    e = np.asarray(potential, dtype=np.float64)
    n = len(e) - 1
    h = np.zeros(n)
    const = 0.0
    for x, w in enumerate(e):
        hx, cx = value_penalty(x, w, n)
        h += hx
        const += cx
    return h, const


def field_energy(h, fragment) -> float:
    return float(np.dot(h, np.asarray(fragment, dtype=np.float64)))


@dataclass(frozen=True)
class ChainSpec:
    qubits: tuple[int, ...]
    start: int                       # a, first soft value
    softness: float
    potential: tuple[float, ...]
    fields: tuple[float, ...]        # potential fields plus virtual-qubit end fields
    offset: float
    boundary: tuple[tuple[int, int, float], ...]   # (chain qubit, external qubit, J canonical)
    orient: dict = field(default_factory=dict)

    @property
    def soft_values(self) -> range:
        return range(self.start, self.start + SOFT_WIDTH)

    @property
    def midpoint(self) -> int:
        return self.start + SOFT_WIDTH // 2

    @property
    def externals(self) -> tuple[int, int]:
        return self.boundary[0][1], self.boundary[1][1]

    def internal_couplings(self) -> dict[tuple[int, int], float]:
        q = self.qubits
        return {(min(a, b), max(a, b)): -1.0 for a, b in zip(q[:-1], q[1:])}

    def boundary_couplings(self) -> dict[tuple[int, int], float]:
        # chain qubits are +1 when planted (x = 0); only the anchor sign matters
        out = {}
        for c, e, j in self.boundary:
            out[(min(c, e), max(c, e))] = j * self.orient.get(e, 1)
        return out

    def field_map(self) -> dict[int, float]:
        return {q: h for q, h in zip(self.qubits, self.fields)}

    def with_orientation(self, planted) -> "ChainSpec":
        return replace(self, orient={int(e): int(planted[e]) for e in self.externals})

    def readout(self, state) -> ChainReadout:
        return decode_chain(np.asarray(state)[list(self.qubits)])


def end_fields(n_qubits: int = N_QUBITS) -> np.ndarray:
    h = np.zeros(n_qubits)
    h[0] += 1.0      # coupled to virtual qubit fixed at bit 1 (spin -1)
    h[-1] -= 1.0     # coupled to virtual qubit fixed at bit 0 (spin +1)
    return h


def build_chain(graph, path, softness: float, rng, *, allowed=None,
                start: int | None = None) -> ChainSpec:
    """Chain on the 15-vertex ``path`` with a soft region starting at ``start``.

    ``start`` defaults to a uniform draw from 2..6.
    Anchors are drawn uniformly among neighbours of ``q_a`` and ``q_{a+7}``
    that are off the chain (and in ``allowed`` when given).  Raises
    :class:`PlacementError` when no such neighbour exists.
    """
    path = [int(q) for q in path]
    if len(path) != N_QUBITS:
        raise ValueError(f"a chain needs exactly {N_QUBITS} qubits")
    if not 0.0 <= softness <= 1.0:
        raise ValueError("softness must lie in [0, 1]")
    a = int(rng.integers(2, 7)) if start is None else int(start)
    if not 2 <= a <= 6:
        raise ValueError("soft region start must lie in 2..6")
    table = soft_potential(a, softness)
    h_pot, offset = synthesize_fields(table)
    h = h_pot + end_fields()
    on_chain = set(path)
    anchors = []
    for idx in (a - 1, a + SOFT_WIDTH - 1):       # q_a and q_{a+7}
        q = path[idx]
        opts = [u for u in graph.adjacency[q]
                if u not in on_chain and (allowed is None or u in allowed)]
        if not opts:
            raise PlacementError(f"chain qubit {q} has no external neighbour")
        anchors.append((q, opts[int(rng.integers(len(opts)))], -1.0))
    return ChainSpec(tuple(path), a, float(softness), tuple(table.tolist()),
                     tuple(h.tolist()), offset, tuple(anchors))


def is_soft(fragment, spec: ChainSpec) -> bool:
    r = decode_chain(fragment)
    return r.valid and r.value in spec.soft_values


def chain_energy(spec: ChainSpec, fragment) -> float:
    """Chain-local energy (internal couplers and all chain fields)."""
    z = np.asarray(fragment, dtype=np.float64)
    return float(-np.dot(z[:-1], z[1:]) + np.dot(spec.fields, z))


def path_minimum(jvals, h) -> float:
    """Exact minimum of sum J_t z_t z_{t+1} + sum h_t z_t on an open path."""
    h = np.asarray(h, dtype=np.float64)
    spins = np.array([1.0, -1.0])
    best = h[0] * spins
    for t in range(1, len(h)):
        trans = best[:, None] + jvals[t - 1] * spins[:, None] * spins[None, :]
        best = trans.min(axis=0) + h[t] * spins
    return float(best.min())


def boundary_frustrations(spec: ChainSpec, x: int) -> int:
    """Number of frustrated boundary couplers with anchors at their planted values."""
    z = encode_value(x)
    pos = {q: t for t, q in enumerate(spec.qubits)}
    return sum(1 for c, _e, j in spec.boundary if j * z[pos[c]] > 0)
