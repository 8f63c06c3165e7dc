"""Classical Ising problems: representation, energies, gauges and exact enumeration.

Energy convention used throughout the package::

    E(z) = sum_{i<j} J_ij z_i z_j + sum_i h_i z_i,     z_i in {+1, -1}

with bit 0 <-> z = +1 and bit 1 <-> z = -1.  Energies are summed in a fixed
order (couplers in ascending ``(i, j)`` order, then fields in ascending index
order) so results are bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components as cc

MAX_BRUTE_FORCE = 24


class ContractError(ValueError):
    """Raised when an argument violates an operation's preconditions."""


@dataclass(frozen=True, eq=False)
class IsingProblem:
    """Sparse Ising problem over ``n_qubits`` spins.

    Parameters
    ----------
    n_qubits : int
        Number of spins.
    couplings : mapping (i, j) -> J_ij
        Pair interactions. Keys are canonicalised to ``i < j``; duplicate
        unordered pairs are rejected.
    fields : mapping i -> h_i
        Single-spin biases.
    """

    n_qubits: int
    couplings: Mapping[tuple[int, int], float] = field(default_factory=dict)
    fields: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        n = int(self.n_qubits)
        if n < 0:
            raise ContractError("n_qubits must be non-negative")
        canon: dict[tuple[int, int], float] = {}
        for (i, j), v in self.couplings.items():
            i, j = int(i), int(j)
            if i == j:
                raise ContractError(f"self-coupling on qubit {i}")
            if i > j:
                i, j = j, i
            if not (0 <= i and j < n):
                raise ContractError(f"coupler ({i}, {j}) outside 0..{n - 1}")
            if (i, j) in canon:
                raise ContractError(f"duplicate coupler ({i}, {j})")
            canon[(i, j)] = float(v)
        hs: dict[int, float] = {}
        for i, v in self.fields.items():
            i = int(i)
            if not 0 <= i < n:
                raise ContractError(f"field on qubit {i} outside 0..{n - 1}")
            hs[i] = float(v)
        canon = dict(sorted(canon.items()))
        hs = dict(sorted(hs.items()))
        object.__setattr__(self, "n_qubits", n)
        object.__setattr__(self, "couplings", canon)
        object.__setattr__(self, "fields", hs)

        # flat arrays in canonical order, plus CSR-style incident lists
        if canon:
            pairs = np.array(list(canon.keys()), dtype=np.int64)
            jv = np.array(list(canon.values()), dtype=np.float64)
        else:
            pairs = np.zeros((0, 2), dtype=np.int64)
            jv = np.zeros(0, dtype=np.float64)
        h = np.zeros(n, dtype=np.float64)
        for i, v in hs.items():
            h[i] = v
        field_idx = np.array(list(hs.keys()), dtype=np.int64)
        field_val = np.array(list(hs.values()), dtype=np.float64)

        deg = np.zeros(n + 1, dtype=np.int64)
        np.add.at(deg, pairs[:, 0] + 1, 1)
        np.add.at(deg, pairs[:, 1] + 1, 1)
        ptr = np.cumsum(deg)
        nbr = np.empty(2 * len(jv), dtype=np.int64)
        nbr_j = np.empty(2 * len(jv), dtype=np.float64)
        nbr_e = np.empty(2 * len(jv), dtype=np.int64)
        fill = ptr[:-1].copy()
        for e, ((i, j), v) in enumerate(zip(pairs, jv)):
            for a, b in ((i, j), (j, i)):
                k = fill[a]
                nbr[k], nbr_j[k], nbr_e[k] = b, v, e
                fill[a] += 1
        for arr in (pairs, jv, h, field_idx, field_val, ptr, nbr, nbr_j, nbr_e):
            arr.setflags(write=False)
        object.__setattr__(self, "_pairs", pairs)
        object.__setattr__(self, "_jvals", jv)
        object.__setattr__(self, "_h", h)
        object.__setattr__(self, "_field_idx", field_idx)
        object.__setattr__(self, "_field_val", field_val)
        object.__setattr__(self, "_ptr", ptr)
        object.__setattr__(self, "_nbr", nbr)
        object.__setattr__(self, "_nbr_j", nbr_j)
        object.__setattr__(self, "_nbr_e", nbr_e)

    # array views used by the samplers
    @property
    def pairs(self) -> np.ndarray:
        """Coupler endpoints, shape (m, 2), canonical ascending order."""
        return self._pairs

    @property
    def jvals(self) -> np.ndarray:
        return self._jvals

    @property
    def h(self) -> np.ndarray:
        """Dense field vector of length n_qubits."""
        return self._h

    @property
    def adjacency(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """CSR incident lists ``(ptr, neighbour, J, edge_index)``."""
        return self._ptr, self._nbr, self._nbr_j, self._nbr_e

    def neighbours(self, i: int) -> list[tuple[int, float]]:
        a, b = self._ptr[i], self._ptr[i + 1]
        return list(zip(self._nbr[a:b].tolist(), self._nbr_j[a:b].tolist()))

    def active_qubits(self) -> np.ndarray:
        """Indices of qubits touched by at least one coupler or nonzero field."""
        act = np.zeros(self.n_qubits, dtype=bool)
        act[self._pairs.ravel()] = True
        act[self._h != 0] = True
        return np.flatnonzero(act)

    def with_terms(self, couplings=None, fields=None) -> "IsingProblem":
        """Copy with some couplers/fields replaced (value 0 keeps the key)."""
        c = dict(self.couplings)
        f = dict(self.fields)
        for (i, j), v in (couplings or {}).items():
            c[(min(i, j), max(i, j))] = v
        f.update(fields or {})
        return IsingProblem(self.n_qubits, c, f)

    def __eq__(self, other):
        if not isinstance(other, IsingProblem):
            return NotImplemented
        return (self.n_qubits == other.n_qubits and self.couplings == other.couplings
                and self.fields == other.fields)

    def __repr__(self):
        return (f"IsingProblem(n_qubits={self.n_qubits}, "
                f"{len(self.couplings)} couplers, {len(self.fields)} fields)")


# --- spin state helpers -------------------------------------------------------

def as_spins(state) -> np.ndarray:
    """Validate and return ``state`` as an int8 array of +1/-1."""
    z = np.asarray(state)
    if z.ndim != 1:
        raise ContractError("a spin state must be one-dimensional")
    if not np.all((z == 1) | (z == -1)):
        raise ContractError("spin values must be +1 or -1")
    return z.astype(np.int8)


def spins_to_bits(z) -> np.ndarray:
    """+1 -> 0, -1 -> 1."""
    return ((1 - np.asarray(z)) // 2).astype(np.uint8)


def bits_to_spins(b) -> np.ndarray:
    return (1 - 2 * np.asarray(b, dtype=np.int8)).astype(np.int8)


def to_bitstring(z) -> str:
    return "".join("1" if s < 0 else "0" for s in np.asarray(z))


def from_bitstring(text: str) -> np.ndarray:
    text = text.strip()
    if set(text) - {"0", "1"}:
        raise ContractError(f"not a bitstring: {text!r}")
    return bits_to_spins(np.frombuffer(text.encode(), dtype=np.uint8) - ord("0"))


def flip(state, i: int) -> np.ndarray:
    z = np.array(state, dtype=np.int8, copy=True)
    z[i] = -z[i]
    return z


def hamming(a, b) -> int:
    return int(np.count_nonzero(np.asarray(a) != np.asarray(b)))


def _check_size(problem: IsingProblem, z: np.ndarray):
    if z.shape[-1] != problem.n_qubits:
        raise ContractError(
            f"state length {z.shape[-1]} does not match problem size {problem.n_qubits}")


# --- energies ---------------------------------------------------------------

def energy(problem: IsingProblem, state) -> float:
    """Classical energy of one spin configuration."""
    z = as_spins(state)
    _check_size(problem, z)
    zf = z.astype(np.float64)
    p = problem.pairs
    total = 0.0
    # explicit left-to-right accumulation keeps the order fixed and documented
    for v in (problem.jvals * zf[p[:, 0]] * zf[p[:, 1]]).tolist():
        total += v
    for v in (problem._field_val * zf[problem._field_idx]).tolist():
        total += v
    return total


def energies(problem: IsingProblem, states) -> np.ndarray:
    """Vectorised energies for a batch of states, shape (r, n) -> (r,).

    Uses the same term order as :func:`energy` but numpy's reduction, so
    results may differ from :func:`energy` in the last ulp for non-dyadic
    coefficients.
    """
    z = np.asarray(states, dtype=np.float64)
    if z.ndim == 1:
        z = z[None, :]
    _check_size(problem, z)
    p = problem.pairs
    e = (z[:, p[:, 0]] * z[:, p[:, 1]]) @ problem.jvals
    return e + z @ problem.h


def local_field(problem: IsingProblem, state, i: int) -> float:
    """sum_j J_ij z_j + h_i for qubit ``i``."""
    ptr, nbr, nj, _ = problem.adjacency
    z = np.asarray(state)
    a, b = ptr[i], ptr[i + 1]
    return float(problem.h[i] + np.dot(nj[a:b], z[nbr[a:b]]))


def delta_energy(problem: IsingProblem, state, i: int) -> float:
    """Energy change from flipping qubit ``i``, computed from incident terms only."""
    z = as_spins(state)
    _check_size(problem, z)
    if not 0 <= i < problem.n_qubits:
        raise ContractError(f"qubit index {i} out of range")
    return -2.0 * float(z[i]) * local_field(problem, z, i)


def all_deltas(problem: IsingProblem, state) -> np.ndarray:
    """Flip costs for every qubit at once."""
    z = np.asarray(state, dtype=np.float64)
    p = problem.pairs
    lf = problem.h.copy()
    np.add.at(lf, p[:, 0], problem.jvals * z[p[:, 1]])
    np.add.at(lf, p[:, 1], problem.jvals * z[p[:, 0]])
    return -2.0 * z * lf


def gauge_transform(problem: IsingProblem, gauge) -> IsingProblem:
    """Return the problem with J_ij -> J_ij g_i g_j and h_i -> h_i g_i.

    The gauged problem satisfies ``energy(new, s) == energy(problem, s * g)``.
    """
    g = as_spins(gauge)
    _check_size(problem, g)
    c = {(i, j): v * g[i] * g[j] for (i, j), v in problem.couplings.items()}
    f = {i: v * g[i] for i, v in problem.fields.items()}
    return IsingProblem(problem.n_qubits, c, f)


# --- exhaustive enumeration -------------------------------------------------

def index_to_spins(idx, n: int) -> np.ndarray:
    """Map integers to spin rows; bit q of the integer is the bit of qubit q."""
    idx = np.asarray(idx, dtype=np.int64)
    bits = (idx[..., None] >> np.arange(n, dtype=np.int64)) & 1
    return (1 - 2 * bits).astype(np.int8)


def enumerate_energies(problem: IsingProblem, chunk: int = 1 << 16) -> np.ndarray:
    """Energies of all 2**n configurations, indexed by the integer bit pattern."""
    n = problem.n_qubits
    if n > MAX_BRUTE_FORCE:
        raise ContractError(f"exhaustive enumeration limited to {MAX_BRUTE_FORCE} qubits")
    total = 1 << n
    out = np.empty(total, dtype=np.float64)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        out[start:start + len(idx)] = energies(problem, index_to_spins(idx, n))
    return out


def brute_force_ground(problem: IsingProblem, atol: float = 1e-9):
    """Exact ground energy and every ground state by full enumeration.

    Returns
    -------
    e0 : float
    states : list of int8 arrays
    """
    e = enumerate_energies(problem)
    e0 = float(e.min())
    idx = np.flatnonzero(e <= e0 + atol)
    states = [s for s in index_to_spins(idx, problem.n_qubits)]
    return energy(problem, states[0]), states


def random_problem(n: int, density: float, rng, *, jscale=1.0, hscale=1.0,
                   dyadic: bool = False) -> IsingProblem:
    """Random sparse problem for tests and demos.

    With ``dyadic`` the coefficients are multiples of 1/8 so floating point
    sums are exact.
    """
    c = {}
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < density:
                c[(i, j)] = _draw(rng, jscale, dyadic)
    f = {i: _draw(rng, hscale, dyadic) for i in range(n) if rng.random() < 0.5}
    return IsingProblem(n, c, f)


def _draw(rng, scale, dyadic):
    if dyadic:
        return float(rng.integers(-8, 9)) / 8.0 * scale
    return float(rng.uniform(-scale, scale))


def connected_components(problem: IsingProblem) -> list[np.ndarray]:
    """Qubit sets connected through nonzero couplers (isolated qubits included)."""
    n = problem.n_qubits
    nz = problem.jvals != 0
    p = problem.pairs[nz]
    adj = coo_matrix((np.ones(len(p)), (p[:, 0], p[:, 1])), shape=(n, n))
    _, labels = cc(adj, directed=False)
    return [np.flatnonzero(labels == c) for c in np.unique(labels)]


def restrict(problem: IsingProblem, qubits) -> IsingProblem:
    """Sub-problem induced on ``qubits`` (relabelled 0..len-1 in the given order)."""
    qubits = [int(q) for q in qubits]
    pos = {q: t for t, q in enumerate(qubits)}
    c = {(pos[i], pos[j]): v for (i, j), v in problem.couplings.items() if i in pos and j in pos}
    f = {pos[i]: v for i, v in problem.fields.items() if i in pos}
    return IsingProblem(len(qubits), c, f)


def exact_ground_energy(problem: IsingProblem) -> float:
    """Exact ground energy by brute force on each connected component.

    Every component must have at most ``MAX_BRUTE_FORCE`` qubits.
    """
    total = 0.0
    for comp in connected_components(problem):
        sub = restrict(problem, comp)
        if sub.n_qubits > MAX_BRUTE_FORCE:
            raise ContractError(
                f"component of {sub.n_qubits} qubits exceeds the brute-force limit")
        total += float(enumerate_energies(sub).min())
    return total
