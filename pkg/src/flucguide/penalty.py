"""Nonlinear Hamming-distance penalty, greedy descent and the flexibility use case.

The penalty is a Gaussian well in the Hamming distance ``D`` to a random
reference state,

    E(D) = 1 - exp(-(D - c)^2 / (n + 1)),   c = n/2 + sqrt(n + 1),

centred one standard deviation beyond the typical distance ``n/2`` of an
unrelated state.  A solution that can be moved at no cost (free gadget
qubits, soft chain walls) can slide towards the well; a rigid one pays full
Ising cost for every step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .anneal import _uniform, auto_scale, rng_state
from .ising import IsingProblem, all_deltas, as_spins, brute_force_ground, energy, hamming


def penalty_centre(n: int) -> float:
    return n / 2 + math.sqrt(n + 1)


def nonlinear_penalty(D, n: int):
    """``1 - exp(-(D - c)^2 / (n + 1))``; vectorised over ``D``."""
    D = np.asarray(D, dtype=np.float64)
    if np.any(D < 0) or np.any(D > n):
        raise ValueError(f"Hamming distance outside 0..{n}")
    out = 1.0 - np.exp(-((D - penalty_centre(n)) ** 2) / (n + 1))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class PenaltyParams:
    """Reference state, strength ``lam`` and the qubits the distance runs over.

    ``qubits`` defaults to all qubits; the reference is given on those
    qubits only.
    """

    reference: np.ndarray
    lam: float
    qubits: np.ndarray | None = None

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("penalty strength must be >= 0")
        ref = as_spins(self.reference)
        object.__setattr__(self, "reference", ref)
        if self.qubits is not None:
            q = np.asarray(self.qubits, dtype=np.int64)
            if len(q) != len(ref):
                raise ValueError("reference length must match the penalised qubits")
            object.__setattr__(self, "qubits", q)

    @property
    def n(self) -> int:
        return len(self.reference)

    def distance(self, state) -> int:
        z = np.asarray(state)
        if self.qubits is not None:
            z = z[self.qubits]
        if len(z) != self.n:
            raise ValueError("state does not match the reference")
        return hamming(z, self.reference)

    def table(self) -> np.ndarray:
        """Penalty value for every attainable distance 0..n."""
        return nonlinear_penalty(np.arange(self.n + 1), self.n)


def composite_energy(problem: IsingProblem, state, penalty: PenaltyParams) -> float:
    """Ising energy plus ``lam * E(D)``."""
    return energy(problem, state) + penalty.lam * nonlinear_penalty(
        penalty.distance(state), penalty.n)


class CompositeObjective:
    """Objective ``energy + lam * E(D)`` with fast single-flip deltas."""

    def __init__(self, problem: IsingProblem, penalty: PenaltyParams | None = None):
        self.problem = problem
        self.penalty = penalty

    def __call__(self, state) -> float:
        if self.penalty is None:
            return energy(self.problem, state)
        return composite_energy(self.problem, state, self.penalty)

    def flip_deltas(self, state) -> np.ndarray:
        z = np.asarray(state)
        d = all_deltas(self.problem, z)
        if self.penalty is None or self.penalty.lam == 0:
            return d
        pen = self.penalty
        tab = pen.table()
        D = pen.distance(z)
        q = np.arange(self.problem.n_qubits) if pen.qubits is None else pen.qubits
        same = z[q] == pen.reference
        up = tab[min(D + 1, pen.n)] - tab[D] if D < pen.n else 0.0
        down = tab[D - 1] - tab[D] if D > 0 else 0.0
        d = d.copy()
        d[q] += pen.lam * np.where(same, up, down)
        return d


class _Callable:
    """Generic objective wrapped to expose flip deltas by re-evaluation."""

    def __init__(self, fn):
        self.fn = fn

    def __call__(self, state):
        return self.fn(state)

    def flip_deltas(self, state):
        z = np.array(state, dtype=np.int8)
        base = self.fn(z)
        out = np.empty(len(z))
        for i in range(len(z)):
            z[i] = -z[i]
            out[i] = self.fn(z) - base
            z[i] = -z[i]
        return out


def greedy_descent(objective, start, rng, *, atol: float = 1e-12, max_steps=None):
    """Steepest single-flip descent taking strict improvements only.

    Ties among equally good flips are broken uniformly at random; zero-cost
    flips are never taken, so the result is a single-flip local minimum.
    ``objective`` is a callable on states or an object with ``flip_deltas``.
    Returns ``(state, trajectory)`` where ``trajectory`` lists objective values.
    """
    obj = objective if hasattr(objective, "flip_deltas") else _Callable(objective)
    z = as_spins(start).copy()
    traj = [obj(z)]
    steps = 0
    while max_steps is None or steps < max_steps:
        d = obj.flip_deltas(z)
        best = d.min()
        if not best < -atol:
            break
        cands = np.flatnonzero(d <= best + atol)
        i = int(cands[rng.integers(len(cands))])
        z[i] = -z[i]
        traj.append(obj(z))
        steps += 1
    return z, traj


# --- fast composite greedy (numba) ------------------------------------------------

@numba.njit(cache=True)
def _greedy_core(z, ptr, nbr, nbr_j, h, pos, ref, lam, tab, st):
    """Composite steepest descent; ``pos[i]`` is the penalty slot of qubit i or -1."""
    n = len(z)
    m = len(ref)
    delta = np.empty(n)
    for i in range(n):
        loc = h[i]
        for e in range(ptr[i], ptr[i + 1]):
            loc += nbr_j[e] * z[nbr[e]]
        delta[i] = -2.0 * z[i] * loc
    D = 0
    for i in range(n):
        if pos[i] >= 0 and z[i] != ref[pos[i]]:
            D += 1
    ties = np.empty(n, dtype=np.int64)
    while True:
        up = lam * (tab[D + 1] - tab[D]) if D < m else 0.0
        dn = lam * (tab[D - 1] - tab[D]) if D > 0 else 0.0
        best = 0.0
        nt = 0
        for i in range(n):
            d = delta[i]
            if pos[i] >= 0:
                d += up if z[i] == ref[pos[i]] else dn
            if d < best - 1e-12:
                best = d
                ties[0] = i
                nt = 1
            elif nt > 0 and abs(d - best) <= 1e-12:
                ties[nt] = i
                nt += 1
        if nt == 0:
            break
        k = ties[min(nt - 1, int(_uniform(st) * nt))]
        if pos[k] >= 0:
            D += 1 if z[k] == ref[pos[k]] else -1
        z[k] = -z[k]
        delta[k] = -delta[k]
        for e in range(ptr[k], ptr[k + 1]):
            j = nbr[e]
            delta[j] -= 4.0 * nbr_j[e] * z[j] * z[k]
    return D


class FastGreedy:
    """Repeated composite greedy runs on one problem and penalised qubit set."""

    def __init__(self, problem: IsingProblem, qubits=None):
        self.problem = problem
        n = problem.n_qubits
        q = np.arange(n) if qubits is None else np.asarray(qubits, dtype=np.int64)
        self.qubits = q
        self.pos = -np.ones(n, dtype=np.int64)
        self.pos[q] = np.arange(len(q))
        self.table = nonlinear_penalty(np.arange(len(q) + 1), len(q))

    def run(self, start, reference, lam: float, seed: int):
        """Final state and composite energy of one descent."""
        ptr, nbr, nbr_j, _ = self.problem.adjacency
        z = np.array(start, dtype=np.int8)
        ref = np.asarray(reference, dtype=np.int8)
        D = _greedy_core(z, ptr, nbr, nbr_j, self.problem.h, self.pos, ref, float(lam),
                         self.table, rng_state(seed))
        return z, energy(self.problem, z) + lam * self.table[D]


# --- the 16-qubit two-minimum example --------------------------------------------------

INNER = tuple(range(8))
OUTER = tuple(range(8, 16))


def build_dickson(eps: float = 1 / 8) -> IsingProblem:
    """Inner ferromagnetic 8-ring with a ferromagnetic spoke to each outer qubit.

    Outer fields are +1 and inner fields ``-(1 - eps)``.  The ground state
    (all -1) satisfies the outer fields and frustrates the inner ones; the
    first excited level has the inner ring at +1, where every outer qubit
    sees cancelling field and spoke and is free.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    c = {}
    for t in range(8):
        c[(t, (t + 1) % 8)] = -1.0
        c[(t, t + 8)] = -1.0
    f = {i: -(1.0 - eps) for i in INNER}
    f.update({i: 1.0 for i in OUTER})
    return IsingProblem(16, c, f)


def dickson_ground() -> np.ndarray:
    return -np.ones(16, dtype=np.int8)


def dickson_false_state(outer) -> np.ndarray:
    """Member of the free manifold: inner ring +1, outer spins as given."""
    z = np.ones(16, dtype=np.int8)
    z[list(OUTER)] = as_spins(outer)
    return z


def default_lambda_grid() -> np.ndarray:
    return np.linspace(0.0, 20.0, 41)


@dataclass
class TradeoffCurves:
    lam: np.ndarray
    ground_mean: np.ndarray
    ground_se: np.ndarray
    flexible_mean: np.ndarray
    flexible_se: np.ndarray
    diff_mean: np.ndarray          # flexible - ground, paired per reference
    diff_se: np.ndarray
    ground_energy: float

    def rows(self):
        for a, lam in enumerate(self.lam):
            yield float(lam), "ground", float(self.ground_mean[a]), float(self.ground_se[a])
            yield float(lam), "flexible", float(self.flexible_mean[a]), float(self.flexible_se[a])
            yield float(lam), "true_ground", self.ground_energy, 0.0


def _mean_se(x, axis=0):
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[axis]
    se = x.std(axis=axis, ddof=1) / math.sqrt(n) if n > 1 else np.full(x.shape[1 - axis], np.nan)
    return x.mean(axis=axis), se


def flexibility_tradeoff_16(lam_grid=None, n_refs: int = 10_000, rng=None,
                            eps: float = 1 / 8) -> TradeoffCurves:
    """Greedy composite descent from the true minimum and from the free manifold.

    Each reference draws one random reference state and one random member of
    the free manifold; both series use the same references (paired design).
    """
    if n_refs < 1:
        raise ValueError("n_refs must be >= 1")
    rng = np.random.default_rng(rng)
    lam_grid = default_lambda_grid() if lam_grid is None else np.asarray(lam_grid, float)
    prob = build_dickson(eps)
    e0, _ = brute_force_ground(prob)
    fg = FastGreedy(prob)
    g0 = dickson_ground()
    refs = rng.choice(np.array([-1, 1], dtype=np.int8), size=(n_refs, 16))
    flex = rng.choice(np.array([-1, 1], dtype=np.int8), size=(n_refs, 8))
    seeds = rng.integers(0, 2**63, size=(len(lam_grid), n_refs, 2))
    G = np.empty((n_refs, len(lam_grid)))
    F = np.empty((n_refs, len(lam_grid)))
    for a, lam in enumerate(lam_grid):
        for r in range(n_refs):
            G[r, a] = fg.run(g0, refs[r], lam, int(seeds[a, r, 0]))[1]
            F[r, a] = fg.run(dickson_false_state(flex[r]), refs[r], lam, int(seeds[a, r, 1]))[1]
    gm, gs = _mean_se(G)
    fm, fs = _mean_se(F)
    dm, ds = _mean_se(F - G)
    return TradeoffCurves(lam_grid, gm, gs, fm, fs, dm, ds, float(e0))


# --- use-case pipeline ----------------------------------------------------------------

@dataclass
class UseCaseResult:
    lam: np.ndarray
    k_values: list[int]
    curves: dict[int, np.ndarray]          # k -> mean final composite energy per lam
    stderr: dict[int, np.ndarray]

    def difference(self, k: int) -> np.ndarray:
        """Mean energy for ``k`` minus mean energy for ``k = 0``."""
        return self.curves[k] - self.curves[0]

    def optimal_k(self) -> np.ndarray:
        """Argmin over ``k`` for each ``lam``; ties go to the smaller ``k``."""
        ks = sorted(self.curves)
        M = np.array([self.curves[k] for k in ks])
        return np.array([ks[int(np.argmin(M[:, a]))] for a in range(M.shape[1])])


def usecase_pipeline(instance, records, lam_grid=None, n_refs: int = 300, rng=None,
                     qubits=None, problem_scale=1.0) -> UseCaseResult:
    """Composite greedy from the best sampled state for every available ``k``.

    ``records`` maps ``k`` to a conditional record; for every reference a new
    start is drawn uniformly among that record's tied best states.  The penalty
    runs over ``qubits`` (default: the instance's active qubits).

    The objective is ``scale * energy + lam * E(D)`` with ``scale`` given by
    ``problem_scale`` (a number, or ``"auto"`` for the factor that brings the
    couplers into ``|J| <= 1``, as used by the sampler).  Curves are reported
    in the same scaled units, relative to the scaled planted energy.
    """
    rng = np.random.default_rng(rng)
    lam_grid = default_lambda_grid() if lam_grid is None else np.asarray(lam_grid, float)
    problem = instance.problem
    scale = auto_scale(problem) if problem_scale == "auto" else float(problem_scale)
    if not scale > 0:
        raise ValueError("problem_scale must be positive or 'auto'")
    qubits = instance.active if qubits is None else np.asarray(qubits)
    fg = FastGreedy(problem, qubits)
    refs = rng.choice(np.array([-1, 1], dtype=np.int8), size=(n_refs, len(qubits)))
    ks = sorted(records)
    curves, ses = {}, {}
    for k in ks:
        ties = records[k].ties
        picks = rng.integers(len(ties), size=(len(lam_grid), n_refs))
        seeds = rng.integers(0, 2**63, size=(len(lam_grid), n_refs))
        vals = np.empty((n_refs, len(lam_grid)))
        for a, lam in enumerate(lam_grid):
            for r in range(n_refs):
                vals[r, a] = fg.run(ties[picks[a, r]], refs[r], lam / scale,
                                    int(seeds[a, r]))[1]
        vals = scale * (vals - instance.planted_energy)
        curves[k], ses[k] = _mean_se(vals)
    return UseCaseResult(lam_grid, ks, curves, ses)
