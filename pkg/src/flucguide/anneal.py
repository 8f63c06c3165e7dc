"""Reverse annealing with per-qubit anneal offsets, emulated by path-integral Monte Carlo.

The transverse-field Hamiltonian

    H(s) = -A(s)/2 sum_i X_i + B(s) H_problem

is mapped by Suzuki-Trotter to ``P`` classical slices.  Each slice carries the
problem energy scaled by ``beta * B / P``; copies of the same qubit in
neighbouring slices are coupled ferromagnetically with
``K_i = -1/2 ln tanh(beta * A(s_i) / P)``.  When ``A`` vanishes the slices are
locked together (``K`` infinite), so only moves that keep every slice
identical to its neighbours survive and the classical state is frozen.

Per-qubit offsets ``ds_i`` shift the schedule locally, ``s_i = clip(s + ds_i,
0, 1)``.  Fields on qubit ``i`` use ``B(s_i)``; a coupler with exactly one
offset endpoint uses that endpoint's ``B``; a coupler between two offset
qubits uses the mean of their two envelopes.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numba
import numpy as np

from .ising import IsingProblem, as_spins, energies

K_LOCK_THRESHOLD = 1e-12


# --- schedules -----------------------------------------------------------------

@dataclass(frozen=True)
class Schedule:
    """Anneal envelopes ``A(s)`` and ``B(s)`` tabulated on ascending ``s``.

    Values between grid points are linearly interpolated.
    """

    s: np.ndarray
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        s, a, b = (np.asarray(v, dtype=np.float64) for v in (self.s, self.a, self.b))
        if not (s.ndim == a.ndim == b.ndim == 1 and len(s) == len(a) == len(b) >= 2):
            raise ValueError("schedule table needs at least two rows of (s, A, B)")
        if s[0] != 0.0 or s[-1] != 1.0 or np.any(np.diff(s) <= 0):
            raise ValueError("schedule s column must increase strictly from 0 to 1")
        if np.any(np.diff(a) > 0) or np.any(np.diff(b) < 0):
            raise ValueError("A must be nonincreasing and B nondecreasing")
        if np.any(a < 0) or np.any(b < 0):
            raise ValueError("schedule envelopes must be nonnegative")
        for name, v in (("s", s), ("a", a), ("b", b)):
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @classmethod
    def linear(cls, points: int = 2) -> "Schedule":
        """Default envelopes ``A(s) = 1 - s`` and ``B(s) = s``."""
        s = np.linspace(0.0, 1.0, points)
        return cls(s, 1.0 - s, s.copy())

    @classmethod
    def from_file(cls, path) -> "Schedule":
        """Read whitespace- or comma-separated ``s A B`` rows (``#`` comments)."""
        rows = []
        with open(path) as fh:
            for line in fh:
                line = line.split("#", 1)[0].replace(",", " ").strip()
                if line:
                    rows.append([float(x) for x in line.split()])
        table = np.array(rows, dtype=np.float64)
        if table.ndim != 2 or table.shape[1] != 3:
            raise ValueError(f"{path}: expected three columns s, A, B")
        return cls(table[:, 0], table[:, 1], table[:, 2])

    def A(self, s):
        return np.interp(s, self.s, self.a)

    def B(self, s):
        return np.interp(s, self.s, self.b)


# --- parameters ----------------------------------------------------------------

DEFAULT_S_STAR_GRID = tuple(
    [0.20, 0.30, 0.34, 0.36, 0.38]
    + [round(v, 10) for v in np.linspace(0.39, 0.48, 10)]
    + [0.50, 0.60, 0.80, 1.00])
DEFAULT_OFFSET_GRID = tuple(round(v, 10) for v in np.linspace(-0.2, 0.2, 11))


@dataclass(frozen=True)
class AnnealParams:
    """Reverse-anneal protocol and PIMC settings.

    ``offsets`` maps qubit index to its anneal offset; qubits not listed run
    on the global schedule.
    """

    s_star: float = 0.45
    ramp_sweeps: int = 250
    hold_sweeps: int = 1000
    offsets: dict = field(default_factory=dict)
    slices: int = 32
    beta: float = 8.0
    reads: int = 1
    seed: int = 0
    cleanup: bool = True
    problem_scale: float | str = 1.0

    def __post_init__(self):
        if self.problem_scale != "auto" and not (isinstance(self.problem_scale, (int, float))
                                                 and self.problem_scale > 0):
            raise ValueError("problem_scale must be a positive number or 'auto'")
        if not 0.0 <= self.s_star <= 1.0:
            raise ValueError("s_star must lie in [0, 1]")
        if self.ramp_sweeps < 0 or self.hold_sweeps < 0:
            raise ValueError("sweep counts must be nonnegative")
        if self.slices < 2:
            raise ValueError("slices must be >= 2")
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if self.reads < 1:
            raise ValueError("reads must be >= 1")
        for q, d in self.offsets.items():
            if abs(d) > 0.2 + 1e-12:
                raise ValueError(f"offset {d} on qubit {q} exceeds 0.2 in magnitude")

    def s_trace(self) -> np.ndarray:
        """Global ``s`` for every sweep: ramp 1 -> s*, hold, ramp s* -> 1."""
        r = self.ramp_sweeps
        down = np.linspace(1.0, self.s_star, r + 1)[1:]
        up = np.linspace(self.s_star, 1.0, r + 1)[1:]
        return np.concatenate([down, np.full(self.hold_sweeps, self.s_star), up])


def auto_scale(problem: IsingProblem) -> float:
    """Factor bringing the problem into |J| <= 1 and |h| <= 2, as a programmable range would."""
    jm = float(np.abs(problem.jvals).max(initial=0.0))
    hm = float(np.abs(problem.h).max(initial=0.0)) / 2.0
    m = max(jm, hm)
    return 1.0 / m if m > 0 else 1.0


def resolve_scale(problem: IsingProblem, params: AnnealParams) -> float:
    if params.problem_scale == "auto":
        return auto_scale(problem)
    return float(params.problem_scale)


def effective_s(s: float, qubit: int, offsets) -> float:
    """Local anneal parameter of ``qubit``: ``clip(s + ds, 0, 1)``."""
    return float(min(1.0, max(0.0, s + offsets.get(qubit, 0.0))))


def offset_vector(n: int, offsets) -> tuple[np.ndarray, np.ndarray]:
    ds = np.zeros(n)
    flag = np.zeros(n, dtype=np.int8)
    for q, d in offsets.items():
        ds[int(q)] = float(d)
        flag[int(q)] = 1
    return ds, flag


# --- PIMC kernel -----------------------------------------------------------------
# xoshiro256+ uniform generator; numba's global generator is several times
# slower and the kernel is dominated by acceptance draws.

@numba.njit(inline="always")
def _rotl(x, k):
    return (x << numba.uint64(k)) | (x >> numba.uint64(64 - k))


@numba.njit(inline="always")
def _uniform(st):
    result = st[0] + st[3]
    t = st[1] << numba.uint64(17)
    st[2] ^= st[0]
    st[3] ^= st[1]
    st[1] ^= st[2]
    st[0] ^= st[3]
    st[2] ^= t
    st[3] = _rotl(st[3], 45)
    return (result >> numba.uint64(11)) * (1.0 / 9007199254740992.0)


def rng_state(seed: int) -> np.ndarray:
    """Kernel generator state (four 64-bit words) expanded from ``seed``."""
    return np.random.SeedSequence(int(seed)).generate_state(4, dtype=np.uint64)


@numba.njit(cache=True)
def _envelopes(s, ds, sched_s, sched_a, sched_b, A, B):
    for i in range(len(ds)):
        si = min(1.0, max(0.0, s + ds[i]))
        A[i] = np.interp(si, sched_s, sched_a)
        B[i] = np.interp(si, sched_s, sched_b)


@numba.njit(cache=True)
def _sweep(z, ptr, nbr, nbr_j, h, flag, A, B, beta, jsc, loc, st):
    """One Metropolis sweep over every (qubit, slice); ``z`` has shape (n, P)."""
    n, P = z.shape
    bp = beta / P
    for i in range(n):
        a = A[i] * bp
        locked = a < K_LOCK_THRESHOLD
        k2 = 0.0
        if not locked:
            k2 = -np.log(np.tanh(a))        # 2 K_i
        deg = ptr[i + 1] - ptr[i]
        for t in range(deg):
            e = ptr[i] + t
            j = nbr[e]
            if flag[i] == 1 and flag[j] == 1:
                sc = 0.5 * (B[i] + B[j])
            elif flag[j] == 1:
                sc = B[j]
            else:
                sc = B[i]
            jsc[t] = nbr_j[e] * sc * bp
        hb = h[i] * B[i] * bp
        for p in range(P):
            loc[p] = hb
        for t in range(deg):
            j = nbr[ptr[i] + t]
            w = jsc[t]
            for p in range(P):
                loc[p] += w * z[j, p]
        for p in range(P):
            zi = z[i, p]
            up = z[i, p + 1] if p + 1 < P else z[i, 0]
            dn = z[i, p - 1] if p > 0 else z[i, P - 1]
            align = zi * (up + dn)     # > 0 means the flip creates kinks
            logw = 2.0 * zi * loc[p]
            if locked:
                if align > 0:
                    continue
                if align < 0:
                    z[i, p] = -zi
                    continue
            else:
                logw -= k2 * align
            if logw >= 0.0 or (logw > -60.0 and _uniform(st) < np.exp(logw)):
                z[i, p] = -zi


@numba.njit(cache=True)
def _max_degree(ptr):
    m = 1
    for i in range(len(ptr) - 1):
        m = max(m, ptr[i + 1] - ptr[i])
    return m


@numba.njit(cache=True)
def _run_reads(ptr, nbr, nbr_j, h, flag, ds, init, trace, sched_s, sched_a, sched_b,
               beta, P, states):
    n = len(init)
    R = len(states)
    out = np.empty((R, n), dtype=np.int8)
    A = np.empty(n)
    B = np.empty(n)
    jsc = np.empty(_max_degree(ptr))
    loc = np.empty(P)
    for r in range(R):
        st = states[r].copy()
        z = np.empty((n, P), dtype=np.int8)
        for p in range(P):
            z[:, p] = init
        for t in range(len(trace)):
            _envelopes(trace[t], ds, sched_s, sched_a, sched_b, A, B)
            _sweep(z, ptr, nbr, nbr_j, h, flag, A, B, beta, jsc, loc, st)
        out[r, :] = z[:, 0]
    return out


@numba.njit(cache=True)
def _frozen_chain(ptr, nbr, nbr_j, h, flag, A, B, beta, init, n_sweeps, st):
    """Encoded slice configuration after every sweep at a fixed schedule point."""
    n, P = init.shape
    z = init.copy()
    jsc = np.empty(_max_degree(ptr))
    loc = np.empty(P)
    codes = np.empty(n_sweeps, dtype=np.int64)
    for t in range(n_sweeps):
        _sweep(z, ptr, nbr, nbr_j, h, flag, A, B, beta, jsc, loc, st)
        c = 0
        for p in range(P):
            for i in range(n):
                if z[i, p] < 0:
                    c |= 1 << (p * n + i)
        codes[t] = c
    return codes


@numba.njit(cache=True)
def _greedy_cleanup(z, ptr, nbr, nbr_j, h):
    """Strict steepest descent; ties go to the lowest index (deterministic)."""
    n = len(z)
    delta = np.empty(n)
    for i in range(n):
        loc = h[i]
        for e in range(ptr[i], ptr[i + 1]):
            loc += nbr_j[e] * z[nbr[e]]
        delta[i] = -2.0 * z[i] * loc
    while True:
        best = -1
        bval = -1e-12
        for i in range(n):
            if delta[i] < bval:
                bval = delta[i]
                best = i
        if best < 0:
            return z
        z[best] = -z[best]
        delta[best] = -delta[best]
        for e in range(ptr[best], ptr[best + 1]):
            j = nbr[e]
            delta[j] -= 4.0 * nbr_j[e] * z[j] * z[best]


def greedy_cleanup(problem: IsingProblem, state) -> np.ndarray:
    """Deterministic zero-temperature descent used to post-process PIMC reads."""
    ptr, nbr, nbr_j, _ = problem.adjacency
    z = as_spins(state).copy()
    return _greedy_cleanup(z, ptr, nbr, nbr_j, problem.h)


# --- sample containers -------------------------------------------------------------

@dataclass
class SampleSet:
    """Read-out states with provenance.

    Energies are always recomputed from ``problem``; ``raw`` keeps the
    slice-0 states before cleanup.
    """

    states: np.ndarray                  # (N, n) int8
    energies: np.ndarray
    s_star: np.ndarray
    offset: np.ndarray
    read: np.ndarray
    seeds: np.ndarray
    raw: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.states)

    @classmethod
    def build(cls, problem, states, s_star, offset, read, seeds, raw=None, meta=None):
        states = np.asarray(states, dtype=np.int8)
        if states.ndim != 2 or states.shape[1] != problem.n_qubits:
            raise ValueError("sample states do not match the problem size")
        return cls(states, energies(problem, states), np.asarray(s_star, dtype=np.float64),
                   np.asarray(offset, dtype=np.float64), np.asarray(read, dtype=np.int64),
                   np.asarray(seeds, dtype=np.uint64), raw, dict(meta or {}))

    @classmethod
    def concat(cls, sets: list["SampleSet"]) -> "SampleSet":
        if not sets:
            raise ValueError("nothing to concatenate")
        raws = [s.raw for s in sets]
        raw = None if any(r is None for r in raws) else np.concatenate(raws)
        return cls(*(np.concatenate([getattr(s, f) for s in sets])
                     for f in ("states", "energies", "s_star", "offset", "read", "seeds")),
                   raw, dict(sets[0].meta))

    def select(self, mask) -> "SampleSet":
        mask = np.asarray(mask)
        return SampleSet(self.states[mask], self.energies[mask], self.s_star[mask],
                         self.offset[mask], self.read[mask], self.seeds[mask],
                         None if self.raw is None else self.raw[mask], dict(self.meta))

    def grid_points(self) -> list[tuple[float, float]]:
        return sorted(set(zip(self.s_star.tolist(), self.offset.tolist())))


def read_seed(master: int, grid_index: tuple[int, int], read: int) -> int:
    """Stream seed for one read, independent of execution order."""
    ss = np.random.SeedSequence(int(master), spawn_key=(*grid_index, int(read)))
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def _run(problem, init, trace, ds, flag, schedule, beta, P, seeds, scale=1.0):
    ptr, nbr, nbr_j, _ = problem.adjacency
    return _run_reads(ptr, nbr, nbr_j, problem.h, flag, ds, init,
                      np.asarray(trace, dtype=np.float64),
                      schedule.s, schedule.a, schedule.b * scale, float(beta), int(P),
                      np.array([rng_state(sd) for sd in seeds]))


def _finish(problem, raw, cleanup):
    if not cleanup:
        return raw.copy()
    ptr, nbr, nbr_j, _ = problem.adjacency
    out = raw.copy()
    for r in range(len(out)):
        _greedy_cleanup(out[r], ptr, nbr, nbr_j, problem.h)
    return out


def _problem_of(target) -> IsingProblem:
    return target if isinstance(target, IsingProblem) else target.problem


def reverse_anneal(target, init_state, params: AnnealParams, schedule: Schedule | None = None,
                   *, grid_index=(0, 0)) -> SampleSet:
    """Run ``params.reads`` reverse anneals starting every slice at ``init_state``.

    ``target`` is an :class:`IsingProblem` or anything with a ``problem``
    attribute (such as a planted instance).
    """
    problem = _problem_of(target)
    schedule = schedule or Schedule.linear()
    init = as_spins(init_state)
    if len(init) != problem.n_qubits:
        raise ValueError("initial state does not match the problem size")
    ds, flag = offset_vector(problem.n_qubits, params.offsets)
    seeds = [read_seed(params.seed, grid_index, r) for r in range(params.reads)]
    raw = _run(problem, init, params.s_trace(), ds, flag, schedule, params.beta,
               params.slices, seeds, resolve_scale(problem, params))
    states = _finish(problem, raw, params.cleanup)
    d = float(next(iter(params.offsets.values()), 0.0))
    n = params.reads
    return SampleSet.build(problem, states, np.full(n, params.s_star), np.full(n, d),
                           np.arange(n), seeds, raw, {"seed": params.seed})


def sweep_grid(target, init_state, s_star_grid, offset_grid, params: AnnealParams,
               offset_qubits=None, schedule: Schedule | None = None) -> SampleSet:
    """Reverse anneal at every ``(s*, ds)`` grid point.

    ``ds`` is applied uniformly to ``offset_qubits`` (default: the feature
    qubits of ``target`` when it has them).
    """
    if len(s_star_grid) == 0 or len(offset_grid) == 0:
        raise ValueError("grids must be nonempty")
    if offset_qubits is None:
        offset_qubits = getattr(target, "feature_qubits", [])
    offset_qubits = [int(q) for q in offset_qubits]
    parts = []
    for a, s in enumerate(s_star_grid):
        for b, d in enumerate(offset_grid):
            offs = {q: float(d) for q in offset_qubits} if d != 0 else {}
            p = replace(params, s_star=float(s), offsets=offs)
            part = reverse_anneal(target, init_state, p, schedule, grid_index=(a, b))
            part.offset[:] = float(d)
            parts.append(part)
    out = SampleSet.concat(parts)
    out.meta.update(s_star_grid=[float(v) for v in s_star_grid],
                    offset_grid=[float(v) for v in offset_grid])
    return out


def forward_anneal(target, params: AnnealParams, schedule: Schedule | None = None,
                   *, grid_index=(0, 0)) -> SampleSet:
    """Conventional anneal from ``s = 0`` to 1 over ``2 * ramp + hold`` sweeps.

    Slices start from independent uniformly random states; serves as the
    global-search reference for deep reverse anneals.
    """
    problem = _problem_of(target)
    schedule = schedule or Schedule.linear()
    n_sweeps = 2 * params.ramp_sweeps + params.hold_sweeps
    trace = np.linspace(0.0, 1.0, n_sweeps + 1)[1:]
    ds, flag = offset_vector(problem.n_qubits, {})
    seeds = [read_seed(params.seed, grid_index, r) for r in range(params.reads)]
    raw = np.empty((params.reads, problem.n_qubits), dtype=np.int8)
    for r, sd in enumerate(seeds):
        rng = np.random.default_rng(sd)
        init = rng.choice(np.array([-1, 1], dtype=np.int8), size=problem.n_qubits)
        raw[r] = _run(problem, init, trace, ds, flag, schedule, params.beta,
                      params.slices, [sd], resolve_scale(problem, params))[0]
    states = _finish(problem, raw, params.cleanup)
    n = params.reads
    return SampleSet.build(problem, states, np.zeros(n), np.zeros(n), np.arange(n), seeds, raw)


# --- fixed-schedule sampling and the exact Trotter measure ----------------------------

def frozen_samples(problem: IsingProblem, s: float, n_sweeps: int, *, slices: int = 4,
                   beta: float = 8.0, offsets=None, schedule: Schedule | None = None,
                   seed: int = 0, burn_in: int = 1000) -> np.ndarray:
    """Encoded slice configurations visited at a fixed ``s``.

    Bit ``p * n + i`` of each code is set when qubit ``i`` in slice ``p`` is -1.
    Only feasible for ``slices * n_qubits <= 62``.
    """
    n = problem.n_qubits
    if slices * n > 62:
        raise ValueError("configuration space too large to encode")
    schedule = schedule or Schedule.linear()
    ds, flag = offset_vector(n, offsets or {})
    si = np.clip(s + ds, 0.0, 1.0)
    A, B = schedule.A(si), schedule.B(si)
    ptr, nbr, nbr_j, _ = problem.adjacency
    z = np.ones((n, slices), dtype=np.int8)
    codes = _frozen_chain(ptr, nbr, nbr_j, problem.h, flag, A, B, float(beta),
                          z, n_sweeps + burn_in, rng_state(seed))
    return codes[burn_in:]


def trotter_weights(problem: IsingProblem, s: float, *, slices: int = 4, beta: float = 8.0,
                    offsets=None, schedule: Schedule | None = None) -> np.ndarray:
    """Exact normalised Suzuki-Trotter Gibbs weights over all slice configurations."""
    n = problem.n_qubits
    P = slices
    schedule = schedule or Schedule.linear()
    ds, flag = offset_vector(n, offsets or {})
    si = np.clip(s + ds, 0.0, 1.0)
    A, B = schedule.A(si), schedule.B(si)
    codes = np.arange(1 << (P * n), dtype=np.int64)
    bits = (codes[:, None] >> np.arange(P * n)) & 1
    z = (1 - 2 * bits).reshape(-1, P, n).astype(np.float64)
    loge = np.zeros(len(codes))
    for (i, j), J in problem.couplings.items():
        if flag[i] and flag[j]:
            sc = 0.5 * (B[i] + B[j])
        elif flag[j]:
            sc = B[j]
        else:
            sc = B[i]
        loge -= beta / P * J * sc * (z[:, :, i] * z[:, :, j]).sum(axis=1)
    for i, hv in problem.fields.items():
        loge -= beta / P * hv * B[i] * z[:, :, i].sum(axis=1)
    for i in range(n):
        a = A[i] * beta / P
        if a < K_LOCK_THRESHOLD:
            raise ValueError("exact weights need a nonzero transverse term")
        K = -0.5 * np.log(np.tanh(a))
        loge += K * (z[:, :, i] * np.roll(z[:, :, i], -1, axis=1)).sum(axis=1)
    w = np.exp(loge - loge.max())
    return w / w.sum()
