"""Sample classification, heat maps, conditional performance and optimal settings.

Every read is reduced to ``(relative energy, k)`` where ``k`` counts active
features: free gadgets or soft chains.  Conditional performance is the best
relative energy among reads with exactly ``k`` active features; the cost per
feature is that energy divided by ``k``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import domain_wall as dw
from .gadget import GadgetSpec, is_free
from .ising import all_deltas, energy

ATOL = 1e-9


@dataclass(frozen=True)
class ClassifiedSample:
    energy: float                  # relative to the planted energy
    k_free: int
    k_soft: int
    invalid_chains: int
    s_star: float = math.nan
    offset: float = math.nan

    @property
    def k(self) -> int:
        return self.k_free + self.k_soft


def classify(state, instance, s_star: float = math.nan, offset: float = math.nan
             ) -> ClassifiedSample:
    """Relative energy and active-feature counts of one read."""
    z = np.asarray(state, dtype=np.int8)
    rel = energy(instance.problem, z) - instance.planted_energy
    deltas = None
    k_free = k_soft = invalid = 0
    for f in instance.features:
        if isinstance(f, GadgetSpec):
            if deltas is None:
                deltas = all_deltas(instance.problem, z)
            k_free += is_free(instance.problem, z, f, deltas)
        else:
            r = f.readout(z)
            if not r.valid:
                invalid += 1
            elif r.value in f.soft_values:
                k_soft += 1
    return ClassifiedSample(float(rel), int(k_free), int(k_soft), invalid, s_star, offset)


@dataclass
class Classified:
    """Column view of a classified sample set."""

    energy: np.ndarray
    k: np.ndarray
    invalid: np.ndarray
    s_star: np.ndarray
    offset: np.ndarray
    states: np.ndarray
    baseline: np.ndarray            # True for injected trivial-strategy reads

    def __len__(self):
        return len(self.energy)

    def select(self, mask) -> "Classified":
        return Classified(*(getattr(self, f)[mask] for f in
                            ("energy", "k", "invalid", "s_star", "offset", "states", "baseline")))

    def invalid_rate(self) -> float:
        """Mean number of invalid (multi-wall) chains per read."""
        return float(self.invalid.mean()) if len(self) else 0.0


def classify_set(samples, instance) -> Classified:
    rows = [classify(z, instance) for z in samples.states]
    return Classified(
        np.array([r.energy for r in rows]),
        np.array([r.k for r in rows], dtype=np.int64),
        np.array([r.invalid_chains for r in rows], dtype=np.int64),
        np.asarray(samples.s_star, dtype=np.float64).copy(),
        np.asarray(samples.offset, dtype=np.float64).copy(),
        np.asarray(samples.states),
        np.zeros(len(rows), dtype=bool))


# --- trivial strategy ----------------------------------------------------------

def _gadget_activations(instance, spec):
    """Candidate single-gadget activations: flip the unit cell of one anchor.

    Loops never leave a unit cell, so flipping a whole background cell keeps
    every loop satisfied and only frustrates the feature couplers crossing it.
    """
    g = instance.graph
    for e in spec.externals:
        r, c, _, _ = g.coords(e)
        yield np.array(g.cell_qubits(r, c))


def _activation_moves(instance, state, feature):
    z0 = np.asarray(state, dtype=np.int8)
    if isinstance(feature, GadgetSpec):
        for cell in _gadget_activations(instance, feature):
            z = z0.copy()
            z[cell] = -z[cell]
            yield z
    else:
        pos = list(feature.qubits)
        for x in feature.soft_values:
            z = z0.copy()
            z[pos] = dw.encode_value(x)
            yield z


def _is_active(instance, z, feature):
    if isinstance(feature, GadgetSpec):
        return is_free(instance.problem, z, feature)
    return dw.is_soft(z[list(feature.qubits)], feature)


def activate(instance, state, feature):
    """Cheapest trivial-strategy activation of one feature from ``state``.

    Returns the new state, or ``None`` when no candidate activates it.
    """
    best, best_e = None, math.inf
    for z in _activation_moves(instance, state, feature):
        if _is_active(instance, z, feature):
            e = energy(instance.problem, z)
            if e < best_e - ATOL:
                best, best_e = z, e
    return best


def trivial_baseline(instance) -> Classified:
    """Planted state with features activated by hand, one move at a time.

    Each step applies the single activation move (over all inactive features)
    that raises the active count at the lowest cost relative to two energy
    units per active feature. Neighbouring gadgets can share an anchor cell,
    so one move may activate several features at once.
    """
    z = np.array(instance.planted_state, dtype=np.int8)
    e_planted = instance.planted_energy
    states = []
    k_now = 0
    while True:
        best, best_key = None, None
        for f in instance.features:
            if _is_active(instance, z, f):
                continue
            for nz in _activation_moves(instance, z, f):
                k = sum(_is_active(instance, nz, g) for g in instance.features)
                if k <= k_now:
                    continue
                e = energy(instance.problem, nz) - e_planted
                key = (e - 2 * k, e)
                if best_key is None or key < best_key:
                    best, best_key, best_k = nz, key, k
        if best is None:
            break
        z, k_now = best, best_k
        states.append(z.copy())
    if not states:
        return _empty(instance.n_qubits)
    rows = [classify(s, instance) for s in states]
    n = len(rows)
    return Classified(np.array([r.energy for r in rows]),
                      np.array([r.k for r in rows], dtype=np.int64),
                      np.array([r.invalid_chains for r in rows], dtype=np.int64),
                      np.full(n, math.nan), np.full(n, math.nan), np.array(states),
                      np.ones(n, dtype=bool))


def _empty(n_qubits):
    return Classified(np.zeros(0), np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64),
                      np.zeros(0), np.zeros(0), np.zeros((0, n_qubits), dtype=np.int8),
                      np.zeros(0, dtype=bool))


def merge(a: Classified, b: Classified) -> Classified:
    return Classified(*(np.concatenate([getattr(a, f), getattr(b, f)]) for f in
                        ("energy", "k", "invalid", "s_star", "offset", "states", "baseline")))


# --- heat maps -----------------------------------------------------------------

@dataclass
class HeatMap:
    """Fraction of reads with each ``k`` per ``s*`` column.

    ``edges`` are cell boundaries placed midway between neighbouring grid
    values so each cell is centred on its ``s*`` value.
    """

    s_values: np.ndarray
    k_values: np.ndarray
    fractions: np.ndarray           # (len(s_values), len(k_values))
    means: np.ndarray
    edges: np.ndarray

    def rows(self):
        for a, s in enumerate(self.s_values):
            for b, k in enumerate(self.k_values):
                yield float(s), int(k), float(self.fractions[a, b])


def cell_edges(values) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    if len(v) == 1:
        return np.array([v[0] - 0.5, v[0] + 0.5])
    mid = (v[1:] + v[:-1]) / 2
    return np.concatenate([[v[0] - (mid[0] - v[0])], mid, [v[-1] + (v[-1] - mid[-1])]])


def heatmap(k, s_star, k_max: int | None = None) -> HeatMap:
    k = np.asarray(k, dtype=np.int64)
    s_star = np.asarray(s_star, dtype=np.float64)
    if len(k) == 0:
        raise ValueError("heat map of an empty sample set")
    s_values = np.unique(s_star)
    k_max = int(k.max()) if k_max is None else int(k_max)
    k_values = np.arange(k_max + 1)
    frac = np.zeros((len(s_values), len(k_values)))
    means = np.zeros(len(s_values))
    for a, s in enumerate(s_values):
        col = k[s_star == s]
        frac[a] = np.bincount(col, minlength=k_max + 1)[:k_max + 1] / len(col)
        means[a] = col.mean()
    return HeatMap(s_values, k_values, frac, means, cell_edges(s_values))


# --- conditional performance ----------------------------------------------------

@dataclass
class ConditionalRecord:
    k: int
    energy: float
    s_star: float
    offset: float
    state: np.ndarray
    ties: np.ndarray = field(repr=False)      # every state attaining the best energy

    @property
    def cost_per_feature(self) -> float:
        return self.energy / self.k if self.k >= 1 else math.nan


class _Absent:
    """Marker for a ``k`` with no matching reads."""

    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "ABSENT"

    def __bool__(self):
        return False


ABSENT = _Absent()


def _best_mask(data: Classified, k: int, atol: float = ATOL):
    sel = data.k == k
    if not sel.any():
        return None, None
    best = data.energy[sel].min()
    return sel & (data.energy <= best + atol), float(best)


def conditional_best(data: Classified, k: int, rng) -> ConditionalRecord | _Absent:
    """Best relative energy among reads with exactly ``k`` active features.

    Ties are broken uniformly at random with ``rng``.
    """
    mask, best = _best_mask(data, k)
    if mask is None:
        return ABSENT
    idx = np.flatnonzero(mask)
    pick = int(idx[rng.integers(len(idx))])
    ties = np.unique(data.states[idx], axis=0)
    return ConditionalRecord(int(k), best, float(data.s_star[pick]), float(data.offset[pick]),
                             data.states[pick].copy(), ties)


def optimal_s_star(data: Classified, k: int):
    """Largest ``s*`` among the reads attaining the conditional best for ``k``."""
    mask, _ = _best_mask(data, k)
    if mask is None:
        return ABSENT
    vals = data.s_star[mask]
    vals = vals[~np.isnan(vals)]
    return float(vals.max()) if len(vals) else ABSENT


def optimal_offset(data: Classified, k: int):
    """Numerically smallest offset among the reads attaining the conditional best."""
    mask, _ = _best_mask(data, k)
    if mask is None:
        return ABSENT
    vals = data.offset[mask]
    vals = vals[~np.isnan(vals)]
    return float(vals.min()) if len(vals) else ABSENT


def conditional_table(data: Classified, k_values, rng) -> dict[int, ConditionalRecord]:
    out = {}
    for k in k_values:
        rec = conditional_best(data, int(k), rng)
        if rec is not ABSENT:
            out[int(k)] = rec
    return out


# --- aggregation ------------------------------------------------------------------

@dataclass(frozen=True)
class Summary:
    k: int
    mean: float
    stderr: float
    n: int

    @property
    def has_error_bar(self) -> bool:
        return self.n >= 2


def summarize(values_by_k: dict[int, list[float]]) -> list[Summary]:
    """Mean and standard error (``N - 1`` denominator) per ``k`` across instances.

    With a single instance the error bar is reported as NaN.
    """
    out = []
    for k in sorted(values_by_k):
        v = np.asarray([x for x in values_by_k[k] if not math.isnan(x)], dtype=np.float64)
        if len(v) == 0:
            continue
        se = float(v.std(ddof=1) / math.sqrt(len(v))) if len(v) >= 2 else math.nan
        out.append(Summary(int(k), float(v.mean()), se, len(v)))
    return out


def bootstrap_greater(a, b, rng, n_boot: int = 10_000) -> float:
    """Bootstrap confidence that ``mean(a) > mean(b)`` (independent resampling)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    ia = rng.integers(len(a), size=(n_boot, len(a)))
    ib = rng.integers(len(b), size=(n_boot, len(b)))
    diff = a[ia].mean(axis=1) - b[ib].mean(axis=1)
    return float((diff > 0).mean())


def bootstrap_greater_stratified(a_groups, b_groups, rng, n_boot: int = 10_000) -> float:
    """Bootstrap confidence that the mean over groups of ``a`` exceeds that of ``b``.

    Reads are resampled within each group (instance); the statistic is the
    unweighted mean of group means.
    """
    def boot(groups):
        out = np.zeros(n_boot)
        for g in groups:
            g = np.asarray(g, dtype=np.float64)
            out += g[rng.integers(len(g), size=(n_boot, len(g)))].mean(axis=1)
        return out / len(groups)
    if not len(a_groups) or not len(b_groups):
        raise ValueError("need at least one group on each side")
    return float((boot(a_groups) - boot(b_groups) > 0).mean())


# --- CSV output ---------------------------------------------------------------------

HEATMAP_COLUMNS = ("s_star", "k", "fraction")
CONDITIONAL_COLUMNS = ("instance", "k", "energy", "cost_per_feature", "s_star", "offset")
SUMMARY_COLUMNS = ("k", "mean", "stderr")


def _fmt(x):
    if isinstance(x, float):
        return "nan" if math.isnan(x) else repr(x)
    return str(x)


def write_csv(path, columns, rows, provenance: dict | None = None):
    """CSV with ``# key=value`` provenance lines ahead of the header."""
    with open(path, "w", newline="") as fh:
        for key, val in (provenance or {}).items():
            fh.write(f"# {key}={val}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(x) for x in row])


def read_csv(path):
    """Rows of a CSV written by :func:`write_csv` as dicts of strings."""
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def heatmap_rows(hm: HeatMap):
    return list(hm.rows())


def conditional_rows(instance_id, table: dict[int, ConditionalRecord]):
    return [(instance_id, k, r.energy, r.cost_per_feature, r.s_star, r.offset)
            for k, r in sorted(table.items())]


def summary_rows(summaries: list[Summary]):
    return [(s.k, s.mean, s.stderr) for s in summaries]
