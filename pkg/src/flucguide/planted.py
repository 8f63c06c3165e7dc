"""Frustrated-loop planted-solution instances with embedded gadgets or chains.

Construction order: reserve feature regions, plant loops on the remaining
qubits, then insert features whose boundary couplers are oriented so the
planted state satisfies them.  Every additive piece (each loop, each feature
body, each chain boundary coupler) is minimised by the planted state, which
certifies it as a ground state.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import domain_wall as dw
from .chimera import (ChimeraGraph, _random_loop, build_chimera, masked_adjacency,
                      on_short_cycle, self_avoiding_walk)
from .gadget import FREE, LOCKED, GadgetSpec, PlacementError, build_gadget
from .ising import IsingProblem, energy

FEATURE_KINDS = ("none", "gadget-free", "gadget-locked", "chain")


@dataclass(frozen=True)
class Loop:
    cycle: tuple[int, ...]
    frustrated: int            # index t of the +1 edge (cycle[t], cycle[t+1])

    def edges(self):
        c = self.cycle
        return [(c[t], c[(t + 1) % len(c)]) for t in range(len(c))]

    def canonical_couplings(self):
        """Coupler values in the all-(+1) planted frame."""
        return [(a, b, 1.0 if t == self.frustrated else -1.0)
                for t, (a, b) in enumerate(self.edges())]

    @property
    def planted_energy(self) -> float:
        return -(len(self.cycle) - 2.0)


@dataclass(frozen=True)
class InstanceConfig:
    rows: int = 4
    cols: int = 4
    shore: int = 4
    feature: str = "gadget-free"
    n_features: int = 4
    softness: float = 0.0
    n_loops: int = 300
    max_len: int = 5
    gadget_size: int = 4
    placement_budget: int = 1000
    loop_budget: int = 10_000

    def __post_init__(self):
        if self.feature not in FEATURE_KINDS:
            raise ValueError(f"feature must be one of {FEATURE_KINDS}")
        if self.n_loops < 1:
            raise ValueError("n_loops must be >= 1")

    @property
    def n_qubits(self) -> int:
        return self.rows * self.cols * 2 * self.shore


@dataclass(eq=False)
class PlantedInstance:
    problem: IsingProblem
    planted_state: np.ndarray
    planted_energy: float
    loops: list[Loop]
    features: list                 # GadgetSpec or ChainSpec
    graph: ChimeraGraph
    config: InstanceConfig
    rng_seed: int | None = None
    feature_kind: str = "none"

    @property
    def loop_count(self) -> int:
        return len(self.loops)

    @property
    def n_qubits(self) -> int:
        return self.problem.n_qubits

    @property
    def feature_qubits(self) -> np.ndarray:
        """The offset set: every qubit belonging to a gadget or chain."""
        qs = sorted({q for f in self.features for q in f.qubits})
        return np.array(qs, dtype=np.int64)

    @property
    def active(self) -> np.ndarray:
        return self.problem.active_qubits()

    def bound(self) -> float:
        """Sum of the component minima (loops plus feature ground energies)."""
        total = 0.0
        for lp in self.loops:
            total += lp.planted_energy
        for f in self.features:
            total += feature_ground_energy(f)
        return total


def plant_loops(graph: ChimeraGraph, mask, n_loops: int, max_len: int, rng,
                budget: int = 10_000):
    """Sum ``n_loops`` random frustrated loops and gauge to a random planted state.

    Returns ``(problem, planted_gauge, loops)``.  In the all-(+1) frame every
    loop has -1 on all edges but one uniformly chosen +1 edge; overlapping
    contributions add without clipping.
    """
    mask = frozenset(int(q) for q in mask)
    free = [v for v in range(graph.n_qubits) if v not in mask]
    nbrs = masked_adjacency(graph, mask)
    acc: dict[tuple[int, int], float] = {}
    loops = []
    for _ in range(n_loops):
        cycle = _random_loop(graph, mask, free, max_len, rng, budget, nbrs)
        lp = Loop(tuple(cycle), int(rng.integers(len(cycle))))
        loops.append(lp)
        for a, b, j in lp.canonical_couplings():
            key = (min(a, b), max(a, b))
            acc[key] = acc.get(key, 0.0) + j
    gauge = rng.choice(np.array([-1, 1], dtype=np.int8), size=graph.n_qubits)
    c = {k: v * gauge[k[0]] * gauge[k[1]] for k, v in acc.items() if v != 0}
    return IsingProblem(graph.n_qubits, c), gauge, loops


def _reserve_cells(graph, cfg, rng):
    cells = [(r, c) for r in range(graph.rows) for c in range(graph.cols)]
    if cfg.n_features > len(cells):
        raise PlacementError("graph too small for the requested number of gadgets")
    pick = rng.choice(len(cells), size=cfg.n_features, replace=False)
    chosen = [cells[int(i)] for i in pick]
    reserved = {q for (r, c) in chosen for q in graph.cell_qubits(r, c)}
    return chosen, reserved


def _reserve_paths(graph, cfg, rng):
    n = graph.n_qubits
    reserved: set[int] = set()
    paths = []
    for _k in range(cfg.n_features):
        for _t in range(cfg.placement_budget):
            start = int(rng.integers(n))
            if start in reserved:
                continue
            walk = self_avoiding_walk(graph, start, dw.N_QUBITS, reserved, rng)
            if walk is not None:
                break
        else:
            raise PlacementError(
                f"chain placement failed after {cfg.placement_budget} attempts")
        path = walk[:dw.N_QUBITS]          # the 16th visited vertex is unused
        paths.append(path)
        reserved.update(path)
    return paths, reserved


def build_instance(config: InstanceConfig, seed: int) -> PlantedInstance:
    """Generate a complete planted instance; bit-reproducible for a given seed.

    Feature regions are reserved first and each feature is anchored to
    neighbouring qubits that can lie on a loop; loops are then planted on
    the remaining qubits.  A build where some anchor ends up outside every
    loop is discarded and redrawn.  Free and locked gadget configurations
    consume the random stream identically, so one seed yields the same
    loops and placements for both.
    """
    rng = np.random.default_rng(seed)
    graph = build_chimera(config.rows, config.cols, config.shore)
    kind = config.feature if config.n_features else "none"
    variant = LOCKED if kind == "gadget-locked" else FREE
    for _ in range(config.placement_budget):
        if kind == "none":
            regions, reserved = [], set()
        elif kind == "chain":
            regions, reserved = _reserve_paths(graph, config, rng)
        else:
            regions, reserved = _reserve_cells(graph, config, rng)
        loopable = on_short_cycle(graph, reserved)
        try:
            if kind == "chain":
                specs = [dw.build_chain(graph, path, config.softness, rng, allowed=loopable)
                         for path in regions]
            else:
                specs = [build_gadget(graph, cell, variant, rng, size=config.gadget_size,
                                      allowed=loopable) for cell in regions]
        except PlacementError:
            continue
        base, gauge, loops = plant_loops(graph, reserved, config.n_loops, config.max_len,
                                         rng, config.loop_budget)
        covered = {q for lp in loops for q in lp.cycle}
        if any(e not in covered for f in specs for e in f.externals):
            # an anchor outside every loop would be a free spin
            continue
        planted = gauge.copy()
        for f in specs:
            if isinstance(f, dw.ChainSpec):
                planted[list(f.qubits)] = 1
        specs = [f.with_orientation(planted) for f in specs]
        problem = _assemble(base, specs)
        return PlantedInstance(problem, planted, energy(problem, planted), loops, specs,
                               graph, config, seed, kind)
    raise PlacementError(
        f"could not anchor every feature after {config.placement_budget} attempts")


def _assemble(base: IsingProblem, specs) -> IsingProblem:
    c = dict(base.couplings)
    f = dict(base.fields)
    for spec in specs:
        for key, v in feature_couplings(spec).items():
            if key in c:
                raise PlacementError(f"feature coupler {key} collides with a planted edge")
            c[key] = v
        for q, v in feature_fields(spec).items():
            f[q] = f.get(q, 0.0) + v
    return IsingProblem(base.n_qubits, c, f)


def feature_couplings(spec) -> dict[tuple[int, int], float]:
    if isinstance(spec, GadgetSpec):
        return spec.couplings()
    out = spec.internal_couplings()
    out.update(spec.boundary_couplings())
    return out


def feature_fields(spec) -> dict[int, float]:
    if isinstance(spec, GadgetSpec):
        return {}
    return {q: h for q, h in spec.field_map().items() if h != 0}


def feature_ground_energy(spec) -> float:
    """Minimum of a feature's own terms (body plus boundary couplers)."""
    if isinstance(spec, GadgetSpec):
        # a tree of couplers without fields: every coupler can be satisfied
        return -sum(abs(j) for _a, _b, j in spec.internal + spec.boundary)
    body = dw.path_minimum(np.full(len(spec.qubits) - 1, -1.0), spec.fields)
    return body - sum(abs(j) for _c, _e, j in spec.boundary)


def _components(inst: PlantedInstance):
    """Yield ``(couplings, fields, minimum)`` for every additive piece."""
    g = inst.planted_state
    for lp in inst.loops:
        terms = {}
        for a, b, j in lp.canonical_couplings():
            key = (min(a, b), max(a, b))
            terms[key] = terms.get(key, 0.0) + j * g[a] * g[b]
        vals = list(terms.values())
        # frustrated iff the product of -sign(J) around the cycle is negative
        prod_sign = np.prod([-np.sign(v) for v in vals])
        lo = -sum(abs(v) for v in vals)
        if prod_sign < 0:
            lo += 2 * min(abs(v) for v in vals)
        yield terms, {}, lo
    for f in inst.features:
        if isinstance(f, GadgetSpec):
            yield f.couplings(), {}, feature_ground_energy(f)
        else:
            body = dw.path_minimum(np.full(len(f.qubits) - 1, -1.0), f.fields)
            yield f.internal_couplings(), f.field_map(), body
            for key, v in f.boundary_couplings().items():
                yield {key: v}, {}, -abs(v)


def certify_planted(inst: PlantedInstance, atol: float = 1e-9) -> bool:
    """Sufficient ground-state certificate for the planted state.

    True iff the recorded components add up to exactly the instance's
    problem and the planted state attains every component's minimum.
    """
    z = np.asarray(inst.planted_state, dtype=np.float64)
    c_sum: dict[tuple[int, int], float] = {}
    f_sum: dict[int, float] = {}
    for cpl, fld, lo in _components(inst):
        val = sum(v * z[i] * z[j] for (i, j), v in cpl.items())
        val += sum(v * z[i] for i, v in fld.items())
        if val > lo + atol:
            return False
        for k, v in cpl.items():
            c_sum[k] = c_sum.get(k, 0.0) + v
        for k, v in fld.items():
            f_sum[k] = f_sum.get(k, 0.0) + v
    if not _same_terms(c_sum, inst.problem.couplings, atol):
        return False
    if not _same_terms(f_sum, inst.problem.fields, atol):
        return False
    return math.isclose(energy(inst.problem, inst.planted_state), inst.bound(),
                        rel_tol=0.0, abs_tol=atol)


def _same_terms(a: dict, b: dict, atol: float) -> bool:
    for k in set(a) | set(b):
        if abs(a.get(k, 0.0) - b.get(k, 0.0)) > atol:
            return False
    return True


def instance_seeds(master_seed: int, count: int) -> list[int]:
    """Seed schedule for a batch of instances: instance k uses master_seed + k."""
    return [master_seed + k for k in range(count)]


def config_dict(cfg: InstanceConfig) -> dict:
    return asdict(cfg)
