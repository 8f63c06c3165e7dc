"""Acceptance checks shared by the test-suite and ``flucguide verify``.

Each check returns a :class:`CheckResult`; :func:`run_criteria` runs a
selection and prints one PASS/FAIL line per check.  Sampling checks use the
surrogate settings in :data:`SURROGATE` (problem terms rescaled to unit
range, a colder bath and shorter schedules than the library defaults) so
that the whole suite fits on a laptop.
"""

from __future__ import annotations

import inspect
import io as _io
import math
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis as an
from . import domain_wall as dw
from .anneal import (AnnealParams, forward_anneal, frozen_samples, reverse_anneal,
                     sweep_grid, trotter_weights)
from .chimera import build_chimera, self_avoiding_walk
from .gadget import FREE, LOCKED, build_gadget, gadget_ground_manifold, internal_flip_costs
from .ising import IsingProblem, energy, enumerate_energies, hamming, index_to_spins
from .penalty import (OUTER, build_dickson, default_lambda_grid, flexibility_tradeoff_16,
                      usecase_pipeline)
from .planted import FEATURE_KINDS, InstanceConfig, build_instance, certify_planted, \
    feature_ground_energy

SURROGATE = dict(ramp_sweeps=50, hold_sweeps=200, beta=32.0, slices=16, problem_scale="auto")


@dataclass
class CheckResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0
    data: dict = field(default_factory=dict, repr=False)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.number:>2} {self.name}: {self.detail} ({self.seconds:.1f} s)"


def _timed(number, name):
    def deco(fn):
        def run(**kw):
            t0 = time.perf_counter()
            passed, detail, data = fn(**kw)
            return CheckResult(number, name, bool(passed), detail, time.perf_counter() - t0, data)
        run.number, run.name = number, name
        run.params = set(inspect.signature(fn).parameters)
        return run
    return deco


# --- 1. planted certificate -----------------------------------------------------------

def _loop_formula(inst) -> float:
    return sum(-(len(lp.cycle) - 2) for lp in inst.loops) + \
        sum(feature_ground_energy(f) for f in inst.features)


@_timed(1, "planted ground-state certificate")
def check_planted(seed: int = 0, n_desk: int = 49):
    bad = []
    kinds = FEATURE_KINDS
    jobs = [(InstanceConfig(feature=kinds[i % len(kinds)],
                            n_features=0 if kinds[i % len(kinds)] == "none" else 4), seed + i)
            for i in range(n_desk)]
    jobs.append((InstanceConfig(rows=16, cols=16, feature="gadget-free", n_features=15,
                                n_loops=8000), seed + n_desk))
    for cfg, s in jobs:
        inst = build_instance(cfg, s)
        ok = certify_planted(inst) and inst.planted_energy == _loop_formula(inst)
        if not ok:
            bad.append((cfg.feature, cfg.rows, s))
    return not bad, f"{len(jobs) - len(bad)}/{len(jobs)} instances certified", {"bad": bad}


# --- 2. gadget manifolds ----------------------------------------------------------------

def _gadget(variant, seed=0):
    g = build_chimera(3, 3, 4)
    return build_gadget(g, (1, 1), variant, np.random.default_rng(seed))


@_timed(2, "gadget property table")
def check_gadgets():
    problems = []
    for variant in (FREE, LOCKED):
        spec = _gadget(variant)
        e = {}
        for bl in (1, -1):
            for br in (1, -1):
                e0, states = gadget_ground_manifold(spec, (bl, br))
                e[bl, br] = e0
                agree = bl == br
                want = 1 if agree or variant == LOCKED else len(spec.qubits) + 1
                if len(states) != want:
                    problems.append(f"{variant} {bl},{br}: manifold {len(states)} != {want}")
                free = any(np.any(np.abs(internal_flip_costs(spec, s, (bl, br))) < 1e-12)
                           for s in states)
                if free != (not agree and variant == FREE):
                    problems.append(f"{variant} {bl},{br}: free flip {free}")
        cost = 2.0 if variant == FREE else 1.0
        for d in ((1, -1), (-1, 1)):
            if e[d] - e[1, 1] != cost or e[d] - e[-1, -1] != cost:
                problems.append(f"{variant}: disagree cost {e[d] - e[1, 1]} != {cost}")
    return not problems, "all cases match" if not problems else "; ".join(problems), {}


# --- 3. domain-wall chains --------------------------------------------------------------

def chain_for(start: int, softness: float, seed: int = 0):
    """A chain on a fixed 15-vertex path with the given soft-region start."""
    g = build_chimera(4, 4, 4)
    rng = np.random.default_rng(seed)
    path = None
    while path is None:
        path = self_avoiding_walk(g, int(rng.integers(g.n_qubits)), dw.N_QUBITS - 1, (), rng)
    return dw.build_chain(g, path, softness, rng, start=start)


@_timed(3, "domain-wall chain suite")
def check_chains(seed: int = 0):
    problems = []
    ok_rt = sum(dw.decode_chain(dw.encode_value(x)).value == x for x in range(dw.N_VALUES))
    if ok_rt != dw.N_VALUES:
        problems.append(f"round trip {ok_rt}/{dw.N_VALUES}")
    rng = np.random.default_rng(seed)
    worst = 0.0
    tables = [rng.normal(size=dw.N_VALUES) for _ in range(20)]
    tables += [dw.soft_potential(a, s) for a in range(2, 7) for s in (0.0, 1.0)]
    for tab in tables:
        for synth in (dw.synthesize_fields, dw.penalty_fields):
            h, c = synth(tab)
            got = np.array([dw.field_energy(h, dw.encode_value(x)) + c
                            for x in range(dw.N_VALUES)])
            worst = max(worst, float(np.abs(got - tab).max()))
    if worst > 1e-12:
        problems.append(f"field synthesis error {worst:.2e}")
    for a in range(2, 7):
        for s in (0.0, 1.0):
            spec = chain_for(a, s, seed)
            e = np.array([dw.chain_energy(spec, dw.encode_value(x)) for x in range(dw.N_VALUES)])
            plateau = [x for x in range(1, dw.N_VALUES) if x not in spec.soft_values]
            gaps = e[plateau] - e[0]
            if not np.all(gaps == dw.PLATEAU):
                problems.append(f"a={a} s={s}: plateau gaps {sorted(set(gaps.tolist()))}")
            if dw.boundary_frustrations(spec, 0) != 0:
                problems.append(f"a={a} s={s}: frustrated at x=0")
            fr = {dw.boundary_frustrations(spec, x) for x in spec.soft_values}
            if fr != {1}:
                problems.append(f"a={a} s={s}: soft-region frustrations {fr}")
    detail = "round trip, synthesis, plateau and boundary pattern exact" if not problems \
        else "; ".join(problems)
    return not problems, detail, {"synthesis_error": worst}


# --- 4. PIMC stationarity ---------------------------------------------------------------

TV_PROBLEM = IsingProblem(3, {(0, 1): -1.0, (1, 2): 0.5, (0, 2): -0.75}, {0: 0.25, 2: -0.5})


@_timed(4, "PIMC stationarity")
def check_stationarity(seed: int = 1, n_sweeps: int = 1_000_000, s: float = 0.8,
                       slices: int = 4, beta: float = 8.0, tol: float = 1e-2):
    exact = trotter_weights(TV_PROBLEM, s, slices=slices, beta=beta)
    codes = frozen_samples(TV_PROBLEM, s, n_sweeps, slices=slices, beta=beta, seed=seed)
    emp = np.bincount(codes, minlength=len(exact)) / len(codes)
    tv = 0.5 * float(np.abs(emp - exact).sum())
    return tv <= tol, f"TV = {tv:.4f} (limit {tol})", {"tv": tv}


# --- 5. protocol sanity -----------------------------------------------------------------

@_timed(5, "reverse-anneal protocol sanity")
def check_protocol(seed: int = 0, reads: int = 200):
    inst = build_instance(InstanceConfig(feature="gadget-free"), seed)
    base = dict(SURROGATE, seed=seed)
    stay = reverse_anneal(inst, inst.planted_state,
                          AnnealParams(s_star=1.0, reads=50, ramp_sweeps=20, hold_sweeps=50,
                                       seed=seed))
    kept = int(np.all(stay.states == inst.planted_state, axis=1).sum())
    act = inst.active
    deep = reverse_anneal(inst, inst.planted_state, AnnealParams(s_star=0.2, reads=reads, **base))
    fwd = forward_anneal(inst, AnnealParams(reads=reads, **{**base, "seed": seed + 1}))
    hd = np.array([hamming(z[act], inst.planted_state[act]) for z in deep.states], float)
    hf = np.array([hamming(z[act], inst.planted_state[act]) for z in fwd.states], float)
    se = math.sqrt(hd.var(ddof=1) / len(hd) + hf.var(ddof=1) / len(hf))
    close = abs(hd.mean() - hf.mean()) <= 2 * se
    ok = kept == 50 and close
    detail = (f"s*=1 kept {kept}/50; Hamming s*=0.2 {hd.mean():.1f} vs forward "
              f"{hf.mean():.1f} (2 se = {2 * se:.1f})")
    return ok, detail, {"kept": kept, "deep": hd.mean(), "forward": hf.mean(), "se": se}


# --- 6. fluctuation attraction ----------------------------------------------------------

S_STAR_INTERMEDIATE = (0.6, 0.65, 0.7, 0.75)


def _k_by_instance(kind, seeds, s_values, offsets, reads, master):
    """k per read, grouped as ``out[(s, d)][instance] -> array``."""
    out = {}
    for i, sd in enumerate(seeds):
        inst = build_instance(InstanceConfig(feature=kind), sd)
        ss = sweep_grid(inst, inst.planted_state, s_values, offsets,
                        AnnealParams(reads=reads, seed=master + i, **SURROGATE))
        c = an.classify_set(ss, inst)
        for s in s_values:
            for d in offsets:
                m = (c.s_star == s) & (c.offset == d)
                out.setdefault((s, d), []).append(c.k[m].astype(float))
    return out


@_timed(6, "fluctuation attraction trend")
def check_attraction(seed: int = 0, n_instances: int = 10, pilot_reads: int = 20,
                     reads: int = 400, level: float = 0.95):
    seeds = [seed + i for i in range(n_instances)]
    pilot = _k_by_instance("gadget-free", seeds, S_STAR_INTERMEDIATE, [0.0], pilot_reads,
                           seed + 10_000)
    pilot_l = _k_by_instance("gadget-locked", seeds, S_STAR_INTERMEDIATE, [0.0], pilot_reads,
                             seed + 20_000)
    # pilot picks the s* with the largest relative enrichment of free over locked
    ratio = {}
    for s in S_STAR_INTERMEDIATE:
        kf = np.mean([g.mean() for g in pilot[s, 0.0]])
        kl = np.mean([g.mean() for g in pilot_l[s, 0.0]])
        ratio[s] = kf / kl if kl > 0 else (math.inf if kf > 0 else 0.0)
    s_best = max(S_STAR_INTERMEDIATE, key=lambda s: (ratio[s], s))
    free = _k_by_instance("gadget-free", seeds, [s_best], [0.0], reads, seed + 30_000)
    locked = _k_by_instance("gadget-locked", seeds, [s_best], [0.0, -0.04], reads,
                            seed + 40_000)
    rng = np.random.default_rng(seed)
    f0, l0, lo = free[s_best, 0.0], locked[s_best, 0.0], locked[s_best, -0.04]
    c1 = an.bootstrap_greater_stratified(f0, l0, rng)
    c2 = an.bootstrap_greater_stratified(lo, l0, rng)
    m = lambda groups: float(np.mean([g.mean() for g in groups]))  # noqa: E731
    detail = (f"s*={s_best}: free {m(f0):.3f} vs locked {m(l0):.3f} (conf {c1:.3f}); "
              f"locked ds=-0.04 {m(lo):.3f} vs ds=0 (conf {c2:.3f})")
    return c1 >= level and c2 >= level, detail, {"s_best": s_best, "conf": (c1, c2)}


# --- 7. conditional performance ---------------------------------------------------------

C7_S_GRID = (0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8)
C7_OFFSETS = (-0.08, -0.04, 0.0, 0.04)


@_timed(7, "conditional-performance baseline")
def check_conditional(seed: int = 0, n_instances: int = 10, reads: int = 40):
    rng = np.random.default_rng(seed)
    superset_bad, cells, beats = [], 0, 0
    for i in range(n_instances):
        inst = build_instance(InstanceConfig(feature="chain", softness=0.0), seed + i)
        ss = sweep_grid(inst, inst.planted_state, C7_S_GRID, C7_OFFSETS,
                        AnnealParams(reads=reads, seed=seed + 50_000 + i, **SURROGATE))
        data = an.classify_set(ss, inst)
        plain = data.select(data.offset == 0.0)
        for k in range(1, 5):
            cells += 1
            with_off = an.conditional_best(data, k, rng)
            without = an.conditional_best(plain, k, rng)
            if without is not an.ABSENT and not with_off.energy <= without.energy:
                superset_bad.append((i, k))
            if with_off is not an.ABSENT and with_off.cost_per_feature <= 2.0:
                beats += 1
    ok = not superset_bad and 2 * beats >= cells
    detail = (f"offsets never worse in {cells - len(superset_bad)}/{cells} cells; "
              f"cost per feature <= 2 in {beats}/{cells}")
    return ok, detail, {"beats": beats, "cells": cells}


# --- 8. Dickson spectrum ------------------------------------------------------------------

@_timed(8, "Dickson gadget spectrum")
def check_dickson(eps: float = 1 / 8):
    p = build_dickson(eps)
    e = enumerate_energies(p)
    order = np.sort(np.unique(e))
    ground = np.flatnonzero(e == order[0])
    first = np.flatnonzero(e == order[1])
    zero_flips = []
    for idx in first:
        z = index_to_spins(np.array([idx]), 16)[0].astype(np.int64)
        n_zero = 0
        for i in OUTER:
            zz = z.copy()
            zz[i] = -zz[i]
            n_zero += int(energy(p, zz) == e[idx])
        zero_flips.append(n_zero)
    ok = (order[0] == -17 and len(ground) == 1 and order[1] == -15 and len(first) == 256
          and set(zero_flips) == {8})
    detail = (f"ground {order[0]:g} x{len(ground)}, first excited {order[1]:g} x{len(first)}, "
              f"zero-cost outer flips {sorted(set(zero_flips))}")
    return ok, detail, {}


# --- 9. 16-qubit tradeoff -----------------------------------------------------------------

@_timed(9, "16-qubit optimality/flexibility tradeoff")
def check_tradeoff(seed: int = 0, n_refs: int = 10_000, z_crit: float = 2.326):
    tc = flexibility_tradeoff_16(default_lambda_grid(), n_refs, rng=seed)
    # diff is flexible minus ground per paired reference; negative favours flexible
    z = -tc.diff_mean / np.where(tc.diff_se > 0, tc.diff_se, np.inf)
    win = z > z_crit
    runs, cur = [], []
    for a, w in enumerate(win):
        if w:
            cur.append(a)
        elif cur:
            runs.append(cur)
            cur = []
    if cur:
        runs.append(cur)
    lam0 = tc.ground_mean[0] == tc.ground_energy and tc.ground_mean[0] < tc.flexible_mean[0]
    ok = bool(runs) and lam0
    best = max(runs, key=len) if runs else []
    rng_txt = (f"lambda in [{tc.lam[best[0]]:g}, {tc.lam[best[-1]]:g}]" if best
               else "no winning range")
    detail = f"flexible start wins for {rng_txt}; lambda=0 ground {tc.ground_mean[0]:g}"
    return ok, detail, {"runs": runs}


# --- 10. use case -------------------------------------------------------------------------

C10_S_GRID = (0.6, 0.65, 0.7, 0.75, 0.8)
C10_OFFSETS = (-0.04, 0.0)


def usecase_tables(seed: int = 0, n_instances: int = 10, reads: int = 30, n_refs: int = 300,
                   lam_grid=None) -> tuple[str, str]:
    """Run the use-case pipeline on fresh desk instances; return both CSV texts."""
    lam_grid = default_lambda_grid() if lam_grid is None else np.asarray(lam_grid, float)
    rng = np.random.default_rng(seed)
    use_rows, opt_rows = [], []
    for i in range(n_instances):
        inst = build_instance(InstanceConfig(feature="gadget-free"), seed + i)
        ss = sweep_grid(inst, inst.planted_state, C10_S_GRID, C10_OFFSETS,
                        AnnealParams(reads=reads, seed=seed + 60_000 + i, **SURROGATE))
        data = an.merge(an.classify_set(ss, inst), an.trivial_baseline(inst))
        table = an.conditional_table(data, range(len(inst.features) + 1), rng)
        res = usecase_pipeline(inst, table, lam_grid, n_refs, rng,
                               problem_scale=SURROGATE["problem_scale"])
        for k in res.k_values:
            use_rows += [(i, k, float(l), float(v)) for l, v in zip(lam_grid, res.curves[k])]
        opt_rows += [(i, float(l), int(k)) for l, k in zip(lam_grid, res.optimal_k())]
    prov = {"seed": seed, "reads": reads, "n_refs": n_refs}
    texts = []
    for cols, rows in ((("instance", "k", "lambda", "mean_energy"), use_rows),
                       (("instance", "lambda", "k"), opt_rows)):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "out.csv"
            an.write_csv(path, cols, rows, prov)
            texts.append(path.read_text())
    return texts[0], texts[1]


def _optimal_k(opt_csv: str) -> dict[int, dict[float, int]]:
    out: dict[int, dict[float, int]] = {}
    for line in _io.StringIO(opt_csv):
        if line.startswith("#") or line.startswith("instance"):
            continue
        i, lam, k = line.strip().split(",")
        out.setdefault(int(i), {})[float(lam)] = int(k)
    return out


@_timed(10, "use-case pipeline")
def check_usecase(seed: int = 0, n_instances: int = 10, reads: int = 30, n_refs: int = 300,
                  need: int = 7):
    use1, opt1 = usecase_tables(seed, n_instances, reads, n_refs)
    use2, opt2 = usecase_tables(seed, n_instances, reads, n_refs)
    same = use1 == use2 and opt1 == opt2
    opt = _optimal_k(opt1)
    lam0_ok = all(tab[0.0] == 0 for tab in opt.values())
    lams = sorted(next(iter(opt.values())))
    moderate = [l for l in lams if 0.0 < l <= 10.0]
    counts = {l: sum(tab[l] > 0 for tab in opt.values()) for l in moderate}
    best_lam = max(counts, key=lambda l: (counts[l], -l))
    ok = same and lam0_ok and counts[best_lam] >= need
    detail = (f"lambda=0 k=0 for {sum(t[0.0] == 0 for t in opt.values())}/{len(opt)}; "
              f"k>0 for {counts[best_lam]}/{len(opt)} at lambda={best_lam:g}; "
              f"reruns identical: {same}")
    return ok, detail, {"counts": counts}


# --- 11. tie rules ------------------------------------------------------------------------

def tied_dataset() -> an.Classified:
    """Synthetic reads with ties in energy across ``s*`` and offsets."""
    s = np.array([0.5, 0.7, 0.6, 0.7, 0.9, 0.3])
    d = np.array([0.04, -0.08, 0.0, 0.12, -0.2, -0.04])
    e = np.array([1.0, 1.0, 1.0, 1.0, 2.0, 1.0])
    k = np.array([1, 1, 2, 1, 1, 2])
    n = len(s)
    return an.Classified(e, k, np.zeros(n, np.int64), s, d, np.ones((n, 4), np.int8),
                         np.zeros(n, bool))


@_timed(11, "tie rules")
def check_ties():
    data = tied_dataset()
    got = (an.optimal_s_star(data, 1), an.optimal_offset(data, 1),
           an.optimal_s_star(data, 2), an.optimal_offset(data, 2),
           an.optimal_s_star(data, 3))
    want = (0.7, -0.08, 0.6, -0.04, an.ABSENT)
    ok = got == want
    return ok, f"got {got}", {}


CRITERIA = {f.number: f for f in (check_planted, check_gadgets, check_chains,
                                   check_stationarity, check_protocol, check_attraction,
                                   check_conditional, check_dickson, check_tradeoff,
                                   check_usecase, check_ties)}
QUICK = [1, 2, 3, 8, 11]


def run_criteria(which, seed: int = 0, out=print) -> list[CheckResult]:
    results = []
    for n in which:
        check = CRITERIA[n]
        kw = {"seed": seed} if "seed" in check.params else {}
        r = check(**kw)
        out(r.line())
        results.append(r)
    return results
