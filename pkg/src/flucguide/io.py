"""Text formats: problem files, instance bundles and sample files.

Problem file (one record per line, ``#`` starts a comment)::

    n <n_qubits>
    c <i> <j> <J>
    f <i> <h>

An instance bundle is ``<stem>.ising`` plus ``<stem>.json`` holding the
feature geometry, planted state (bitstring, ``1`` = spin -1), loops and
generation settings.  A sample file is JSON with a header and one record
per read.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .anneal import SampleSet
from .chimera import build_chimera
from .domain_wall import ChainSpec
from .gadget import GadgetSpec
from .ising import IsingProblem, from_bitstring, to_bitstring
from .planted import InstanceConfig, Loop, PlantedInstance, config_dict

FORMAT_VERSION = 1


class FormatError(ValueError):
    """Malformed or inconsistent input file."""


def _num(x: float) -> str:
    return format(float(x), ".17g")


def dumps_problem(problem: IsingProblem, comments=()) -> str:
    lines = [f"# {c}" for c in comments]
    lines.append(f"n {problem.n_qubits}")
    for (i, j), v in problem.couplings.items():
        lines.append(f"c {i} {j} {_num(v)}")
    for i, v in problem.fields.items():
        lines.append(f"f {i} {_num(v)}")
    return "\n".join(lines) + "\n"


def loads_problem(text: str) -> IsingProblem:
    n = None
    c, f = {}, {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        try:
            if tok[0] == "n" and len(tok) == 2:
                if n is not None:
                    raise FormatError(f"line {lineno}: repeated header")
                n = int(tok[1])
            elif tok[0] == "c" and len(tok) == 4:
                key = (int(tok[1]), int(tok[2]))
                k2 = (min(key), max(key))
                if k2 in c:
                    raise FormatError(f"line {lineno}: duplicate coupler {k2}")
                c[k2] = float(tok[3])
            elif tok[0] == "f" and len(tok) == 3:
                i = int(tok[1])
                if i in f:
                    raise FormatError(f"line {lineno}: duplicate field on {i}")
                f[i] = float(tok[2])
            else:
                raise FormatError(f"line {lineno}: unrecognised record {raw!r}")
        except ValueError as exc:
            if isinstance(exc, FormatError):
                raise
            raise FormatError(f"line {lineno}: {exc}") from None
    if n is None:
        raise FormatError("missing 'n <n_qubits>' header")
    try:
        return IsingProblem(n, c, f)
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def write_problem(path, problem: IsingProblem, comments=()):
    Path(path).write_text(dumps_problem(problem, comments))


def read_problem(path) -> IsingProblem:
    return loads_problem(Path(path).read_text())


def config_hash(obj) -> str:
    """Short stable hash of a JSON-serialisable configuration."""
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


# --- instance bundles ---------------------------------------------------------------

def _feature_record(f) -> dict:
    if isinstance(f, GadgetSpec):
        return {"type": "gadget", "variant": f.variant, "cell": list(f.cell),
                "qubits": list(f.qubits), "internal": [list(t) for t in f.internal],
                "boundary": [list(t) for t in f.boundary], "unused": list(f.unused),
                "orient": {str(k): v for k, v in f.orient.items()}}
    return {"type": "chain", "qubits": list(f.qubits), "start": f.start,
            "softness": f.softness, "potential": list(f.potential),
            "fields": list(f.fields), "offset": f.offset,
            "boundary": [list(t) for t in f.boundary],
            "orient": {str(k): v for k, v in f.orient.items()}}


def _feature_from(rec: dict):
    orient = {int(k): int(v) for k, v in rec["orient"].items()}
    trip = lambda rows: tuple((int(a), int(b), float(j)) for a, b, j in rows)  # noqa: E731
    if rec["type"] == "gadget":
        return GadgetSpec(tuple(rec["cell"]), tuple(rec["qubits"]), trip(rec["internal"]),
                          trip(rec["boundary"]), rec["variant"], tuple(rec["unused"]), orient)
    if rec["type"] == "chain":
        return ChainSpec(tuple(rec["qubits"]), int(rec["start"]), float(rec["softness"]),
                         tuple(rec["potential"]), tuple(rec["fields"]), float(rec["offset"]),
                         trip(rec["boundary"]), orient)
    raise FormatError(f"unknown feature type {rec['type']!r}")


def instance_metadata(inst: PlantedInstance) -> dict:
    cfg = config_dict(inst.config)
    return {
        "format": FORMAT_VERSION,
        "feature_kind": inst.feature_kind,
        "config": cfg,
        "config_hash": config_hash(cfg),
        "seed": inst.rng_seed,
        "planted_state": to_bitstring(inst.planted_state),
        "planted_energy": inst.planted_energy,
        "loops": [[list(lp.cycle), lp.frustrated] for lp in inst.loops],
        "features": [_feature_record(f) for f in inst.features],
    }


def write_instance(stem, inst: PlantedInstance) -> tuple[Path, Path]:
    stem = Path(stem)
    meta = instance_metadata(inst)
    prob_path = stem.with_suffix(".ising")
    meta_path = stem.with_suffix(".json")
    write_problem(prob_path, inst.problem,
                  comments=(f"config_hash={meta['config_hash']}", f"seed={inst.rng_seed}"))
    meta_path.write_text(json.dumps(meta, indent=1) + "\n")
    return prob_path, meta_path


def read_instance(stem) -> PlantedInstance:
    """Load a bundle from its stem (or either file path)."""
    stem = Path(stem)
    if stem.suffix in (".ising", ".json"):
        stem = stem.with_suffix("")
    problem = read_problem(stem.with_suffix(".ising"))
    try:
        meta = json.loads(stem.with_suffix(".json").read_text())
        cfg = InstanceConfig(**meta["config"])
        planted = from_bitstring(meta["planted_state"])
        loops = [Loop(tuple(c), int(t)) for c, t in meta["loops"]]
        feats = [_feature_from(r) for r in meta["features"]]
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{stem}.json: {exc}") from None
    if len(planted) != problem.n_qubits:
        raise FormatError("planted state does not match the problem size")
    graph = build_chimera(cfg.rows, cfg.cols, cfg.shore)
    if graph.n_qubits != problem.n_qubits:
        raise FormatError("graph dimensions do not match the problem size")
    return PlantedInstance(problem, planted, float(meta["planted_energy"]), loops, feats,
                           graph, cfg, meta.get("seed"), meta["feature_kind"])


# --- sample files -------------------------------------------------------------------------

def write_samples(path, samples: SampleSet, header: dict):
    records = [
        {"s_star": float(samples.s_star[r]), "offset": float(samples.offset[r]),
         "read": int(samples.read[r]), "seed": int(samples.seeds[r]),
         "energy": float(samples.energies[r]), "state": to_bitstring(samples.states[r]),
         **({"raw": to_bitstring(samples.raw[r])} if samples.raw is not None else {})}
        for r in range(len(samples))
    ]
    doc = {"format": FORMAT_VERSION, "header": header, "records": records}
    Path(path).write_text(json.dumps(doc, indent=None, separators=(",", ":")) + "\n")


def read_samples(path, problem: IsingProblem) -> tuple[SampleSet, dict]:
    """Load a sample file; energies are recomputed from ``problem``."""
    try:
        doc = json.loads(Path(path).read_text())
        recs = doc["records"]
        header = doc["header"]
        states = np.array([from_bitstring(r["state"]) for r in recs], dtype=np.int8)
        raw = None
        if recs and all("raw" in r for r in recs):
            raw = np.array([from_bitstring(r["raw"]) for r in recs], dtype=np.int8)
        cols = {k: [r[k] for r in recs] for k in ("s_star", "offset", "read", "seed")}
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: {exc}") from None
    if len(states) == 0:
        states = np.zeros((0, problem.n_qubits), dtype=np.int8)
    try:
        ss = SampleSet.build(problem, states, cols["s_star"], cols["offset"], cols["read"],
                             cols["seed"], raw, header)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
    return ss, header
