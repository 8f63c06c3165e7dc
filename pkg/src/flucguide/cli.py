"""Command-line front end: gen, anneal, analyze, usecase, verify.

Every subcommand accepts ``--config FILE``: a flat ``key = value`` file whose
keys are long option names (dashes or underscores).  Explicit flags override
the file.  All randomness derives from ``--seed``.

Exit codes: 0 success, 1 validation error, 2 I/O or format error,
3 internal invariant breach (failed certificate or verification).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import analysis as an
from . import io
from .anneal import (DEFAULT_OFFSET_GRID, DEFAULT_S_STAR_GRID, AnnealParams, Schedule,
                     sweep_grid)
from .chimera import WalkBudgetExceeded
from .gadget import PlacementError
from .ising import ContractError
from .penalty import default_lambda_grid, flexibility_tradeoff_16, usecase_pipeline
from .planted import FEATURE_KINDS, InstanceConfig, build_instance, certify_planted

EXIT_OK, EXIT_VALIDATION, EXIT_IO, EXIT_INVARIANT = 0, 1, 2, 3


class InvariantBreach(RuntimeError):
    pass


class UsageError(ValueError):
    """Bad command line; mapped to the validation exit code."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _floats(text: str) -> list[float]:
    try:
        vals = [float(x) for x in str(text).replace(" ", "").split(",") if x != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("grid must be nonempty")
    return vals


def _grid(text: str) -> tuple[int, int]:
    try:
        r, c = str(text).lower().split("x")
        return int(r), int(c)
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like 16x16, got {text!r}")


def _scale(text: str):
    return "auto" if str(text) == "auto" else float(text)


def read_config(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def _fmt_grid(vals) -> str:
    return ",".join(repr(float(v)) for v in vals)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="flucguide", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="flat key = value configuration file")
        sp.add_argument("--seed", type=int, default=0, help="master seed")
        return sp

    g = common(sub.add_parser("gen", help="generate planted instances"))
    g.add_argument("--features", choices=FEATURE_KINDS, default="gadget-free")
    g.add_argument("--count", type=int, default=15, help="features per instance")
    g.add_argument("--loops", type=int, default=8000)
    g.add_argument("--grid", type=_grid, default=(16, 16), help="unit-cell grid, e.g. 16x16")
    g.add_argument("--shore", type=int, default=4)
    g.add_argument("--max-len", type=int, default=5)
    g.add_argument("--softness", type=float, default=0.0)
    g.add_argument("--instances", type=int, default=1, help="instance k uses seed + k")
    g.add_argument("--out", default="instances", help="output directory")

    a = common(sub.add_parser("anneal", help="reverse-anneal an instance over a grid"))
    a.add_argument("instance", help="instance bundle (stem, .ising or .json)")
    a.add_argument("--s-star-grid", type=_floats, default=list(DEFAULT_S_STAR_GRID))
    a.add_argument("--offset-grid", type=_floats, default=list(DEFAULT_OFFSET_GRID))
    a.add_argument("--reads", type=int, default=1000)
    a.add_argument("--ramp-sweeps", type=int, default=250)
    a.add_argument("--hold-sweeps", type=int, default=1000)
    a.add_argument("--slices", type=int, default=32)
    a.add_argument("--beta", type=float, default=8.0)
    a.add_argument("--problem-scale", type=_scale, default=1.0,
                   help="multiplier on problem terms, or 'auto' for |J| <= 1")
    a.add_argument("--schedule-table", help="file with columns s, A, B")
    a.add_argument("--out", help="sample file (default: <instance>.samples.json)")

    z = common(sub.add_parser("analyze", help="classify samples and write CSV reports"))
    z.add_argument("samples", nargs="+", help="sample files written by 'anneal'")
    z.add_argument("--inject-trivial", action="store_true",
                   help="add trivial-strategy baseline reads")
    z.add_argument("--out", default="reports")

    u = common(sub.add_parser("usecase", help="penalty-plus-greedy use case"))
    u.add_argument("samples", nargs="*", help="sample files written by 'anneal'")
    u.add_argument("--lambda-grid", "--lambda", dest="lambda_grid", type=_floats,
                   default=list(default_lambda_grid()))
    u.add_argument("--n-refs", type=int, default=None,
                   help="random reference states (300, or 10000 with --dickson)")
    u.add_argument("--problem-scale", type=_scale, default=1.0,
                   help="multiplier on Ising energies in the composite, or 'auto'")
    u.add_argument("--dickson", action="store_true", help="run the 16-qubit tradeoff")
    u.add_argument("--out", default="reports")

    v = common(sub.add_parser("verify", help="run the acceptance checks"))
    v.add_argument("--quick", action="store_true", help="only the fast exact checks")
    v.add_argument("--only", type=lambda s: [int(x) for x in s.split(",")],
                   help="comma-separated criterion numbers")
    return p


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        cfg = read_config(args.config)
        sp = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest: a for a in sp._actions}
        defaults = {}
        for k, v in cfg.items():
            if k not in known:
                raise ValueError(f"unknown configuration key {k!r} for '{args.command}'")
            act = known[k]
            if act.type is not None:
                v = act.type(v)
            elif isinstance(act.const, bool):
                v = v.lower() in ("1", "true", "yes", "on")
            defaults[k] = v
        sp.set_defaults(**defaults)
        args = parser.parse_args(argv)
    return args


def _provenance(args, keys) -> dict:
    cfg = {k: getattr(args, k) for k in keys}
    return {"config_hash": io.config_hash(cfg), "seed": args.seed}


# --- subcommands ------------------------------------------------------------------

def cmd_gen(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows, cols = args.grid
    cfg = InstanceConfig(rows=rows, cols=cols, shore=args.shore, feature=args.features,
                         n_features=args.count if args.features != "none" else 0,
                         softness=args.softness, n_loops=args.loops, max_len=args.max_len)
    ok = True
    for k in range(args.instances):
        seed = args.seed + k
        inst = build_instance(cfg, seed)
        cert = certify_planted(inst)
        ok &= cert
        prob, meta = io.write_instance(out / f"instance_{k:03d}", inst)
        print(f"{prob}: seed={seed} planted_energy={inst.planted_energy!r} "
              f"loops={inst.loop_count} features={len(inst.features)} certified={cert}")
    if not ok:
        raise InvariantBreach("planted-state certificate failed")
    return EXIT_OK


ANNEAL_KEYS = ("s_star_grid", "offset_grid", "reads", "ramp_sweeps", "hold_sweeps",
               "slices", "beta", "problem_scale", "schedule_table")


def cmd_anneal(args) -> int:
    inst = io.read_instance(args.instance)
    schedule = Schedule.from_file(args.schedule_table) if args.schedule_table else None
    params = AnnealParams(reads=args.reads, ramp_sweeps=args.ramp_sweeps,
                          hold_sweeps=args.hold_sweeps, slices=args.slices, beta=args.beta,
                          seed=args.seed, problem_scale=args.problem_scale)
    ss = sweep_grid(inst, inst.planted_state, args.s_star_grid, args.offset_grid, params,
                    schedule=schedule)
    stem = Path(args.instance)
    if stem.suffix in (".ising", ".json"):
        stem = stem.with_suffix("")
    out = Path(args.out) if args.out else stem.parent / (stem.name + ".samples.json")
    header = {"instance": str(Path(stem).resolve()), "n_qubits": inst.n_qubits,
              "planted_energy": inst.planted_energy,
              "params": {k: getattr(args, k) for k in ANNEAL_KEYS},
              **_provenance(args, ANNEAL_KEYS)}
    io.write_samples(out, ss, header)
    print(f"{out}: {len(ss)} reads over {len(args.s_star_grid)} x {len(args.offset_grid)} grid")
    return EXIT_OK


def _load(path):
    header = json.loads(Path(path).read_text())["header"]
    inst = io.read_instance(header["instance"])
    ss, header = io.read_samples(path, inst.problem)
    return inst, ss, header


def cmd_analyze(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)
    prov = _provenance(args, ("samples", "inject_trivial"))
    heat_rows, cond_rows, opt_rows = [], [], []
    by_k: dict[int, list[float]] = {}
    for idx, path in enumerate(args.samples):
        inst, ss, header = _load(path)
        data = an.classify_set(ss, inst)
        hm = an.heatmap(data.k, data.s_star, k_max=len(inst.features))
        heat_rows += [(idx, *r) for r in hm.rows()]
        if args.inject_trivial:
            data = an.merge(data, an.trivial_baseline(inst))
        table = an.conditional_table(data, range(len(inst.features) + 1), rng)
        cond_rows += an.conditional_rows(idx, table)
        for k, rec in table.items():
            by_k.setdefault(k, []).append(rec.energy)
            opt_rows.append((idx, k, an.optimal_s_star(data, k), an.optimal_offset(data, k)))
    an.write_csv(out / "heatmap.csv", ("instance",) + an.HEATMAP_COLUMNS, heat_rows, prov)
    an.write_csv(out / "conditional.csv", an.CONDITIONAL_COLUMNS, cond_rows, prov)
    an.write_csv(out / "summary.csv", an.SUMMARY_COLUMNS,
                 an.summary_rows(an.summarize(by_k)), prov)
    an.write_csv(out / "optimal.csv", ("instance", "k", "s_star", "offset"),
                 [(i, k, float(s) if s is not an.ABSENT else float("nan"),
                   float(d) if d is not an.ABSENT else float("nan"))
                  for i, k, s, d in opt_rows], prov)
    print(f"wrote heatmap.csv, conditional.csv, summary.csv, optimal.csv to {out}")
    return EXIT_OK


def cmd_usecase(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    prov = _provenance(args, ("samples", "lambda_grid", "n_refs", "dickson", "problem_scale"))
    lam = np.asarray(args.lambda_grid)
    if args.dickson:
        n_refs = args.n_refs or 10_000
        tc = flexibility_tradeoff_16(lam, n_refs, rng=args.seed)
        an.write_csv(out / "tradeoff16.csv", ("lambda", "series", "mean", "stderr"),
                     list(tc.rows()), prov)
        print(f"wrote tradeoff16.csv to {out}")
    if not args.samples:
        if not args.dickson:
            raise ValueError("usecase needs sample files or --dickson")
        return EXIT_OK
    n_refs = args.n_refs or 300
    rng = np.random.default_rng(args.seed)
    use_rows, opt_rows = [], []
    for idx, path in enumerate(args.samples):
        inst, ss, _ = _load(path)
        data = an.classify_set(ss, inst)
        table = an.conditional_table(data, range(len(inst.features) + 1), rng)
        if 0 not in table:
            print(f"{path}: no k = 0 reads; skipped", file=sys.stderr)
            continue
        missing = [k for k in range(len(inst.features) + 1) if k not in table]
        if missing:
            print(f"{path}: no reads for k = {missing}; gaps left", file=sys.stderr)
        res = usecase_pipeline(inst, table, lam, n_refs, rng,
                               problem_scale=args.problem_scale)
        for k in res.k_values:
            use_rows += [(idx, k, float(l), float(m)) for l, m in zip(lam, res.curves[k])]
        opt_rows += [(idx, float(l), int(k)) for l, k in zip(lam, res.optimal_k())]
    an.write_csv(out / "usecase.csv", ("instance", "k", "lambda", "mean_energy"), use_rows, prov)
    an.write_csv(out / "optimalk.csv", ("instance", "lambda", "k"), opt_rows, prov)
    print(f"wrote usecase.csv, optimalk.csv to {out}")
    return EXIT_OK


def cmd_verify(args) -> int:
    from .acceptance import CRITERIA, QUICK, run_criteria
    which = args.only or (QUICK if args.quick else sorted(CRITERIA))
    results = run_criteria(which, seed=args.seed)
    return EXIT_OK if all(r.passed for r in results) else EXIT_INVARIANT


COMMANDS = {"gen": cmd_gen, "anneal": cmd_anneal, "analyze": cmd_analyze,
            "usecase": cmd_usecase, "verify": cmd_verify}


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
        return COMMANDS[args.command](args)
    except InvariantBreach as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (io.FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, ContractError, PlacementError, WalkBudgetExceeded) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
