import json

import pytest

import flucguide.cli as cli
from flucguide import analysis as an
from flucguide.cli import (EXIT_INVARIANT, EXIT_IO, EXIT_OK, EXIT_VALIDATION, main, parse_args,
                           read_config)

SMALL = ["--grid", "3x3", "--loops", "60", "--count", "2"]
FAST = ["--s-star-grid", "0.5,1.0", "--offset-grid=-0.04,0", "--reads", "3",
        "--ramp-sweeps", "10", "--hold-sweeps", "20", "--slices", "4",
        "--problem-scale", "auto", "--beta", "32"]


@pytest.fixture
def pipeline(tmp_path):
    """Two tiny instances, each annealed to a sample file; returns the directory."""
    inst = tmp_path / "inst"
    assert main(["gen", "--features", "gadget-free", *SMALL, "--out", str(inst),
                 "--instances", "2"]) == EXIT_OK
    for k in range(2):
        assert main(["anneal", str(inst / f"instance_{k:03d}"), *FAST,
                     "--out", str(tmp_path / f"s{k}.json"), "--seed", str(k)]) == EXIT_OK
    return tmp_path


def test_gen_writes_bundles(tmp_path, capsys):
    out = tmp_path / "inst"
    assert main(["gen", "--features", "none", "--grid", "2x2", "--loops", "40",
                 "--out", str(out)]) == EXIT_OK
    assert (out / "instance_000.ising").exists() and (out / "instance_000.json").exists()
    assert "certified=True" in capsys.readouterr().out


def test_gen_chain(tmp_path):
    assert main(["gen", "--features", "chain", "--softness", "0", "--count", "2",
                 "--grid", "4x4", "--loops", "100", "--out", str(tmp_path)]) == EXIT_OK


def test_anneal_header(pipeline):
    doc = json.loads((pipeline / "s0.json").read_text())
    h = doc["header"]
    assert {"config_hash", "seed", "params", "instance"} <= set(h)
    assert len(doc["records"]) == 2 * 2 * 3


def test_analyze_outputs(pipeline):
    out = pipeline / "rep"
    args = ["analyze", str(pipeline / "s0.json"), str(pipeline / "s1.json"),
            "--inject-trivial", "--out", str(out)]
    assert main(args) == EXIT_OK
    for name in ("heatmap.csv", "conditional.csv", "summary.csv", "optimal.csv"):
        text = (out / name).read_text()
        assert text.startswith("# config_hash=") and "\n# seed=0\n" in text
    rows = an.read_csv(out / "conditional.csv")
    assert {int(r["instance"]) for r in rows} == {0, 1}
    first = (out / "heatmap.csv").read_bytes()
    assert main(args) == EXIT_OK
    assert (out / "heatmap.csv").read_bytes() == first


def test_usecase_outputs_deterministic(pipeline):
    out = pipeline / "use"
    args = ["usecase", str(pipeline / "s0.json"), "--lambda", "0,4", "--n-refs", "5",
            "--out", str(out)]
    assert main(args) == EXIT_OK
    first = (out / "usecase.csv").read_bytes(), (out / "optimalk.csv").read_bytes()
    assert main(args) == EXIT_OK
    assert ((out / "usecase.csv").read_bytes(), (out / "optimalk.csv").read_bytes()) == first
    rows = an.read_csv(out / "optimalk.csv")
    assert [r["k"] for r in rows if float(r["lambda"]) == 0.0] == ["0"]


def test_usecase_dickson(tmp_path):
    assert main(["usecase", "--dickson", "--lambda", "0,5", "--n-refs", "20",
                 "--out", str(tmp_path)]) == EXIT_OK
    rows = an.read_csv(tmp_path / "tradeoff16.csv")
    assert len(rows) == 6
    ground = [r for r in rows if r["series"] == "ground" and float(r["lambda"]) == 0]
    assert float(ground[0]["mean"]) == -17.0


def test_usecase_needs_input(tmp_path):
    assert main(["usecase", "--out", str(tmp_path)]) == EXIT_VALIDATION


def test_anneal_reruns_are_byte_identical(pipeline):
    inst = pipeline / "inst" / "instance_000"
    main(["anneal", str(inst), *FAST, "--out", str(pipeline / "again.json")])
    assert (pipeline / "again.json").read_bytes() == (pipeline / "s0.json").read_bytes()


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# desk run\nreads = 7\nhold-sweeps = 11\noffset_grid = 0\n")
    assert read_config(cfg) == {"reads": "7", "hold_sweeps": "11", "offset_grid": "0"}
    args = parse_args(["anneal", "x", "--config", str(cfg), "--reads", "9"])
    assert args.reads == 9 and args.hold_sweeps == 11 and args.offset_grid == [0.0]


def test_config_unknown_key(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("colour = blue\n")
    assert main(["anneal", "x", "--config", str(cfg)]) == EXIT_VALIDATION


def test_exit_codes(tmp_path):
    assert main(["anneal", str(tmp_path / "missing")]) == EXIT_IO
    assert main(["anneal", "x", "--reads", "lots"]) == EXIT_VALIDATION
    assert main(["gen", "--grid", "2x2", "--count", "9", "--out", str(tmp_path)]) \
        == EXIT_VALIDATION
    bad = tmp_path / "bad.ising"
    bad.write_text("n 2\nc 0 0 1\n")
    (tmp_path / "bad.json").write_text("{}")
    assert main(["anneal", str(bad)]) == EXIT_IO


def test_invalid_anneal_parameters(pipeline):
    inst = pipeline / "inst" / "instance_000"
    assert main(["anneal", str(inst), "--s-star-grid", "1.5"]) == EXIT_VALIDATION


def test_tampered_instance_breaks_certificate(tmp_path, monkeypatch):
    monkeypatch.setattr(cli, "certify_planted", lambda inst: False)
    assert main(["gen", "--features", "none", "--grid", "2x2", "--loops", "40",
                 "--out", str(tmp_path)]) == EXIT_INVARIANT


def test_verify_subcommand(capsys):
    assert main(["verify", "--only", "11"]) == EXIT_OK
    assert "[PASS]" in capsys.readouterr().out
