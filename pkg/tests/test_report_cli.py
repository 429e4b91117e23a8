from fractions import Fraction as Q
from pathlib import Path

import numpy as np
import pytest

from heuncap.cli import EXIT_OK, EXIT_PROOF_FAILED, EXIT_USAGE, main
from heuncap.config import ConfigError, RunConfig, dump_config, load_config, parse_config
from heuncap.engine import AbsorptionMode, ProofResult, StepStats
from heuncap.report import RunManifest, emit_latex_table, history_csv

EXPECTED_SINK = (4.613579577746310, 7.214897621956089, 3.965527399380409, 6.970442831003899)


def _res(label, steps, success=True, reason=""):
    hist = [StepStats(k, 0 if k == steps else 10, 1, 0) for k in range(1, steps + 1)]
    return ProofResult(success, hist, 10, label, reason)


def test_table_layout():
    text = emit_latex_table([_res("Sink Point 1", 1), _res("Box around $(1,1)$", 3)])
    lines = text.splitlines()
    assert r"\textbf{Initial Set} & \textbf{Step} & \textbf{Active Boxes} & \textbf{Absorbed} & \textbf{Snapped} \\" in text
    assert "Run 1: Invariance of Sink Neighborhoods" in text
    assert "Run 2: Trajectory of (1,1)" in text
    assert r"\caption{Dynamics of the interval cloud" in text
    rows = [ln for ln in lines if ln.count("&") == 4 and "textbf" not in ln]
    assert len(rows) == 4
    assert rows[1].startswith("    Box around $(1,1)$ & 1 &")
    assert rows[2].startswith("     & 2 &")
    assert text.count("Success:") == 2
    assert text == emit_latex_table([_res("Sink Point 1", 1), _res("Box around $(1,1)$", 3)])


def test_table_single_and_failure():
    text = emit_latex_table([_res("Trivial", 1)])
    assert "Trivial & 1 & 0 & 1 & 0" in text and "Run 1" not in text
    bad = emit_latex_table([_res("Trivial", 2, success=False, reason="budget exhausted")])
    assert "Failure: Trivial -- budget exhausted." in bad and "Success" not in bad
    with pytest.raises(ValueError):
        emit_latex_table([])


def test_history_csv():
    text = history_csv([_res("a", 2)])
    assert text == "run_label,step,active,absorbed,snapped\na,1,10,1,0\na,2,0,1,0\n"


def test_manifest(tmp_path):
    m = RunManifest("cmd", "x = 1\n")
    m.write_output(tmp_path, "a.txt", "text", "hello")
    assert m.verify(tmp_path)
    (tmp_path / "a.txt").write_text("changed")
    assert not m.verify(tmp_path)
    assert "sha256:" in m.render()


def test_config_defaults_and_round_trip():
    cfg = parse_config("")
    e = cfg.engine
    assert (e.h, e.x1_diam_threshold, e.x2_diam_threshold, e.snap_threshold,
            e.sink_epsilon, e.max_steps) == (0.1, 0.1, 0.1, 0.4, 1.3, 250)
    assert e.absorption_mode is AbsorptionMode.PAPER_FAITHFUL
    assert parse_config(dump_config(cfg)) == cfg
    custom = parse_config("sink_epsilon = 0.9  # tighter\nsnap_enabled = no\nbasin_nx = 40\n")
    assert parse_config(dump_config(custom)) == custom
    assert custom.engine.sink_epsilon == 0.9 and not custom.engine.snap_enabled


def test_config_h_interval_contains_one_tenth():
    iv = parse_config("h = 0.1\n").interval("h")
    assert Q(iv.lo) <= Q(1, 10) <= Q(iv.hi)


@pytest.mark.parametrize("text,line", [
    ("sink_epsilon = -1", 1),
    ("\n# note\nbogus = 3", 3),
    ("h 0.1", 1),
    ("max_steps = 0", 1),
    ("snap_enabled = maybe", 1),
    ("absorption_mode = loose", 1),
    ("x1_diam_threshold = 0", 1),
])
def test_config_errors(text, line):
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    assert err.value.line == line
    assert f":{line}:" in str(err.value)


def test_load_config_file(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("max_steps = 40\n")
    assert load_config(p).engine.max_steps == 40
    assert load_config(None) == RunConfig()


def test_cli_prove_default(tmp_path, capsys):
    assert main(["--out", str(tmp_path), "prove"]) == EXIT_OK
    assert (tmp_path / "cap_table_static.tex").exists()
    hist = (tmp_path / "proof_history.csv").read_text().splitlines()
    assert len(hist) == 1 + 4 + 7
    assert "cap_table_static.tex" in (tmp_path / "manifest.txt").read_text()


def test_cli_prove_tiny_strict(tmp_path):
    argv = ["prove", "--mode", "strict_containment", "--no-snap", "--tiny", "--out", str(tmp_path)]
    assert main(argv) == EXIT_OK


def test_cli_failed_proof_exit_code(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("max_steps = 2\n")
    assert main(["prove", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_PROOF_FAILED


def test_cli_usage_errors(tmp_path, capsys):
    assert main(["nonsense"]) == EXIT_USAGE
    assert main(["prove", "--frobnicate"]) == EXIT_USAGE
    assert main([]) == EXIT_USAGE
    bad = tmp_path / "bad.cfg"
    bad.write_text("sink_epsilon = -1\n")
    assert main(["prove", "--config", str(bad), "--out", str(tmp_path)]) == EXIT_USAGE
    assert "bad.cfg:1" in capsys.readouterr().err
    assert main(["--help"]) == EXIT_OK


def test_cli_sink(capsys, tmp_path):
    assert main(["sink", "--out", str(tmp_path)]) == EXIT_OK
    vals = [float(v) for v in capsys.readouterr().out.splitlines()[:4]]
    assert np.allclose(vals, EXPECTED_SINK, atol=1e-12)


def test_cli_other_commands(tmp_path):
    out = str(tmp_path)
    assert main(["basin", "--nx", "20", "--ny", "16", "--out", out]) == EXIT_OK
    pgm = (tmp_path / "basin.pgm").read_bytes()
    assert pgm.startswith(b"P5\n20 16\n255\n")
    assert set(pgm[len(b"P5\n20 16\n255\n"):]) <= {0, 64, 128, 255}
    assert len((tmp_path / "basin.csv").read_text().splitlines()) == 1 + 320
    assert main(["phase", "--out", out]) == EXIT_OK
    assert main(["cobweb", "--out", out]) == EXIT_OK
    assert main(["stability", "--out", out]) == EXIT_OK
    assert main(["bifurcation", "--lo", "25", "--hi", "31", "--steps", "61", "--out", out]) == EXIT_OK
    text = (tmp_path / "bifurcation.csv").read_text()
    assert text.startswith("lambda,orbit_value\n")
    assert (tmp_path / "stability.csv").read_text().count("boundary") == 720


def test_cli_outputs_are_byte_stable(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d, t in ((a, "1"), (b, "4")):
        assert main(["prove", "--threads", t, "--out", str(d)]) == EXIT_OK
        assert main(["basin", "--nx", "12", "--ny", "12", "--threads", t, "--out", str(d)]) == EXIT_OK
    for name in ("proof_history.csv", "cap_table_static.tex", "basin.pgm", "basin.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_cli_shadow_option(tmp_path, capsys):
    assert main(["prove", "--no-snap", "--shadow", "50", "--seed", "7", "--out", str(tmp_path)]) == EXIT_OK
    assert "0 violations" in capsys.readouterr().out
