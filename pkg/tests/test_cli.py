"""Command-line driver: exit codes, schemas, determinism, reports."""

import json
import os

import pytest

from openrg import cli
from openrg.model import sector_dimension


def _run(argv):
    return cli.run(argv)


def _read_lines(path):
    with open(path) as fh:
        return fh.read().splitlines()


def test_missing_L_is_config_error(tmp_path):
    assert _run(["spectrum", "--out", str(tmp_path / "x.csv")]) \
        == cli.EXIT_CONFIG


def test_homogeneous_forbidden_on_solver_commands(tmp_path):
    for command in ("spectrum", "flow", "ratios", "transitions", "verify"):
        code = _run([command, "--L", "3", "--homogeneous",
                     "--out", str(tmp_path / "x.csv")])
        assert code == cli.EXIT_CONFIG


def test_verify_size_cap(tmp_path):
    assert _run(["verify", "--L", "9"]) == cli.EXIT_CONFIG


def test_bad_grid_is_config_error(tmp_path):
    code = _run(["flow", "--L", "2", "--g-grid", "2:1:5",
                 "--out", str(tmp_path / "x.csv")])
    assert code == cli.EXIT_CONFIG


def test_spectrum_schema_and_row_count(tmp_path):
    out = tmp_path / "spectrum.csv"
    assert _run(["spectrum", "--L", "3", "--N", "3", "--g", "1.0",
                 "--out", str(out)]) == cli.EXIT_OK
    lines = _read_lines(out)
    assert lines[0] == "label,sector,re_gamma,im_gamma,residual,source"
    body = [ln for ln in lines[1:] if not ln.startswith("#")]
    assert len(body) == sector_dimension(3, 3)
    for ln in body:
        cells = ln.split(",")
        assert len(cells) == 6
        assert set(cells[0]) <= set("012") and len(cells[0]) == 3
        assert cells[-1] == "EVB"


def test_all_sectors_row_count(tmp_path):
    out = tmp_path / "spectrum.csv"
    assert _run(["spectrum", "--L", "2", "--g", "0.8", "--all-sectors",
                 "--out", str(out)]) == cli.EXIT_OK
    body = [ln for ln in _read_lines(out)[1:] if not ln.startswith("#")]
    assert len(body) == 3 ** 2


def test_determinism_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    argv = ["flow", "--L", "3", "--N", "3", "--g-grid", "0.5,1.0"]
    assert _run(argv + ["--out", str(a)]) == cli.EXIT_OK
    assert _run(argv + ["--out", str(b)]) == cli.EXIT_OK
    assert a.read_bytes() == b.read_bytes()


def test_config_file_flags_win(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("L = 3\ng = 0.5  # overridden by the flag\nN = 3\n")
    out = tmp_path / "flagged.csv"
    ref = tmp_path / "ref.csv"
    assert _run(["spectrum", "--config", str(cfg), "--g", "1.0",
                 "--out", str(out)]) == cli.EXIT_OK
    assert _run(["spectrum", "--L", "3", "--N", "3", "--g", "1.0",
                 "--out", str(ref)]) == cli.EXIT_OK
    assert out.read_bytes() == ref.read_bytes()


def test_json_format(tmp_path):
    out = tmp_path / "gap.json"
    assert _run(["gap-scaling", "--sizes", "4,6", "--g", "2.0",
                 "--workers", "1", "--format", "json",
                 "--out", str(out)]) == cli.EXIT_OK
    payload = json.loads(out.read_text())
    assert payload["columns"] == ["L", "gap_abs_re", "is_complex_pair",
                                  "source"]
    assert len(payload["rows"]) == 2
    assert payload["footer"]["g"] == 2.0


def test_gap_scaling_csv_footer(tmp_path):
    out = tmp_path / "gap.csv"
    assert _run(["gap-scaling", "--sizes", "4,6", "--g", "2.0",
                 "--workers", "1", "--out", str(out)]) == cli.EXIT_OK
    lines = _read_lines(out)
    footer = {ln.split(" = ")[0][2:]: ln.split(" = ")[1]
              for ln in lines if ln.startswith("# ")}
    assert footer["g"] == "2"
    assert set(footer) == {"g", "fit_slope", "fit_intercept", "fit_rms"}


def test_homogeneous_command(tmp_path):
    out = tmp_path / "hom.csv"
    assert _run(["homogeneous", "--L", "3", "--omega", "1.0", "--g", "0.7",
                 "--out", str(out)]) == cli.EXIT_OK
    lines = _read_lines(out)
    assert lines[0] == "S,M,re_gamma,im_gamma,degeneracy,residual,source"
    assert all(ln.split(",")[-1] == "HOMOGENEOUS" for ln in lines[1:])


def test_transitions_writes_trace(tmp_path):
    out = tmp_path / "transitions.csv"
    assert _run(["transitions", "--L", "3", "--N", "3", "--g-grid", "0,2",
                 "--out", str(out)]) == cli.EXIT_OK
    lines = _read_lines(out)
    assert lines[0] == "label_a,label_b,g_star,gamma_star_re,source"
    assert len(lines) == 1 + 3
    trace = tmp_path / "transitions-trace.csv"
    assert trace.exists()
    assert _read_lines(trace)[0] == "g,label,j,re_q,re_q_over_g,im_q,source"


def test_report_renders_png(tmp_path):
    out = tmp_path / "spectrum.csv"
    assert _run(["spectrum", "--L", "3", "--N", "3", "--g", "1.0",
                 "--report", "--out", str(out)]) == cli.EXIT_OK
    png = tmp_path / "spectrum.png"
    assert png.exists() and png.stat().st_size > 0


def test_output_dir_env(tmp_path, monkeypatch):
    monkeypatch.setenv("OPENRG_OUTPUT_DIR", str(tmp_path))
    assert _run(["spectrum", "--L", "2", "--N", "2", "--g", "1.0",
                 "--out", "sub/spec.csv"]) == cli.EXIT_OK
    assert (tmp_path / "sub" / "spec.csv").exists()


def test_verify_passes_and_reports(tmp_path, capsys):
    assert _run(["verify", "--L", "2"]) == cli.EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    checks = [ln for ln in lines if ln.startswith(("PASS", "FAIL"))]
    assert checks and all(ln.startswith("PASS") for ln in checks)
    assert any(ln.startswith("OK") for ln in lines)
