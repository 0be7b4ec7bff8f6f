import json
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from formflow import __version__
from formflow.cli import SpecError, load_spec, main, run, spec_from_dict

FIXTURES = Path(__file__).parent / "fixtures"


def staged(tmp_path, name):
    """Copy a fixture spec into ``tmp_path`` so its outputs land there."""
    dst = tmp_path / name
    shutil.copy(FIXTURES / name, dst)
    return dst


def write_spec(tmp_path, doc, name="spec.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path


def analyze(path, capsys, *extra):
    code = main(["analyze", str(path), *extra])
    out, err = capsys.readouterr()
    return code, out, err


CHARACTERISTICS = {
    "kind": "characteristics",
    "chart": {"coordinates": ["x1", "x2"]},
    "expressions": {"F": "p1 + 2*p2"},
    "parameters": {"start": {"x": [0, 0], "u": 5, "p": [-2, 1]}, "ds": 0.01, "steps": 100},
}


def test_load_valid_characteristics_spec(tmp_path):
    spec = load_spec(write_spec(tmp_path, CHARACTERISTICS))
    assert spec.kind == "characteristics"
    assert spec.seed == 0
    assert str(spec.expressions["F"]) == "p1 + 2 * p2"


@pytest.mark.parametrize("mutate, field, reason", [
    (lambda d: d["parameters"].update(tolerance=-1), "parameters.tolerance", "tolerances > 0"),
    (lambda d: d.update(kind="nonsense"), "kind", "must be one of"),
    (lambda d: d["parameters"].pop("ds"), "parameters.ds", "required"),
    (lambda d: d["parameters"]["start"].update(x=[0]), "parameters.start.x", "2 numbers"),
    (lambda d: d.update(seed=-3), "seed", "non-negative"),
])
def test_schema_violations(tmp_path, mutate, field, reason):
    doc = json.loads(json.dumps(CHARACTERISTICS))
    mutate(doc)
    with pytest.raises(SpecError) as info:
        load_spec(write_spec(tmp_path, doc))
    assert info.value.field == field
    assert reason in str(info.value)


def test_expression_syntax_error_has_offset(tmp_path):
    doc = json.loads(json.dumps(CHARACTERISTICS))
    doc["expressions"]["F"] = "p1 + * p2"
    with pytest.raises(SpecError) as info:
        load_spec(write_spec(tmp_path, doc))
    assert info.value.field == "expressions.F"
    assert "offset 5" in str(info.value)


def test_maxwell_resolution_floor():
    doc = {
        "kind": "maxwell-check",
        "expressions": {"E": ["0", "0", "0"], "B": ["0", "0", "1"]},
        "parameters": {"bounds": [[0, 1]] * 4, "resolutions": [4, 8], "tolerance": 1e-12},
    }
    with pytest.raises(SpecError, match="resolutions >= 5"):
        spec_from_dict(doc)


def test_missing_and_malformed_files(tmp_path, capsys):
    code, _, err = analyze(tmp_path / "nope.json", capsys)
    assert code == 2 and "file not found" in err
    bad = tmp_path / "bad.json"
    bad.write_bytes(b"\xff\xfe{")
    code, _, err = analyze(bad, capsys)
    assert code == 2 and "UTF-8" in err
    bad.write_text("{ not json", encoding="utf-8")
    code, _, err = analyze(bad, capsys)
    assert code == 2 and "invalid JSON" in err


def test_exit_status_classes(tmp_path, capsys):
    code, out, _ = analyze(staged(tmp_path, "exit0_transport.json"), capsys)
    assert code == 0
    assert "check first_integral  : PASS  max |F| 0 (tol 1e-12)" in out
    assert (tmp_path / "transport_strip.csv").exists()

    code, out, _ = analyze(staged(tmp_path, "exit1_rotation.json"), capsys)
    assert code == 1
    assert "FAIL  nonidentical, measure 2\n" in out

    code, out, err = analyze(staged(tmp_path, "exit2_bad_tolerance.json"), capsys)
    assert code == 2 and out == ""
    assert "parameters.tolerance: tolerances > 0" in err


def test_operational_error_names_the_check(tmp_path, capsys):
    doc = {
        "kind": "hamilton",
        "expressions": {"H": "p^2/2 + 1/q"},
        "parameters": {"q0": [0], "p0": [1], "dt": 0.1, "steps": 3},
    }
    code, _, err = analyze(write_spec(tmp_path, doc), capsys)
    assert code == 2
    assert err.startswith("error: hamilton:")


def test_reports_and_csvs_are_byte_identical(tmp_path, capsys):
    spec = staged(tmp_path, "plane_wave.json")
    _, first, _ = analyze(spec, capsys)
    csv1 = (tmp_path / "plane_wave_residuals.csv").read_bytes()
    _, second, _ = analyze(spec, capsys)
    csv2 = (tmp_path / "plane_wave_residuals.csv").read_bytes()
    assert first == second and csv1 == csv2
    assert "elapsed" not in first


def test_plane_wave_ratio_report(tmp_path, capsys):
    code, out, _ = analyze(staged(tmp_path, "plane_wave.json"), capsys)
    assert code == 0
    line = next(l for l in out.splitlines() if l.startswith("check convergence_ratio"))
    closed = float(line.split("closed ")[1].split(",")[0])
    assert abs(closed - 4) <= 0.8
    rows = (tmp_path / "plane_wave_residuals.csv").read_text().splitlines()
    assert rows[0] == "resolution,h,closed_residual,dual_residual"
    assert [r.split(",")[0] for r in rows[1:]] == ["16", "32"]


def test_report_lines_are_aligned(tmp_path, capsys):
    _, out, _ = analyze(staged(tmp_path, "exit0_transport.json"), capsys)
    cols = {line.index(" : ") for line in out.splitlines()}
    assert len(cols) == 1


def test_timing_flag(tmp_path, capsys):
    _, out, _ = analyze(staged(tmp_path, "exit0_transport.json"), capsys, "--timing")
    assert "elapsed_s" in out


def test_seed_override(tmp_path, capsys, monkeypatch):
    doc = {
        "kind": "pde-analysis",
        "chart": {"coordinates": ["x1", "x2"]},
        "expressions": {"p": ["x1*x2^2", "x1"], "F": "p1*p2 - u"},
        "parameters": {"bounds": [[-1, 1], [-1, 1]], "samples": 5},
        "outputs": {"csv": "samples.csv"},
    }
    spec = write_spec(tmp_path, doc)
    analyze(spec, capsys)
    base = (tmp_path / "samples.csv").read_text()
    monkeypatch.setenv("FORMFLOW_SEED", "7")
    _, out, _ = analyze(spec, capsys)
    assert "seed" in out and ": 7\n" in out
    assert (tmp_path / "samples.csv").read_text() != base
    monkeypatch.setenv("FORMFLOW_SEED", "0")
    analyze(spec, capsys)
    assert (tmp_path / "samples.csv").read_text() == base
    monkeypatch.setenv("FORMFLOW_SEED", "x")
    code, _, err = analyze(spec, capsys)
    assert code == 2 and "FORMFLOW_SEED" in err


def test_validate_and_version(tmp_path, capsys):
    assert main(["validate", str(write_spec(tmp_path, CHARACTERISTICS))]) == 0
    assert "valid characteristics spec" in capsys.readouterr().out
    assert main(["validate", str(staged(tmp_path, "exit2_bad_tolerance.json"))]) == 2
    capsys.readouterr()
    assert main(["version"]) == 0
    assert capsys.readouterr().out == f"formflow {__version__}\n"


def test_every_kind_runs(tmp_path):
    docs = [
        CHARACTERISTICS,
        {"kind": "pde-analysis", "chart": {"coordinates": ["x", "y"]},
         "expressions": {"p": ["y", "x"]}, "parameters": {"bounds": [[-1, 1], [-1, 1]]}},
        {"kind": "hamilton", "expressions": {"H": "p^2/2", "s": "q^2/(2*t)"},
         "parameters": {"q0": [0], "p0": [2], "dt": 0.01, "steps": 100,
                        "hj_bounds": [[0.5, 2], [-1, 1]]}},
        {"kind": "maxwell-check", "expressions": {"E": ["0", "0", "0"], "B": ["0", "0", "1"]},
         "parameters": {"bounds": [[0, 1]] * 4, "resolutions": [6], "tolerance": 1e-12}},
        {"kind": "evolution", "chart": {"coordinates": ["x", "y"], "pseudostructure": {
            "parameters": ["tau"], "map": ["tau", "tau"], "bounds": [[0, 2]]}},
         "expressions": {"omega": ["y", "x"], "determinant": "x - y"},
         "parameters": {"bounds": [[-1, 1.05], [-1, 1]], "resolution": 16}},
    ]
    for doc in docs:
        report = run(spec_from_dict(doc))
        assert report.exit_status == 0, report.render()


def test_maxwell_from_csv(tmp_path, capsys):
    from formflow.maxwell import SpacetimeGrid, assemble_from_EB, write_field_csv
    g = SpacetimeGrid.from_bounds([[0, 1]] * 4, 6)
    write_field_csv(tmp_path / "field.csv", assemble_from_EB(g, [1, 0, 0], [0, 2, 0]))
    spec = write_spec(tmp_path, {"kind": "maxwell-check",
                                 "parameters": {"input_csv": "field.csv", "tolerance": 1e-12}})
    code, out, _ = analyze(spec, capsys)
    assert code == 0 and "physical_structure" in out


def test_console_entry_point(tmp_path):
    spec = staged(tmp_path, "exit1_rotation.json")
    proc = subprocess.run([sys.executable, "-m", "formflow", "analyze", str(spec)],
                          capture_output=True, text=True)
    assert proc.returncode == 1
    assert "nonidentical, measure 2" in proc.stdout
