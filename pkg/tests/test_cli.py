import csv
import io
import json

import pytest

from stencilblock.cli import main
from stencilblock.experiment import (
    ExperimentParseError,
    ExperimentValidationError,
    fixture_names,
    parse_experiment,
)
from stencilblock.report import ReportError, emit_report


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def write(tmp_path, doc, name="exp.json"):
    p = tmp_path / name
    p.write_text(doc if isinstance(doc, str) else json.dumps(doc))
    return str(p)


BASE = {"stencil": "diffusion2d", "device": "arria-10-gx-1150",
        "config": {"bsize_x": 4096, "par_vec": 8, "par_time": 36}, "dims": 16096, "iter": 1000}


def test_fixtures_shipped():
    names = fixture_names()
    assert len(names) >= 8
    for n in names:
        parse_experiment(n)


def test_parse_best_fixture():
    exp = parse_experiment("diffusion2d-a10-best")
    assert exp.config.to_dict() == {"bsize_x": 4096, "par_vec": 8, "par_time": 36}
    assert exp.dims == (16096, 16096)
    assert exp.f_max == pytest.approx(343.76e6)


def test_parse_rejects_par_vec_3(tmp_path):
    doc = {**BASE, "config": {"bsize_x": 4096, "par_vec": 3, "par_time": 36}}
    with pytest.raises(ExperimentValidationError) as e:
        parse_experiment(write(tmp_path, doc))
    assert any("par_vec_pow2" in p for p in e.value.problems)


def test_parse_empty_file(tmp_path):
    with pytest.raises(ExperimentParseError):
        parse_experiment(write(tmp_path, ""))


def test_parse_unknown_key(tmp_path):
    with pytest.raises(ExperimentValidationError, match="colour"):
        parse_experiment(write(tmp_path, {**BASE, "colour": "red"}))


def test_parse_unknown_nested_key(tmp_path):
    doc = {**BASE, "config": None, "search": {"max_bsize": 64, "max_par_vec": 4, "max_par_time": 4, "x": 1}}
    del doc["config"]
    with pytest.raises(ExperimentValidationError, match="search.x"):
        parse_experiment(write(tmp_path, doc))


@pytest.mark.parametrize("key, val", [("iter", 0), ("dims", [10]), ("calibration", 1.5),
                                      ("f_max", -3), ("seed", -1), ("dry_run", "yes")])
def test_parse_field_errors(tmp_path, key, val):
    with pytest.raises(ExperimentValidationError, match=key):
        parse_experiment(write(tmp_path, {**BASE, key: val}))


def test_parse_inline_stencil_and_device(tmp_path):
    exp = parse_experiment("hotspot3d-a10-best")
    doc = exp.to_dict()
    again = parse_experiment(write(tmp_path, doc))
    assert again == exp


def test_model_csv(capsys):
    code, out, _ = run(capsys, "model", "--experiment", "diffusion2d-a10-best", "--format", "csv")
    assert code == 0
    assert out.startswith("bsize,par_vec,par_time,dim,estimated_gbps,")
    row = next(csv.DictReader(io.StringIO(out)))
    assert row["estimated_gbps"] == "780.500"
    assert row["model_accuracy"] == "86.3"


def test_model_table_header(capsys):
    code, out, _ = run(capsys, "model", "--experiment", "diffusion3d-a10-best")
    assert code == 0
    assert "Estimated Performance (GB/s)" in out
    assert "379.230" in out


def test_fmax_override(capsys):
    _, out, _ = run(capsys, "model", "--experiment", "diffusion2d-a10-best", "--format", "json",
                    "--fmax", "300")
    doc = json.loads(out)
    assert doc["results"][0]["f_max_mhz"] == pytest.approx(300)
    assert doc["experiment"]["f_max"] == 300


def test_byte_stable(capsys):
    outs = {run(capsys, "tune", "--experiment", "diffusion3d-a10-tune", "--format", fmt)[1]
            for fmt in ("json", "json")}
    assert len(outs) == 1


def test_report_rerender(capsys, tmp_path):
    saved = tmp_path / "r.json"
    code, _, _ = run(capsys, "model", "--experiment", "hotspot2d-a10-best", "--format", "json",
                     "--out", str(saved))
    assert code == 0
    _, direct, _ = run(capsys, "model", "--experiment", "hotspot2d-a10-best", "--format", "csv")
    _, again, _ = run(capsys, "report", str(saved), "--format", "csv")
    assert again == direct


def test_report_round_trip(capsys, tmp_path):
    _, out, _ = run(capsys, "project", "--experiment", "diffusion2d-gx2800-projection", "--format", "json")
    saved = write(tmp_path, out, "report.json")
    assert parse_experiment(saved) == parse_experiment("diffusion2d-gx2800-projection")


def test_report_bad_input(capsys, tmp_path):
    assert run(capsys, "report", write(tmp_path, "{nope"))[0] == 2
    assert run(capsys, "report", str(tmp_path / "missing.json"))[0] == 2


def test_emulate_verify(capsys):
    code, out, _ = run(capsys, "emulate", "--experiment", "hotspot2d-small-emulate", "--format", "json")
    assert code == 0
    row = json.loads(out)["results"][0]
    assert row["verified"] is True
    assert row["ext_reads"] == row["passes"] * row["t_read"]
    assert row["seed"] == 42


def test_emulate_dry_run(capsys):
    code, out, _ = run(capsys, "emulate", "--experiment", "diffusion2d-a10-best", "--dry-run",
                       "--format", "json")
    row = json.loads(out)["results"][0]
    assert code == 0 and row["dry_run"] is True and row["verified"] is None
    assert row["ext_reads"] == 28 * 262_557_952


def test_emulate_mismatch_exit_code(capsys, tmp_path, monkeypatch):
    import stencilblock.cli as cli

    real = cli.reference_run

    def skewed(*a, **k):
        g = real(*a, **k)
        g.data[0, 0] += 1
        return g

    monkeypatch.setattr(cli, "reference_run", skewed)
    code, _, err = run(capsys, "emulate", "--experiment", "hotspot2d-small-emulate")
    assert code == 1
    assert "verification failed" in err


def test_project_and_tune(capsys):
    code, out, _ = run(capsys, "project", "--experiment", "diffusion3d-mx2100-projection", "--format", "csv")
    row = next(csv.DictReader(io.StringIO(out)))
    assert code == 0 and row["used_bw_pct"] == "80.0" and row["th_mem"] == "409.600"
    code, out, _ = run(capsys, "tune", "--experiment", "diffusion3d-a10-tune", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 6
    assert (rows[0]["bsize"], rows[0]["par_vec"], rows[0]["par_time"]) == ("256", "16", "12")


def test_calibration_flag(capsys):
    _, out, _ = run(capsys, "project", "--experiment", "diffusion2d-gx2800-projection",
                    "--calibration", "0.5", "--format", "json")
    assert json.loads(out)["results"][0]["calibration"] == 0.5


@pytest.mark.parametrize("argv, code", [
    (["project", "--calibration", "0"], 3),
    (["model", "--fmax", "-1"], 3),
])
def test_flag_validation(capsys, argv, code):
    assert run(capsys, argv[0], "--experiment", "diffusion2d-gx2800-projection", *argv[1:])[0] == code


def test_exit_codes(capsys, tmp_path):
    assert run(capsys, "model", "--experiment", write(tmp_path, ""))[0] == 2
    assert run(capsys, "model", "--experiment", "no-such-fixture")[0] == 2
    bad = {**BASE, "config": {"bsize_x": 4096, "par_vec": 3, "par_time": 36}}
    code, _, err = run(capsys, "model", "--experiment", write(tmp_path, bad))
    assert code == 3 and "par_vec_pow2" in err
    huge = {**BASE, "config": {"bsize_x": 4096, "par_vec": 16, "par_time": 72},
            "area": {"dsp_per_update": 5}}
    assert run(capsys, "model", "--experiment", write(tmp_path, huge))[0] == 4
    infeasible_proj = {"stencil": "diffusion3d", "device": "stratix-v-gx-a7", "dims": 738, "iter": 1000,
                       "config": {"bsize_x": 256, "bsize_y": 256, "par_vec": 8, "par_time": 5}}
    assert run(capsys, "project", "--experiment", write(tmp_path, infeasible_proj))[0] == 4


def test_emit_report_errors():
    with pytest.raises(ReportError):
        emit_report([], "csv")
    with pytest.raises(ReportError):
        emit_report([{"bsize": 1}], "xml")
