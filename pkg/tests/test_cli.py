"""Command-line interface tests: document shapes, figure files, exit
codes, and determinism. Everything runs in-process through cli.main."""

import json

import pytest

from flexcz.cli import main
from flexcz.schemas import validate_document


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def stderr_error(err: str) -> dict:
    doc = json.loads(err.strip().splitlines()[-1])
    assert set(doc) == {"error", "message"}
    return doc


def test_for_stdout(capsys, case4_path):
    code, out, err = run(capsys, "for", case4_path, "--horizon", "1")
    assert code == 0 and err == ""
    doc = json.loads(out)
    validate_document(doc, "for")
    assert doc["horizon"] == 1
    assert doc["selection"] == ["p_{1,2}(1)", "q_{1,2}(1)"]
    assert doc["cz"]["dim"] == 2
    assert out.count("\n") == 1  # single-line document


def test_for_out_file_and_figure(tmp_path, capsys, case4_path):
    target = tmp_path / "region.json"
    code, out, _ = run(capsys, "for", case4_path, "--horizon", "2",
                       "--out", target, "--plot-dirs", "24")
    assert code == 0 and out == ""
    validate_document(json.loads(target.read_text()), "for")
    png = target.with_suffix(".png")
    assert png.exists() and png.stat().st_size > 1000


def test_for_no_plot(tmp_path, capsys, case4_path):
    target = tmp_path / "region.json"
    code, _, _ = run(capsys, "for", case4_path, "--horizon", "1",
                     "--out", target, "--no-plot")
    assert code == 0
    assert target.exists()
    assert not target.with_suffix(".png").exists()


def test_for_deterministic_modulo_timings(capsys, case4_path):
    docs = []
    for _ in range(2):
        _, out, _ = run(capsys, "for", case4_path, "--horizon", "2")
        doc = json.loads(out)
        doc.pop("report")
        docs.append(json.dumps(doc, sort_keys=True))
    assert docs[0] == docs[1]


def test_for_unknown_dynamic_tag(capsys, case4_path):
    code, _, err = run(capsys, "for", case4_path, "--dynamic", "bogus")
    assert code == 2
    assert stderr_error(err)["error"] == "schema"


def test_missing_case_file(capsys):
    code, _, err = run(capsys, "for", "/no/such/file.json")
    assert code == 2
    assert stderr_error(err)["error"] == "schema"


def test_compare_within_tolerance(capsys, case4_path):
    code, out, _ = run(capsys, "compare", case4_path, "--horizon", "1",
                       "--dirs", "90", "--no-plot")
    assert code == 0
    doc = json.loads(out)
    assert doc["within_tol"] is True
    assert doc["max_rel_mismatch"] <= 1e-6
    assert doc["fm_rows"] == 3


def test_compare_mismatch_exit_code(capsys, case4_path):
    code, out, err = run(capsys, "compare", case4_path, "--horizon", "1",
                         "--dirs", "16", "--tol", "1e-20", "--no-plot")
    assert code == 5
    assert json.loads(out)["within_tol"] is False  # report still emitted
    assert stderr_error(err)["error"] == "mismatch"


def test_compare_overlay_figure(tmp_path, capsys, case4_path):
    target = tmp_path / "cmp.json"
    code, _, _ = run(capsys, "compare", case4_path, "--horizon", "1",
                     "--dirs", "32", "--plot-dirs", "60", "--out", target)
    assert code == 0
    assert target.with_suffix(".png").exists()


def test_compare_row_cap(capsys, case4_path):
    code, _, err = run(capsys, "compare", case4_path, "--horizon", "3",
                       "--row-cap", "5", "--no-plot")
    assert code == 6
    assert stderr_error(err)["error"] == "row_cap"


def test_bench_csv(capsys, case4_path):
    code, out, _ = run(capsys, "bench", case4_path, "--horizons", "1,2",
                       "--repeats", "2", "--fm", "--no-plot")
    assert code == 0
    lines = out.strip().splitlines()
    header = lines[0].split(",")
    assert header[:5] == ["horizon", "offline_s", "online_s",
                          "projection_s", "total_s"]
    assert len(lines) == 3
    first = dict(zip(header, lines[1].split(",")))
    assert first["horizon"] == "1"
    assert float(first["offline_s"]) > 0.0
    assert float(first["speedup_total"]) > 0.0


def test_bench_json_and_figure(tmp_path, capsys, case4_path):
    target = tmp_path / "bench.json"
    code, _, _ = run(capsys, "bench", case4_path, "--horizons", "1,2",
                     "--repeats", "1", "--fm", "--out", target)
    assert code == 0
    doc = json.loads(target.read_text())
    validate_document(doc, "bench")
    assert [row["horizon"] for row in doc["rows"]] == [1, 2]
    assert target.with_suffix(".png").exists()


def test_bench_rejects_bad_horizons(capsys, case4_path):
    code, _, err = run(capsys, "bench", case4_path, "--horizons", "two")
    assert code == 2
    assert stderr_error(err)["error"] == "schema"


def test_slice_full_document_round_trip(tmp_path, capsys, case4_path):
    region = tmp_path / "region.json"
    run(capsys, "for", case4_path, "--horizon", "2", "--out", region,
        "--no-plot")
    target = tmp_path / "cut.json"
    code, _, _ = run(capsys, "slice", region,
                     "--at", "p_{1,2}(1)=0.05",
                     "--axes", "p_{1,2}(2),q_{1,2}(2)",
                     "--dirs", "120", "--out", target)
    assert code == 0
    doc = json.loads(target.read_text())
    validate_document(doc, "slice")
    assert doc["axes"] == ["p_{1,2}(2)", "q_{1,2}(2)"]
    assert doc["area"] > 0.0
    assert target.with_suffix(".png").exists()


def test_slice_without_at_gives_projection(tmp_path, capsys, case4_path):
    region = tmp_path / "region.json"
    run(capsys, "for", case4_path, "--horizon", "1", "--out", region,
        "--no-plot")
    code, out, _ = run(capsys, "slice", region, "--dirs", "90")
    assert code == 0
    cut = json.loads(out)
    assert cut["area"] == pytest.approx(0.16842105263157892, rel=1e-6)


def test_slice_value_outside_interval(tmp_path, capsys, case4_path):
    region = tmp_path / "region.json"
    run(capsys, "for", case4_path, "--horizon", "2", "--out", region,
        "--no-plot")
    code, _, err = run(capsys, "slice", region, "--at", "p_{1,2}(1)=99")
    assert code == 3
    assert stderr_error(err)["error"] == "infeasible"


def test_slice_unknown_axis(tmp_path, capsys, case4_path):
    region = tmp_path / "region.json"
    run(capsys, "for", case4_path, "--horizon", "2", "--out", region,
        "--no-plot")
    code, _, err = run(capsys, "slice", region, "--axes", "foo,bar")
    assert code == 2
    assert stderr_error(err)["error"] == "schema"


def test_convert_cube(capsys):
    from conftest import case_path

    code, out, _ = run(capsys, "convert", case_path("cube3.json"))
    assert code == 0
    doc = json.loads(out)
    validate_document(doc, "cz")
    assert doc["dim"] == 3
    assert doc["n_g"] == 9  # 3 box generators + 6 halfspace rows


def test_convert_accepts_cz_output_in_slice(tmp_path, capsys):
    from conftest import case_path

    cz_file = tmp_path / "cube.json"
    code, _, _ = run(capsys, "convert", case_path("cube3.json"),
                     "--out", cz_file)
    assert code == 0
    code, out, _ = run(capsys, "slice", cz_file, "--at", "x3=0.0",
                       "--dirs", "60")
    assert code == 0
    doc = json.loads(out)
    assert doc["axes"] == ["x1", "x2"]
    assert doc["area"] == pytest.approx(4.0, rel=1e-6)


def test_convert_unbounded_polytope(tmp_path, capsys):
    doc = {"schema": "flexcz-poly/1", "dim": 2,
           "A_ineq": [1.0, 0.0, 0.0, 1.0], "b_ineq": [1.0, 1.0],
           "names": ["x", "y"]}
    path = tmp_path / "open.json"
    path.write_text(json.dumps(doc))
    code, _, err = run(capsys, "convert", path)
    assert code == 3
    assert stderr_error(err)["error"] == "infeasible"
