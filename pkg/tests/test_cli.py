import csv
import json

import pytest

from quadsub import catalog, cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


def test_analyze_harmonic(capsys):
    code, rep = run(capsys, "analyze", "--catalog", "harmonic", "--no-timing")
    assert code == 0
    assert rep["results"]["k0"] == 0 and rep["results"]["dim_S"] == 0
    assert rep["schema_version"] == cli.SCHEMA_VERSION
    assert "timings" not in rep


def test_analyze_degenerate_exit_3(capsys):
    code, rep = run(capsys, "analyze", "--catalog", "degenerate", "--no-timing")
    assert code == 3
    assert rep["results"]["dim_S"] == 2 and rep["results"]["error"] == "SingularSpaceNonTrivial"


def test_analyze_symbol_file(tmp_path, capsys):
    path = tmp_path / "kfp.json"
    path.write_text(json.dumps(catalog.kfp().to_json()))
    code, rep = run(capsys, "analyze", str(path), "--no-timing")
    assert code == 0 and rep["results"]["k0"] == 1 and rep["results"]["ranks"] == [2, 4, 4, 4]


@pytest.mark.parametrize("content", ["{bad", '{"n": 1}', '{"n": 1, "Q_re": [[-1, 0], [0, 1]]}'])
def test_parse_errors_exit_2(tmp_path, capsys, content):
    path = tmp_path / "s.json"
    path.write_text(content)
    assert cli.main(["analyze", str(path)]) == 2


def test_usage_errors_exit_2(capsys):
    assert cli.main(["analyze"]) == 2
    assert cli.main(["analyze", "--catalog", "nope"]) == 2
    assert cli.main(["frobnicate"]) == 2
    assert cli.main(["flow", "--catalog", "davies", "--tmin", "-1"]) == 2
    assert cli.main(["galerkin", "--catalog", "davies", "--nbuild", "20", "--nobs", "15"]) == 2


def test_flow_davies(capsys, tmp_path):
    out_csv = tmp_path / "flow.csv"
    code, rep = run(capsys, "flow", "--catalog", "davies", "--points", "8", "--no-timing",
                    "--csv", str(out_csv))
    assert code == 0 and rep["all_pass"]
    names = [c["name"] for c in rep["checks"]]
    assert names == ["averaged-form-min-eig-slope", "averaged-form-min-eig-slope-reversed"]
    rows = list(csv.DictReader(out_csv.open()))
    assert len(rows) == 8 and set(rows[0]) == {"t", "lambda_min", "lambda_min_reversed"}


def test_weight_closed_form(capsys):
    code, rep = run(capsys, "weight", "--catalog", "harmonic", "--closed-form", "--no-timing")
    assert code == 0 and rep["all_pass"]
    by_name = {c["name"]: c for c in rep["checks"]}
    assert by_name["weight-closed-form-agreement"]["measured"] <= 1e-8


def test_weight_closed_form_rejects_complex(capsys):
    assert cli.main(["weight", "--catalog", "davies", "--closed-form"]) == 2


def test_galerkin_subelliptic(capsys):
    code, rep = run(capsys, "galerkin", "--catalog", "davies", "--check", "subelliptic",
                    "--lambda", "0,1,10", "--nobs", "40", "--no-timing")
    assert code == 0 and rep["all_pass"]


def test_not_converged_exit_4(capsys, tmp_path, monkeypatch):
    from quadsub.errors import QuadratureNotConverged
    calls = {"n": 0}
    real = cli.averaged_form

    def flaky(q, t, reverse=False):
        calls["n"] += 1
        if calls["n"] > 6:
            raise QuadratureNotConverged("forced")
        return real(q, t, reverse)

    monkeypatch.setattr(cli, "averaged_form", flaky)
    out_csv = tmp_path / "partial.csv"
    code, rep = run(capsys, "flow", "--catalog", "davies", "--csv", str(out_csv), "--no-timing")
    assert code == 4 and rep["results"]["error"] == "QuadratureNotConverged"
    assert len(list(csv.DictReader(out_csv.open()))) == 3


def test_deterministic_output(tmp_path, monkeypatch):
    paths = []
    for threads in ("1", "3"):
        monkeypatch.setenv("QUADSUB_THREADS", threads)
        p = tmp_path / f"r{threads}.json"
        assert cli.main(["galerkin", "--catalog", "davies", "--check", "subelliptic",
                         "--nobs", "30", "--lambda=-1,0,1", "--no-timing", "--json", str(p)]) == 0
        paths.append(p)
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_json_written_atomically(tmp_path):
    target = tmp_path / "report.json"
    assert cli.main(["analyze", "--catalog", "kfp", "--json", str(target)]) == 0
    assert json.loads(target.read_text())["results"]["k0"] == 1
    assert [p.name for p in tmp_path.iterdir()] == ["report.json"]


def test_check_entry_semantics():
    assert cli.check("a", 3.05, 3, 0.1)["pass"]
    assert not cli.check("a", 3.2, 3, 0.1)["pass"]
    assert cli.check("b", 1e-9, 0, 1e-8, kind="upper-bound")["pass"]
    assert not cli.check("c", -1e-3, 0, 0, kind="lower-bound")["pass"]
    with pytest.raises(ValueError):
        cli.check("d", 0, 0, 0, kind="sideways")


def test_csv_headers_snake_case():
    text = cli.rows_to_csv([{"t": 0.5, "norm_k1": 2.0}, {"t": 1.0, "norm_k2": 3.0}])
    assert text.splitlines()[0] == "t,norm_k1,norm_k2"
    assert cli.rows_to_csv([]) == ""


@pytest.mark.slow
def test_all_harmonic(capsys):
    code, rep = run(capsys, "all", "--catalog", "harmonic", "--no-timing")
    assert code == 0 and rep["all_pass"]
