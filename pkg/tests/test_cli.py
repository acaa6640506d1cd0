import csv
import json

import numpy as np
import pytest

from weakpointer.cli import main, run_scenario, scan_scenario
from weakpointer.dynamics import CouplingSpec
from weakpointer.errors import ParseError
from weakpointer.pointer import PointerSpec, load_wavefunction
from weakpointer.scenario import (
    CSV_COLUMNS,
    RESULT_SCHEMA,
    load_result,
    load_scenario,
    parse_scenario,
    scenario_document,
    scenario_seed,
)

from conftest import unit

A = np.diag([0.0, 1.0, 2.0])
B = np.diag([0.0, 2.0, 1.0])
PRE = unit([1, 1j, 1 + 0.5j])
POST = unit([1, np.exp(1j * np.pi / 4), 0.3 - 1j])


def document(g=0.05, l=0, readouts=None, dims=2):
    spec = PointerSpec(l=l, sigma=1.0, grid_points=64, grid_extent=12.0, dims=dims)
    readouts = readouts or [
        {"meter": "X2", "method": "Exact"},
        {"meter": "X2", "method": "Perturbative"},
        {"meter": "XY", "method": "ClosedForm", "normalize_closed_form": None},
    ]
    return scenario_document(A, B, PRE, POST, spec, CouplingSpec.translation(g), readouts)


@pytest.fixture
def scenario_file(tmp_path):
    def write(doc, name="scenario.json"):
        path = tmp_path / name
        path.write_text(json.dumps(doc))
        return path

    return write


class TestScenarioParsing:
    def test_round_trip(self):
        sc = parse_scenario(document())
        assert sc.pointer.grid_points == 64
        assert sc.coupling == CouplingSpec.translation(0.05)
        assert [r.meter.tag for r in sc.readouts] == ["X2", "X2", "XY"]
        assert np.allclose(sc.sel.pre, PRE)

    def test_seed_is_content_hash(self):
        assert scenario_seed(document()) == scenario_seed(json.loads(json.dumps(document())))
        assert scenario_seed(document()) != scenario_seed(document(g=0.06))

    @pytest.mark.parametrize(
        "mutate, field",
        [
            (lambda d: d["system"]["A"][0].__setitem__(1, [1.0, 0.0]), "system.A"),
            (lambda d: d["system"]["pre"].__setitem__(0, [2.0, 0.0]), "system.pre"),
            (lambda d: d["system"]["B"][2].__setitem__(2, [1.0]), "system.B[2][2]"),
            (lambda d: d["pointer"].__setitem__("grid_points", 100), "pointer"),
            (lambda d: d["pointer"].pop("sigma"), "pointer.sigma"),
            (lambda d: d["coupling"].__setitem__("kind", "Rotation"), "coupling.kind"),
            (lambda d: d["coupling"].__setitem__("g_a", 0.1), "coupling"),
            (lambda d: d["readouts"].append({"meter": "X", "method": "ClosedForm"}), "readouts[3]"),
            (lambda d: d["readouts"].append({"meter": "Q"}), "readouts[3].meter"),
            (lambda d: d["readouts"][2].__setitem__("normalize_closed_form", "yes"),
             "readouts[2].normalize_closed_form"),
        ],
    )
    def test_errors_name_the_field(self, mutate, field):
        doc = document()
        mutate(doc)
        with pytest.raises(ParseError) as info:
            parse_scenario(doc)
        assert info.value.field == field

    def test_malformed_json_reports_position(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"system": [1, 2,,]}')
        with pytest.raises(ParseError) as info:
            load_scenario(path)
        assert info.value.field.startswith("line 1, column")


class TestRun:
    def test_zero_coupling_json(self, scenario_file, tmp_path, capsys):
        src = scenario_file(document(g=0.0, readouts=[{"meter": "X2", "method": "Exact"}]))
        out = tmp_path / "out.json"
        assert main(["run", "--scenario", str(src), "--out", str(out)]) == 0
        rec = load_result(out)
        assert rec["schema_version"] == RESULT_SCHEMA
        (reading,) = rec["readings"]
        assert reading["value"] == pytest.approx(1.0, abs=1e-12)
        assert reading["w"] == pytest.approx(1.0, abs=1e-14)
        assert reading["abs_delta_vs_exact"] is None
        assert set(rec["weak_values"]) == {"a_w", "b_w", "a2_w", "b2_w", "ab_w", "overlap"}

    def test_csv(self, scenario_file, tmp_path):
        out = tmp_path / "out.csv"
        assert main(["run", "--scenario", str(scenario_file(document())), "--out", str(out), "--format", "csv"]) == 0
        rows = list(csv.reader(out.open()))
        assert rows[0] == CSV_COLUMNS
        assert [r[2:4] for r in rows[1:]] == [["X2", "Exact"], ["X2", "Perturbative"], ["XY", "ClosedForm"]]
        assert rows[1][6] == "" and float(rows[2][6]) > 0

    def test_dump(self, scenario_file, tmp_path):
        out, dump = tmp_path / "out.json", tmp_path / "psi.txt"
        src = scenario_file(document())
        assert main(["run", "--scenario", str(src), "--out", str(out), "--dump", str(dump)]) == 0
        psi = load_wavefunction(dump)
        assert psi.spec.grid_points == 64
        assert psi.norm_sq() / abs(np.vdot(POST, PRE)) ** 2 == pytest.approx(load_result(out)["readings"][0]["w"])

    def test_bit_exact_repeat(self, scenario_file, tmp_path):
        src = scenario_file(document(l=1, readouts=[{"meter": "XY"}, {"meter": "XY", "method": "Perturbative"}]))
        outs = [tmp_path / f"r{i}.json" for i in range(2)]
        for o in outs:
            assert main(["run", "--scenario", str(src), "--out", str(o)]) == 0
        assert outs[0].read_bytes() == outs[1].read_bytes()
        rec = load_result(outs[0])
        assert rec["scenario"] == load_scenario(src).document

    def test_non_hermitian_exit_code(self, scenario_file, tmp_path, capsys):
        doc = document()
        doc["system"]["A"][0][1] = [1.0, 0.0]
        code = main(["run", "--scenario", str(scenario_file(doc)), "--out", str(tmp_path / "o.json")])
        assert code == 3
        assert "system.A" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert main(["run", "--scenario", str(tmp_path / "none.json"), "--out", str(tmp_path / "o.json")]) == 4

    def test_domain_error_exit_code(self, scenario_file, tmp_path):
        # shift guard: 2 * 2.0 > 12/4
        src = scenario_file(document(g=2.0))
        assert main(["run", "--scenario", str(src), "--out", str(tmp_path / "o.json")]) == 20


class TestScan:
    def test_g_scan_reports_third_order_slope(self, scenario_file, tmp_path, capsys):
        src = scenario_file(document(readouts=[{"meter": "X2"}, {"meter": "X2", "method": "Perturbative"}]))
        out = tmp_path / "scan.json"
        code = main(["scan", "--scenario", str(src), "--param", "g", "--values", "0.1,0.05,0.025,0.0125",
                     "--out", str(out)])
        assert code == 0
        result = json.loads(out.read_text())
        (fit,) = result["fits"]
        assert fit["kind"] == "loglog_slope_abs_delta" and fit["value"] >= 2.7
        assert "loglog_slope_abs_delta" in capsys.readouterr().out

    def test_l_scan_is_fitted_linearly(self, scenario_file, tmp_path):
        src = scenario_file(document(readouts=[{"meter": "XY", "method": "ClosedForm"}]))
        out = tmp_path / "scan.csv"
        assert main(["scan", "--scenario", str(src), "--param", "l", "--values=-1,0,1", "--out", str(out)]) == 0
        rows = list(csv.reader(out.open()))
        values = [float(r[4]) for r in rows[1:4]]
        fit = [r for r in rows if r[1] == "linear_slope_value"]
        assert len(fit) == 1
        assert float(fit[0][4]) == pytest.approx((values[2] - values[0]) / 2, rel=1e-12)

    def test_empty_values(self, scenario_file, tmp_path):
        src = scenario_file(document())
        assert main(["scan", "--scenario", str(src), "--param", "g", "--values", " , ", "--out",
                     str(tmp_path / "s.json")]) == 3
        with pytest.raises(ParseError):
            scan_scenario(load_scenario(src), "g", [])

    def test_param_not_in_coupling(self, scenario_file, tmp_path):
        src = scenario_file(document())
        assert main(["scan", "--scenario", str(src), "--param", "g_a", "--values", "0.1", "--out",
                     str(tmp_path / "s.json")]) == 3

    def test_order_is_independent_of_worker_count(self, scenario_file, monkeypatch):
        sc = load_scenario(scenario_file(document(readouts=[{"meter": "X2"}])))
        values = [0.08, 0.01, 0.05, 0.03, 0.02]
        monkeypatch.setenv("WEAKPOINTER_MAX_WORKERS", "1")
        serial = scan_scenario(sc, "g", values)
        monkeypatch.setenv("WEAKPOINTER_MAX_WORKERS", "4")
        parallel = scan_scenario(sc, "g", values)
        assert serial == parallel
        assert [r["record"]["scenario"]["coupling"]["g"] for r in parallel["rows"]] == values

    def test_scan_rows_match_single_runs(self, scenario_file):
        sc = load_scenario(scenario_file(document(readouts=[{"meter": "X2"}])))
        result = scan_scenario(sc, "sigma", [0.9, 1.1])
        assert result["rows"][1]["record"] == run_scenario(sc.with_param("sigma", 1.1))


class TestValidateCommand:
    def test_missing_fixture_directory(self, tmp_path):
        assert main(["validate", "--fixtures", str(tmp_path / "nowhere")]) == 4

    def test_unknown_filter(self, capsys):
        assert main(["validate", "--filter", "A9"]) == 3
        assert "A9" in capsys.readouterr().err

    def test_single_criterion(self, capsys):
        assert main(["validate", "--filter", "a7"]) == 0
        assert capsys.readouterr().out.startswith("A7 PASS")
