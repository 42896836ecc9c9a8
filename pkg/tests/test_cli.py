"""End-to-end tests of the command-line interface.

Everything runs in-process through cli.main(argv) so the suite stays fast;
the commands write real files into tmp_path.
"""

import json
import math
from pathlib import Path

import numpy as np
import pytest

from polsarbench import cli
from polsarbench.cli import main, parse_matrix, parse_scenario
from polsarbench.model import CoherencyMatrix


BASE_SCENARIO = {
    "epsilon_soil": 16.0,
    "theta_deg": 35.0,
    "psi_d_deg": 12.0,
    "psi_s_deg": -6.0,
    "alpha": {"re": 0.45, "im": 0.25},
    "fractions": {"volume": 0.35, "surface": 0.33, "double": 0.32},
    "span": 1.0,
    "looks": 49,
    "trials": 8,
    "seed": 7,
    "fit": {"n_random_starts": 4},
}


def write_scenario(tmp_path: Path, overrides=None, drop=(), name="scen.json") -> Path:
    doc = {k: v for k, v in BASE_SCENARIO.items() if k not in drop}
    if overrides:
        doc.update(overrides)
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


class TestParseScenario:
    def test_minimal_file_gets_defaults(self, tmp_path, capsys):
        path = tmp_path / "min.json"
        path.write_text(
            json.dumps(
                {
                    "epsilon_soil": 5.0,
                    "theta_deg": 45.0,
                    "fractions": {"volume": 1.0, "surface": 0.0, "double": 0.0},
                }
            )
        )
        scenario, config = parse_scenario(path)
        assert scenario.psi_d_deg == 0.0
        assert scenario.psi_s_deg == 0.0
        assert scenario.span == 1.0
        assert scenario.alpha_spec is None
        assert config.looks == 49
        assert config.trials == 1000
        assert config.seed == 0
        assert "notice" in capsys.readouterr().err

    def test_fraction_sum_error_names_fractions(self, tmp_path):
        path = write_scenario(
            tmp_path,
            {"fractions": {"volume": 0.3, "surface": 0.3, "double": 0.3}},
        )
        with pytest.raises(ValueError, match="fractions"):
            parse_scenario(path)

    def test_unknown_top_level_key(self, tmp_path):
        path = write_scenario(tmp_path, {"wavelength": 0.05})
        with pytest.raises(ValueError, match="unknown key 'wavelength'"):
            parse_scenario(path)

    def test_unknown_fit_key(self, tmp_path):
        path = write_scenario(tmp_path, {"fit": {"n_starts": 3}})
        with pytest.raises(ValueError, match="fit: unknown key 'n_starts'"):
            parse_scenario(path)

    def test_alpha_mixed_forms_rejected(self, tmp_path):
        path = write_scenario(tmp_path, {"alpha": {"re": 0.3, "epsilon_trunk": 9.0}})
        with pytest.raises(ValueError, match="alpha"):
            parse_scenario(path)

    def test_alpha_dihedral_form(self, tmp_path):
        path = write_scenario(
            tmp_path, {"alpha": {"epsilon_trunk": 9.0, "phase_deg": 170.0}}
        )
        scenario, _ = parse_scenario(path)
        assert scenario.alpha_spec.epsilon_trunk == 9.0
        assert scenario.alpha_spec.phase_deg == 170.0

    def test_boolean_is_not_a_number(self, tmp_path):
        path = write_scenario(tmp_path, {"span": True})
        with pytest.raises(ValueError, match="span"):
            parse_scenario(path)

    def test_missing_required_key(self, tmp_path):
        path = write_scenario(tmp_path, drop=("theta_deg",))
        with pytest.raises(ValueError, match="theta_deg"):
            parse_scenario(path)

    def test_malformed_json_is_a_validation_error(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ValueError, match="JSON"):
            parse_scenario(path)

    def test_fit_overrides_reach_options(self, tmp_path):
        path = write_scenario(
            tmp_path,
            {"fit": {"n_random_starts": 3, "cost_tolerance": 1e-20, "fix_imag_alpha": True}},
        )
        _, config = parse_scenario(path)
        assert config.fit.n_random_starts == 3
        assert config.fit.cost_tolerance == 1e-20
        assert config.fit.fix_imag_alpha is True


class TestParseMatrix:
    def test_round_trip(self, tmp_path):
        comps = np.array([1.0, 0.5, 0.25, 0.1, -0.05, 0.02, 0.01, -0.03, 0.0])
        t = CoherencyMatrix.from_components(comps)
        path = tmp_path / "t.json"
        path.write_text(json.dumps(cli.matrix_to_dict(t)))
        back = parse_matrix(path)
        np.testing.assert_allclose(back.components(), comps, rtol=0, atol=0)

    def test_missing_key(self, tmp_path):
        comps = np.array([1.0, 0.5, 0.25, 0.1, -0.05, 0.02, 0.01, -0.03, 0.0])
        doc = cli.matrix_to_dict(CoherencyMatrix.from_components(comps))
        del doc["t23_im"]
        path = tmp_path / "t.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(ValueError, match="t23_im"):
            parse_matrix(path)

    def test_unknown_key(self, tmp_path):
        comps = np.array([1.0, 0.5, 0.25, 0.1, -0.05, 0.02, 0.01, -0.03, 0.0])
        doc = cli.matrix_to_dict(CoherencyMatrix.from_components(comps))
        doc["t31_re"] = 0.0
        path = tmp_path / "t.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(ValueError, match="t31_re"):
            parse_matrix(path)


class TestExitCodes:
    def test_validation_error_is_1(self, tmp_path, capsys):
        path = write_scenario(
            tmp_path, {"fractions": {"volume": 0.3, "surface": 0.3, "double": 0.3}}
        )
        assert main(["simulate", "--scenario", str(path)]) == 1
        err = capsys.readouterr().err
        assert "fractions" in err

    def test_missing_file_is_2(self, tmp_path, capsys):
        assert main(["simulate", "--scenario", str(tmp_path / "nope.json")]) == 2

    def test_success_is_0(self, tmp_path, capsys):
        path = write_scenario(tmp_path)
        assert main(["simulate", "--scenario", str(path)]) == 0

    def test_unknown_flag_is_1(self, tmp_path, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["simulate", "--bogus"])
        assert exc.value.code == 1


class TestSimulateInvert:
    def test_round_trip_cost_near_zero(self, tmp_path, capsys):
        scen = write_scenario(tmp_path)
        t_path = tmp_path / "t.json"
        assert main(["simulate", "--scenario", str(scen), "--out", str(t_path)]) == 0
        capsys.readouterr()
        assert (
            main(["invert", "--matrix", str(t_path), "--json", "--starts", "4"]) == 0
        )
        result = json.loads(capsys.readouterr().out)
        assert result["converged"] is True
        assert result["cost"] <= 1e-20
        # complex alpha: the scene is fully identifiable, so parameters match
        assert math.isclose(result["params"]["f_v"], 0.35, rel_tol=1e-6)
        assert math.isclose(result["params"]["alpha_re"], 0.45, rel_tol=1e-6)
        assert math.isclose(result["params"]["alpha_im"], 0.25, rel_tol=1e-6)
        assert math.isclose(result["params"]["psi_d_deg"], 12.0, rel_tol=1e-6)

    def test_simulate_stdout_is_valid_matrix_json(self, tmp_path, capsys):
        scen = write_scenario(tmp_path)
        assert main(["simulate", "--scenario", str(scen)]) == 0
        out = capsys.readouterr().out
        doc = json.loads(out)
        assert sorted(doc) == sorted(cli._MATRIX_KEYS)

    def test_fix_imag_alpha_flag(self, tmp_path, capsys):
        scen = write_scenario(tmp_path)
        t_path = tmp_path / "t.json"
        main(["simulate", "--scenario", str(scen), "--out", str(t_path)])
        capsys.readouterr()
        assert (
            main(
                [
                    "invert",
                    "--matrix",
                    str(t_path),
                    "--json",
                    "--fix-imag-alpha",
                    "--starts",
                    "4",
                ]
            )
            == 0
        )
        result = json.loads(capsys.readouterr().out)
        assert result["params"]["alpha_im"] == 0.0


class TestSample:
    def test_count_and_keys(self, tmp_path, capsys):
        scen = write_scenario(tmp_path)
        out = tmp_path / "samples.json"
        assert (
            main(
                ["sample", "--scenario", str(scen), "--count", "3", "--out", str(out)]
            )
            == 0
        )
        doc = json.loads(out.read_text())
        assert len(doc) == 3
        assert all(sorted(d) == sorted(cli._MATRIX_KEYS) for d in doc)

    def test_deterministic(self, tmp_path, capsys):
        scen = write_scenario(tmp_path)
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        main(["sample", "--scenario", str(scen), "--count", "2", "--out", str(a)])
        main(["sample", "--scenario", str(scen), "--count", "2", "--out", str(b)])
        assert a.read_bytes() == b.read_bytes()

    def test_seed_flag_changes_samples(self, tmp_path, capsys):
        scen = write_scenario(tmp_path)
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        main(["sample", "--scenario", str(scen), "--count", "1", "--out", str(a)])
        main(
            [
                "sample",
                "--scenario",
                str(scen),
                "--count",
                "1",
                "--seed",
                "99",
                "--out",
                str(b),
            ]
        )
        assert a.read_bytes() != b.read_bytes()


class TestBench:
    def run_bench(self, tmp_path, out_name, extra=()):
        scen = write_scenario(tmp_path)
        out_dir = tmp_path / out_name
        code = main(
            [
                "bench",
                "--scenario",
                str(scen),
                "--out",
                str(out_dir),
                "--threads",
                "1",
                "--no-figures",
                *extra,
            ]
        )
        assert code == 0
        return out_dir

    def test_artifacts_exist(self, tmp_path, capsys):
        out_dir = self.run_bench(tmp_path, "bench")
        assert (out_dir / "meta.json").exists()
        assert (out_dir / "records.csv").exists()
        assert (out_dir / "summary.csv").exists()
        hist = sorted(p.name for p in (out_dir / "histograms").glob("*.csv"))
        assert "p_d_pct.csv" in hist
        assert "f_v.csv" in hist

    def test_records_shape_and_format(self, tmp_path, capsys):
        out_dir = self.run_bench(tmp_path, "bench")
        lines = (out_dir / "records.csv").read_text().splitlines()
        assert lines[0].split(",") == cli._RECORDS_HEADER
        assert len(lines) == 1 + BASE_SCENARIO["trials"]
        first = lines[1].split(",")
        assert first[0] == "0"
        assert first[1] in {"0", "1"}
        # every float cell survives a parse and respects 9 significant digits
        for cell in first[2:]:
            float(cell)
            if "." in cell:
                digits = cell.replace("-", "").replace(".", "").split("e")[0].lstrip("0")
                assert len(digits) <= 9

    def test_rerun_is_byte_identical(self, tmp_path, capsys):
        d1 = self.run_bench(tmp_path, "b1")
        d2 = self.run_bench(tmp_path, "b2")
        for name in ("meta.json", "records.csv", "summary.csv"):
            assert (d1 / name).read_bytes() == (d2 / name).read_bytes()

    def test_threads_do_not_change_outputs(self, tmp_path, capsys):
        scen = write_scenario(tmp_path)
        dirs = []
        for threads in ("1", "3"):
            out_dir = tmp_path / f"t{threads}"
            assert (
                main(
                    [
                        "bench",
                        "--scenario",
                        str(scen),
                        "--out",
                        str(out_dir),
                        "--threads",
                        threads,
                        "--no-figures",
                    ]
                )
                == 0
            )
            dirs.append(out_dir)
        assert (dirs[0] / "records.csv").read_bytes() == (
            dirs[1] / "records.csv"
        ).read_bytes()

    def test_env_var_sets_threads(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv(cli.THREADS_ENV_VAR, "2")
        out_env = self.run_bench(tmp_path, "benv", extra=())
        # the env run used 2 workers; compare against an explicit single thread
        scen = write_scenario(tmp_path)
        out_one = tmp_path / "bone"
        monkeypatch.delenv(cli.THREADS_ENV_VAR)
        main(
            [
                "bench",
                "--scenario",
                str(scen),
                "--out",
                str(out_one),
                "--threads",
                "1",
                "--no-figures",
            ]
        )
        assert (out_env / "records.csv").read_bytes() == (
            out_one / "records.csv"
        ).read_bytes()

    def test_env_var_must_be_integer(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv(cli.THREADS_ENV_VAR, "two")
        scen = write_scenario(tmp_path)
        assert (
            main(
                [
                    "bench",
                    "--scenario",
                    str(scen),
                    "--out",
                    str(tmp_path / "x"),
                    "--no-figures",
                ]
            )
            == 1
        )

    def test_meta_has_no_timestamp_or_threads(self, tmp_path, capsys):
        out_dir = self.run_bench(tmp_path, "bench")
        meta = json.loads((out_dir / "meta.json").read_text())
        flat = json.dumps(meta).lower()
        assert "time" not in flat
        assert "thread" not in flat
        assert meta["run"]["trials"] == BASE_SCENARIO["trials"]
        assert meta["truth"]["entropy"] > 0

    def test_summary_matches_records(self, tmp_path, capsys):
        out_dir = self.run_bench(tmp_path, "bench")
        lines = (out_dir / "summary.csv").read_text().splitlines()
        assert lines[0].split(",") == cli._SUMMARY_HEADER
        names = [ln.split(",")[0] for ln in lines[1:]]
        assert "p_d_pct" in names
        assert "alpha_re" in names

    def test_figures_written_unless_disabled(self, tmp_path, capsys):
        scen = write_scenario(tmp_path, {"trials": 4})
        out_dir = tmp_path / "withfigs"
        assert (
            main(
                [
                    "bench",
                    "--scenario",
                    str(scen),
                    "--out",
                    str(out_dir),
                    "--threads",
                    "1",
                ]
            )
            == 0
        )
        pngs = list((out_dir / "histograms").glob("*.png"))
        assert len(pngs) == 11


class TestSweep:
    def test_entropy_column_non_decreasing(self, tmp_path, capsys):
        scen = write_scenario(
            tmp_path,
            {
                "alpha": {"re": 0.35, "im": 0.2},
                "fractions": {"volume": 0.0, "surface": 0.0, "double": 1.0},
                "psi_s_deg": 0.0,
                "trials": 6,
                "fit": {"n_random_starts": 3},
            },
        )
        out_dir = tmp_path / "sw"
        assert (
            main(
                [
                    "sweep",
                    "--scenario",
                    str(scen),
                    "--out",
                    str(out_dir),
                    "--fv-grid",
                    "0:2:1",
                    "--threads",
                    "1",
                    "--no-figures",
                ]
            )
            == 0
        )
        lines = (out_dir / "sweep.csv").read_text().splitlines()
        assert len(lines) == 4
        entropies = [float(ln.split(",")[1]) for ln in lines[1:]]
        assert entropies == sorted(entropies)
        assert (out_dir / "meta.json").exists()

    def test_surface_fraction_must_be_zero(self, tmp_path, capsys):
        scen = write_scenario(tmp_path)  # has fractions .35/.33/.32
        out_dir = tmp_path / "sw"
        assert (
            main(
                [
                    "sweep",
                    "--scenario",
                    str(scen),
                    "--out",
                    str(out_dir),
                    "--fv-grid",
                    "0:1:1",
                    "--no-figures",
                ]
            )
            == 1
        )
        # the failed run cleaned up after itself
        assert not out_dir.exists()

    def test_bad_grid_spec(self, tmp_path, capsys):
        scen = write_scenario(tmp_path)
        assert (
            main(
                [
                    "sweep",
                    "--scenario",
                    str(scen),
                    "--out",
                    str(tmp_path / "x"),
                    "--fv-grid",
                    "1:0:1",
                ]
            )
            == 1
        )

    def test_auto_grid_requires_double_bounce(self, tmp_path, capsys):
        scen = write_scenario(
            tmp_path,
            {"fractions": {"volume": 1.0, "surface": 0.0, "double": 0.0}},
        )
        assert (
            main(
                [
                    "sweep",
                    "--scenario",
                    str(scen),
                    "--out",
                    str(tmp_path / "x"),
                    "--fv-grid",
                    "auto",
                ]
            )
            == 1
        )

    def test_grid_parser(self):
        scen, _ = parse_scenario(Path(__file__).parent.parent / "scenarios" / "volume_double.json")
        auto = cli._parse_grid("auto", scen)
        assert len(auto) == 20
        assert auto[0] == 0.0
        assert math.isclose(auto[-1], 9.0)
        explicit = cli._parse_grid("0:1:0.5", scen)
        assert explicit == [0.0, 0.5, 1.0]


class TestShippedScenarios:
    def test_all_parse_and_simulate(self, tmp_path, capsys):
        scen_dir = Path(__file__).parent.parent / "scenarios"
        files = sorted(scen_dir.glob("*.json"))
        assert len(files) == 3
        for f in files:
            assert main(["simulate", "--scenario", str(f), "--out", str(tmp_path / "t.json")]) == 0
