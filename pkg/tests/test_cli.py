"""Scenario configs, the expression parser, CLI subcommands, determinism."""

import json
import os

import numpy as np
import pytest

from submersion_lab import cli
from submersion_lab.scenarios import (ConfigError, ScenarioConfig,
                                      build_scenario,
                                      parse_base_map_expression)


def write_config(tmp_path, name="scenario", **overrides):
    cfg = {"name": name, "bundle": "hopf_complex", "base_map": "hopf",
           "samples": 8, "seed": 5}
    cfg.update(overrides)
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def load_stripped(path):
    data = json.loads(open(path).read())
    data.pop("timing", None)
    return data


# ---------------------------------------------------------------------------
# Config parsing
# ---------------------------------------------------------------------------

class TestScenarioConfig:
    def test_minimal_round_trip(self):
        cfg = ScenarioConfig.from_dict(
            {"name": "a", "bundle": "trivial", "base_map": "identity"})
        assert cfg.epsilon == 0.1
        assert cfg.samples == 200
        assert cfg.fd_step == 1e-4

    @pytest.mark.parametrize("broken,field", [
        ({"bundle": "hopf_complex", "base_map": "hopf"}, "name"),
        ({"name": "x", "base_map": "hopf"}, "bundle"),
        ({"name": "x", "bundle": "nope", "base_map": "hopf"}, "bundle"),
        ({"name": "x", "bundle": "trivial", "base_map": "identity",
          "epsilon": -1.0}, "epsilon"),
        ({"name": "x", "bundle": "trivial", "base_map": "identity",
          "samples": "many"}, "samples"),
        ({"name": "x", "bundle": "trivial", "base_map": "identity",
          "tolerances": {"bogus": 1.0}}, "tolerances.bogus"),
        ({"name": "x", "bundle": "trivial", "base_map": "identity",
          "extra_field": 1}, "extra_field"),
    ])
    def test_errors_name_the_field(self, broken, field):
        with pytest.raises(ConfigError, match=field):
            ScenarioConfig.from_dict(broken)

    def test_expression_parser(self):
        tree = parse_base_map_expression("compose(hopf, perturbed(0.3, e1))")
        assert tree == ("compose", [("hopf", None),
                                    ("perturbed", [("0.3", None), ("e1", None)])])

    @pytest.mark.parametrize("expr", [
        "compose(hopf", "perturbed(0.3)", "unknown_map", "hopf)(",
        "geodesic_fold(zero)", "perturbed(0.3, e9)",
    ])
    def test_bad_expressions_rejected(self, expr):
        cfg = ScenarioConfig.from_dict(
            {"name": "x", "bundle": "hopf_complex", "base_map": expr})
        with pytest.raises(ConfigError, match="base_map"):
            build_scenario(cfg)

    def test_scenario_shapes(self):
        cases = {
            "hopf": (4, 3),
            "identity": (3, 3),
            "constant": (3, 3),
            "geodesic_fold(2)": (3, 3),
            "perturbed(0.2, e1)": (3, 3),
            "compose(hopf, perturbed(0.3, e1))": (4, 3),
            "compose(geodesic_fold(2), perturbed(0.1, e2))": (3, 3),
        }
        for expr, (d_src, d_dst) in cases.items():
            sc = build_scenario(ScenarioConfig.from_dict(
                {"name": "x", "bundle": "hopf_complex", "base_map": expr}))
            assert sc.base_map.source.ambient_dim == d_src
            assert sc.base_map.target.ambient_dim == d_dst

    def test_base_map_target_must_match_bundle(self):
        cfg = ScenarioConfig.from_dict(
            {"name": "x", "bundle": "trivial", "base_map": "hopf"})
        with pytest.raises(ConfigError, match="base_map"):
            build_scenario(cfg)


# ---------------------------------------------------------------------------
# Subcommands and exit codes
# ---------------------------------------------------------------------------

class TestCommands:
    def test_check_pure_hopf_exit_zero(self, tmp_path, capsys):
        path = write_config(tmp_path, "pure")
        out = str(tmp_path / "pure_report.json")
        assert cli.main(["check", "--config", path, "--out", out]) == 0
        capsys.readouterr()
        report = load_stripped(out)
        assert report["verdict"] == "CONSISTENT"
        assert report["summary"]["max_obstruction_norm"] <= 1e-6

    def test_check_perturbed_exit_two_with_certificate(self, tmp_path, capsys):
        path = write_config(tmp_path, "perturbed",
                            base_map="compose(hopf, perturbed(0.3, e1))",
                            samples=12)
        out = str(tmp_path / "perturbed_report.json")
        assert cli.main(["check", "--config", path, "--out", out]) == 2
        capsys.readouterr()
        report = load_stripped(out)
        assert report["verdict"] == "VIOLATED"
        certs = report["certificates"]
        assert certs
        assert certs[0]["sec_value"] < -1e-6
        assert certs[0]["relative_agreement"] <= 0.10

    def test_check_inadmissible_epsilon_exit_one(self, tmp_path, capsys):
        path = write_config(tmp_path, "bad_eps", epsilon=1.5, samples=5)
        out = str(tmp_path / "bad_eps.json")
        assert cli.main(["check", "--config", path, "--out", out]) == 1
        capsys.readouterr()
        report = load_stripped(out)
        adm = report["epsilon_admissibility"]
        assert adm["min_eigenvalue"] <= 0.0
        assert abs(adm["max_admissible_epsilon"] - 1.0) <= 1e-6

    def test_validate_passes_and_fails(self, tmp_path, capsys):
        good = write_config(tmp_path, "good", samples=6)
        assert cli.main(["validate", "--config", good]) == 0
        capsys.readouterr()

    def test_validate_trivial_bundle_passes(self, tmp_path, capsys):
        path = write_config(tmp_path, "trivial_ok", bundle="trivial",
                            base_map="constant", samples=5)
        out = str(tmp_path / "trivial_ok_report.json")
        assert cli.main(["validate", "--config", path, "--out", out]) == 0
        capsys.readouterr()
        report = load_stripped(out)
        assert report["failed"] == 0

    def test_curvature_deterministic(self, tmp_path, capsys):
        path = write_config(tmp_path, "curv_det", samples=25)
        out1 = str(tmp_path / "c1.json")
        out2 = str(tmp_path / "c2.json")
        assert cli.main(["curvature", "--config", path, "--out", out1]) == 0
        assert cli.main(["curvature", "--config", path, "--out", out2]) == 0
        capsys.readouterr()
        assert json.dumps(load_stripped(out1), sort_keys=True) == \
            json.dumps(load_stripped(out2), sort_keys=True)

    def test_curvature_trivial_bundle_nonnegative(self, tmp_path, capsys):
        path = write_config(tmp_path, "curv", bundle="trivial",
                            base_map="identity", samples=40)
        out = str(tmp_path / "curv.json")
        assert cli.main(["curvature", "--config", path, "--out", out]) == 0
        capsys.readouterr()
        report = load_stripped(out)
        assert report["min"] >= -1e-4
        assert "worst_plane" in report

    def test_missing_config_file(self, tmp_path, capsys):
        assert cli.main(["check", "--config", str(tmp_path / "nope.json")]) == 1
        assert "config" in capsys.readouterr().err

    def test_flag_overrides(self, tmp_path, capsys):
        path = write_config(tmp_path, "override")
        out = str(tmp_path / "override.json")
        assert cli.main(["check", "--config", path, "--seed", "9",
                         "--samples", "5", "--fd-step", "5e-5",
                         "--out", out]) == 0
        capsys.readouterr()
        report = load_stripped(out)
        assert report["config"]["seed"] == 9
        assert report["config"]["samples"] == 5
        assert report["config"]["fd_step"] == 5e-5


class TestDeterminism:
    def test_identical_reports_modulo_timing(self, tmp_path, capsys):
        path = write_config(tmp_path, "det", samples=6)
        out1 = str(tmp_path / "r1.json")
        out2 = str(tmp_path / "r2.json")
        assert cli.main(["check", "--config", path, "--out", out1]) == 0
        assert cli.main(["check", "--config", path, "--out", out2]) == 0
        capsys.readouterr()
        assert json.dumps(load_stripped(out1), sort_keys=True) == \
            json.dumps(load_stripped(out2), sort_keys=True)

    def test_threads_do_not_change_results(self, tmp_path, capsys):
        path = write_config(tmp_path, "thr", samples=6)
        out1 = str(tmp_path / "t1.json")
        out2 = str(tmp_path / "t2.json")
        old = os.environ.get(cli.THREADS_ENV)
        try:
            os.environ[cli.THREADS_ENV] = "1"
            assert cli.main(["check", "--config", path, "--out", out1]) == 0
            os.environ[cli.THREADS_ENV] = "4"
            assert cli.main(["check", "--config", path, "--out", out2]) == 0
        finally:
            if old is None:
                os.environ.pop(cli.THREADS_ENV, None)
            else:
                os.environ[cli.THREADS_ENV] = old
        capsys.readouterr()
        assert json.dumps(load_stripped(out1), sort_keys=True) == \
            json.dumps(load_stripped(out2), sort_keys=True)


class TestReportMerging:
    def test_merge_sorted_by_scenario(self, tmp_path, capsys):
        p1 = write_config(tmp_path, "zeta")
        p2 = write_config(tmp_path, "alpha",
                          base_map="compose(hopf, perturbed(0.3, e1))",
                          samples=8)
        out1 = str(tmp_path / "zeta_run.json")
        out2 = str(tmp_path / "alpha_run.json")
        cli.main(["check", "--config", p1, "--out", out1])
        cli.main(["check", "--config", p2, "--out", out2])
        merged = str(tmp_path / "merged.md")
        assert cli.main(["report", out1, out2, "--out", merged]) == 0
        capsys.readouterr()
        text = open(merged).read()
        assert text.index("alpha") < text.index("zeta")
        assert os.path.exists(str(tmp_path / "merged.csv"))

    def test_single_run_rows(self, tmp_path, capsys):
        p1 = write_config(tmp_path, "single", samples=5)
        out1 = str(tmp_path / "single_run.json")
        cli.main(["check", "--config", p1, "--out", out1])
        assert cli.main(["report", out1]) == 0
        stdout = capsys.readouterr().out
        assert "theorem_verdict" in stdout

    def test_malformed_file_names_field(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"kind": "check", "config": {"name": "x"}}))
        assert cli.main(["report", str(bad)]) == 1
        assert "verdict" in capsys.readouterr().err

    def test_sidecar_records_written(self, tmp_path, capsys):
        path = write_config(tmp_path, "sidecar", samples=5)
        out = str(tmp_path / "sidecar_run.json")
        cli.main(["check", "--config", path, "--out", out])
        capsys.readouterr()
        jsonl = str(tmp_path / "sidecar_run.jsonl")
        csv_path = str(tmp_path / "sidecar_run.csv")
        assert os.path.exists(jsonl)
        assert os.path.exists(csv_path)
        lines = [json.loads(line) for line in open(jsonl)]
        assert any(row["check"] == "theorem_verdict" for row in lines)


class TestValidateOnFixture:
    def test_broken_fixture_fails_fiber_geodesy(self):
        # drive the validation machinery directly on the fixture bundle
        from submersion_lab import geometries
        from submersion_lab.graph import constant_map
        from submersion_lab.pullback import pullback_bundle
        from submersion_lab.scenarios import Scenario, ScenarioConfig

        bundle = geometries.scaled_fiber_bundle(0.5)
        f = constant_map(bundle.base, bundle.base, np.array([0.0, 1.0]))
        pb = pullback_bundle(f, bundle)
        cfg = ScenarioConfig(name="fixture", bundle="trivial",
                             base_map="constant", samples=6, seed=0)
        sc = Scenario(config=cfg, bundle=bundle, base_map=f, pullback=pb)
        checks = cli.run_validation(sc)
        by_name = {c.name: c for c in checks}
        fiber = by_name["submersion.fibers_totally_geodesic"]
        assert fiber.status == "fail"
        assert fiber.residual > 0.1
