import json
import math
from pathlib import Path

import pytest

from vortexlab.harness.cli import main
from vortexlab.harness.config import ConfigError, parse_config
from vortexlab.harness.report import ReportError, fit_power_law, sweep_report
from vortexlab.harness.run import run_scenario
from vortexlab.harness.scenarios import builtin_scenarios, get_scenario


def base_raw(**overrides):
    raw = {
        "name": "demo",
        "vortices": [{"center": [0.0, 0.5], "gamma": 6.28, "profile": "gaussian"},
                     {"center": [0.0, -0.5], "gamma": -6.28, "profile": "gaussian"}],
        "epsilon": 0.05,
        "grid": {"h_over_eps": 0.25, "mass_capture": 0.99},
        "sim": {"dt": 1e-3, "t_end": 0.01, "record_every": 5},
        "diagnostics": {"fractions": [0.99]},
    }
    raw.update(overrides)
    return raw


class TestConfigValidation:
    def test_valid_parses(self):
        cfg = parse_config(base_raw())
        assert cfg.name == "demo"
        assert cfg.epsilons == (0.05,)

    def test_coincident_centers(self):
        raw = base_raw(vortices=[
            {"center": [0.0, 0.0], "gamma": 1.0, "profile": "gaussian"},
            {"center": [0.0, 0.0], "gamma": 2.0, "profile": "gaussian"}])
        with pytest.raises(ConfigError, match="vortices"):
            parse_config(raw)

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="frobnicate"):
            parse_config(base_raw(frobnicate=1))

    def test_missing_grid(self):
        raw = base_raw()
        del raw["grid"]
        with pytest.raises(ConfigError, match="grid"):
            parse_config(raw)

    def test_bad_epsilon(self):
        with pytest.raises(ConfigError, match="epsilon"):
            parse_config(base_raw(epsilon=1.5))

    def test_both_epsilon_forms_rejected(self):
        raw = base_raw()
        raw["epsilon_sweep"] = [0.1, 0.05]
        with pytest.raises(ConfigError, match="exactly one"):
            parse_config(raw)

    def test_zero_gamma(self):
        raw = base_raw()
        raw["vortices"][0]["gamma"] = 0.0
        with pytest.raises(ConfigError, match="gamma"):
            parse_config(raw)

    def test_algebraic_needs_sigma(self):
        raw = base_raw()
        raw["vortices"][0]["profile"] = "algebraic"
        with pytest.raises(ConfigError, match="sigma"):
            parse_config(raw)

    def test_default_dt_from_separation(self):
        raw = base_raw()
        del raw["sim"]["dt"]
        cfg = parse_config(raw)
        assert cfg.dt == pytest.approx(1e-3 * min(1.0, 1.0 / 6.28), rel=1e-12)


class TestBuiltins:
    def test_all_validate_and_roundtrip(self):
        for cfg in builtin_scenarios():
            reparsed = parse_config(cfg.to_dict())
            assert reparsed.config_hash() == cfg.config_hash()

    def test_names(self):
        names = [c.name for c in builtin_scenarios()]
        assert names == ["pair-translate", "corotate", "single-cauchy",
                         "sweep-concentration", "long-time"]

    def test_long_time_horizon_arithmetic(self):
        cfg = get_scenario("long-time")
        assert cfg.t_end == cfg.diagnostics.c0 * abs(math.log(cfg.epsilons[0]))

    def test_unknown_scenario(self):
        with pytest.raises(KeyError):
            get_scenario("does-not-exist")

    def test_budget_estimates_within_limits(self):
        for cfg in builtin_scenarios():
            for eps in cfg.epsilons:
                assert cfg.estimated_particles(eps) <= 100_000


def write_synthetic_run(root: Path, scenario: str, eps: float, outer: float,
                        radius: float) -> Path:
    """Run directory in the documented output format with frozen values."""
    d = root / f"{scenario}__eps{eps:g}"
    d.mkdir(parents=True)
    names = ["t", "cx_0", "cy_0", "I_0", "circ_0", "r100_0", "rf0.99_0", "ring0_0"]
    rows = [[0.0, 0.0, 0.0, 1e-4, 1.0, radius, radius, outer],
            [1.0, 0.0, 0.0, 1e-4, 1.0, radius, radius, outer]]
    with open(d / "diagnostics.csv", "w") as fh:
        fh.write(",".join(names) + "\n")
        for row in rows:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    manifest = {
        "scenario": scenario, "epsilon": eps, "directory": str(d),
        "n_particles": 100, "aborted": False, "A_eps": eps, "a": 0.45,
        "c0": 0.1, "fractions": [0.99], "mu_radii": [], "ring_radii": [0.5],
        "ring_radii_eps_pow": [0.2],
    }
    with open(d / "manifest.json", "w") as fh:
        json.dump(manifest, fh)
    return d


class TestSweepReport:
    def test_exact_power_law_slope(self, tmp_path):
        dirs = []
        for eps in (0.1, 0.05, 0.025, 0.0125):
            dirs.append(write_synthetic_run(tmp_path, "syn", eps,
                                            outer=2.5 * eps, radius=0.3 * eps))
        summary = sweep_report(dirs)
        fits = summary["scenarios"]["syn"]["fits"]
        assert abs(fits["outer_mass_0"]["slope"] - 1.0) < 1e-6
        assert fits["outer_mass_0"]["max_mult_residual"] < 1e-9
        assert abs(fits["support_radius"]["slope"] - 1.0) < 1e-6

    def test_permutation_stability(self, tmp_path):
        dirs = [write_synthetic_run(tmp_path, "syn", eps, 2.5 * eps, 0.3 * eps)
                for eps in (0.1, 0.05, 0.025)]
        a = sweep_report(dirs)
        b = sweep_report(list(reversed(dirs)))
        assert a == b

    def test_insufficient_sweep(self, tmp_path):
        dirs = [write_synthetic_run(tmp_path, "syn", eps, eps, eps)
                for eps in (0.1, 0.05)]
        with pytest.raises(ReportError, match="insufficient"):
            sweep_report(dirs)

    def test_confinement_fields(self, tmp_path):
        d = [write_synthetic_run(tmp_path, "syn", eps, 2.5 * eps, 0.3 * eps)
             for eps in (0.1, 0.05, 0.025)]
        summary = sweep_report(d)
        runs = summary["scenarios"]["syn"]["runs"]
        assert [r["epsilon"] for r in runs] == [0.025, 0.05, 0.1]
        for r in runs:
            assert r["confinement_satisfied"]
            assert r["tau_measured"] == 1.0

    def test_fit_power_law_exact(self):
        eps = [0.1, 0.05, 0.025]
        fit = fit_power_law(eps, [3.0 * e ** 1.7 for e in eps])
        assert fit["slope"] == pytest.approx(1.7, abs=1e-9)
        assert fit["max_mult_residual"] < 1e-12


class TestRunScenario:
    def test_pair_translate_smoke(self, tmp_path):
        manifests = run_scenario(get_scenario("pair-translate"), tmp_path,
                                 serial=False)
        assert len(manifests) == 1
        man = manifests[0]
        assert not man.aborted
        csvs = [f for f in man.files if f.endswith(".csv")]
        assert len(csvs) >= 2
        for f in man.files:
            assert (Path(man.directory) / f).exists()
        # the pair should have translated by about (1, 0)
        from vortexlab.diagnostics import read_records_csv
        names, vals = read_records_csv(Path(man.directory) / "diagnostics.csv")
        dx = vals[-1, names.index("cx_0")] - vals[0, names.index("cx_0")]
        assert dx == pytest.approx(1.0, rel=0.02)
        assert man.n_particles > 0
        assert man.sampled_circulations["0"] == pytest.approx(2 * math.pi, rel=2e-3)

    def test_budget_guard(self, tmp_path):
        cfg = get_scenario("single-cauchy")
        import dataclasses
        tiny_h = dataclasses.replace(cfg, h_over_eps=0.005)
        with pytest.raises(ConfigError, match="budget"):
            run_scenario(tiny_h, tmp_path)


class TestCli:
    def test_run_and_report(self, tmp_path):
        from vortexlab.harness.accept import _mini_config
        cfg_path = tmp_path / "mini.json"
        cfg_path.write_text(json.dumps(_mini_config().to_dict()))
        out = tmp_path / "out"
        assert main(["run", str(cfg_path), "--out", str(out), "--serial"]) == 0
        run_dir = out / "mini-pair__eps0.05"
        assert (run_dir / "diagnostics.csv").exists()
        assert (run_dir / "manifest.json").exists()

        dirs = [str(write_synthetic_run(tmp_path, "syn", eps, 2 * eps, eps))
                for eps in (0.1, 0.05, 0.025)]
        summary_path = tmp_path / "summary.json"
        assert main(["report", *dirs, "--out", str(summary_path)]) == 0
        assert summary_path.exists()

    def test_velocity_override(self, tmp_path):
        from vortexlab.harness.accept import _mini_config
        cfg_path = tmp_path / "mini.json"
        cfg_path.write_text(json.dumps(_mini_config().to_dict()))
        out = tmp_path / "out"
        assert main(["run", str(cfg_path), "--out", str(out),
                     "--velocity", "tree", "--serial"]) == 0

    def test_validation_exit_code(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{\"name\": \"x\"}")
        assert main(["run", str(bad), "--out", str(tmp_path / "o")]) == 1

    def test_bad_json_reports_line(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{\n  \"name\": oops\n}")
        assert main(["run", str(bad), "--out", str(tmp_path / "o")]) == 1
        assert "line 2" in capsys.readouterr().err

    def test_scenarios_list(self, capsys):
        assert main(["scenarios", "list"]) == 0
        out = capsys.readouterr().out
        assert "corotate" in out and "long-time" in out

    def test_accept_unknown_suite(self):
        assert main(["accept", "nonexistent-criterion"]) == 1

    def test_thread_env_honored(self, monkeypatch):
        monkeypatch.setenv("VORTEXLAB_THREADS", "1")
        assert main(["scenarios", "list"]) == 0

    def test_accept_single_criterion(self, tmp_path, capsys):
        rc = main(["accept", "decomposition-scaling", "--out", str(tmp_path)])
        out = capsys.readouterr().out
        assert rc == 0
        assert "[PASS] decomposition-scaling" in out
