"""Configuration loading, overrides, stage dispatch, exit codes, output formats."""

import csv
import json

import numpy as np
import pytest

from frfsim.cli import fit_power_law, main
from frfsim.config import ConfigError, apply_overrides, load_config, parse_config


BASE_TOML = """
[circuit]
preset = "table1-main"

[pulse]
t_gate = 60.0

[truncation]
dressed_dim = 45

[integrator]
steps_per_ns = 110
richardson = true

[output]
directory = "out"
"""


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text(BASE_TOML)
    return path


class TestConfig:
    def test_preset_expansion(self, config_path):
        config = load_config(config_path)
        assert config.circuit.fluxonium_a.e_j == 7.1
        assert config.circuit.fluxonium_b.e_j == 7.2
        assert config.circuit.resonator.omega_c == 7.08
        assert config.circuit.j_ab == 0.1
        assert config.pulse.tau == pytest.approx(60.0 / 2.2)

    def test_dissipation_preset(self):
        raw = {"circuit": {"preset": "table1-main"}, "dissipation": {"set": "A"}}
        config = parse_config(raw)
        assert config.dissipation.q_factor == 5e6
        assert config.dissipation.t1_fluxon_ms == 1.0
        assert config.dissipation.temperature_mk == 30.0

    def test_dissipation_rows(self):
        for label, q, t1, t12, temp in [
            ("B", 5e6, 1.0, 30.0, 50.0),
            ("C", 5e6, 1.0, 30.0, 100.0),
            ("E", 1e6, 0.2, 10.0, 50.0),
            ("F", 1e6, 0.2, 10.0, 100.0),
        ]:
            raw = {"circuit": {"preset": "table1-main"}, "dissipation": {"set": label}}
            dset = parse_config(raw).dissipation
            assert (dset.q_factor, dset.t1_fluxon_ms, dset.t1_plasmon_us,
                    dset.temperature_mk) == (q, t1, t12, temp)

    def test_missing_field_names_field(self):
        raw = {"circuit": {"fluxonium_a": {"e_c": 2.0, "e_j": 7.1}}}
        with pytest.raises(ConfigError, match="e_l"):
            parse_config(raw)

    def test_two_circuit_sources_rejected(self):
        raw = {"circuit": {"preset": "table1-main", "fluxonium_a": {}}}
        with pytest.raises(ConfigError, match="exactly one source"):
            parse_config(raw)

    def test_capnet_preset_source(self):
        raw = {"circuit": {"capnet": {"preset": "grounded-main"}}}
        config = parse_config(raw)
        assert config.capnet is not None
        assert config.circuit.j_ac == pytest.approx(0.33, rel=0.03)

    def test_empty_sweep_grid_rejected(self):
        raw = {"circuit": {"preset": "table1-main"}, "sweep": {"grid": []}}
        with pytest.raises(ConfigError, match="non-empty"):
            parse_config(raw)

    def test_overrides(self):
        raw = {"circuit": {"preset": "table1-main"}}
        out = apply_overrides(raw, ["pulse.t_gate=88.0", "integrator.richardson=false",
                                    "sweep.grid=[60, 80]"])
        assert out["pulse"]["t_gate"] == 88.0
        assert out["integrator"]["richardson"] is False
        assert out["sweep"]["grid"] == [60, 80]

    def test_config_hash_stability(self, config_path):
        a = load_config(config_path).config_hash()
        b = load_config(config_path).config_hash()
        assert a == b
        c = load_config(config_path, overrides=["circuit.preset=table1-main"]).config_hash()
        assert a == c


class TestCli:
    def test_missing_config_is_exit_2(self, capsys):
        assert main(["--stage", "constants", "--config", "/nonexistent.toml"]) == 2

    def test_bad_preset_is_exit_2(self):
        assert main(["--stage", "constants", "--preset", "bogus"]) == 2

    def test_constants_stage(self, tmp_path, config_path):
        out = tmp_path / "results"
        code = main(["--config", str(config_path), "--stage", "constants",
                     "--out", str(out)])
        assert code == 0
        payload = json.loads((out / "constants.json").read_text())
        assert payload["stage"] == "constants"
        assert payload["config"]["circuit"]["preset"] == "table1-main"
        assert payload["result"]["alpha_ghz"] == pytest.approx(0.069, abs=0.01)
        assert payload["result"]["eta_ghz"] == pytest.approx(-1e-6, abs=1e-6)

    def test_spectrum_stage_and_cache(self, tmp_path, config_path):
        out = tmp_path / "results"
        assert main(["--config", str(config_path), "--stage", "spectrum",
                     "--out", str(out)]) == 0
        cache_files = list((out / "cache").glob("spectrum_*.npz"))
        assert len(cache_files) == 1
        payload = json.loads((out / "spectrum.json").read_text())
        assert payload["result"]["truncation_dim"] == 45
        assert payload["result"]["states"][0]["label"] == [0, 0, 0]
        # second run reuses the cache without error
        assert main(["--config", str(config_path), "--stage", "spectrum",
                     "--out", str(out)]) == 0

    def test_capnet_stage(self, tmp_path):
        toml = tmp_path / "cap.toml"
        toml.write_text('[circuit]\n[circuit.capnet]\npreset = "differential-main"\n')
        out = tmp_path / "results"
        assert main(["--config", str(toml), "--stage", "capnet", "--out", str(out)]) == 0
        payload = json.loads((out / "capnet.json").read_text())
        assert payload["result"]["outputs"]["e_c_a"] == pytest.approx(2.0, rel=0.03)
        assert payload["result"]["outputs"]["z_c_out"] == pytest.approx(191.0, rel=0.03)

    def test_perturb_compare_stage_csv(self, tmp_path, config_path):
        out = tmp_path / "results"
        assert main(["--config", str(config_path), "--stage", "perturb-compare",
                     "--out", str(out)]) == 0
        with open(out / "perturb_compare.csv", newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        assert {"quantity", "analytic", "exact", "rel_error"} <= set(rows[0])
        chi = next(r for r in rows if r["quantity"] == "chi")
        assert float(chi["rel_error"]) < 0.05

    def test_fit_scaling_stage(self, tmp_path):
        out = tmp_path / "results"
        out.mkdir()
        with open(out / "sweep_tg.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=["t_gate_ns", "infidelity"])
            writer.writeheader()
            rng = np.random.default_rng(7)
            for tg in (45, 60, 75, 90, 105):
                eps = 2e-6 * (tg / 100.0) ** -4.4 * float(np.exp(rng.normal(0, 0.02)))
                writer.writerow({"t_gate_ns": tg, "infidelity": eps})
        toml = tmp_path / "fit.toml"
        toml.write_text('[circuit]\npreset = "table1-main"\n')
        assert main(["--config", str(toml), "--stage", "fit-scaling", "--out", str(out)]) == 0
        payload = json.loads((out / "fit_scaling.json").read_text())
        assert payload["result"]["exponent"] == pytest.approx(-4.4, abs=0.3)


class TestPowerLawFit:
    def test_exact_power_law(self):
        rows = [(t, 3.0 * t**-4.0) for t in (40.0, 60.0, 80.0, 100.0)]
        p, sigma, prefactor = fit_power_law(rows)
        assert p == pytest.approx(-4.0, abs=1e-9)
        assert sigma == pytest.approx(0.0, abs=1e-9)
        assert prefactor == pytest.approx(3.0, rel=1e-9)

    def test_sigma_from_scatter(self, rng):
        rows = [
            (t, 3.0 * t**-4.0 * float(np.exp(rng.normal(0, 0.1))))
            for t in np.linspace(40, 120, 12)
        ]
        p, sigma, _ = fit_power_law(rows)
        assert sigma > 0.0
        assert p == pytest.approx(-4.0, abs=4 * sigma + 0.05)
