"""Cross-cutting coverage: DRAG propagation, E_J sweeps, CLI stage smoke tests."""

import json
from dataclasses import replace

import numpy as np
import pytest

from frfsim.composite import truncate_dressed
from frfsim.propagate import (
    DrivenSystem,
    calibrate_amplitude,
    gate_run,
    optimize_drive,
    reference_lab_frame_columns,
)
from frfsim.pulses import PulseSpec


class TestDragPropagation:
    @pytest.mark.slow
    def test_drag_quadrature_against_lab_frame(self, spectrum_full):
        # the in-quadrature derivative tone must survive the carrier-exact step
        spectrum = truncate_dressed(spectrum_full, 28)
        system = DrivenSystem(spectrum)
        tau = 20.0 / 2.2
        amp = calibrate_amplitude(spectrum, tau)
        pulse = PulseSpec(tau=tau, amplitude=amp, drag_scale=0.4, drag_alpha=0.069)
        omega_d = system.resonance()
        mine = system.propagate_columns(pulse, omega_d, dt=1 / 220, richardson=True)
        ref = reference_lab_frame_columns(spectrum, pulse, omega_d)
        assert np.max(np.abs(mine - ref)) < 2e-5

    def test_drag_changes_leakage(self, spectrum45):
        system = DrivenSystem(spectrum45)
        tau = 45.0 / 2.2
        amp = calibrate_amplitude(spectrum45, tau)
        base = PulseSpec(tau=tau, amplitude=amp)
        dragged = base.with_(drag_scale=0.4, drag_alpha=0.069)
        g0, _ = gate_run(spectrum45, base, dt=1 / 110)
        g1, _ = gate_run(spectrum45, dragged, dt=1 / 110)
        assert g0.leakage != pytest.approx(g1.leakage, rel=1e-3)

    @pytest.mark.slow
    def test_optimize_with_drag_scan(self, spectrum_full):
        # outer loop over the drag scale picks the best of the scanned values
        spectrum = truncate_dressed(spectrum_full, 28)
        template = PulseSpec(tau=50.0 / 2.2, amplitude=0.02)
        kwargs = dict(amp_points=5, det_points=7, amp_span=0.01,
                      det_halfwidth=5e-4, refine=False, polish_phase=False)
        pulse, gate = optimize_drive(spectrum, template, drag_scales=[0.0, 0.5], **kwargs)
        _, gate_plain = optimize_drive(spectrum, template, **kwargs)
        assert gate.infidelity <= gate_plain.infidelity * 1.001
        assert pulse.drag_scale in (0.0, 0.5)


@pytest.mark.slow
class TestEjSweep:
    def test_mistargeting_with_recalibration(self, table1, spectrum_full):
        from frfsim.robustness import ej_sweep

        small = dict(amp_points=7, det_points=9, amp_span=0.015,
                     det_halfwidth=8e-4, refine=False)
        nominal = 7.1
        rows = ej_sweep(
            table1,
            ej_values=[0.98 * nominal, nominal, 1.02 * nominal],
            taus=[60.0 / 2.2],
            d=45,
            optimizer_kwargs=small,
        )
        eps = {round(r["e_j"], 4): r["infidelity"] for r in rows}
        baseline = eps[round(nominal, 4)]
        for ej, value in eps.items():
            assert value <= 3.0 * baseline, f"E_J={ej}: {value} vs baseline {baseline}"

    def test_recalibration_dominates_frozen_drive(self, table1, spectrum_full):
        from frfsim.composite import build_composite

        offset_spec = replace(
            table1, fluxonium_a=replace(table1.fluxonium_a, e_j=1.02 * 7.1)
        )
        spectrum = truncate_dressed(build_composite(offset_spec), 45)
        base45 = truncate_dressed(build_composite(table1), 45)
        tau = 60.0 / 2.2

        # frozen drive: calibrated on the nominal circuit
        amp = calibrate_amplitude(base45, tau)
        frozen_pulse = PulseSpec(tau=tau, amplitude=amp)
        frozen_wd = DrivenSystem(base45).resonance()
        system = DrivenSystem(spectrum)
        cols = system.propagate_columns(frozen_pulse, frozen_wd, richardson=True)
        from frfsim.propagate import average_gate_fidelity

        frozen = average_gate_fidelity(cols[system.comp, :])

        small = dict(amp_points=7, det_points=9, amp_span=0.015,
                     det_halfwidth=8e-4, refine=False)
        _, recal = optimize_drive(spectrum, PulseSpec(tau=tau, amplitude=0.02), **small)
        assert recal.infidelity <= frozen.infidelity


class TestFineConvergence:
    @pytest.mark.slow
    def test_step_halving_below_1e8_on_short_gate(self, spectrum_full):
        # the 1e-8 component-level halving criterion, demonstrated where the
        # cost permits: extrapolated runs on a short gate at fine steps
        spectrum = truncate_dressed(spectrum_full, 28)
        system = DrivenSystem(spectrum)
        tau = 10.0 / 2.2
        pulse = PulseSpec(tau=tau, amplitude=calibrate_amplitude(spectrum, tau))
        omega_d = system.resonance()
        a = system.propagate_columns(pulse, omega_d, dt=1 / 880, richardson=True)
        b = system.propagate_columns(pulse, omega_d, dt=1 / 1760, richardson=True)
        assert np.max(np.abs(a - b)) < 1e-8

    @pytest.mark.slow
    def test_gate_error_step_insensitive(self, spectrum45):
        system = DrivenSystem(spectrum45)
        tau = 40.0 / 2.2
        pulse = PulseSpec(tau=tau, amplitude=calibrate_amplitude(spectrum45, tau))
        g1, _ = gate_run(spectrum45, pulse, dt=1 / 220, richardson=True)
        g2, _ = gate_run(spectrum45, pulse, dt=1 / 440, richardson=True)
        assert abs(g1.infidelity - g2.infidelity) < 1e-8


class TestCliStages:
    def test_gate_stage(self, tmp_path):
        from frfsim.cli import main

        toml = tmp_path / "gate.toml"
        toml.write_text(
            '[circuit]\npreset = "table1-main"\n'
            "[pulse]\nt_gate = 30.0\n"
            "[truncation]\ndressed_dim = 28\n"
            "[integrator]\nsteps_per_ns = 110\nrichardson = false\n"
        )
        out = tmp_path / "results"
        assert main(["--config", str(toml), "--stage", "gate", "--out", str(out)]) == 0
        payload = json.loads((out / "gate.json").read_text())
        assert 0.0 < payload["result"]["infidelity"] < 0.1
        assert payload["result"]["pulse"]["tau"] == pytest.approx(30.0 / 2.2)
        assert "leakage_budget" in payload["result"]

    def test_lindblad_stage_requires_dissipation(self, tmp_path):
        from frfsim.cli import main

        toml = tmp_path / "bad.toml"
        toml.write_text('[circuit]\npreset = "table1-main"\n[pulse]\nt_gate = 30.0\n')
        assert main(["--config", str(toml), "--stage", "lindblad",
                     "--out", str(tmp_path / "r")]) == 2

    def test_sweep_flux_stage(self, tmp_path):
        from frfsim.cli import main

        toml = tmp_path / "flux.toml"
        toml.write_text(
            '[circuit]\npreset = "table1-main"\n'
            "[pulse]\nt_gate = 30.0\n"
            "[truncation]\ndressed_dim = 28\n"
            "[integrator]\nsteps_per_ns = 110\nrichardson = false\n"
            "[sweep]\nkind = \"flux\"\ngrid = [0.0, 40.0]\n"
        )
        out = tmp_path / "results"
        assert main(["--config", str(toml), "--stage", "sweep-flux", "--out", str(out)]) == 0
        payload = json.loads((out / "sweep_flux.json").read_text())
        assert len(payload["result"]["rows"]) == 2
        assert payload["result"]["sigma_markers"]["sigma_uphi0_A5"] == pytest.approx(24.6, abs=0.3)
        text = (out / "sweep_flux.csv").read_text()
        assert text.splitlines()[0] == "offset_uphi0,offset_rad,infidelity,leakage"
