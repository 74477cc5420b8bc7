"""Command-line harness: stage dispatch, result bundles, cached spectra.

Stages produce JSON (machine) and CSV (plotting) bundles under the output
directory, always echoing the input config, package version and timing.
Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .composite import build_composite, interaction_constants, spectrum_report, truncate_dressed
from .config import ConfigError, load_config
from .pulses import PulseSpec

STAGES = (
    "spectrum",
    "constants",
    "perturb-compare",
    "gate",
    "optimize",
    "sweep-tg",
    "sweep-flux",
    "sweep-ej",
    "lindblad",
    "capnet",
    "fit-scaling",
)

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _spectrum_cache(config, out_dir):
    """Build (or load) the labelled dressed spectrum keyed by the config hash."""
    from frfsim.composite import load_spectrum, save_spectrum

    cache_dir = Path(out_dir) / "cache"
    cache_dir.mkdir(parents=True, exist_ok=True)
    key = config.config_hash()
    path = cache_dir / f"spectrum_{key}.npz"
    if path.exists():
        try:
            return load_spectrum(path, config.circuit)
        except Exception:
            path.unlink()
    spectrum = truncate_dressed(
        build_composite(config.circuit, dims=config.dims), config.dressed_dim
    )
    save_spectrum(path, spectrum)
    return spectrum


def _write_json(out_dir, name, payload, config, t_start):
    out = {
        "stage": name,
        "version": __version__,
        "elapsed_s": time.time() - t_start,
        "config": config.echo(),
        "result": payload,
    }
    path = Path(out_dir) / f"{name}.json"
    path.write_text(json.dumps(out, indent=2, default=_json_default))
    return path


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _write_csv(out_dir, name, rows, columns):
    path = Path(out_dir) / f"{name}.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k, "") for k in columns})
    return path


def _pulse_for(config, spectrum, calibrate=True):
    from .propagate import DrivenSystem, calibrate_amplitude

    pulse = config.pulse
    if pulse is None:
        raise ConfigError("this stage needs a [pulse] table")
    if calibrate:
        amp = calibrate_amplitude(
            spectrum, pulse.tau, detuning=pulse.detuning, dt=config.dt, pulse_template=pulse
        )
        pulse = pulse.with_(amplitude=amp)
    return pulse


def stage_spectrum(config, out_dir, workers):
    spectrum = _spectrum_cache(config, out_dir)
    return _as_paths(_write_json(out_dir, "spectrum", spectrum_report(spectrum), config, time.time()))


def stage_constants(config, out_dir, workers):
    t0 = time.time()
    spectrum = _spectrum_cache(config, out_dir)
    consts = interaction_constants(spectrum)
    payload = {
        "chi_ghz": consts.chi,
        "chi_ij_ghz": {f"{i}{j}": v for (i, j), v in consts.chi_ij.items()},
        "delta_chi_ghz": {f"{i}{j}": consts.delta_chi(i, j) for (i, j) in consts.chi_ij},
        "alpha_ghz": consts.alpha,
        "eta_ghz": consts.eta,
        "h_a": consts.h_a,
        "h_b": consts.h_b,
    }
    return _as_paths(_write_json(out_dir, "constants", payload, config, t0))


def stage_perturb_compare(config, out_dir, workers):
    from .perturbation import comparison_rows

    t0 = time.time()
    rows = comparison_rows(config.circuit, dims=config.dims)
    csv_path = _write_csv(out_dir, "perturb_compare", rows,
                          ["quantity", "analytic", "exact", "rel_error"])
    json_path = _write_json(out_dir, "perturb_compare", rows, config, t0)
    return _as_paths(csv_path, json_path)


def stage_gate(config, out_dir, workers):
    from .propagate import DrivenSystem, gate_run, leakage_budget

    t0 = time.time()
    spectrum = _spectrum_cache(config, out_dir)
    pulse = _pulse_for(config, spectrum)
    omega_d = DrivenSystem(spectrum).resonance() + pulse.detuning
    gate, res = gate_run(spectrum, pulse, dt=config.dt, richardson=config.richardson)
    budget = leakage_budget(spectrum, pulse, omega_d, dt=config.dt, richardson=config.richardson)
    payload = {
        "pulse": vars(pulse).copy(),
        "omega_drive_ghz": omega_d,
        "fidelity": gate.fidelity,
        "infidelity": gate.infidelity,
        "leakage": gate.leakage,
        "virtual_z": list(gate.virtual_z),
        "phi_rel": gate.phi_rel,
        "phases": {
            "phi_00": res.phases.phi_00,
            "phi_01": res.phases.phi_01,
            "phi_10": res.phases.phi_10,
            "phi_11": res.phases.phi_11,
        },
        "leakage_budget": {str(k): v for k, v in budget["per_state"].items()},
        "dominant_final_states": {
            str(k): {str(kk): vv for kk, vv in v.items()}
            for k, v in budget["dominant_final_states"].items()
        },
    }
    return _as_paths(_write_json(out_dir, "gate", payload, config, t0))


def stage_optimize(config, out_dir, workers):
    from .propagate import optimize_drive

    t0 = time.time()
    spectrum = _spectrum_cache(config, out_dir)
    pulse = config.pulse or PulseSpec(tau=100.0 / 2.2, amplitude=0.02)
    opt_pulse, gate = optimize_drive(spectrum, pulse, dt=config.dt, workers=workers)
    payload = {
        "pulse": vars(opt_pulse).copy(),
        "infidelity": gate.infidelity,
        "leakage": gate.leakage,
        "virtual_z": list(gate.virtual_z),
        "phi_rel": gate.phi_rel,
    }
    return _as_paths(_write_json(out_dir, "optimize", payload, config, t0))


def stage_sweep_tg(config, out_dir, workers):
    from .propagate import optimize_drive

    t0 = time.time()
    spectrum = _spectrum_cache(config, out_dir)
    grid = config.sweep.get("grid")
    if not grid:
        raise ConfigError("sweep-tg needs sweep.grid (gate times, ns)")
    rows = []
    for t_gate in grid:
        tau = float(t_gate) / 2.2
        pulse, gate = optimize_drive(
            spectrum, PulseSpec(tau=tau, amplitude=0.02), dt=config.dt, workers=workers
        )
        rows.append(
            {
                "t_gate_ns": float(t_gate),
                "infidelity": gate.infidelity,
                "leakage": gate.leakage,
                "detuning_ghz": pulse.detuning,
                "amplitude_ghz": pulse.amplitude,
            }
        )
    csv_path = _write_csv(out_dir, "sweep_tg", rows,
                          ["t_gate_ns", "infidelity", "leakage", "detuning_ghz", "amplitude_ghz"])
    json_path = _write_json(out_dir, "sweep_tg", rows, config, t0)
    return _as_paths(csv_path, json_path)


def stage_sweep_flux(config, out_dir, workers):
    from .robustness import NoiseSpec, flux_offset_sweep, flux_sigma

    t0 = time.time()
    spectrum = _spectrum_cache(config, out_dir)
    pulse = _pulse_for(config, spectrum)
    grid = config.sweep.get("grid")
    if not grid:
        raise ConfigError("sweep-flux needs sweep.grid (offsets, micro-Phi0)")
    offsets = [float(v) * 1e-6 * 2.0 * np.pi for v in grid]
    rows = flux_offset_sweep(
        config.circuit, offsets, pulse, d=config.dressed_dim, dims=config.dims,
        dt=config.dt, richardson=config.richardson,
    )
    markers = {}
    for amp in (1.0, 5.0):
        noise = NoiseSpec(amplitude=amp, f_low=1.0 / 3600.0, f_high=1.0e7)
        markers[f"sigma_uphi0_A{amp:g}"] = flux_sigma(noise)
    csv_path = _write_csv(out_dir, "sweep_flux", rows,
                          ["offset_uphi0", "offset_rad", "infidelity", "leakage"])
    json_path = _write_json(out_dir, "sweep_flux", {"rows": rows, "sigma_markers": markers},
                            config, t0)
    return _as_paths(csv_path, json_path)


def stage_sweep_ej(config, out_dir, workers):
    from .robustness import ej_sweep

    t0 = time.time()
    grid = config.sweep.get("grid")
    taus = config.sweep.get("taus") or (
        [config.pulse.tau] if config.pulse else None
    )
    if not grid or not taus:
        raise ConfigError("sweep-ej needs sweep.grid (E_J values) and a pulse or sweep.taus")
    rows = ej_sweep(
        config.circuit, [float(v) for v in grid], [float(t) for t in taus],
        d=config.dressed_dim, dims=config.dims, dt=config.dt, workers=workers,
    )
    csv_path = _write_csv(out_dir, "sweep_ej", rows,
                          ["e_j", "t_gate", "infidelity", "leakage", "detuning", "amplitude"])
    json_path = _write_json(out_dir, "sweep_ej", rows, config, t0)
    return _as_paths(csv_path, json_path)


def stage_lindblad(config, out_dir, workers):
    from .lindblad import error_budget, loss_estimates
    from .propagate import DrivenSystem, optimize_drive

    t0 = time.time()
    if config.dissipation is None:
        raise ConfigError("lindblad stage needs a [dissipation] table")
    spectrum = _spectrum_cache(config, out_dir)
    grid = config.sweep.get("grid") or ([config.pulse.t_gate] if config.pulse else None)
    if not grid:
        raise ConfigError("lindblad needs sweep.grid (gate times) or a pulse")
    rows = []
    for t_gate in grid:
        tau = float(t_gate) / 2.2
        pulse, gate = optimize_drive(
            spectrum, PulseSpec(tau=tau, amplitude=0.02), dt=config.dt, workers=workers
        )
        omega_d = DrivenSystem(spectrum).resonance() + pulse.detuning
        open_result = error_budget(spectrum, pulse, omega_d, config.dissipation, dt=config.dt)
        estimates = loss_estimates(spectrum, config.dissipation, tau)
        rows.append(
            {
                "set": config.dissipation.label,
                "t_gate_ns": float(t_gate),
                "total_infidelity": open_result.infidelity,
                "coherent_infidelity": open_result.coherent_part,
                "leakage": open_result.leakage,
                "budget_fluxon": open_result.incoherent_budget["fluxon"],
                "budget_plasmon": open_result.incoherent_budget["plasmon"],
                "budget_coupler": open_result.incoherent_budget["coupler"],
                "estimate_fluxon": estimates["fluxon"],
                "estimate_plasmon": estimates["plasmon"],
                "estimate_coupler": estimates["coupler"],
            }
        )
    columns = list(rows[0].keys())
    csv_path = _write_csv(out_dir, "lindblad", rows, columns)
    json_path = _write_json(out_dir, "lindblad", rows, config, t0)
    return _as_paths(csv_path, json_path)


def stage_capnet(config, out_dir, workers):
    from .capnet import build_matrix, effective_circuit

    t0 = time.time()
    if config.capnet is None:
        raise ConfigError("capnet stage needs circuit.capnet")
    eff = effective_circuit(config.capnet)
    payload = {
        "inputs": vars(config.capnet).copy(),
        "matrix_ff": build_matrix(config.capnet).tolist(),
        "outputs": vars(eff).copy(),
    }
    return _as_paths(_write_json(out_dir, "capnet", payload, config, t0))


def stage_fit_scaling(config, out_dir, workers):
    t0 = time.time()
    source = config.sweep.get("source") or str(Path(out_dir) / "sweep_tg.csv")
    rows = []
    with open(source, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            rows.append((float(row["t_gate_ns"]), float(row["infidelity"])))
    if len(rows) < 3:
        raise ConfigError(f"fit-scaling needs at least 3 sweep points in {source}")
    exponent, sigma, prefactor = fit_power_law(rows)
    payload = {
        "source": str(source),
        "exponent": exponent,
        "exponent_sigma": sigma,
        "prefactor": prefactor,
        "n_points": len(rows),
    }
    return _as_paths(_write_json(out_dir, "fit_scaling", payload, config, t0))


def fit_power_law(rows):
    """Least-squares power-law fit eps = C * t^p; returns (p, 1-sigma, C)."""
    t = np.log(np.array([r[0] for r in rows]))
    y = np.log(np.array([r[1] for r in rows]))
    design = np.vstack([t, np.ones_like(t)]).T
    coef, residuals, _, _ = np.linalg.lstsq(design, y, rcond=None)
    p, logc = coef
    dof = max(len(rows) - 2, 1)
    rss = float(residuals[0]) if len(residuals) else float(np.sum((design @ coef - y) ** 2))
    cov = rss / dof * np.linalg.inv(design.T @ design)
    return float(p), float(np.sqrt(cov[0, 0])), float(np.exp(logc))


def _as_paths(*paths):
    return [str(p) for p in paths]


_STAGE_FUNCS = {
    "spectrum": stage_spectrum,
    "constants": stage_constants,
    "perturb-compare": stage_perturb_compare,
    "gate": stage_gate,
    "optimize": stage_optimize,
    "sweep-tg": stage_sweep_tg,
    "sweep-flux": stage_sweep_flux,
    "sweep-ej": stage_sweep_ej,
    "lindblad": stage_lindblad,
    "capnet": stage_capnet,
    "fit-scaling": stage_fit_scaling,
}


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="frfsim",
        description="Fluxonium-resonator-fluxonium CZ gate design pipeline",
    )
    parser.add_argument("--config", help="TOML run configuration")
    parser.add_argument("--stage", required=True, choices=STAGES)
    parser.add_argument("--out", default="results", help="output directory")
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--preset", help="circuit preset shortcut (replaces --config circuit)")
    parser.add_argument("--override", action="append", default=[],
                        metavar="KEY=VALUE", help="config override, dot-path keys")
    args = parser.parse_args(argv)

    try:
        if args.config:
            config = load_config(args.config, overrides=args.override)
        elif args.preset:
            from .config import apply_overrides, parse_config

            raw = {"circuit": {"preset": args.preset}}
            raw = apply_overrides(raw, args.override)
            config = parse_config(raw)
        else:
            raise ConfigError("either --config or --preset is required")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        paths = _STAGE_FUNCS[args.stage](config, out_dir, args.workers)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # numerical / pipeline failure
        print(f"stage '{args.stage}' failed: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    for p in paths:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
