"""Run configuration: TOML parsing, validation, presets, config hashing."""

import hashlib
import json
from dataclasses import dataclass, field

try:
    import tomllib as tomli
except ImportError:  # python < 3.11
    import tomli

from .capnet import CapacitanceNetwork
from .composite import CircuitSpec
from .elements import FluxoniumSpec, ResonatorSpec
from .lindblad import DissipationSet
from .presets import (
    capacitance_network,
    circuit_table1,
    dissipation_set,
    fluxonium_energies_for,
)
from .pulses import PulseSpec


class ConfigError(ValueError):
    """Configuration problem; message names the offending field."""


@dataclass
class RunConfig:
    circuit: CircuitSpec
    pulse: PulseSpec | None
    dissipation: DissipationSet | None
    sweep: dict
    truncation: dict
    integrator: dict
    output: dict
    capnet: CapacitanceNetwork | None = None
    raw: dict = field(default_factory=dict)

    @property
    def dims(self):
        return tuple(self.truncation.get("dims", (12, 8, 12)))

    @property
    def dressed_dim(self):
        return int(self.truncation.get("dressed_dim", 45))

    @property
    def dt(self):
        return 1.0 / float(self.integrator.get("steps_per_ns", 110))

    @property
    def richardson(self):
        return bool(self.integrator.get("richardson", True))

    def config_hash(self):
        """Stable hash of the physics-defining part of the config."""
        body = {
            "circuit": _circuit_dict(self.circuit),
            "truncation": {"dims": list(self.dims), "dressed_dim": self.dressed_dim},
        }
        blob = json.dumps(body, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def echo(self):
        """Full input config for result bundles."""
        return self.raw


def _circuit_dict(spec: CircuitSpec):
    return {
        "fluxonium_a": vars(spec.fluxonium_a).copy(),
        "fluxonium_b": vars(spec.fluxonium_b).copy(),
        "resonator": vars(spec.resonator).copy(),
        "j_ac": spec.j_ac,
        "j_bc": spec.j_bc,
        "j_ab": spec.j_ab,
    }


def _require(table, key, where):
    if key not in table:
        raise ConfigError(f"missing required field '{where}.{key}'")
    return table[key]


def _fluxonium(table, where):
    try:
        return FluxoniumSpec(
            e_c=float(_require(table, "e_c", where)),
            e_j=float(_require(table, "e_j", where)),
            e_l=float(_require(table, "e_l", where)),
            phi_ext=float(table.get("phi_ext", 3.141592653589793)),
            basis_dim=int(table.get("basis_dim", 110)),
        )
    except ValueError as exc:
        raise ConfigError(f"invalid {where}: {exc}") from exc


def build_circuit(table) -> tuple[CircuitSpec, CapacitanceNetwork | None]:
    """One circuit source: a named preset, explicit fields, or a capacitance network."""
    sources = [k for k in ("preset", "capnet", "fluxonium_a") if k in table]
    if len(sources) != 1:
        raise ConfigError(
            "circuit must have exactly one source: 'preset', 'capnet', "
            f"or explicit element tables (found {sources or 'none'})"
        )
    if "preset" in table:
        name = table["preset"]
        if name != "table1-main":
            raise ConfigError(f"unknown circuit preset '{name}' (expected 'table1-main')")
        return circuit_table1(), None
    if "capnet" in table:
        sub = table["capnet"]
        if "preset" in sub:
            net = capacitance_network(sub["preset"])
            energies = fluxonium_energies_for(sub["preset"])
            e_j = tuple(sub.get("e_j", energies["e_j"]))
            e_l = tuple(sub.get("e_l", energies["e_l"]))
        else:
            net = CapacitanceNetwork(
                topology=_require(sub, "topology", "circuit.capnet"),
                c_f=float(_require(sub, "c_f", "circuit.capnet")),
                c_c=float(_require(sub, "c_c", "circuit.capnet")),
                c_ab=float(_require(sub, "c_ab", "circuit.capnet")),
                resonator_z_in=float(_require(sub, "z_in", "circuit.capnet")),
                resonator_omega_in=float(_require(sub, "omega_in", "circuit.capnet")),
                c_fp=float(sub["c_fp"]) if "c_fp" in sub else None,
            )
            e_j = tuple(_require(sub, "e_j", "circuit.capnet"))
            e_l = tuple(_require(sub, "e_l", "circuit.capnet"))
        from .capnet import circuit_from_network

        return circuit_from_network(net, e_j=e_j, e_l=e_l), net
    fa = _fluxonium(_require(table, "fluxonium_a", "circuit"), "circuit.fluxonium_a")
    fb = _fluxonium(_require(table, "fluxonium_b", "circuit"), "circuit.fluxonium_b")
    res = _require(table, "resonator", "circuit")
    resonator = ResonatorSpec(
        omega_c=float(_require(res, "omega_c", "circuit.resonator")),
        impedance=float(_require(res, "impedance", "circuit.resonator")),
        basis_dim=int(res.get("basis_dim", 10)),
    )
    return (
        CircuitSpec(
            fluxonium_a=fa,
            fluxonium_b=fb,
            resonator=resonator,
            j_ac=float(_require(table, "j_ac", "circuit")),
            j_bc=float(_require(table, "j_bc", "circuit")),
            j_ab=float(_require(table, "j_ab", "circuit")),
        ),
        None,
    )


def build_pulse(table) -> PulseSpec | None:
    if not table:
        return None
    if "tau" in table:
        tau = float(table["tau"])
    elif "t_gate" in table:
        tau = float(table["t_gate"]) / 2.2
    else:
        raise ConfigError("pulse needs 'tau' or 't_gate'")
    return PulseSpec(
        tau=tau,
        amplitude=float(table.get("amplitude", 0.02)),
        detuning=float(table.get("detuning", 0.0)),
        drag_scale=float(table.get("drag_scale", 0.0)),
        drag_alpha=float(table.get("drag_alpha", 0.0)),
        amplitude_scale=float(table.get("amplitude_scale", 1.0)),
    )


def build_dissipation(table) -> DissipationSet | None:
    if not table:
        return None
    if "set" in table:
        name = str(table["set"])
        if name.lower().startswith("dissipation-"):
            name = name.split("-", 1)[1]
        return dissipation_set(name)
    return DissipationSet(
        label=str(table.get("label", "custom")),
        q_factor=float(_require(table, "q_factor", "dissipation")),
        t1_fluxon_ms=float(_require(table, "t1_fluxon_ms", "dissipation")),
        t1_plasmon_us=float(_require(table, "t1_plasmon_us", "dissipation")),
        temperature_mk=float(_require(table, "temperature_mk", "dissipation")),
    )


def _validate_sweep(table):
    if not table:
        return {}
    if "grid" in table and len(table["grid"]) == 0:
        raise ConfigError("sweep.grid must be non-empty")
    return dict(table)


def parse_config(raw: dict) -> RunConfig:
    if "circuit" not in raw:
        raise ConfigError("missing required table 'circuit'")
    circuit, net = build_circuit(raw["circuit"])
    return RunConfig(
        circuit=circuit,
        pulse=build_pulse(raw.get("pulse", {})),
        dissipation=build_dissipation(raw.get("dissipation", {})),
        sweep=_validate_sweep(raw.get("sweep", {})),
        truncation=dict(raw.get("truncation", {})),
        integrator=dict(raw.get("integrator", {})),
        output=dict(raw.get("output", {})),
        capnet=net,
        raw=raw,
    )


def apply_overrides(raw: dict, overrides: list[str]) -> dict:
    """Apply --override key.path=value entries onto the raw config dict."""
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override '{item}' is not of the form key=value")
        path, value = item.split("=", 1)
        keys = path.strip().split(".")
        node = raw
        for k in keys[:-1]:
            node = node.setdefault(k, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override path '{path}' crosses a non-table value")
        node[keys[-1]] = _coerce(value.strip())
    return raw


def _coerce(text):
    lowered = text.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    if text.startswith("[") and text.endswith("]"):
        inner = text[1:-1].strip()
        return [_coerce(part.strip()) for part in inner.split(",")] if inner else []
    return text.strip("\"'")


def load_config(path, overrides=()) -> RunConfig:
    """Read, override and validate a TOML run configuration."""
    try:
        with open(path, "rb") as fh:
            raw = tomli.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"config parse error in {path}: {exc}") from exc
    if overrides:
        raw = apply_overrides(raw, list(overrides))
    return parse_config(raw)
