"""Parameter presets: the representative circuit, dissipation sets, capacitance rows.

Circuit presets return CircuitSpec objects; capacitance presets are loaded from
the packaged data file, which mirrors every grounded/differential input row
together with the published output values used by the regression tests.
"""

import json
from importlib import resources

from .capnet import CapacitanceNetwork
from .composite import CircuitSpec
from .elements import FluxoniumSpec, ResonatorSpec
from .lindblad import DissipationSet


def circuit_table1(basis_dim=110, resonator_levels=10) -> CircuitSpec:
    """Representative circuit: E_C=2/2, E_J=7.1/7.2, E_L=0.3/0.3 GHz,
    J_Ac=J_Bc=0.33, J_AB=0.1 GHz, coupler at 7.08 GHz and 190 Ohm."""
    return CircuitSpec(
        fluxonium_a=FluxoniumSpec(e_c=2.0, e_j=7.1, e_l=0.3, basis_dim=basis_dim),
        fluxonium_b=FluxoniumSpec(e_c=2.0, e_j=7.2, e_l=0.3, basis_dim=basis_dim),
        resonator=ResonatorSpec(omega_c=7.08, impedance=190.0, basis_dim=resonator_levels),
        j_ac=0.33,
        j_bc=0.33,
        j_ab=0.1,
    )


# Dissipation rate / temperature rows: (coupler Q, fluxon T1 ms, plasmon T1 us, T mK)
_DISSIPATION_TABLE = {
    "A": (5e6, 1.0, 30.0, 30.0),
    "B": (5e6, 1.0, 30.0, 50.0),
    "C": (5e6, 1.0, 30.0, 100.0),
    "D": (1e6, 0.2, 10.0, 30.0),
    "E": (1e6, 0.2, 10.0, 50.0),
    "F": (1e6, 0.2, 10.0, 100.0),
}


def dissipation_set(label: str) -> DissipationSet:
    """Dissipation preset by row label A-F."""
    key = label.strip().upper()
    if key not in _DISSIPATION_TABLE:
        raise KeyError(f"unknown dissipation set {label!r}; expected one of A-F")
    q, t1_ms, t12_us, t_mk = _DISSIPATION_TABLE[key]
    return DissipationSet(
        label=key, q_factor=q, t1_fluxon_ms=t1_ms, t1_plasmon_us=t12_us, temperature_mk=t_mk
    )


def _load_capnet_rows():
    text = resources.files("frfsim.data").joinpath("capnet_presets.json").read_text()
    return json.loads(text)


def capnet_rows() -> dict:
    """All packaged capacitance rows with their published outputs (for tests/reports)."""
    return _load_capnet_rows()


def capacitance_network(name: str) -> CapacitanceNetwork:
    """Capacitance preset by name (see data/capnet_presets.json for the rows)."""
    rows = _load_capnet_rows()
    if name not in rows:
        raise KeyError(f"unknown capacitance preset {name!r}; available: {sorted(rows)}")
    row = rows[name]["inputs"]
    return CapacitanceNetwork(
        topology=row["topology"],
        c_f=row["c_f"],
        c_c=row["c_c"],
        c_ab=row["c_ab"],
        resonator_z_in=row["z_in"],
        resonator_omega_in=row["omega_in"],
        c_fp=row.get("c_fp"),
    )


# Fluxonium energies that accompany each capacitance row when a full CircuitSpec
# is assembled from it (inductive/junction energies are not set by the network).
_CAPNET_FLUXONIUM = {
    "grounded-main": dict(e_j=(7.1, 7.2), e_l=(0.3, 0.3)),
    "grounded-high-impedance": dict(e_j=(7.1, 7.2), e_l=(0.3, 0.3)),
    "differential-main": dict(e_j=(7.1, 7.2), e_l=(0.3, 0.3)),
    "differential-high-impedance": dict(e_j=(7.1, 7.2), e_l=(0.3, 0.3)),
    "differential-low-ec": dict(e_j=(7.0, 6.9), e_l=(1.0, 1.0)),
}


def fluxonium_energies_for(name: str) -> dict:
    if name not in _CAPNET_FLUXONIUM:
        raise KeyError(f"no fluxonium energies recorded for capacitance preset {name!r}")
    return _CAPNET_FLUXONIUM[name]
