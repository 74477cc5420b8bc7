"""Capacitance networks: from physical capacitances to circuit energies and couplings.

Supports the grounded 3-node layout (fluxonium A, resonator, fluxonium B) and
the differential 5-node layout with its sum/difference mode transform.  The
kinetic form (1/2)(2e)^2 n^T C^-1 n maps onto 4 E_C,i n_i^2 + sum J_ij n_i n_j,
giving

    E_C,i [GHz] = (e^2/2h) (C^-1)_{ii},    J_ij [GHz] = 4 (e^2/h) (C^-1)_{ij}

with capacitances in fF.  The resonator is specified by its unloaded design
pair (Z_in, omega_in); loading by the coupling capacitors lowers both the
output impedance and frequency through the resonator-diagonal entry of C^-1.
"""

from dataclasses import dataclass

import numpy as np

from .constants import (
    EC_PER_INV_FF,
    J_PER_INV_FF,
    resonator_capacitance_ff,
    resonator_inductance_nh,
)


class SingularNetworkError(RuntimeError):
    """Raised when the (truncated) capacitance matrix cannot be inverted."""


@dataclass(frozen=True)
class CapacitanceNetwork:
    """Capacitances in fF; resonator given by its unloaded (Z_in, omega_in) design point."""

    topology: str
    c_f: float
    c_c: float
    c_ab: float
    resonator_z_in: float
    resonator_omega_in: float
    c_fp: float | None = None

    def __post_init__(self):
        if self.topology not in ("grounded", "differential"):
            raise ValueError("topology must be 'grounded' or 'differential'")
        for name in ("c_f", "c_c", "c_ab"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.topology == "differential":
            if self.c_fp is None or self.c_fp < 0:
                raise ValueError("differential topology requires non-negative c_fp")
        if self.resonator_z_in <= 0 or self.resonator_omega_in <= 0:
            raise ValueError("resonator design impedance and frequency must be positive")

    @property
    def c_r(self):
        """Unloaded resonator capacitance (fF)."""
        return resonator_capacitance_ff(self.resonator_z_in, self.resonator_omega_in)

    @property
    def l_r(self):
        """Resonator inductance (nH), unchanged by capacitive loading."""
        return resonator_inductance_nh(self.resonator_z_in, self.resonator_omega_in)


@dataclass(frozen=True)
class EffectiveCircuit:
    """Loaded circuit energies (GHz), couplings (GHz) and resonator (GHz, Ohm)."""

    e_c_a: float
    e_c_b: float
    omega_c_out: float
    z_c_out: float
    j_ac: float
    j_bc: float
    j_ab: float


def build_matrix(net: CapacitanceNetwork) -> np.ndarray:
    """Node-basis capacitance matrix: 3x3 grounded or 5x5 differential (fF)."""
    cf, cc, cab, cr = net.c_f, net.c_c, net.c_ab, net.c_r
    if net.topology == "grounded":
        c = np.array(
            [
                [cf + cc + cab, -cc, -cab],
                [-cc, cr + 2 * cc, -cc],
                [-cab, -cc, cf + cc + cab],
            ]
        )
    else:
        cfp = net.c_fp
        c = np.array(
            [
                [cf + cfp, -cf, 0.0, 0.0, 0.0],
                [-cf, cf + cfp + cc + cab, -cc, 0.0, -cab],
                [0.0, -cc, cr + 2 * cc, 0.0, -cc],
                [0.0, 0.0, 0.0, cfp + cf, -cf],
                [0.0, -cab, -cc, -cf, cf + cfp + cc + cab],
            ]
        )
    _check_invertible(c)
    return c


def mode_transform_matrix() -> np.ndarray:
    """Sum/difference transform M for the differential layout (self-inverse)."""
    s = 1.0 / np.sqrt(2.0)
    return np.array(
        [
            [s, s, 0, 0, 0],
            [s, -s, 0, 0, 0],
            [0, 0, 1, 0, 0],
            [0, 0, 0, s, s],
            [0, 0, 0, s, -s],
        ]
    )


def differential_transform(matrix: np.ndarray) -> np.ndarray:
    """Congruence C~ = (M^T)^-1 C M^-1 onto sum/difference fluxonium modes.

    The qubit modes are rows 1 and 4 (0-based), the resonator row 2; rows 0
    and 3 are the discarded sum modes.
    """
    if matrix.shape != (5, 5):
        raise ValueError("differential transform expects a 5x5 matrix")
    m = mode_transform_matrix()
    m_inv = np.linalg.inv(m)
    return m_inv.T @ matrix @ m_inv


def truncate_modes(matrix: np.ndarray, keep=(1, 2, 4)) -> np.ndarray:
    """Drop the sum modes, keeping (qubit A, resonator, qubit B) rows/columns."""
    keep = list(keep)
    return matrix[np.ix_(keep, keep)]


def _check_invertible(matrix):
    cond = np.linalg.cond(matrix)
    if not np.isfinite(cond) or cond > 1e12:
        raise SingularNetworkError(f"capacitance matrix is singular (condition number {cond:.3g})")


def effective_circuit(net: CapacitanceNetwork, l_r: float | None = None) -> EffectiveCircuit:
    """Invert the capacitance matrix and read off energies and couplings.

    For the differential layout the sum modes carry no restoring potential
    (free modes, conserved charge), so they are eliminated by restricting the
    full inverse to the (qubit, resonator, qubit) block rather than by
    truncating the matrix itself; this reproduces the published output rows
    exactly where row truncation does not once the coupling capacitance loads
    the qubit appreciably.
    """
    c = build_matrix(net)
    if net.topology == "differential":
        c_tilde = differential_transform(c)
        _check_invertible(c_tilde)
        c_inv = np.linalg.inv(c_tilde)[np.ix_((1, 2, 4), (1, 2, 4))]
    else:
        _check_invertible(c)
        c_inv = np.linalg.inv(c)

    l_r = net.l_r if l_r is None else l_r
    c_load = 1.0 / c_inv[1, 1]
    omega_out = 1000.0 / (2.0 * np.pi * np.sqrt(l_r * c_load))
    z_out = 1000.0 * np.sqrt(l_r / c_load)
    j_ac = J_PER_INV_FF * c_inv[0, 1]
    j_bc = J_PER_INV_FF * c_inv[1, 2]
    j_ab = J_PER_INV_FF * c_inv[0, 2]
    # qubit-mode sign gauge: make the resonator couplings positive; the product
    # J_ab * J_ac * J_bc is invariant under per-qubit mode-sign flips
    if j_ac < 0:
        j_ac, j_ab = -j_ac, -j_ab
    if j_bc < 0:
        j_bc, j_ab = -j_bc, -j_ab
    return EffectiveCircuit(
        e_c_a=EC_PER_INV_FF * c_inv[0, 0],
        e_c_b=EC_PER_INV_FF * c_inv[2, 2],
        omega_c_out=omega_out,
        z_c_out=z_out,
        j_ac=j_ac,
        j_bc=j_bc,
        j_ab=j_ab,
    )


def circuit_from_network(net: CapacitanceNetwork, e_j, e_l, basis_dim=110, resonator_levels=10):
    """Assemble a full CircuitSpec from a network plus fluxonium (E_J, E_L) pairs."""
    from .composite import CircuitSpec
    from .elements import FluxoniumSpec, ResonatorSpec

    eff = effective_circuit(net)
    return CircuitSpec(
        fluxonium_a=FluxoniumSpec(e_c=eff.e_c_a, e_j=e_j[0], e_l=e_l[0], basis_dim=basis_dim),
        fluxonium_b=FluxoniumSpec(e_c=eff.e_c_b, e_j=e_j[1], e_l=e_l[1], basis_dim=basis_dim),
        resonator=ResonatorSpec(
            omega_c=eff.omega_c_out, impedance=eff.z_c_out, basis_dim=resonator_levels
        ),
        j_ac=eff.j_ac,
        j_bc=eff.j_bc,
        j_ab=eff.j_ab,
    )


def zz_bound_cab(
    net: CapacitanceNetwork,
    threshold: float,
    e_j=(7.1, 7.2),
    e_l=(0.3, 0.3),
    dims=(12, 8, 12),
    c_ab_max: float = 64.0,
    rel_tol: float = 0.02,
) -> float:
    """Largest C_AB (fF) keeping the exact always-on ZZ rate |eta| <= threshold (GHz).

    eta(C_AB) decreases through its cancellation point as C_AB grows, so the
    bound is where eta(C_AB) = -threshold; found by bisection on the full
    pipeline (network -> effective circuit -> coupled diagonalization -> eta).
    Returns inf when even c_ab_max keeps |eta| below the threshold; raises if
    the design point itself already violates it.
    """
    from dataclasses import replace

    from .composite import build_composite, interaction_constants

    if threshold <= 0:
        raise ValueError("threshold must be positive")
    if np.isinf(threshold):
        return np.inf

    def eta_at(c_ab):
        spec = circuit_from_network(replace(net, c_ab=c_ab), e_j=e_j, e_l=e_l)
        return interaction_constants(build_composite(spec, dims=dims)).eta

    lo = net.c_ab
    if abs(eta_at(lo)) > threshold:
        raise RuntimeError(f"|eta| already exceeds {threshold} GHz at the design C_AB = {lo}")
    hi = max(2.0 * lo, 0.05)
    while eta_at(hi) > -threshold:
        lo, hi = hi, 2.0 * hi
        if hi > c_ab_max:
            return np.inf
    while (hi - lo) > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if eta_at(mid) > -threshold:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
