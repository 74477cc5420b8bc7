"""Physical constants and unit conversions.

Unit conventions used throughout the package: energies and frequencies are
cyclic and in GHz (Hamiltonians are H/h), times in ns, phases in radians,
capacitances in fF, inductances in nH, impedances in Ohm.  A product
(GHz * ns) is a number of cycles; factors of 2*pi appear explicitly wherever
an angular rotation is computed.
"""

import numpy as np

# Resistance quantum h/e^2 (Ohm).
R_K = 25812.807

# Boltzmann constant over Planck constant, GHz per Kelvin.
KB_OVER_H_GHZ_PER_K = 20.836619

# e^2/(2h) expressed so that E_C [GHz] = EC_PER_INV_FF * (C^-1)_{ii} [1/fF].
# E_C = e^2/(2C)/h = 1/(2 R_K C); with C in fF this evaluates to ~19.37 GHz*fF.
EC_PER_INV_FF = 1.0e6 / (2.0 * R_K)

# Charge coupling J_ij [GHz] = J_PER_INV_FF * (C^-1)_{ij} [1/fF]
# from the kinetic form (1/2)(2e)^2 n^T C^-1 n mapped onto 4*E_C*n^2 + J*n_i*n_j.
J_PER_INV_FF = 8.0 * EC_PER_INV_FF


def resonator_charge_zpf(impedance):
    """Charge zero-point amplitude of a linear resonator, n_c = zpf * i(c+ - c).

    Defined by sqrt(R_K / (16 pi Z_r)); dimensionless.
    """
    return np.sqrt(R_K / (16.0 * np.pi * impedance))


def resonator_capacitance_ff(impedance, omega_ghz):
    """Capacitance (fF) of a resonator with given impedance (Ohm) and frequency (GHz)."""
    return 1.0e6 / (2.0 * np.pi * impedance * omega_ghz)


def resonator_inductance_nh(impedance, omega_ghz):
    """Inductance (nH) of a resonator with given impedance (Ohm) and frequency (GHz)."""
    return impedance / (2.0 * np.pi * omega_ghz)
