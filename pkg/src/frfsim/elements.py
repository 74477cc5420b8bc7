"""Single-element spectra: fluxonium qubits and the linear resonator coupler.

The fluxonium Hamiltonian (H/h, GHz) is

    H = 4 E_C n^2 + (E_L/2) phi^2 - E_J cos(phi + phi_ext)

diagonalized in the harmonic-oscillator basis of the L-C subsystem, with the
cosine evaluated through the exact matrix exponential of phi.  At the sweet
spot phi_ext = pi the junction term becomes +E_J cos(phi), producing the
symmetric double well whose lowest doublet forms the computational states.

The resonator spectrum is built analytically: a ladder with exact spacing
omega_c and charge operator n_c = sqrt(R_K/(16 pi Z_r)) * i(c+ - c).
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh, expm

from .constants import resonator_charge_zpf

# Lowest levels whose convergence is verified on every diagonalization.
CONVERGENCE_LEVELS = 10
# Maximum admissible shift (GHz) of a converged level when the basis grows by 20%.
CONVERGENCE_TOL_GHZ = 1.0e-6


class BasisUnderflowError(RuntimeError):
    """Raised when the oscillator basis is too small for converged low levels."""


@dataclass(frozen=True)
class FluxoniumSpec:
    """Fluxonium circuit energies (GHz) and external flux (radians)."""

    e_c: float
    e_j: float
    e_l: float
    phi_ext: float = np.pi
    basis_dim: int = 110

    def __post_init__(self):
        if self.e_c <= 0 or self.e_l <= 0 or self.e_j < 0:
            raise ValueError("e_c and e_l must be positive, e_j non-negative")
        if not np.isfinite(self.phi_ext):
            raise ValueError("phi_ext must be finite")
        if self.basis_dim < 20:
            raise ValueError("basis_dim must be at least 20")


@dataclass(frozen=True)
class ResonatorSpec:
    """Linear resonator: bare frequency (GHz), impedance (Ohm), photon cutoff."""

    omega_c: float
    impedance: float
    basis_dim: int = 10

    def __post_init__(self):
        if self.omega_c <= 0:
            raise ValueError("omega_c must be positive")
        if self.impedance <= 0:
            raise ValueError("impedance must be positive")
        if self.basis_dim < 5:
            raise ValueError("basis_dim must be at least 5")

    @property
    def charge_zpf(self):
        return resonator_charge_zpf(self.impedance)


@dataclass(frozen=True)
class ElementSpectrum:
    """Eigen-data of a single element in its own (ground-subtracted) eigenbasis.

    energies are ascending with energies[0] == 0; charge_matrix holds
    <j| n |k>; phase_matrix holds <j| phi |k> (fluxonium only, else None).
    converged_levels counts levels validated against a 20% larger basis.
    """

    energies: np.ndarray
    charge_matrix: np.ndarray
    phase_matrix: np.ndarray | None = None
    converged_levels: int = field(default=CONVERGENCE_LEVELS)

    def transition(self, j, k):
        """Transition frequency energies[k] - energies[j] (GHz)."""
        return self.energies[k] - self.energies[j]


def _fluxonium_hamiltonian(spec: FluxoniumSpec, dim: int):
    """Return (H, n, phi) matrices in the L-C oscillator basis (all real except n)."""
    phi_zpf = (2.0 * spec.e_c / spec.e_l) ** 0.25
    n_zpf = (spec.e_l / (32.0 * spec.e_c)) ** 0.25
    k = np.arange(dim)
    sq = np.sqrt(k[1:])
    a_plus_adag = np.zeros((dim, dim))
    a_plus_adag[k[1:], k[1:] - 1] = sq
    a_plus_adag[k[1:] - 1, k[1:]] = sq
    phi = phi_zpf * a_plus_adag
    # n = i * n_zpf * (a+ - a): imaginary antisymmetric
    n_imag = np.zeros((dim, dim))
    n_imag[k[1:], k[1:] - 1] = n_zpf * sq
    n_imag[k[1:] - 1, k[1:]] = -n_zpf * sq

    omega_lc = np.sqrt(8.0 * spec.e_c * spec.e_l)
    h = np.diag(omega_lc * (k + 0.5)).astype(float)
    if spec.e_j != 0.0:
        u = expm(1j * phi)  # unitary since phi is real symmetric
        cos_phi, sin_phi = u.real, u.imag
        h -= spec.e_j * (np.cos(spec.phi_ext) * cos_phi - np.sin(spec.phi_ext) * sin_phi)
    return h, 1j * n_imag, phi


def _gauge_fix(vectors):
    """Make each eigenvector's largest-magnitude component real positive (sign fix)."""
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def _diagonalize(spec: FluxoniumSpec, dim: int):
    h, n_op, phi_op = _fluxonium_hamiltonian(spec, dim)
    energies, vectors = eigh(h)
    vectors = _gauge_fix(vectors)
    return energies - energies[0], vectors, n_op, phi_op


def diagonalize_fluxonium(spec: FluxoniumSpec, check_convergence: bool = True) -> ElementSpectrum:
    """Diagonalize a fluxonium and return its spectrum and operator matrix elements.

    The ground energy is subtracted.  When check_convergence is set the lowest
    CONVERGENCE_LEVELS levels are compared against a 20% larger basis and a
    BasisUnderflowError is raised on shifts above 1 kHz.
    """
    energies, vectors, n_op, phi_op = _diagonalize(spec, spec.basis_dim)
    converged = spec.basis_dim
    if check_convergence:
        bigger = int(np.ceil(1.2 * spec.basis_dim))
        energies_ref, _, _, _ = _diagonalize(spec, bigger)
        nlev = min(CONVERGENCE_LEVELS, spec.basis_dim)
        shifts = np.abs(energies[:nlev] - energies_ref[:nlev])
        if np.any(shifts > CONVERGENCE_TOL_GHZ):
            raise BasisUnderflowError(
                f"lowest-{nlev} levels shift up to {shifts.max():.3e} GHz when "
                f"basis_dim grows from {spec.basis_dim} to {bigger}; increase basis_dim"
            )
        all_shifts = np.abs(energies - energies_ref[: spec.basis_dim])
        bad = np.nonzero(all_shifts > CONVERGENCE_TOL_GHZ)[0]
        converged = int(bad[0]) if bad.size else spec.basis_dim
    charge = vectors.conj().T @ n_op @ vectors
    phase = vectors.T @ phi_op @ vectors
    return ElementSpectrum(
        energies=energies,
        charge_matrix=charge,
        phase_matrix=phase,
        converged_levels=converged,
    )


def resonator_spectrum(spec: ResonatorSpec) -> ElementSpectrum:
    """Analytic resonator spectrum: energies k*omega_c, bosonic charge ladder."""
    dim = spec.basis_dim
    energies = spec.omega_c * np.arange(dim, dtype=float)
    k = np.arange(1, dim)
    charge = np.zeros((dim, dim), dtype=complex)
    zpf = spec.charge_zpf
    # n_c = zpf * i (c+ - c)
    charge[k, k - 1] = 1j * zpf * np.sqrt(k)
    charge[k - 1, k] = -1j * zpf * np.sqrt(k)
    return ElementSpectrum(
        energies=energies, charge_matrix=charge, phase_matrix=None, converged_levels=dim
    )


def charge_matrix_element(spectrum: ElementSpectrum, j: int, k: int) -> complex:
    """Charge matrix element n_{jk} between eigenstates j and k.

    The gauge is fixed at diagonalization (largest eigenvector component real
    positive) so signs are reproducible; magnitudes are gauge invariant.
    """
    nlev = spectrum.converged_levels
    if not (0 <= j < nlev and 0 <= k < nlev):
        raise IndexError(f"levels ({j}, {k}) outside converged range [0, {nlev})")
    return complex(spectrum.charge_matrix[j, k])
