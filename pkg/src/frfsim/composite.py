"""Coupled fluxonium-resonator-fluxonium system.

Builds the product-basis Hamiltonian

    H = H_A + H_c + H_B + J_Ac n_A n_c + J_Bc n_B n_c + J_AB n_A n_B

in the composition order (fluxonium A) x (coupler) x (fluxonium B), using the
per-element eigenbases pre-truncated to (12, 8, 12) levels by default.  Each
dressed eigenstate |i,k,j> is labelled by the bare product state of maximum
overlap; greedy assignment in descending overlap order keeps the labelling a
bijection and makes collisions diagnosable.

All charge operators are purely off-diagonal-imaginary in the element
eigenbases, so the assembled Hamiltonian is real symmetric; eigenvectors are
gauge-fixed by making the largest-magnitude component positive.
"""

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .elements import (
    ElementSpectrum,
    FluxoniumSpec,
    ResonatorSpec,
    diagonalize_fluxonium,
    resonator_spectrum,
)

DEFAULT_DIMS = (12, 8, 12)

# Overlap thresholds for label quality.  The hard error is enforced on the
# labels gate metrics consume; spectator states at the same energies hybridize
# far past 50/50 by design (that mixing is the inherited nonlinearity), so they
# only show up in label_quality() tables.
OVERLAP_WARN = 0.5
OVERLAP_ERROR = 0.34
GATE_LABELS = tuple(
    [(i, k, j) for i in (0, 1) for k in (0, 1) for j in (0, 1)] + [(1, 2, 1)]
)


class LabelCollisionError(RuntimeError):
    """Raised when the max-overlap labelling degenerates on retained states."""


class MissingStateError(KeyError):
    """Raised when a required bare label is not present in the retained set."""


class LabelQualityWarning(UserWarning):
    pass


@dataclass(frozen=True)
class CircuitSpec:
    """Full circuit: two fluxonium specs, resonator spec, pairwise charge couplings (GHz)."""

    fluxonium_a: FluxoniumSpec
    fluxonium_b: FluxoniumSpec
    resonator: ResonatorSpec
    j_ac: float
    j_bc: float
    j_ab: float

    def __post_init__(self):
        for j in (self.j_ac, self.j_bc, self.j_ab):
            if not np.isfinite(j):
                raise ValueError("couplings must be finite")

    def scaled_couplings(self, s: float) -> "CircuitSpec":
        """Return a copy with all couplings multiplied by s."""
        return replace(self, j_ac=s * self.j_ac, j_bc=s * self.j_bc, j_ab=s * self.j_ab)


@dataclass(frozen=True)
class InteractionConstants:
    """Static interaction parameters extracted from a labelled dressed spectrum (GHz)."""

    chi: float
    chi_ij: dict
    alpha: float
    eta: float
    h_a: float
    h_b: float
    chi_reference: str = "bare"

    def delta_chi(self, i, j):
        """delta_chi_ij = chi - chi_ij, independent of the coupler reference."""
        return self.chi - self.chi_ij[(i, j)]


class DressedSpectrum:
    """Labelled eigen-decomposition of the coupled Hamiltonian.

    energies are ground-subtracted and ascending over the retained states;
    vectors hold the retained eigenvectors as columns in the bare product
    basis.  labels maps bare triples (i, k, j) to retained dressed indices.
    """

    def __init__(self, spec, dims, energies, vectors, labels, overlaps,
                 element_spectra, truncation_dim, trace_full, ground_energy=0.0):
        self.spec = spec
        self.dims = dims
        self.energies = energies
        self.vectors = vectors
        self.labels = labels
        self.overlaps = overlaps
        self.element_spectra = element_spectra
        self.truncation_dim = truncation_dim
        self.trace_full = trace_full
        self.ground_energy = ground_energy
        self._op_cache = {}

    # -- bare-basis bookkeeping -------------------------------------------------

    def flat_index(self, i, k, j):
        na, nc, nb = self.dims
        if not (0 <= i < na and 0 <= k < nc and 0 <= j < nb):
            raise IndexError(f"bare label ({i},{k},{j}) outside dims {self.dims}")
        return (i * nc + k) * nb + j

    def dressed_index(self, i, k, j):
        """Retained dressed index carrying bare label (i, k, j)."""
        try:
            return self.labels[(i, k, j)]
        except KeyError:
            raise MissingStateError(
                f"bare label ({i},{k},{j}) not in the retained {self.truncation_dim} states"
            ) from None

    def energy(self, i, k, j):
        return self.energies[self.dressed_index(i, k, j)]

    def overlap(self, i, k, j):
        """Squared overlap of dressed state labelled (i,k,j) with its bare state."""
        return self.overlaps[(i, k, j)]

    def bare_weight(self, bare, dressed_index):
        """|<bare (i,k,j) | dressed>|^2 for any bare triple and retained index."""
        return float(np.abs(self.vectors[self.flat_index(*bare), dressed_index]) ** 2)

    @property
    def computational_labels(self):
        return [(0, 0, 0), (0, 0, 1), (1, 0, 0), (1, 0, 1)]

    def computational_indices(self):
        """Retained dressed indices of |00>, |01>, |10>, |11> (A-index first)."""
        return [self.dressed_index(i, 0, j) for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)]]

    # -- operators ---------------------------------------------------------------

    def embed(self, op, which):
        """Embed a single-element operator into the bare product basis."""
        na, nc, nb = self.dims
        mats = {"a": np.eye(na), "c": np.eye(nc), "b": np.eye(nb)}
        if which not in mats:
            raise ValueError("which must be one of 'a', 'c', 'b'")
        if op.shape != mats[which].shape:
            raise ValueError(f"operator shape {op.shape} does not match element '{which}'")
        mats[which] = op
        return np.kron(np.kron(mats["a"], mats["c"]), mats["b"])

    def charge_operator(self, which):
        """Bare charge operator n_a / n_c / n_b in the product basis."""
        key = ("charge", which)
        if key not in self._op_cache:
            na, nc, nb = self.dims
            dim = {"a": na, "c": nc, "b": nb}[which]
            n_el = self.element_spectra[which].charge_matrix[:dim, :dim]
            self._op_cache[key] = self.embed(n_el, which)
        return self._op_cache[key]

    def dressed_charge_operator(self, which):
        return dressed_operator(self, self.charge_operator(which))


def dressed_operator(spectrum: DressedSpectrum, bare_op: np.ndarray) -> np.ndarray:
    """Rotate a product-basis operator into the retained dressed basis, V+ O V.

    Hermiticity is preserved to 1e-10 and enforced by symmetrization.
    """
    v = spectrum.vectors
    if bare_op.shape != (v.shape[0], v.shape[0]):
        raise ValueError(f"operator shape {bare_op.shape} incompatible with product dim {v.shape[0]}")
    out = v.conj().T @ bare_op @ v
    hermitian_input = np.allclose(bare_op, bare_op.conj().T, atol=1e-12)
    if hermitian_input:
        defect = np.linalg.norm(out - out.conj().T) / max(np.linalg.norm(out), 1e-300)
        if defect > 1e-10:
            raise RuntimeError(f"Hermiticity lost in dressed rotation (defect {defect:.2e})")
        out = 0.5 * (out + out.conj().T)
    return out


def _assemble_hamiltonian(spec: CircuitSpec, dims, element_spectra):
    na, nc, nb = dims
    ea = element_spectra["a"].energies[:na]
    ec = element_spectra["c"].energies[:nc]
    eb = element_spectra["b"].energies[:nb]
    # imaginary parts of the charge operators; (i x)(i y) = -(x y) keeps H real
    nai = element_spectra["a"].charge_matrix[:na, :na].imag
    nci = element_spectra["c"].charge_matrix[:nc, :nc].imag
    nbi = element_spectra["b"].charge_matrix[:nb, :nb].imag
    ia, ic, ib = np.eye(na), np.eye(nc), np.eye(nb)

    def k3(x, y, z):
        return np.kron(np.kron(x, y), z)

    h = k3(np.diag(ea), ic, ib) + k3(ia, np.diag(ec), ib) + k3(ia, ic, np.diag(eb))
    h -= spec.j_ac * k3(nai, nci, ib)
    h -= spec.j_bc * k3(ia, nci, nbi)
    h -= spec.j_ab * k3(nai, ic, nbi)
    return h


def _greedy_labels(overlap, n_retained):
    """Assign bare labels to dressed states greedily in descending overlap order."""
    dim = overlap.shape[0]
    order = np.argsort(overlap, axis=None)[::-1]
    bare_of = np.full(dim, -1, dtype=int)
    dressed_of = np.full(dim, -1, dtype=int)
    assigned = 0
    for flat in order:
        b, d = divmod(int(flat), dim)
        if bare_of[d] >= 0 or dressed_of[b] >= 0:
            continue
        bare_of[d] = b
        dressed_of[b] = d
        assigned += 1
        if assigned == dim:
            break
    return bare_of, dressed_of


def build_composite(spec: CircuitSpec, dims=DEFAULT_DIMS, truncation_dim=None,
                    strict_labels=True) -> DressedSpectrum:
    """Diagonalize the coupled circuit and label dressed states by maximum overlap.

    dims is the per-element pre-truncation (A, coupler, B).  truncation_dim
    selects how many lowest dressed states are retained (default: all).
    strict_labels=False downgrades gate-label quality errors to warnings,
    for exactly degenerate circuits whose spectator labels are ill-defined.
    """
    element_spectra = {
        "a": diagonalize_fluxonium(spec.fluxonium_a),
        "c": resonator_spectrum(
            ResonatorSpec(spec.resonator.omega_c, spec.resonator.impedance, dims[1])
        ),
        "b": diagonalize_fluxonium(spec.fluxonium_b),
    }
    min_transition = min(
        element_spectra["a"].energies[1],
        element_spectra["b"].energies[1],
        spec.resonator.omega_c,
    )
    max_j = max(abs(spec.j_ac), abs(spec.j_bc), abs(spec.j_ab))
    if max_j >= min_transition:
        warnings.warn(
            f"coupling {max_j:.3g} GHz exceeds the smallest element transition "
            f"{min_transition:.3g} GHz; dispersive treatment may be unreliable",
            UserWarning,
            stacklevel=2,
        )

    h = _assemble_hamiltonian(spec, dims, element_spectra)
    trace_full = float(np.trace(h))
    energies, vectors = np.linalg.eigh(h)
    # gauge: largest-magnitude component of each column positive
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    vectors = vectors * signs
    ground_energy = float(energies[0])
    energies = energies - energies[0]

    overlap = vectors**2
    bare_of, _ = _greedy_labels(overlap, vectors.shape[0])

    full_dim = vectors.shape[0]
    d_keep = full_dim if truncation_dim is None else int(truncation_dim)
    if not 1 <= d_keep <= full_dim:
        raise ValueError(f"truncation_dim must be in [1, {full_dim}]")

    na, nc, nb = dims
    labels = {}
    overlaps = {}
    for d in range(d_keep):
        b = int(bare_of[d])
        i, rem = divmod(b, nc * nb)
        k, j = divmod(rem, nb)
        labels[(i, k, j)] = d
        overlaps[(i, k, j)] = float(overlap[b, d])

    spectrum = DressedSpectrum(
        spec=spec,
        dims=dims,
        energies=energies[:d_keep].copy(),
        vectors=vectors[:, :d_keep].copy(),
        labels=labels,
        overlaps=overlaps,
        element_spectra=element_spectra,
        truncation_dim=d_keep,
        trace_full=trace_full,
        ground_energy=ground_energy,
    )
    spectrum._all_energies = energies  # pre-truncation, for the trace sum rule
    _validate_labels(spectrum, strict=strict_labels)
    return spectrum


def _validate_labels(spectrum: DressedSpectrum, strict=True):
    """Warn below OVERLAP_WARN, fail below OVERLAP_ERROR on gate-relevant labels."""
    bad = []
    for lbl in GATE_LABELS:
        if lbl not in spectrum.labels:
            continue
        w = spectrum.overlaps[lbl]
        if w < OVERLAP_ERROR:
            bad.append((lbl, spectrum.labels[lbl], w))
        elif w < OVERLAP_WARN:
            warnings.warn(
                f"dressed state {spectrum.labels[lbl]} labelled {lbl} has overlap "
                f"{w:.3f} < {OVERLAP_WARN}",
                LabelQualityWarning,
                stacklevel=2,
            )
    if bad:
        table = "\n".join(f"  label {lbl} -> dressed {d}: overlap {w:.3f}" for lbl, d, w in bad)
        message = (
            "bare-label assignment failed on gate-relevant states "
            f"(overlap below {OVERLAP_ERROR}):\n{table}"
        )
        if strict:
            raise LabelCollisionError(message)
        warnings.warn(message, LabelQualityWarning, stacklevel=2)


def truncate_dressed(spectrum: DressedSpectrum, d: int) -> DressedSpectrum:
    """Retain the d lowest dressed states (labels, vectors and energies restricted)."""
    if d > spectrum.truncation_dim:
        raise ValueError(f"cannot grow truncation from {spectrum.truncation_dim} to {d}")
    if d < 16:
        raise ValueError("gate metrics need at least the 16 lowest dressed states")
    if d == spectrum.truncation_dim:
        return spectrum
    labels = {lbl: i for lbl, i in spectrum.labels.items() if i < d}
    overlaps = {lbl: spectrum.overlaps[lbl] for lbl in labels}
    out = DressedSpectrum(
        spec=spectrum.spec,
        dims=spectrum.dims,
        energies=spectrum.energies[:d].copy(),
        vectors=spectrum.vectors[:, :d].copy(),
        labels=labels,
        overlaps=overlaps,
        element_spectra=spectrum.element_spectra,
        truncation_dim=d,
        trace_full=spectrum.trace_full,
        ground_energy=spectrum.ground_energy,
    )
    _validate_labels(out)
    return out


def interaction_constants(spectrum: DressedSpectrum, chi_reference="bare") -> InteractionConstants:
    """Extract chi_ij, alpha, eta and the plasmon-coupler hybridizations.

    chi_ij = E(i,1,j) - E(i,0,j) - omega_ref, with omega_ref the bare (loaded)
    resonator frequency by default, or the dressed (0,1,0)-(0,0,0) splitting
    when chi_reference == "dressed-00" (then chi_00 == 0 identically).  Only
    the differences delta_chi_ij are consumed downstream.
    """
    e = spectrum.energy
    if chi_reference == "bare":
        omega_ref = spectrum.spec.resonator.omega_c
    elif chi_reference == "dressed-00":
        omega_ref = e(0, 1, 0) - e(0, 0, 0)
    else:
        raise ValueError("chi_reference must be 'bare' or 'dressed-00'")

    chi_ij = {}
    for i in (0, 1):
        for j in (0, 1):
            chi_ij[(i, j)] = e(i, 1, j) - e(i, 0, j) - omega_ref
    chi = chi_ij.pop((1, 1))
    alpha = (e(1, 2, 1) - e(1, 1, 1)) - (e(1, 1, 1) - e(1, 0, 1))
    eta = e(1, 0, 1) - e(1, 0, 0) - e(0, 0, 1) + e(0, 0, 0)
    d111 = spectrum.dressed_index(1, 1, 1)
    h_a = spectrum.bare_weight((2, 0, 1), d111)
    h_b = spectrum.bare_weight((1, 0, 2), d111)
    return InteractionConstants(
        chi=chi, chi_ij=chi_ij, alpha=alpha, eta=eta, h_a=h_a, h_b=h_b,
        chi_reference=chi_reference,
    )


def save_spectrum(path, spectrum: DressedSpectrum):
    """Serialize a labelled spectrum to .npz (element spectra are recomputed on load)."""
    label_rows = np.array(
        [[i, k, j, d] for (i, k, j), d in spectrum.labels.items()], dtype=int
    )
    weights = np.array([spectrum.overlaps[(i, k, j)] for (i, k, j) in spectrum.labels])
    np.savez_compressed(
        path,
        dims=np.array(spectrum.dims),
        energies=spectrum.energies,
        vectors=spectrum.vectors,
        labels=label_rows,
        overlaps=weights,
        trace_full=spectrum.trace_full,
        ground_energy=spectrum.ground_energy,
    )


def load_spectrum(path, spec: CircuitSpec) -> DressedSpectrum:
    """Rebuild a DressedSpectrum saved by save_spectrum for the same circuit."""
    data = np.load(path)
    dims = tuple(int(v) for v in data["dims"])
    element_spectra = {
        "a": diagonalize_fluxonium(spec.fluxonium_a),
        "c": resonator_spectrum(
            ResonatorSpec(spec.resonator.omega_c, spec.resonator.impedance, dims[1])
        ),
        "b": diagonalize_fluxonium(spec.fluxonium_b),
    }
    labels = {}
    overlaps = {}
    for row, w in zip(data["labels"], data["overlaps"]):
        i, k, j, d = (int(v) for v in row)
        labels[(i, k, j)] = d
        overlaps[(i, k, j)] = float(w)
    return DressedSpectrum(
        spec=spec,
        dims=dims,
        energies=data["energies"],
        vectors=data["vectors"],
        labels=labels,
        overlaps=overlaps,
        element_spectra=element_spectra,
        truncation_dim=len(data["energies"]),
        trace_full=float(data["trace_full"]),
        ground_energy=float(data["ground_energy"]),
    )


def spectrum_report(spectrum: DressedSpectrum, n_states=None) -> dict:
    """JSON-ready report: labelled energies, overlaps, interaction constants."""
    n_states = spectrum.truncation_dim if n_states is None else n_states
    by_index = {d: lbl for lbl, d in spectrum.labels.items()}
    states = []
    for d in range(min(n_states, spectrum.truncation_dim)):
        lbl = by_index.get(d)
        states.append(
            {
                "index": d,
                "energy_ghz": float(spectrum.energies[d]),
                "label": list(lbl) if lbl is not None else None,
                "overlap": spectrum.overlaps.get(lbl) if lbl is not None else None,
            }
        )
    consts = interaction_constants(spectrum)
    return {
        "truncation_dim": spectrum.truncation_dim,
        "dims": list(spectrum.dims),
        "states": states,
        "constants": {
            "chi_ghz": consts.chi,
            "chi_ij_ghz": {f"{i}{j}": v for (i, j), v in consts.chi_ij.items()},
            "delta_chi_ghz": {f"{i}{j}": consts.delta_chi(i, j) for (i, j) in consts.chi_ij},
            "alpha_ghz": consts.alpha,
            "eta_ghz": consts.eta,
            "h_a": consts.h_a,
            "h_b": consts.h_b,
            "chi_reference": consts.chi_reference,
        },
    }
