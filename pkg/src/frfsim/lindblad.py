"""Open-system gate simulation: jump operators, master-equation propagation, budgets.

The master equation (GHz/ns units, rates kappa in 1/ns)

    drho/dt = -i 2 pi [H, rho] + kappa_c D(c) rho
              + sum_i kappa_i01 [(n_th+1) D(|0><1|_i) + n_th D(|1><0|_i)] rho
              + kappa_i12 D(|1><2|_i) rho

acts with jump operators on the bare elements, rotated into the truncated
dressed basis, so dressed states inherit rates through their hybridization.
Propagation runs in the dressed rotating frame with the same carrier-exact
coherent step as the unitary module; the dissipator is applied each step in
the lab frame through the exact frame phases.
"""

from dataclasses import dataclass

import numpy as np

from .constants import KB_OVER_H_GHZ_PER_K


@dataclass(frozen=True)
class DissipationSet:
    """Dissipation rates and temperature (Table-style row A-F)."""

    label: str
    q_factor: float
    t1_fluxon_ms: float
    t1_plasmon_us: float
    temperature_mk: float

    def __post_init__(self):
        for name in ("q_factor", "t1_fluxon_ms", "t1_plasmon_us", "temperature_mk"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def kappa_coupler(self, omega_c):
        """Coupler decay rate omega_c / Q (GHz = 1/ns)."""
        return omega_c / self.q_factor

    @property
    def kappa_fluxon(self):
        """Fluxonium 0-1 decay rate (1/ns)."""
        return 1.0e-6 / self.t1_fluxon_ms

    @property
    def kappa_plasmon(self):
        """Fluxonium 1-2 decay rate (1/ns)."""
        return 1.0e-3 / self.t1_plasmon_us


def thermal_occupation(omega_01: float, temperature_mk: float) -> float:
    """Bose factor 1/(exp(h w / k T) - 1) for omega_01 in GHz, T in mK."""
    if temperature_mk <= 0:
        return 0.0
    kt_ghz = KB_OVER_H_GHZ_PER_K * temperature_mk * 1.0e-3
    return 1.0 / np.expm1(omega_01 / kt_ghz)


@dataclass(frozen=True)
class JumpOperator:
    """A dissipation channel: named rate (1/ns) and dressed-basis operator."""

    name: str
    channel: str
    rate: float
    matrix: np.ndarray


@dataclass(frozen=True)
class OpenGateResult:
    """Open-system gate metrics; budget maps channel name to isolated contribution."""

    infidelity: float
    coherent_part: float
    leakage: float
    incoherent_budget: dict
    virtual_z: tuple


def build_jump_operators(spectrum, dset: DissipationSet, channels=None,
                         rate_convention="decay-time") -> list[JumpOperator]:
    """Weighted jump operators in the (truncated) dressed basis.

    channels restricts to a subset of {"coupler", "fluxon", "plasmon"}; heating
    is included only on the fluxonium 0-1 transitions.

    rate_convention fixes how the tabulated fluxon lifetime feeds the thermal
    pair of jump rates:

    * "decay-time" (default): 1/kappa_01 is the downward lifetime, so
      Gamma_down = kappa_01 and Gamma_up = kappa_01 n/(n+1) by detailed
      balance.  This is the only reading compatible with the published
      temperature insensitivity (sets A-C nearly identical) and the open-
      system headline numbers; see the decisions notes.
    * "bare": 1/kappa_01 is the bare prefactor of the printed master equation,
      Gamma_down = kappa_01 (n+1), Gamma_up = kappa_01 n.
    """
    wanted = {"coupler", "fluxon", "plasmon"} if channels is None else set(channels)
    if rate_convention not in ("decay-time", "bare"):
        raise ValueError("rate_convention must be 'decay-time' or 'bare'")
    na, nc, nb = spectrum.dims
    ops = []

    def dressed(op_elem, which):
        from .composite import dressed_operator

        return dressed_operator(spectrum, spectrum.embed(op_elem, which))

    if "coupler" in wanted:
        c_op = np.diag(np.sqrt(np.arange(1, nc, dtype=float)), k=1)
        ops.append(
            JumpOperator(
                "coupler_decay", "coupler",
                dset.kappa_coupler(spectrum.spec.resonator.omega_c),
                dressed(c_op, "c"),
            )
        )
    for which, dim, fspec in (("a", na, "a"), ("b", nb, "b")):
        omega01 = spectrum.element_spectra[fspec].energies[1]
        n_th = thermal_occupation(omega01, dset.temperature_mk)
        low = np.zeros((dim, dim))
        low[0, 1] = 1.0
        if "fluxon" in wanted:
            if rate_convention == "decay-time":
                down = dset.kappa_fluxon
                up = dset.kappa_fluxon * n_th / (n_th + 1.0)
            else:
                down = dset.kappa_fluxon * (n_th + 1.0)
                up = dset.kappa_fluxon * n_th
            ops.append(
                JumpOperator(f"fluxon_decay_{which}", "fluxon", down, dressed(low, which))
            )
            ops.append(
                JumpOperator(
                    f"fluxon_heating_{which}", "fluxon", up, dressed(low.T.copy(), which)
                )
            )
        if "plasmon" in wanted:
            plas = np.zeros((dim, dim))
            plas[1, 2] = 1.0
            ops.append(
                JumpOperator(
                    f"plasmon_decay_{which}", "plasmon",
                    dset.kappa_plasmon, dressed(plas, which),
                )
            )
    return ops


def propagate_lindblad(spectrum, pulse, omega_d, dset, dt=None, virtual_z=None,
                       channels=None, return_states=False):
    """Density-matrix gate run; returns an OpenGateResult.

    Evolves the 10 independent computational dyads |s><s'| (diagonals plus
    upper triangle) in one batch, assembles the state-averaged fidelity with
    the virtual-Z angles supplied (or taken from a zero-rate unitary run at
    the same truncation), and reports mean leakage over the diagonal dyads.
    """
    from .propagate import DrivenSystem, average_gate_fidelity

    system = DrivenSystem(spectrum)
    jump_ops = build_jump_operators(spectrum, dset, channels)
    comp = spectrum.computational_indices()
    dim = spectrum.truncation_dim

    pairs = [(r, c) for r in range(4) for c in range(r, 4)]
    rho0 = np.zeros((len(pairs), dim, dim), dtype=complex)
    for m, (r, c) in enumerate(pairs):
        rho0[m, comp[r], comp[c]] = 1.0

    rho = _evolve_dyads(system, pulse, omega_d, jump_ops, rho0, dt)

    # hermiticity / trace diagnostics on the diagonal dyads
    for m, (r, c) in enumerate(pairs):
        if r == c:
            tr = np.trace(rho[m]).real
            if abs(tr - 1.0) > 1e-7:
                raise RuntimeError(f"trace drift {tr - 1.0:.2e} on dyad {r}")
            herm = np.linalg.norm(rho[m] - rho[m].conj().T)
            if herm > 1e-9:
                raise RuntimeError(f"hermiticity defect {herm:.2e} on dyad {r}")

    # process-restricted comparison matrix: E[r,c][i,j] = <i| E(|r><c|) |j>
    emap = np.zeros((4, 4, 4, 4), dtype=complex)
    for m, (r, c) in enumerate(pairs):
        block = rho[m][np.ix_(comp, comp)]
        emap[r, c] = block
        if r != c:
            emap[c, r] = block.conj().T

    if virtual_z is None:
        u_cols = system.propagate_columns(pulse, omega_d, dt=dt)
        unitary_result = average_gate_fidelity(u_cols[comp, :])
        virtual_z = unitary_result.virtual_z

    fidelity = _average_fidelity_from_map(emap, virtual_z)
    leakage = float(
        np.mean([1.0 - np.trace(emap[r, r]).real for r in range(4)])
    )
    result = OpenGateResult(
        infidelity=1.0 - fidelity,
        coherent_part=np.nan,
        leakage=leakage,
        incoherent_budget={},
        virtual_z=virtual_z,
    )
    if return_states:
        return result, rho
    return result


def _cz_targets(virtual_z):
    """Diagonal of the target T = U_z+ U_CZ over the computational basis (A first).

    Appending software Z rotations to the actual evolution is equivalent to
    comparing against this target, so conj(t_s) B_ss reproduces Tr(U_CZ+ U_z B).
    """
    theta_a, theta_b = virtual_z
    cz = np.array([1.0, 1.0, 1.0, -1.0])
    vz = np.exp(-1j * np.array([0.0, theta_b, theta_a, theta_a + theta_b]))
    return cz * vz


def _average_fidelity_from_map(emap, virtual_z):
    """State-averaged gate fidelity of a (possibly trace-decreasing) process map.

    Haar average via the 2-design identity:
    F = [sum_{rc} <r'|E(|r><c|)|c'> + sum_r Tr_P E(|r><r|)] / 20 with
    |s'> = T|s>; reduces to [|Tr M|^2 + Tr(M M+)]/20 for a unitary block.
    """
    target = _cz_targets(virtual_z)
    total = 0.0 + 0.0j
    survival = 0.0
    for r in range(4):
        for i in range(4):
            survival += emap[r, r, i, i].real
        for c in range(4):
            total += np.conj(target[r]) * emap[r, c, r, c] * target[c]
    return float((total.real + survival) / 20.0)


def _evolve_dyads(system, pulse, omega_d, jump_ops, rho0, dt):
    """Split-step integration of the batched dyads (see module docstring)."""
    plan = system.step_plan(pulse, omega_d, dt)
    rho = rho0.copy()
    scaled = [(op.rate, op.matrix) for op in jump_ops if op.rate > 0.0]
    l_list = [np.sqrt(rate) * mat for rate, mat in scaled]
    g_half = np.zeros((system.dim, system.dim), dtype=complex)
    for l_op in l_list:
        g_half += 0.5 * (l_op.conj().T @ l_op)
    l_dag = [l_op.conj().T for l_op in l_list]

    for k in range(plan.n_steps):
        b_mat, u_frame = plan.step_matrix(k)
        # coherent half: rho -> U rho U+ with U = exp(-i 2 pi M), M = diag-frame sandwich
        rho = _apply_exp_sandwich(b_mat, u_frame, rho)
        if l_list:
            # dissipator in the lab frame through exact frame phases
            phase = plan.frame_phase(k)
            rho_lab = phase[None, :, None] * rho * phase.conj()[None, None, :]
            delta = np.zeros_like(rho_lab)
            for l_op, ld in zip(l_list, l_dag):
                delta += l_op @ rho_lab @ ld
            delta -= g_half @ rho_lab + rho_lab @ g_half.conj().T
            rho_lab = rho_lab + plan.dt * delta
            rho = phase.conj()[None, :, None] * rho_lab * phase[None, None, :]
    return rho


def _apply_exp_sandwich(b_mat, u_frame, rho, order=6):
    """rho -> exp(-i 2 pi M) rho exp(+i 2 pi M) with M = diag(u) B diag(u*).

    Taylor expansion of the two-sided conjugation in nested commutators; the
    frame phases cancel between powers so only B enters the commutators.
    """
    w = u_frame.conj()[None, :, None] * rho * u_frame[None, None, :]
    acc = w.copy()
    term = w
    for n in range(1, order + 1):
        term = (-2j * np.pi / n) * (b_mat @ term - term @ b_mat)
        acc += term
    return u_frame[None, :, None] * acc * u_frame.conj()[None, None, :]


def loss_estimates(spectrum, dset: DissipationSet, tau: float,
                   rate_convention="decay-time") -> dict:
    """Closed-form per-channel incoherent error estimates (dimensionless).

    epsilon_fluxon  = (4/5) t_g [kappa_A (2 n_th + 1)/2 + kappa_B (2 n_th + 1)/2],
    epsilon_coupler = tau |<1,0,1| c |1,1,1>|^2 kappa_c / 8,
    epsilon_plasmon = tau sum_i |<1,0,1| (|1><2|_i) |1,1,1>|^2 kappa12_i / 8,

    with kappa the bare master-equation prefactor for the chosen rate
    convention and the matrix elements those of the dressed jump operators
    themselves (the transition operators of each loss channel); these are the
    forms that track the isolated-channel master-equation budgets to ~15%.
    """
    t_gate = 2.2 * tau
    n_th_a = thermal_occupation(spectrum.element_spectra["a"].energies[1], dset.temperature_mk)
    n_th_b = thermal_occupation(spectrum.element_spectra["b"].energies[1], dset.temperature_mk)
    if rate_convention == "decay-time":
        kappa_a = dset.kappa_fluxon / (n_th_a + 1.0)
        kappa_b = dset.kappa_fluxon / (n_th_b + 1.0)
    else:
        kappa_a = kappa_b = dset.kappa_fluxon
    eps_fluxon = 0.8 * t_gate * (
        0.5 * kappa_a * (2.0 * n_th_a + 1.0) + 0.5 * kappa_b * (2.0 * n_th_b + 1.0)
    )

    jumps = {op.name: op for op in build_jump_operators(spectrum, dset, rate_convention=rate_convention)}
    i101 = spectrum.dressed_index(1, 0, 1)
    i111 = spectrum.dressed_index(1, 1, 1)
    c_elem = jumps["coupler_decay"].matrix[i101, i111]
    eps_coupler = (
        tau * abs(c_elem) ** 2 * dset.kappa_coupler(spectrum.spec.resonator.omega_c) / 8.0
    )
    plas_a = jumps["plasmon_decay_a"].matrix[i101, i111]
    plas_b = jumps["plasmon_decay_b"].matrix[i101, i111]
    eps_plasmon = (
        tau * (abs(plas_a) ** 2 + abs(plas_b) ** 2) * dset.kappa_plasmon / 8.0
    )
    return {"fluxon": eps_fluxon, "coupler": eps_coupler, "plasmon": eps_plasmon}


def error_budget(spectrum, pulse, omega_d, dset, dt=None, virtual_z=None) -> OpenGateResult:
    """Master-equation error budget: one run per channel in isolation plus the total."""
    from .propagate import DrivenSystem, average_gate_fidelity

    system = DrivenSystem(spectrum)
    u_cols = system.propagate_columns(pulse, omega_d, dt=dt)
    unitary_result = average_gate_fidelity(u_cols[system.comp, :], virtual_z=virtual_z)
    if virtual_z is None:
        virtual_z = unitary_result.virtual_z
    coherent = unitary_result.infidelity

    total = propagate_lindblad(spectrum, pulse, omega_d, dset, dt=dt, virtual_z=virtual_z)
    budget = {}
    for channel in ("fluxon", "plasmon", "coupler"):
        iso = propagate_lindblad(
            spectrum, pulse, omega_d, dset, dt=dt, virtual_z=virtual_z, channels=[channel]
        )
        budget[channel] = max(iso.infidelity - coherent, 0.0)
    return OpenGateResult(
        infidelity=total.infidelity,
        coherent_part=coherent,
        leakage=total.leakage,
        incoherent_budget=budget,
        virtual_z=virtual_z,
    )
