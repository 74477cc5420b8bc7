"""Analytic estimators for the dispersive couplings, inherited nonlinearity and ZZ rate.

All matrix elements and transition frequencies are taken from the single-element
diagonalizations (never hard-coded), packaged in ElementInputs.  Estimators:

* chi_second_order   -- second-order dispersive shifts through the 1-2 (plasmon)
                        and 0-3 virtual pathways only.
* chi_jc_model       -- plasmon-coupler exchange subspace diagonalized exactly
                        (valid beyond the perturbative regime), with the small
                        0-3 second-order corrections added for ground-state
                        fluxoniums.
* alpha_fourth_order -- coupler nonlinearity from the 1/Delta^3 fourth-order terms.
* jc_truncated_alpha -- nonlinearity from exact diagonalization of the two-qubit
                        Jaynes-Cummings truncation (plasmons as two-level systems).
* eta_perturbative   -- ZZ rate: second-order J_AB^2 pathways plus the third-order
                        coupler-mediated term.
* solve_zz_cancellation -- J_AB solving -eta2 = eta3 in the printed closed form.
"""

from dataclasses import dataclass

import numpy as np

from .composite import CircuitSpec
from .elements import diagonalize_fluxonium

RESONANCE_GUARD_GHZ = 0.010


class ResonanceError(RuntimeError):
    """Raised when a perturbative denominator is within the resonance guard."""


@dataclass(frozen=True)
class ElementInputs:
    """Bare transition data feeding the estimators (GHz; matrix-element magnitudes)."""

    omega_c: float
    n_c01: float
    omega_a01: float
    omega_a12: float
    omega_a03: float
    omega_a23: float
    omega_b01: float
    omega_b12: float
    omega_b03: float
    omega_b23: float
    n_a12: float
    n_a03: float
    n_b12: float
    n_b03: float
    j_ac: float
    j_bc: float
    j_ab: float

    @property
    def delta_a(self):
        return self.omega_a12 - self.omega_c

    @property
    def delta_b(self):
        return self.omega_b12 - self.omega_c


@dataclass(frozen=True)
class PlasmonCouplerModel:
    """Two-level-plasmon + resonator exchange model: detunings and couplings (GHz)."""

    delta_a: float
    delta_b: float
    g_a: float
    g_b: float

    def __post_init__(self):
        for v in (self.delta_a, self.delta_b, self.g_a, self.g_b):
            if not np.isfinite(v):
                raise ValueError("model parameters must be finite")


@dataclass(frozen=True)
class PerturbativeEstimates:
    """All closed-form estimates for one circuit (GHz)."""

    chi2: float
    chi_ij_2: dict
    chi_jc: dict
    alpha4: float
    alpha_jc: float
    eta2: float
    eta3: float
    eta3_e101: float
    eta3_compact: float


def element_inputs(spec: CircuitSpec) -> ElementInputs:
    """Collect bare frequencies and matrix elements from circuit-core numerics."""
    fa = diagonalize_fluxonium(spec.fluxonium_a)
    fb = diagonalize_fluxonium(spec.fluxonium_b)
    return ElementInputs(
        omega_c=spec.resonator.omega_c,
        n_c01=spec.resonator.charge_zpf,
        omega_a01=fa.transition(0, 1),
        omega_a12=fa.transition(1, 2),
        omega_a03=fa.transition(0, 3),
        omega_a23=fa.transition(2, 3),
        omega_b01=fb.transition(0, 1),
        omega_b12=fb.transition(1, 2),
        omega_b03=fb.transition(0, 3),
        omega_b23=fb.transition(2, 3),
        n_a12=abs(fa.charge_matrix[1, 2]),
        n_a03=abs(fa.charge_matrix[0, 3]),
        n_b12=abs(fb.charge_matrix[1, 2]),
        n_b03=abs(fb.charge_matrix[0, 3]),
        j_ac=spec.j_ac,
        j_bc=spec.j_bc,
        j_ab=spec.j_ab,
    )


def plasmon_coupler_model(inp: ElementInputs) -> PlasmonCouplerModel:
    return PlasmonCouplerModel(
        delta_a=inp.delta_a,
        delta_b=inp.delta_b,
        g_a=inp.j_ac * inp.n_a12 * inp.n_c01,
        g_b=inp.j_bc * inp.n_b12 * inp.n_c01,
    )


def corrections_03(inp: ElementInputs, si_denominators=False, include_sum_terms=False):
    """Second-order 0-3 virtual-exchange shifts for ground-state fluxonium A and B.

    With si_denominators the denominator is written Delta + omega_23 + omega_01,
    which equals omega_03 - omega_c identically (transition-frequency sum).
    include_sum_terms adds the sum-frequency companion of the same pathway
    (coupler photon raised alongside the 0-3 excitation), which the published
    difference-only form drops; it completes the second-order content of the
    0-3 pathway and is what the exact weak-coupling limit converges to.
    """
    if si_denominators:
        den_a = inp.delta_a + inp.omega_a23 + inp.omega_a01
        den_b = inp.delta_b + inp.omega_b23 + inp.omega_b01
    else:
        den_a = inp.omega_a03 - inp.omega_c
        den_b = inp.omega_b03 - inp.omega_c
    _guard(den_a, "omega_03^A - omega_c")
    _guard(den_b, "omega_03^B - omega_c")
    corr_a = -(inp.j_ac**2) * (inp.n_a03 * inp.n_c01) ** 2 / den_a
    corr_b = -(inp.j_bc**2) * (inp.n_b03 * inp.n_c01) ** 2 / den_b
    if include_sum_terms:
        corr_a -= (inp.j_ac**2) * (inp.n_a03 * inp.n_c01) ** 2 / (inp.omega_a03 + inp.omega_c)
        corr_b -= (inp.j_bc**2) * (inp.n_b03 * inp.n_c01) ** 2 / (inp.omega_b03 + inp.omega_c)
    return corr_a, corr_b


def _guard(denominator, name):
    if abs(denominator) < RESONANCE_GUARD_GHZ:
        raise ResonanceError(f"denominator {name} = {denominator:.4f} GHz is near-resonant")


def chi_second_order(spec_or_inputs, si_denominators=False, include_sum_terms=False) -> dict:
    """Second-order dispersive shifts {chi2, chi_10, chi_01, chi_00} (GHz).

    Published form by default (difference denominators of the 1-2 and 0-3
    pathways only); include_sum_terms adds each pathway's sum-frequency
    companion, giving the complete second-order limit of the exact shifts.
    """
    inp = _as_inputs(spec_or_inputs)
    _guard(inp.delta_a, "Delta_A")
    _guard(inp.delta_b, "Delta_B")
    plasmon_a = -(inp.j_ac**2) * (inp.n_a12 * inp.n_c01) ** 2 / inp.delta_a
    plasmon_b = -(inp.j_bc**2) * (inp.n_b12 * inp.n_c01) ** 2 / inp.delta_b
    if include_sum_terms:
        plasmon_a -= (inp.j_ac**2) * (inp.n_a12 * inp.n_c01) ** 2 / (inp.omega_a12 + inp.omega_c)
        plasmon_b -= (inp.j_bc**2) * (inp.n_b12 * inp.n_c01) ** 2 / (inp.omega_b12 + inp.omega_c)
    corr_a, corr_b = corrections_03(inp, si_denominators, include_sum_terms)
    return {
        "chi2": plasmon_a + plasmon_b,
        "chi_10": plasmon_a + corr_b,
        "chi_01": plasmon_b + corr_a,
        "chi_00": corr_a + corr_b,
    }


def chi_jc_model(model: PlasmonCouplerModel, corrections: tuple[float, float]) -> dict:
    """Plasmon-coupler exchange model for {chi, chi_10, chi_01, chi_00} (GHz).

    chi treats the two plasmons as identical (mean Delta and g); the single-
    fluxonium branches keep their own parameters.  corrections holds the 0-3
    second-order shifts (corr_a, corr_b) applied when that fluxonium is in |0>.
    """
    corr_a, corr_b = corrections
    delta = 0.5 * (model.delta_a + model.delta_b)
    g = 0.5 * (model.g_a + model.g_b)
    # (Delta - sqrt(Delta^2 + x))/2 written as -x/(2(Delta + sqrt(..)));
    # algebraically identical, stable against cancellation at small g
    chi = -4.0 * g**2 / (delta + np.sqrt(8.0 * g**2 + delta**2))
    branch_a = -2.0 * model.g_a**2 / (
        model.delta_a + np.sqrt(4.0 * model.g_a**2 + model.delta_a**2)
    )
    branch_b = -2.0 * model.g_b**2 / (
        model.delta_b + np.sqrt(4.0 * model.g_b**2 + model.delta_b**2)
    )
    return {
        "chi": chi,
        "chi_10": branch_a + corr_b,
        "chi_01": branch_b + corr_a,
        "chi_00": corr_a + corr_b,
    }


def alpha_fourth_order(model: PlasmonCouplerModel) -> float:
    """Coupler nonlinearity at fourth order, 1/Delta^3 sector only (GHz).

    alpha4 = 2 n_c01^4 sum_i(J_i^2 n_i12^2/Delta_i) sum_j(J_j^2 n_j12^2/Delta_j^2),
    expressed through g_i = J_i n_i12 n_c01.
    """
    _guard(model.delta_a, "Delta_A")
    _guard(model.delta_b, "Delta_B")
    s1 = model.g_a**2 / model.delta_a + model.g_b**2 / model.delta_b
    s2 = model.g_a**2 / model.delta_a**2 + model.g_b**2 / model.delta_b**2
    return 2.0 * s1 * s2


def jc_truncated_alpha(model: PlasmonCouplerModel, omega_c: float = 7.08, j_ab_nn: float = 0.0):
    """Nonlinearity from exact diagonalization of the two-qubit JC truncation (GHz).

    The plasmon transitions are two-level systems at omega_i = omega_c + Delta_i;
    excitation number is conserved, so only the 0-, 1- and 2-excitation sectors
    enter alpha = E(0,2,0) - 2 E(0,1,0) + E(0,0,0) (labels by maximum overlap
    with the bare coupler-excitation states).
    """
    wa = omega_c + model.delta_a
    wb = omega_c + model.delta_b
    ga, gb = model.g_a, model.g_b
    # 1-excitation sector, basis |g,1,g>, |e,0,g>, |g,0,e>
    h1 = np.array(
        [
            [omega_c, ga, gb],
            [ga, wa, j_ab_nn],
            [gb, j_ab_nn, wb],
        ]
    )
    e1, v1 = np.linalg.eigh(h1)
    e_010 = e1[np.argmax(v1[0, :] ** 2)]
    # 2-excitation sector, basis |g,2,g>, |e,1,g>, |g,1,e>, |e,0,e>
    s2 = np.sqrt(2.0)
    h2 = np.array(
        [
            [2 * omega_c, s2 * ga, s2 * gb, 0.0],
            [s2 * ga, wa + omega_c, j_ab_nn, gb],
            [s2 * gb, j_ab_nn, wb + omega_c, ga],
            [0.0, gb, ga, wa + wb],
        ]
    )
    e2, v2 = np.linalg.eigh(h2)
    e_020 = e2[np.argmax(v2[0, :] ** 2)]
    return e_020 - 2.0 * e_010


def _third_order_bracket(w_a, w_b, w_c):
    """Denominator sum of the three coupler-mediated third-order loops."""
    return (
        1.0 / ((w_a + w_c) * (w_a + w_b))
        + 1.0 / ((w_b + w_c) * (w_a + w_b))
        + 1.0 / ((w_a + w_c) * (w_b + w_c))
    )


def eta_perturbative(spec_or_inputs) -> dict:
    """ZZ rate estimates {eta2, eta3, eta3_e101, eta3_compact, total} (GHz).

    eta2 sums the four J_AB^2 virtual pathways through the plasmon (1-2) and
    0-3 transitions.  eta3 carries the full third-order pathway set: every
    computational state shifts through its own coupler-mediated loops (the
    plasmon loops for fluxonium states |1>, the 0-3 loops for |0>), all
    proportional to J_AB J_Ac J_Bc.  eta3_e101 keeps only the (1,0,1) loops
    (the published approximation that feeds the cancellation condition);
    eta3_compact is the shorthand summary expression as printed.  The
    remaining gap to exact eta is the fourth-order J_ic^4 shift, which has no
    closed form; eta2 + eta3 reproduces the isolated J_AB dependence of the
    exact rate.
    """
    inp = _as_inputs(spec_or_inputs)
    t_1212 = (inp.n_a12 * inp.n_b12) ** 2 / (inp.omega_a12 + inp.omega_b12)
    t_1203 = (inp.n_a12 * inp.n_b03) ** 2 / (inp.omega_a12 + inp.omega_b03)
    t_0312 = (inp.n_a03 * inp.n_b12) ** 2 / (inp.omega_a03 + inp.omega_b12)
    t_0303 = (inp.n_a03 * inp.n_b03) ** 2 / (inp.omega_a03 + inp.omega_b03)
    eta2 = -(inp.j_ab**2) * (t_1212 - t_1203 - t_0312 + t_0303)

    pref = 2.0 * inp.j_ab * inp.j_ac * inp.j_bc * inp.n_c01**2
    t101 = inp.n_a12**2 * inp.n_b12**2 * _third_order_bracket(
        inp.omega_a12, inp.omega_b12, inp.omega_c
    )
    t100 = inp.n_a12**2 * inp.n_b03**2 * _third_order_bracket(
        inp.omega_a12, inp.omega_b03, inp.omega_c
    )
    t001 = inp.n_a03**2 * inp.n_b12**2 * _third_order_bracket(
        inp.omega_a03, inp.omega_b12, inp.omega_c
    )
    t000 = inp.n_a03**2 * inp.n_b03**2 * _third_order_bracket(
        inp.omega_a03, inp.omega_b03, inp.omega_c
    )
    eta3 = pref * (t101 - t100 - t001 + t000)
    eta3_e101 = pref * t101
    eta3_compact = (
        2.0 * inp.j_ac * inp.j_bc * inp.n_c01**2
        * (1.0 / (inp.omega_a12 + inp.omega_c) + 1.0 / (inp.omega_b12 + inp.omega_c))
    )
    return {
        "eta2": eta2,
        "eta3": eta3,
        "eta3_e101": eta3_e101,
        "eta3_compact": eta3_compact,
        "total": eta2 + eta3,
    }


def solve_zz_cancellation(spec_or_inputs) -> float:
    """J_AB (GHz) solving -eta2 = eta3 in the printed cancellation condition.

    The printed left-hand side is the ordered two-term sum over (A,B) and
    (B,A), which the equation makes linear in J_AB; a non-positive solution
    is returned signed with a warning.
    """
    import warnings

    inp = _as_inputs(spec_or_inputs)
    if inp.j_ac * inp.j_bc == 0:
        return 0.0
    lhs_sum = 0.0
    for (w12_i, n12_i, w12_j, n12_j, w03_j, n03_j, w03_i, n03_i) in (
        (inp.omega_a12, inp.n_a12, inp.omega_b12, inp.n_b12,
         inp.omega_b03, inp.n_b03, inp.omega_a03, inp.n_a03),
        (inp.omega_b12, inp.n_b12, inp.omega_a12, inp.n_a12,
         inp.omega_a03, inp.n_a03, inp.omega_b03, inp.n_b03),
    ):
        lhs_sum += (
            (n12_i * n12_j) ** 2 / (w12_i + w12_j)
            - (n12_i * n03_j) ** 2 / (w12_i + w03_j)
            + (n03_i * n03_j) ** 2 / (w03_i + w03_j)
        )
    rhs = (
        2.0 * inp.j_ac * inp.j_bc
        * inp.n_c01**2 * inp.n_a12**2 * inp.n_b12**2
        * _third_order_bracket(inp.omega_a12, inp.omega_b12, inp.omega_c)
    )
    j_ab = rhs / lhs_sum
    if j_ab <= 0:
        warnings.warn(f"no positive ZZ-cancellation solution (J_AB = {j_ab:.4g} GHz)", UserWarning)
    return j_ab


def estimate_all(spec: CircuitSpec) -> PerturbativeEstimates:
    """Evaluate every estimator on one circuit."""
    inp = element_inputs(spec)
    model = plasmon_coupler_model(inp)
    chi2 = chi_second_order(inp)
    chi_jc = chi_jc_model(model, corrections_03(inp, include_sum_terms=True))
    eta = eta_perturbative(inp)
    return PerturbativeEstimates(
        chi2=chi2["chi2"],
        chi_ij_2={k: v for k, v in chi2.items() if k != "chi2"},
        chi_jc=chi_jc,
        alpha4=alpha_fourth_order(model),
        alpha_jc=jc_truncated_alpha(
            model, omega_c=inp.omega_c, j_ab_nn=inp.j_ab * inp.n_a12 * inp.n_b12
        ),
        eta2=eta["eta2"],
        eta3=eta["eta3"],
        eta3_e101=eta["eta3_e101"],
        eta3_compact=eta["eta3_compact"],
    )


def _as_inputs(spec_or_inputs) -> ElementInputs:
    if isinstance(spec_or_inputs, ElementInputs):
        return spec_or_inputs
    return element_inputs(spec_or_inputs)


def comparison_rows(spec: CircuitSpec, dims=(12, 8, 12)) -> list[dict]:
    """Estimate-vs-exact rows (quantity, analytic, exact, relative error)."""
    from .composite import build_composite, interaction_constants

    est = estimate_all(spec)
    exact = interaction_constants(build_composite(spec, dims=dims))
    rows = []

    def add(name, analytic, value):
        rel = abs(analytic - value) / max(abs(value), 1e-300)
        rows.append({"quantity": name, "analytic": analytic, "exact": value, "rel_error": rel})

    add("chi", est.chi_jc["chi"], exact.chi)
    add("chi_10", est.chi_jc["chi_10"], exact.chi_ij[(1, 0)])
    add("chi_01", est.chi_jc["chi_01"], exact.chi_ij[(0, 1)])
    add("chi_00", est.chi_jc["chi_00"], exact.chi_ij[(0, 0)])
    add("alpha_jc", est.alpha_jc, exact.alpha)
    add("alpha_4th", est.alpha4, exact.alpha)
    add("eta", est.eta2 + est.eta3, exact.eta)
    return rows
