"""Energy bookkeeping and second-law work bounds for one measurement cycle, plus the
coherent-state overlap used to diagnose spectrum broadcast structure.

Informational terms are in nats and enter work as (1/beta) * entropy, so with the
default beta = 1 all work values are in units of k_B T.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .measurement import CoarseGraining, OutcomeChannel, coarse_grain, conditional_states
from .numerics import block_entropies, entropy_terms, shannon_entropy, thermal_entropy, vn_entropy_2x2
from .states import MeasurementParams, QubitState


@dataclass(frozen=True)
class ThermoLedger:
    w_dr: float
    w_sw: float
    w_reset_a_min: float
    w_reset_m_min: float
    w_bound_dephasing: float
    w_bound_dissipation: float
    delta_e_s: float
    e_a_t0: float
    e_a_t1: float
    e_a_tf: float
    h_pn: float
    s_a_t0: float
    h_pr: float
    delta_s_sa: float

    @property
    def total_work(self) -> float:
        """Drive, switching and both resets; reproduces the dephasing bound."""
        return self.w_dr + self.w_sw + self.w_reset_a_min + self.w_reset_m_min


@dataclass(frozen=True)
class EnergyTerms:
    e_a_t0: float
    e_a_t1: float
    e_a_tf: float
    delta_e_s: float
    w_dr: float
    w_sw: float


def initial_ancilla_entropy(params: MeasurementParams) -> float:
    """S_A(t_0) in nats, exact for the geometric occupation distribution."""
    return 0.0 if params.init.is_vacuum else thermal_entropy(params.init.beta_omega)


def energy_ledger(params: MeasurementParams, qubit: QubitState, post: QubitState | None = None,
                  e_a_tf: float | None = None) -> EnergyTerms:
    """Pointer and qubit energies around one cycle.

    With ``e_a_tf`` omitted the pointer dephases in its energy eigenbasis, which
    conserves its mean energy, so no switching work is needed.  Passing ``e_a_tf``
    describes dephasing in another basis; the quench then costs
    ``w_sw = e_a_tf - e_a_t1``.
    """
    nbar = params.init.mean_occupation
    e0 = params.omega_a * nbar
    e1 = params.omega_a * (qubit.p_g * abs(params.alpha_1) ** 2 + qubit.p_e * abs(params.alpha_2) ** 2 + nbar)
    # the coupling commutes with sigma_z, so the qubit energy only moves if populations do
    delta_e_s = 0.0 if post is None else params.omega_q * (post.p_e - qubit.p_e)
    ef = e1 if e_a_tf is None else float(e_a_tf)
    return EnergyTerms(e0, e1, ef, delta_e_s, delta_e_s + e1 - e0, ef - e1)


def work_bound_dephasing(h_pn: float, s_a_t0: float, beta: float, delta_e_s: float = 0.0) -> float:
    """Minimum work for a cycle whose objectification step is pure dephasing."""
    return (h_pn - s_a_t0) / beta + delta_e_s


def entropy_production(fine: OutcomeChannel, qubit: QubitState, s_a_t0: float) -> float:
    """Delta S_SA = S(rho_SA(t_f)) - S_S(t_0) - S_A(t_0), nats.

    The dephased joint state is block diagonal in n with 2x2 qubit blocks, so its
    entropy is H(p_n) + Sum_n p_n S(rho_{S|n}).
    """
    blocks = block_entropies(fine.pg, fine.pe, fine.coh)
    s_joint = shannon_entropy(fine.probs).nats + math.fsum(np.asarray(fine.probs.weights) * blocks)
    return s_joint - vn_entropy_2x2(qubit).nats - s_a_t0


def work_bound_dissipation(bound_dephasing: float, delta_s_sa: float, beta: float) -> float:
    """Bound for dissipative objectification: lower than the dephasing bound by Delta S_SA / beta."""
    return bound_dephasing - delta_s_sa / beta


def reset_bounds(h_pn: float, h_pr: float, s_a_t0: float, e_a_t0: float, e_a_tf: float,
                 beta: float) -> tuple[float, float]:
    """(ancilla reset, memory reset) minimum work for an orthogonal coarse-graining."""
    w_a = e_a_t0 - e_a_tf + (h_pn - h_pr - s_a_t0) / beta
    return w_a, h_pr / beta


def binning_matrix(labels, cg: CoarseGraining) -> np.ndarray:
    """p(r|n) for a deterministic binning, rows indexed by fine outcome."""
    idx = cg.assign(labels)
    if np.any(idx < 0):
        raise DomainError("coarse-graining does not cover every outcome")
    m = np.zeros((len(idx), len(cg.bins)))
    m[np.arange(len(idx)), idx] = 1.0
    return m


def readout_noise_entropy(p_n, p_r_given_n) -> float:
    """Sum_n p_n H(p_{r|n}) in nats; zero for any deterministic binning."""
    p_n = np.asarray(p_n, dtype=float)
    m = np.asarray(p_r_given_n, dtype=float)
    if m.ndim != 2 or m.shape[0] != p_n.size:
        raise DomainError("p(r|n) needs one row per outcome")
    if np.any(m < 0) or not np.allclose(m.sum(axis=1), 1.0, atol=1e-12):
        raise DomainError("rows of p(r|n) must be probability vectors")
    return math.fsum(p_n * entropy_terms(m).sum(axis=1))


def thermo_ledger(params: MeasurementParams, qubit: QubitState | None = None, cg: CoarseGraining | None = None,
                  theta: float | None = None, fine: OutcomeChannel | None = None) -> ThermoLedger:
    """Every energy and work quantity for one cycle.

    With ``theta`` the pointer is rotated before it dephases, which is dephasing in a
    non-energy basis; the final pointer energy is then read from the dephased Fock
    populations.
    """
    qubit = QubitState.reference() if qubit is None else qubit
    if fine is None:
        fine = conditional_states(params, qubit, theta=theta)
    post = fine.average_state()
    e_a_tf = None
    if theta is not None:
        n = np.asarray(fine.labels, dtype=float)
        e_a_tf = params.omega_a * math.fsum(n * np.asarray(fine.probs.weights))
    en = energy_ledger(params, qubit, post, e_a_tf)
    s_a = initial_ancilla_entropy(params)
    h_pn = shannon_entropy(fine.probs).nats
    h_pr = h_pn if cg is None else shannon_entropy(coarse_grain(fine, cg).probs).nats
    w_deph = work_bound_dephasing(h_pn, s_a, params.beta, en.delta_e_s)
    ds = entropy_production(fine, qubit, s_a)
    w_a, w_m = reset_bounds(h_pn, h_pr, s_a, en.e_a_t0, en.e_a_tf, params.beta)
    return ThermoLedger(
        w_dr=en.w_dr,
        w_sw=en.w_sw,
        w_reset_a_min=w_a,
        w_reset_m_min=w_m,
        w_bound_dephasing=w_deph,
        w_bound_dissipation=work_bound_dissipation(w_deph, ds, params.beta),
        delta_e_s=en.delta_e_s,
        e_a_t0=en.e_a_t0,
        e_a_t1=en.e_a_t1,
        e_a_tf=en.e_a_tf,
        h_pn=h_pn,
        s_a_t0=s_a,
        h_pr=h_pr,
        delta_s_sa=ds,
    )


# -- spectrum broadcast structure -----------------------------------------------

@dataclass(frozen=True)
class SbsParams:
    """One environment mode: coherent amplitude, coupling rate, elapsed time and level gap m - n."""

    alpha_mode: float
    gamma: float
    t: float
    delta_nm: int

    def __post_init__(self):
        for name in ("alpha_mode", "gamma", "t"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")


def sbs_overlap(p: SbsParams, n_modes: int = 1) -> float:
    """|<alpha e^{-i t gamma n}|alpha e^{-i t gamma m}>|^2 raised to the number of identical modes."""
    if n_modes < 1:
        raise DomainError("need at least one mode")
    per_mode = -2.0 * p.alpha_mode**2 * (1.0 - math.cos(p.delta_nm * p.t * p.gamma))
    return math.exp(n_modes * per_mode)


__all__ = [
    "EnergyTerms",
    "SbsParams",
    "ThermoLedger",
    "binning_matrix",
    "energy_ledger",
    "entropy_production",
    "initial_ancilla_entropy",
    "readout_noise_entropy",
    "reset_bounds",
    "sbs_overlap",
    "thermo_ledger",
    "work_bound_dephasing",
    "work_bound_dissipation",
]
