"""Figures of merit (strength, efficiency, observable fidelity), Holevo information and
the information hierarchy."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .measurement import CoarseGraining, OutcomeChannel, coarse_grain, conditional_states, unconditional_post_state
from .numerics import block_entropies, entropy_terms, vn_entropy_2x2
from .states import MeasurementParams, QubitState

# Entropies at or below this many nats are treated as zero when they appear in a denominator.
UNDEFINED_BELOW = 1e-14
HIERARCHY_SLACK = 1e-9


@dataclass(frozen=True)
class MetricsReport:
    """All figures of merit for one run; entropic quantities in nats.

    ``eta``, ``eta_xr`` and ``product`` are ``None`` when their denominator vanishes.
    """

    xi: float
    eta: float | None
    eta_xr: float | None
    product: float | None
    s_rho_s: float
    i_q: float
    chi: float
    i_classical: float
    d: int = 2


def strength_xi(post: QubitState, d: int = 2) -> float:
    """Entropy of the unconditional post-measurement state normalized by log d."""
    return vn_entropy_2x2(post).nats / math.log(d)


def _conditional_entropy(channel: OutcomeChannel) -> float:
    """Sum_r p_r S(rho_{S|r}) in nats."""
    s = block_entropies(channel.pg, channel.pe, channel.coh)
    return math.fsum(np.asarray(channel.probs.weights) * s)


def holevo_chi(channel: OutcomeChannel, post: QubitState) -> float:
    """S(rho_S) - Sum_r p_r S(rho_{S|r}) in nats."""
    return vn_entropy_2x2(post).nats - _conditional_entropy(channel)


def efficiency_eta(channel: OutcomeChannel, post: QubitState) -> float | None:
    s = vn_entropy_2x2(post).nats
    if s <= UNDEFINED_BELOW:
        return None
    return holevo_chi(channel, post) / s


def _joint_distribution(channel: OutcomeChannel, basis=None) -> np.ndarray:
    """p_{j,r} = p_r <j|rho_{S|r}|j> as an array of shape (2, n_outcomes)."""
    if basis is None:
        return np.vstack([channel.pg, channel.pe])
    v = np.asarray(basis, dtype=complex)
    if v.shape != (2, 2) or not np.allclose(v.conj().T @ v, np.eye(2), atol=1e-12):
        raise ValueError("observable basis must be a 2x2 unitary (columns are the basis vectors)")
    rows = []
    for j in range(2):
        a, b = v[0, j], v[1, j]
        val = (abs(a) ** 2 * channel.pg + abs(b) ** 2 * channel.pe
               + 2.0 * np.real(np.conj(a) * b * channel.coh))
        rows.append(np.clip(val, 0.0, None))
    return np.vstack(rows)


def mutual_information(channel: OutcomeChannel, basis=None) -> float:
    """Classical mutual information I({j};{r}) in nats between observable value and outcome."""
    joint = _joint_distribution(channel, basis)
    p_j = joint.sum(axis=1)
    p_r = joint.sum(axis=0)
    h = lambda p: math.fsum(entropy_terms(np.ravel(p)))
    return max(h(p_j) + h(p_r) - h(joint), 0.0)


def eta_mutual(channel: OutcomeChannel, post: QubitState, observable_basis=None) -> float | None:
    chi = holevo_chi(channel, post)
    if chi <= UNDEFINED_BELOW:
        return None
    return mutual_information(channel, observable_basis) / chi


def _product(*factors):
    if any(f is None for f in factors):
        return None
    out = 1.0
    for f in factors:
        out *= f
    return out


def report_from_channels(post: QubitState, fine: OutcomeChannel, coarse: OutcomeChannel | None = None,
                         d: int = 2, basis=None) -> MetricsReport:
    """Assemble a report; ``i_q`` always comes from the fine-grained channel."""
    used = fine if coarse is None else coarse
    s = vn_entropy_2x2(post).nats
    i_q = holevo_chi(fine, post)
    chi = holevo_chi(used, post)
    i_cl = mutual_information(used, basis)
    xi = s / math.log(d)
    eta = chi / s if s > UNDEFINED_BELOW else None
    eta_xr = i_cl / chi if chi > UNDEFINED_BELOW else None
    return MetricsReport(xi, eta, eta_xr, _product(xi, eta, eta_xr), s, i_q, chi, i_cl, d)


def evaluate(params: MeasurementParams, qubit: QubitState | None = None, cg: CoarseGraining | None = None,
             theta: float | None = None, basis=None) -> MetricsReport:
    """Run the measurement model once and compute every figure of merit."""
    qubit = QubitState.reference() if qubit is None else qubit
    fine = conditional_states(params, qubit, theta=theta)
    post = unconditional_post_state(params, qubit)
    coarse = coarse_grain(fine, cg) if cg is not None else None
    return report_from_channels(post, fine, coarse, basis=basis)


@dataclass(frozen=True)
class HierarchyResult:
    links: tuple
    holds: tuple

    @property
    def ok(self) -> bool:
        return all(self.holds)

    @property
    def broken(self) -> list:
        return [name for name, h in zip(self.links, self.holds) if not h]


def hierarchy_check(report: MetricsReport, slack: float = HIERARCHY_SLACK) -> HierarchyResult:
    """Check log d >= S(rho_S) >= I_q >= chi >= I({j};{r}) link by link."""
    chain = [("log d", math.log(report.d)), ("S", report.s_rho_s), ("I_q", report.i_q),
             ("chi", report.chi), ("I", report.i_classical)]
    links, holds = [], []
    for (na, a), (nb, b) in zip(chain, chain[1:]):
        links.append(f"{na} >= {nb}")
        holds.append(bool(a + slack >= b))
    return HierarchyResult(tuple(links), tuple(holds))
