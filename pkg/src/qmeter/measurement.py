"""The measurement channel on the qubit: outcome statistics, conditional states, Kraus
operators, coarse-graining and the first-order weak expansion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, UnsupportedError
from .fock import JointState, build_joint_predephasing, dephase, rotate_pairs
from .numerics import (
    ProbVector,
    log_factorial,
    poisson_log_pmf,
    poisson_tail_bound,
    truncation_cutoff,
)
from .states import AncillaInit, MeasurementParams, QubitState

__all__ = [
    "AncillaInit",
    "CoarseGraining",
    "MeasurementParams",
    "OutcomeChannel",
    "QubitState",
    "channel_from_joint",
    "coarse_grain",
    "conditional_states",
    "kraus_operator",
    "outcome_probabilities",
    "unconditional_post_state",
    "weak_expansion",
]

# Fine-grained outcomes lighter than this are pruned into the tail.
PRUNE_THRESHOLD = 1e-300


def _log_amplitudes(alpha: complex, n: np.ndarray):
    """log|<n|alpha>| and arg <n|alpha> for the coherent state |alpha>."""
    x = abs(alpha) ** 2
    if x == 0:
        return np.where(n == 0, 0.0, -np.inf), np.zeros(n.shape)
    log_mag = -0.5 * x + n * math.log(abs(alpha)) - 0.5 * log_factorial(n)
    return log_mag, n * math.atan2(alpha.imag, alpha.real)


def coherent_amplitudes(alpha: complex, n_max: int) -> np.ndarray:
    n = np.arange(n_max + 1)
    log_mag, arg = _log_amplitudes(complex(alpha), n)
    return np.exp(log_mag) * np.exp(1j * arg)


def _vacuum_cutoff(params: MeasurementParams) -> tuple[int, float]:
    intensity = max(abs(params.alpha_1), abs(params.alpha_2)) ** 2
    n_max = truncation_cutoff(intensity)
    return n_max, poisson_tail_bound(intensity, n_max)


def outcome_probabilities(params: MeasurementParams, qubit: QubitState) -> ProbVector:
    """Distribution p_n of the pointer excitation number after dephasing."""
    if params.init.is_vacuum:
        n_max, tail = _vacuum_cutoff(params)
        n = np.arange(n_max + 1)
        p = qubit.p_g * np.exp(poisson_log_pmf(n, abs(params.alpha_1) ** 2)) + qubit.p_e * np.exp(
            poisson_log_pmf(n, abs(params.alpha_2) ** 2)
        )
        return ProbVector(p, tail)
    joint = build_joint_predephasing(params, qubit)
    gg, ee, _ = joint.number_blocks()
    p = np.clip(gg + ee, 0.0, None)
    return ProbVector(p, max(joint.tail_bound, 1.0 - math.fsum(p)))


def kraus_operator(n: int, params: MeasurementParams) -> np.ndarray:
    """Measurement operator M_n for outcome n (vacuum pointer only)."""
    if not params.init.is_vacuum:
        raise UnsupportedError("a thermal pointer has no single-Kraus description per outcome")
    if n < 0:
        raise DomainError("outcome index must be nonnegative")
    idx = np.array([n])
    out = []
    for alpha in (params.alpha_1, params.alpha_2):
        log_mag, arg = _log_amplitudes(complex(alpha), idx)
        out.append(complex(np.exp(log_mag[0]) * np.exp(1j * arg[0])))
    return np.diag([out[0] * np.exp(-1j * params.phi), out[1]])


@dataclass(frozen=True)
class CoarseGraining:
    """Ordered partition of Fock outcomes into labeled bins.

    ``bins[i]`` lists the outcomes explicitly assigned to label ``labels[i]``.  If
    ``rest`` is set, that bin also absorbs every outcome not listed anywhere, which
    is how open-ended bins such as {n > 0} are expressed.
    """

    bins: tuple
    labels: tuple
    rest: int | None = None

    def __post_init__(self):
        bins = tuple(tuple(int(n) for n in b) for b in self.bins)
        labels = tuple(self.labels)
        if len(bins) != len(labels) or not bins:
            raise DomainError("need one label per bin and at least one bin")
        if len(set(labels)) != len(labels):
            raise DomainError("bin labels must be distinct")
        seen = set()
        for i, b in enumerate(bins):
            if not b and i != self.rest:
                raise DomainError(f"bin {labels[i]!r} is empty")
            if any(n < 0 for n in b):
                raise DomainError("outcomes are nonnegative integers")
            if seen.intersection(b) or len(set(b)) != len(b):
                raise DomainError("bins must be disjoint")
            seen.update(b)
        if self.rest is not None and not 0 <= self.rest < len(bins):
            raise DomainError("rest index out of range")
        object.__setattr__(self, "bins", bins)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def singletons(cls, n_max: int) -> "CoarseGraining":
        return cls(tuple((n,) for n in range(n_max + 1)), tuple(range(n_max + 1)))

    @classmethod
    def photodiode(cls) -> "CoarseGraining":
        """Two results: no excitation (labelled e) versus any excitation (labelled g)."""
        return cls(((0,), ()), ("e", "g"), rest=1)

    @classmethod
    def intervals(cls, edges) -> "CoarseGraining":
        """Contiguous bins [e0, e1), [e1, e2), ..., [e_last, inf) with e0 = 0."""
        edges = [int(e) for e in edges]
        if not edges or edges[0] != 0 or any(b <= a for a, b in zip(edges, edges[1:])):
            raise DomainError("edges must start at 0 and increase strictly")
        bins = [tuple(range(a, b)) for a, b in zip(edges, edges[1:])] + [(edges[-1],)]
        return cls(tuple(bins), tuple(range(len(bins))), rest=len(bins) - 1)

    def assign(self, outcomes) -> np.ndarray:
        """Bin index for every outcome; -1 where an outcome has no bin."""
        outcomes = np.asarray(outcomes, dtype=np.int64)
        idx = np.full(outcomes.shape, -1 if self.rest is None else self.rest, dtype=np.int64)
        lookup = {n: i for i, b in enumerate(self.bins) for n in b}
        for pos, n in enumerate(outcomes.tolist()):
            if n in lookup:
                idx[pos] = lookup[n]
        return idx


@dataclass(frozen=True)
class OutcomeChannel:
    """Outcome labels, their probabilities and the conditional qubit states.

    The conditional states are stored sub-normalized, ``w_r = p_r rho_{S|r}``, as
    three arrays (``pg``, ``pe``, ``coh``) so that sums over outcomes stay linear.
    """

    labels: tuple
    probs: ProbVector
    pg: np.ndarray
    pe: np.ndarray
    coh: np.ndarray

    def __post_init__(self):
        for name in ("pg", "pe", "coh"):
            a = np.array(getattr(self, name), dtype=complex if name == "coh" else float)
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        object.__setattr__(self, "labels", tuple(self.labels))
        if not len(self.labels) == len(self.probs) == self.pg.size == self.pe.size == self.coh.size:
            raise DomainError("channel arrays must have one entry per outcome")

    def __len__(self):
        return len(self.labels)

    @property
    def defined(self) -> np.ndarray:
        """False for outcomes with zero probability, whose conditional state is undefined."""
        return np.asarray(self.probs.weights) > 0

    @property
    def conditionals(self) -> list:
        """Normalized conditional states; ``None`` marks an undefined conditional."""
        out = []
        for p, a, b, c in zip(self.probs.weights, self.pg, self.pe, self.coh):
            out.append(QubitState(a / p, b / p, c / p) if p > 0 else None)
        return out

    def average_state(self) -> QubitState:
        """Sum_r p_r rho_{S|r}, renormalized against pruned tail mass."""
        tr = math.fsum(self.pg) + math.fsum(self.pe)
        return QubitState(math.fsum(self.pg) / tr, math.fsum(self.pe) / tr, complex(self.coh.sum()) / tr)


def _build_channel(labels, pg, pe, coh, tail: float) -> OutcomeChannel:
    pg = np.clip(np.asarray(pg, dtype=float), 0.0, None)
    pe = np.clip(np.asarray(pe, dtype=float), 0.0, None)
    p = pg + pe
    keep = p >= PRUNE_THRESHOLD
    pruned = math.fsum(p[~keep])
    labels = [lab for lab, k in zip(labels, keep) if k]
    total = math.fsum(p[keep])
    tail = max(tail + pruned, 1.0 - total, 0.0)
    return OutcomeChannel(tuple(labels), ProbVector(p[keep], tail), pg[keep], pe[keep], np.asarray(coh)[keep])


def channel_from_joint(joint: JointState) -> OutcomeChannel:
    """Fine-grained channel read off the Fock diagonals of a (dephased) joint state."""
    gg, ee, ge = joint.number_blocks()
    return _build_channel(range(joint.dim), gg, ee, ge, joint.tail_bound)


def conditional_states(params: MeasurementParams, qubit: QubitState, theta: float | None = None) -> OutcomeChannel:
    """Fine-grained channel {p_n, rho_{S|n}} obtained from the dephased joint state.

    ``theta`` optionally applies the Fock pair rotation to the pointer before it
    dephases.
    """
    joint = build_joint_predephasing(params, qubit)
    if theta is not None:
        joint = rotate_pairs(joint, theta)
    return channel_from_joint(dephase(joint))


def coarse_grain(channel: OutcomeChannel, cg: CoarseGraining) -> OutcomeChannel:
    """Merge fine outcomes into the bins of ``cg``.

    Bins that receive no probability are retained with zero weight; their
    conditional state is undefined (``None`` in ``conditionals``).
    """
    idx = cg.assign(channel.labels)
    if np.any(idx < 0):
        missing = [lab for lab, i in zip(channel.labels, idx) if i < 0][:5]
        raise DomainError(f"outcomes {missing} are not covered by the coarse-graining")
    nb = len(cg.bins)
    pg = np.bincount(idx, weights=channel.pg, minlength=nb)
    pe = np.bincount(idx, weights=channel.pe, minlength=nb)
    coh = np.bincount(idx, weights=channel.coh.real, minlength=nb) + 1j * np.bincount(
        idx, weights=channel.coh.imag, minlength=nb
    )
    p = pg + pe
    return OutcomeChannel(cg.labels, ProbVector(p, channel.probs.tail_bound), pg, pe, coh)


def unconditional_post_state(params: MeasurementParams, qubit: QubitState) -> QubitState:
    """Qubit state averaged over all outcomes.

    Populations are untouched by the measurement.  For a vacuum pointer the
    coherence picks up <alpha_2|alpha_1> e^{-i phi}; for a thermal pointer it is the
    trace of the ge block.
    """
    if params.init.is_vacuum:
        a1, a2 = params.alpha_1, params.alpha_2
        overlap = np.exp(-0.5 * (abs(a1) ** 2 + abs(a2) ** 2) + a1 * a2.conjugate())
        return QubitState(qubit.p_g, qubit.p_e, qubit.rho_ge * np.exp(-1j * params.phi) * complex(overlap))
    joint = build_joint_predephasing(params, qubit)
    coh = complex(np.trace(joint.ge))
    if qubit.p_g > 0 and qubit.p_e > 0:
        # undo the truncation loss shared by the gg and ee pointer blocks
        kept = math.sqrt(np.trace(joint.gg).real / qubit.p_g * np.trace(joint.ee).real / qubit.p_e)
        coh /= kept
    return QubitState(qubit.p_g, qubit.p_e, coh)


def weak_expansion(params: MeasurementParams, qubit: QubitState):
    """First-order-in-epsilon outcome distribution and conditional channel.

    Valid for a vacuum pointer and real ``epsilon`` with |epsilon| <= 0.1.  Returns
    ``(p_eps, channel)``.  First-order weights that come out negative far in the
    Poisson tail are clipped to zero and their mass is booked in the tail bound.
    """
    if not params.init.is_vacuum:
        raise UnsupportedError("the weak expansion assumes a vacuum pointer")
    eps = complex(params.epsilon)
    if eps.imag != 0 or abs(eps.real) > 0.1:
        raise DomainError("weak expansion needs real epsilon with |epsilon| <= 0.1")
    eps = eps.real
    ab = complex(params.alpha_bar)
    x = abs(ab) ** 2
    n_max = truncation_cutoff(x)
    n = np.arange(n_max + 1)
    pois = np.exp(poisson_log_pmf(n, x))
    # e^{-x} n x^{n-1}/n! written so that alpha_bar = 0 stays finite
    pois_shift = np.where(n >= 1, np.exp(poisson_log_pmf(np.maximum(n - 1, 0), x)), 0.0)
    lin = 2.0 * eps * ab.real * (pois_shift - pois)
    # e^{-x} n x^{n-1} Im(alpha_bar)/n!, the phase term of the coherence
    phase_term = 2.0 * eps * ab.imag * pois_shift
    phase = np.exp(-1j * params.phi)
    pg = qubit.p_g * (pois + lin)
    pe = qubit.p_e * (pois - lin)
    coh = qubit.rho_ge * phase * (pois - 1j * phase_term)
    p_eps = pois + (qubit.p_g - qubit.p_e) * lin
    clipped = math.fsum(np.abs(np.minimum(p_eps, 0.0)))
    p_eps = np.clip(p_eps, 0.0, None)
    tail = poisson_tail_bound(x, n_max) + clipped + abs(1.0 - math.fsum(p_eps))
    if tail > 1.0:
        raise DomainError("weak expansion broke down")
    probs = ProbVector(p_eps, tail)
    # First-order numerators are kept as they are: the truncated expansion is not
    # exactly positive, so ``conditionals`` may reject entries far out in n.
    channel = OutcomeChannel(tuple(range(n_max + 1)), probs, pg, pe, coh)
    return probs, channel
