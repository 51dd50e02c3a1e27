"""Repeated weak measurements concatenated into one binary result.

With a vacuum pointer reset before every step, the likelihood of an outcome tuple
(n_1, ..., n_N) depends on it only through T = n_1 + ... + n_N, and so do the
posterior and the conditional qubit state.  The exact path therefore works on the
distribution of T; a trajectory Monte Carlo is kept as an independent check.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, UnsupportedError
from .measurement import OutcomeChannel, _build_channel, outcome_probabilities
from .metrics import MetricsReport, report_from_channels
from .numerics import (
    ProbVector,
    poisson_log_pmf,
    poisson_tail_bound,
    shannon_entropy,
    truncation_cutoff,
)
from .states import MeasurementParams, QubitState
from .thermo import initial_ancilla_entropy, work_bound_dephasing

LABEL_G = "g"
LABEL_E = "e"


@dataclass(frozen=True)
class SequenceSpec:
    n_steps: int
    params: MeasurementParams
    concat: str = "bayes_argmax"
    qubit: QubitState = field(default_factory=QubitState.reference)

    def __post_init__(self):
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise DomainError("n_steps must be a positive integer")
        if self.concat != "bayes_argmax":
            raise DomainError(f"unknown concatenation rule {self.concat!r}")
        object.__setattr__(self, "n_steps", int(self.n_steps))

    def require_exact(self):
        if not self.params.init.is_vacuum:
            raise UnsupportedError("the exact sequence path assumes a vacuum pointer at every step")


@dataclass(frozen=True)
class StatTable:
    """Distribution of T with sub-normalized conditional qubit entries and the posterior label."""

    t_values: np.ndarray
    p_t: ProbVector
    pg: np.ndarray
    pe: np.ndarray
    coh: np.ndarray
    label: tuple

    @property
    def rho_given_t(self) -> list:
        return [QubitState(a / p, b / p, c / p) for a, b, c, p in zip(self.pg, self.pe, self.coh, self.p_t)]

    def channel(self) -> OutcomeChannel:
        """The T-resolved channel."""
        return OutcomeChannel(tuple(int(t) for t in self.t_values), self.p_t, self.pg, self.pe, self.coh)

    def binary_channel(self) -> OutcomeChannel:
        """Merge every T into its posterior label; both labels are always present."""
        out = {}
        for lab in (LABEL_E, LABEL_G):
            sel = np.array([x == lab for x in self.label], dtype=bool)
            out[lab] = (math.fsum(self.pg[sel]), math.fsum(self.pe[sel]), complex(self.coh[sel].sum()))
        pg = np.array([out[LABEL_E][0], out[LABEL_G][0]])
        pe = np.array([out[LABEL_E][1], out[LABEL_G][1]])
        coh = np.array([out[LABEL_E][2], out[LABEL_G][2]])
        return OutcomeChannel((LABEL_E, LABEL_G), ProbVector(pg + pe, self.p_t.tail_bound), pg, pe, coh)


def posterior_label(pg, pe) -> np.ndarray:
    """Label with the larger posterior weight; exact ties go to g."""
    return np.where(np.asarray(pg) >= np.asarray(pe), LABEL_G, LABEL_E)


def _log_coherence_kernel(params: MeasurementParams, n_steps: int, t: np.ndarray):
    """log|.| and phase of e^{-N(l1+l2)/2} (N a1 a2*)^T / T!, without the e^{-iN phi} factor."""
    a1, a2 = params.alpha_1, params.alpha_2
    z = a1 * a2.conjugate()
    # equals a Poisson pmf at the geometric-mean intensity N|a1||a2| times e^{-N(|a1|-|a2|)^2/2}
    gap = -0.5 * n_steps * (abs(a1) - abs(a2)) ** 2
    return poisson_log_pmf(t, n_steps * abs(z)) + gap, t * cmath.phase(z) if z != 0 else np.zeros(t.shape)


def build_stat_table(spec: SequenceSpec) -> StatTable:
    spec.require_exact()
    p, q, n = spec.params, spec.qubit, spec.n_steps
    lam1, lam2 = n * abs(p.alpha_1) ** 2, n * abs(p.alpha_2) ** 2
    lam = max(lam1, lam2)
    t_max = truncation_cutoff(lam)
    tail = poisson_tail_bound(lam, t_max)
    t = np.arange(t_max + 1)
    pg = q.p_g * np.exp(poisson_log_pmf(t, lam1))
    pe = q.p_e * np.exp(poisson_log_pmf(t, lam2))
    log_mag, arg = _log_coherence_kernel(p, n, t)
    coh = q.rho_ge * cmath.exp(-1j * n * p.phi) * np.exp(log_mag) * np.exp(1j * arg)
    ch = _build_channel(t, pg, pe, coh, tail)
    kept = np.asarray(ch.labels, dtype=np.int64)
    return StatTable(kept, ch.probs, ch.pg, ch.pe, ch.coh, tuple(posterior_label(ch.pg, ch.pe).tolist()))


def unconditional_coherence_factor(params: MeasurementParams, n_steps: int) -> complex:
    """Factor multiplying rho_ge after N steps, averaged over all outcomes."""
    a1, a2 = params.alpha_1, params.alpha_2
    one = cmath.exp(-1j * params.phi - 0.5 * abs(a1) ** 2 - 0.5 * abs(a2) ** 2 + a1 * a2.conjugate())
    return one**n_steps


def _post_state(spec: SequenceSpec) -> QubitState:
    q = spec.qubit
    return QubitState(q.p_g, q.p_e, q.rho_ge * unconditional_coherence_factor(spec.params, spec.n_steps))


def sequence_metrics(spec: SequenceSpec, table: StatTable | None = None) -> MetricsReport:
    """Figures of merit of the concatenated binary measurement.

    ``i_q`` is the Holevo quantity of the T-resolved channel, which equals that of the
    full tuple channel because every tuple with the same T leaves the same state.
    """
    table = build_stat_table(spec) if table is None else table
    binary = table.binary_channel()
    report = report_from_channels(_post_state(spec), table.channel(), binary)
    if np.count_nonzero(np.asarray(binary.probs.weights) > 0) < 2:
        report = MetricsReport(report.xi, report.eta, None, None, report.s_rho_s, report.i_q, report.chi,
                               report.i_classical, report.d)
    return report


# -- Monte Carlo oracle ------------------------------------------------------------

@dataclass(frozen=True)
class MonteCarloEstimate:
    """Sampled binary channel with one-standard-error bands on every entry."""

    channel: OutcomeChannel
    report: MetricsReport
    p_r: np.ndarray
    p_r_stderr: np.ndarray
    entries_stderr: dict
    n_samples: int
    seed: int


def cell_seed(master: int, *coords) -> np.random.SeedSequence:
    """Independent stream per sweep cell, so worker scheduling never changes results."""
    return np.random.SeedSequence([int(master)] + [int(c) for c in coords])


def monte_carlo_oracle(spec: SequenceSpec, n_samples: int, seed=0) -> MonteCarloEstimate:
    """Sample trajectories step by step and apply the posterior-argmax rule at the end.

    Each step draws n from the current conditional state's outcome distribution by
    inverse CDF, then applies the Kraus update for that n.
    """
    spec.require_exact()
    if n_samples < 1:
        raise DomainError("need at least one sample")
    rng = np.random.default_rng(seed)
    p, q = spec.params, spec.qubit
    lam1, lam2 = abs(p.alpha_1) ** 2, abs(p.alpha_2) ** 2
    n_max = truncation_cutoff(max(lam1, lam2))
    n = np.arange(n_max + 1)
    pois1 = np.exp(poisson_log_pmf(n, lam1))
    pois2 = np.exp(poisson_log_pmf(n, lam2))
    cdf1, cdf2 = np.cumsum(pois1), np.cumsum(pois2)
    log_mag, arg = _log_coherence_kernel(p, 1, n)
    kern = cmath.exp(-1j * p.phi) * np.exp(log_mag) * np.exp(1j * arg)

    pg = np.full(n_samples, q.p_g)
    pe = np.full(n_samples, q.p_e)
    coh = np.full(n_samples, q.rho_ge, dtype=complex)
    for _ in range(spec.n_steps):
        u = rng.random(n_samples)
        cdf = pg[:, None] * cdf1[None, :] + pe[:, None] * cdf2[None, :]
        k = np.minimum((u[:, None] >= cdf).sum(axis=1), n_max)
        w = pg * pois1[k] + pe * pois2[k]
        pg, pe, coh = pg * pois1[k] / w, pe * pois2[k] / w, coh * kern[k] / w
    labels = posterior_label(pg, pe)
    out_pg, out_pe, out_coh, p_r, p_se = [], [], [], [], []
    se = {}
    for lab in (LABEL_E, LABEL_G):
        ind = (labels == lab).astype(float)
        for name, vals in (("pg", pg), ("pe", pe), ("coh_re", coh.real), ("coh_im", coh.imag)):
            x = ind * vals
            se[(lab, name)] = float(np.std(x, ddof=1) / math.sqrt(n_samples)) if n_samples > 1 else math.inf
        out_pg.append(float(np.mean(ind * pg)))
        out_pe.append(float(np.mean(ind * pe)))
        out_coh.append(complex(np.mean(ind * coh)))
        frac = float(ind.mean())
        p_r.append(frac)
        p_se.append(math.sqrt(frac * (1 - frac) / n_samples))
    # rescale so the estimated channel is exactly normalized despite float summation
    total = math.fsum(out_pg) + math.fsum(out_pe)
    out_pg = np.array(out_pg) / total
    out_pe = np.array(out_pe) / total
    out_coh = np.array(out_coh) / total
    channel = OutcomeChannel((LABEL_E, LABEL_G), ProbVector(out_pg + out_pe, 0.0), out_pg, out_pe, out_coh)
    post = _post_state(spec)
    report = report_from_channels(post, channel, channel)
    seed_repr = seed if isinstance(seed, int) else -1
    return MonteCarloEstimate(channel, report, np.array(p_r), np.array(p_se), se, n_samples, seed_repr)


# -- work and scaling ----------------------------------------------------------------

def single_step_work(params: MeasurementParams, qubit: QubitState | None = None) -> float:
    """Dephasing work bound of one measurement cycle."""
    qubit = QubitState.reference() if qubit is None else qubit
    h = shannon_entropy(outcome_probabilities(params, qubit)).nats
    return work_bound_dephasing(h, initial_ancilla_entropy(params), params.beta)


def total_work_sequence(spec: SequenceSpec) -> float:
    """Every step is a full cycle including both resets, so the cost is N times one cycle."""
    return spec.n_steps * single_step_work(spec.params, spec.qubit)


@dataclass(frozen=True)
class ScalingModel:
    """Weak/strong asymptotics of the work cost.

    ``h0`` is the per-step outcome entropy in the weak limit, ``k_outcomes`` the number
    of well separated pointer peaks in the strong limit, whose width grows as
    epsilon**l_exponent.  ``weak_constant`` is fitted from data.
    """

    h0: float
    k_outcomes: int = 2
    l_exponent: int = 1
    sigma0: float = 1.0
    weak_constant: float | None = None

    def __post_init__(self):
        if self.h0 < 0:
            raise DomainError("h0 must be nonnegative")
        if self.k_outcomes < 2:
            raise DomainError("need at least two outcomes")
        if self.l_exponent not in (0, 1):
            raise DomainError("l_exponent must be 0 or 1")

    @classmethod
    def for_pointer(cls, alpha_bar: float, **kw) -> "ScalingModel":
        """Model whose weak-limit entropy is that of Poisson(|alpha_bar|^2)."""
        x = abs(alpha_bar) ** 2
        h0 = shannon_entropy(np.exp(poisson_log_pmf(np.arange(truncation_cutoff(x) + 1), x))).nats
        return cls(h0=h0, sigma0=math.sqrt(x), **kw)


def fit_weak_constant(eps, work, h0: float) -> float:
    """Proportionality constant c in W = c H0 / eps^2 from the two smallest eps."""
    eps = np.asarray(eps, dtype=float)
    work = np.asarray(work, dtype=float)
    if eps.size < 2:
        raise DomainError("need at least two points")
    if not h0 > 0:
        raise DomainError("h0 must be positive to fit the weak-limit constant")
    idx = np.argsort(eps)[:2]
    return float(np.mean(work[idx] * eps[idx] ** 2 / h0))


def scaling_predictions(model: ScalingModel, eps: float) -> tuple:
    """(w_weak, w_strong) in nats; w_weak is ``None`` until the constant is fitted."""
    if not eps > 0:
        raise DomainError("eps must be positive")
    w_weak = None if model.weak_constant is None else model.weak_constant * model.h0 / eps**2
    w_strong = model.k_outcomes * (model.l_exponent * math.log(2 * math.pi * eps) + 0.5)
    return w_weak, w_strong


# -- threshold search ----------------------------------------------------------------

@dataclass(frozen=True)
class NStarResult:
    n_star: int | None
    converged: bool
    n_max: int
    report: MetricsReport | None


def _meets(report: MetricsReport, threshold: float) -> bool:
    vals = (report.xi, report.eta, report.eta_xr)
    return all(v is not None and v >= threshold for v in vals)


def find_n_star(params: MeasurementParams, threshold: float = 0.999, qubit: QubitState | None = None,
                n_max: int | None = None) -> NStarResult:
    """Smallest N whose concatenated measurement reaches ``threshold`` on all three figures of merit.

    Doubles N until the threshold is met, then bisects.  The search is capped at
    ceil(20 / eps^2) steps.
    """
    qubit = QubitState.reference() if qubit is None else qubit
    eps = abs(complex(params.epsilon))
    if n_max is None:
        if eps == 0:
            return NStarResult(None, False, 0, None)
        n_max = int(math.ceil(20.0 / eps**2))

    def check(n):
        r = sequence_metrics(SequenceSpec(n, params, qubit=qubit))
        return _meets(r, threshold), r

    lo, hi, hi_report = 0, None, None
    n = 1
    while True:
        ok, rep = check(n)
        if ok:
            hi, hi_report = n, rep
            break
        lo = n
        if n >= n_max:
            return NStarResult(None, False, n_max, rep)
        n = min(2 * n, n_max)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        ok, rep = check(mid)
        if ok:
            hi, hi_report = mid, rep
        else:
            lo = mid
    return NStarResult(hi, True, n_max, hi_report)
