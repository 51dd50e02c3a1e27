"""Scalar kernels: entropies, log-factorials, Laguerre polynomials, Poisson weights."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import DomainError, TruncationError
from .states import QubitState

NATURAL = "natural"
TWO = "two"
_BASES = (NATURAL, TWO)

# Largest certified truncation tail accepted anywhere in the package.
TAIL_TOLERANCE = 1e-10
# Slack on probability sums and signs coming from floating-point rounding.
_SUM_SLACK = 1e-12


@dataclass(frozen=True)
class ProbVector:
    """Nonnegative weights on a truncated support plus the mass certified to lie beyond it."""

    weights: np.ndarray
    tail_bound: float = 0.0

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).ravel()
        if w.size and not np.all(np.isfinite(w)):
            raise DomainError("probability weights must be finite")
        if w.size and w.min() < 0:
            raise DomainError(f"negative probability weight {w.min()}")
        tail = float(self.tail_bound)
        if tail < 0:
            raise DomainError("tail bound must be nonnegative")
        total = math.fsum(w)
        if total > 1 + _SUM_SLACK or total < 1 - tail - _SUM_SLACK:
            raise DomainError(f"weights sum to {total!r}, outside [1 - {tail:g}, 1]")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "tail_bound", tail)

    def __len__(self):
        return self.weights.size

    def __getitem__(self, i):
        return self.weights[i]

    def __iter__(self):
        return iter(self.weights)

    @property
    def total(self) -> float:
        return math.fsum(self.weights)


@dataclass(frozen=True)
class Entropy:
    value: float
    base: str = NATURAL

    def __post_init__(self):
        if self.base not in _BASES:
            raise DomainError(f"unknown entropy base {self.base!r}")
        if self.value < 0:
            raise DomainError("entropy must be nonnegative")

    def __float__(self):
        return float(self.value)

    @property
    def nats(self) -> float:
        return self.value if self.base == NATURAL else self.value * math.log(2)

    @property
    def bits(self) -> float:
        return self.value if self.base == TWO else self.value / math.log(2)

    def to(self, base: str) -> "Entropy":
        return Entropy(self.nats if base == NATURAL else self.bits, base)


def _in_base(nats: float, base: str) -> Entropy:
    if base not in _BASES:
        raise DomainError(f"unknown entropy base {base!r}")
    nats = max(float(nats), 0.0)
    return Entropy(nats if base == NATURAL else nats / math.log(2), base)


def entropy_terms(p) -> np.ndarray:
    """Elementwise -p log p in nats, with 0 log 0 = 0."""
    p = np.asarray(p, dtype=float)
    out = np.zeros_like(p)
    pos = p > 0
    out[pos] = -p[pos] * np.log(p[pos])
    return out


def shannon_entropy(p, base: str = NATURAL) -> Entropy:
    weights = p.weights if isinstance(p, ProbVector) else np.asarray(p, dtype=float)
    if weights.size and weights.min() < 0:
        raise DomainError("negative probability weight")
    return _in_base(math.fsum(entropy_terms(weights)), base)


def qubit_eigenvalues(p_g, p_e, rho_ge):
    """Eigenvalues (largest, smallest) of possibly sub-normalized 2x2 blocks, vectorized.

    The smaller eigenvalue is obtained from the determinant to avoid cancellation
    for nearly pure states.
    """
    p_g = np.asarray(p_g, dtype=float)
    p_e = np.asarray(p_e, dtype=float)
    c2 = np.abs(np.asarray(rho_ge)) ** 2
    tr = p_g + p_e
    disc = np.sqrt((p_g - p_e) ** 2 + 4.0 * c2)
    hi = 0.5 * (tr + disc)
    det = p_g * p_e - c2
    with np.errstate(divide="ignore", invalid="ignore"):
        lo = np.where(hi > 0, det / hi, 0.0)
    return hi, np.maximum(lo, 0.0)


def vn_entropy_2x2(rho: QubitState, base: str = NATURAL) -> Entropy:
    disc2 = (rho.p_g - rho.p_e) ** 2 + 4.0 * abs(rho.rho_ge) ** 2
    if disc2 > 1.0 + 1e-12:
        raise DomainError("input is not positive semidefinite")
    hi, lo = rho.eigenvalues()
    return _in_base(math.fsum(entropy_terms([hi, lo])), base)


def block_entropies(p_g, p_e, rho_ge) -> np.ndarray:
    """Von Neumann entropy (nats) of each normalized 2x2 block given sub-normalized entries.

    Blocks with zero trace get entropy 0.
    """
    p_g = np.asarray(p_g, dtype=float)
    p_e = np.asarray(p_e, dtype=float)
    rho_ge = np.asarray(rho_ge)
    tr = p_g + p_e
    safe = np.where(tr > 0, tr, 1.0)
    hi, lo = qubit_eigenvalues(p_g / safe, p_e / safe, rho_ge / safe)
    s = entropy_terms(hi) + entropy_terms(lo)
    return np.where(tr > 0, s, 0.0)


# -- factorials and special functions ----------------------------------------

_TABLE_MAX = 256
_LOG_FACTORIAL_TABLE = np.concatenate(
    ([0.0], [math.fsum(math.log(k) for k in range(1, n + 1)) for n in range(1, _TABLE_MAX + 1)])
)


def log_factorial(n):
    """ln(n!) from an exact-summation table up to 256, lgamma beyond.

    Accepts a nonnegative integer or an integer array.
    """
    if np.isscalar(n):
        n = int(n)
        if n < 0:
            raise DomainError("log_factorial needs n >= 0")
        if n <= _TABLE_MAX:
            return float(_LOG_FACTORIAL_TABLE[n])
        return math.lgamma(n + 1.0)
    n = np.asarray(n, dtype=np.int64)
    if n.size and n.min() < 0:
        raise DomainError("log_factorial needs n >= 0")
    small = n <= _TABLE_MAX
    out = np.empty(n.shape, dtype=float)
    out[small] = _LOG_FACTORIAL_TABLE[n[small]]
    out[~small] = gammaln(n[~small] + 1.0)
    return out


def assoc_laguerre(m: int, k, x):
    """Generalized Laguerre polynomial L_m^k(x) by upward recurrence in the degree.

    ``k`` and ``x`` may be numpy arrays (broadcast together).
    """
    if m < 0:
        raise DomainError("Laguerre degree must be nonnegative")
    k = np.asarray(k, dtype=float)
    x = np.asarray(x, dtype=float)
    prev = np.ones(np.broadcast(k, x).shape)
    if m == 0:
        return prev if prev.ndim else float(prev)
    cur = 1.0 + k - x
    for j in range(1, m):
        prev, cur = cur, ((2 * j + 1 + k - x) * cur - (j + k) * prev) / (j + 1)
    cur = np.asarray(cur, dtype=float)
    return cur if cur.ndim else float(cur)


# -- Poisson weights and the truncation rule -----------------------------------

def truncation_cutoff(intensity: float) -> int:
    """Highest Fock index kept for a distribution of the given intensity."""
    if intensity < 0 or not math.isfinite(intensity):
        raise DomainError("intensity must be finite and nonnegative")
    return int(math.ceil(intensity + 10.0 * math.sqrt(intensity))) + 25


def poisson_tail_bound(intensity: float, n_max: int) -> float:
    """Chernoff bound on P(X > n_max) for X ~ Poisson(intensity)."""
    a = n_max + 1
    if intensity == 0:
        return 0.0
    if a <= intensity:
        return 1.0
    log_bound = a * (1.0 + math.log(intensity) - math.log(a)) - intensity
    return math.exp(log_bound)


# Above this intensity the direct formula loses digits to cancellation between
# n log(lambda), lambda and log(n!), which are all O(lambda log lambda).
_SADDLE_POINT_FROM = 50.0
_HALF_LOG_2PI = 0.5 * math.log(2 * math.pi)


def stirling_error(n) -> np.ndarray:
    """log(n!) - [(n + 1/2) log n - n + log(2 pi)/2] for integers n >= 1."""
    n = np.asarray(n, dtype=np.int64)
    out = np.empty(n.shape, dtype=float)
    small = n <= _TABLE_MAX
    ns = n[small].astype(float)
    out[small] = _LOG_FACTORIAL_TABLE[n[small]] - (ns + 0.5) * np.log(ns) + ns - _HALF_LOG_2PI
    nl = n[~small].astype(float)
    inv2 = 1.0 / (nl * nl)
    out[~small] = (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0))) / nl
    return out


def _bd0(x: np.ndarray, lam: float) -> np.ndarray:
    """x log(x/lam) + lam - x, written to avoid cancellation near x = lam."""
    r = (x - lam) / lam
    return lam * ((1.0 + r) * np.log1p(r) - r)


def poisson_log_pmf(n, intensity: float) -> np.ndarray:
    """log of the Poisson pmf, n log(lambda) - lambda - log(n!).

    For large intensities the same quantity is evaluated in saddle-point form,
    -log(2 pi n)/2 - stirling_error(n) - bd0(n, lambda), which keeps relative
    accuracy near the bulk of the distribution.
    """
    n = np.asarray(n, dtype=np.int64)
    if intensity == 0:
        return np.where(n == 0, 0.0, -np.inf)
    if intensity < _SADDLE_POINT_FROM:
        return n * math.log(intensity) - intensity - log_factorial(n)
    out = np.full(n.shape, -float(intensity))
    pos = n > 0
    x = n[pos].astype(float)
    out[pos] = -_HALF_LOG_2PI - 0.5 * np.log(x) - stirling_error(n[pos]) - _bd0(x, float(intensity))
    return out


def poisson_weights(intensity: float, n_max: int | None = None) -> ProbVector:
    """Poisson pmf on 0..n_max, computed in log space, with its certified tail."""
    if n_max is None:
        n_max = truncation_cutoff(intensity)
    tail = poisson_tail_bound(intensity, n_max)
    if tail > TAIL_TOLERANCE:
        raise TruncationError(f"Poisson({intensity}) tail {tail:.3g} beyond n_max={n_max}")
    w = np.exp(poisson_log_pmf(np.arange(n_max + 1), intensity))
    return ProbVector(w, tail)


def geometric_tail(beta_omega: float, m_max: int) -> float:
    """Thermal occupation mass beyond m_max: exp(-(m_max+1) beta omega)."""
    return math.exp(-(m_max + 1) * beta_omega)


def thermal_cutoff(beta_omega: float, tol: float = 1e-13) -> int:
    """Smallest m_max whose thermal tail is below ``tol``."""
    return max(0, int(math.ceil(-math.log(tol) / beta_omega)) - 1)


def thermal_weights(beta_omega: float, m_max: int | None = None) -> ProbVector:
    """Gibbs occupation probabilities (1 - e^{-x}) e^{-m x} of an oscillator at x = beta*omega."""
    if m_max is None:
        m_max = thermal_cutoff(beta_omega)
    m = np.arange(m_max + 1)
    w = -math.expm1(-beta_omega) * np.exp(-m * beta_omega)
    return ProbVector(w, geometric_tail(beta_omega, m_max))


def thermal_entropy(beta_omega: float) -> float:
    """Exact entropy (nats) of the geometric occupation distribution."""
    x = beta_omega
    nbar = 1.0 / math.expm1(x)
    return (nbar + 1.0) * math.log1p(nbar) - nbar * math.log(nbar) if nbar > 0 else 0.0
