"""Truncated Fock-space representation of the pointer oscillator.

The joint qubit-pointer state is kept as four Fock-indexed blocks
``gg = <g|rho|g>``, ``ge``, ``eg = ge^dagger`` and ``ee``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, TruncationError
from .numerics import (
    TAIL_TOLERANCE,
    assoc_laguerre,
    log_factorial,
    poisson_tail_bound,
    thermal_weights,
    truncation_cutoff,
)
from .states import AncillaInit, MeasurementParams, QubitState

__all__ = [
    "AncillaInit",
    "JointState",
    "build_joint_predephasing",
    "dephase",
    "displacement_columns",
    "displacement_element",
    "displacement_matrix",
    "pair_rotation_matrix",
    "rotate_pairs",
]


def displacement_element(n: int, m: int, alpha: complex, n_max: int | None = None) -> complex:
    """<n|D(alpha)|m> for D(alpha) = exp(alpha a^dag - alpha^* a).

    Uses the associated-Laguerre closed form with the factorial ratio taken in
    log space.
    """
    if n < 0 or m < 0 or (n_max is not None and (n > n_max or m > n_max)):
        raise IndexError(f"Fock index ({n}, {m}) out of range")
    alpha = complex(alpha)
    x = abs(alpha) ** 2
    if x == 0:
        return 1.0 + 0j if n == m else 0j
    if n >= m:
        k, low, phase = n - m, m, np.exp(1j * math.atan2(alpha.imag, alpha.real))
    else:
        k, low, phase = m - n, n, -np.exp(-1j * math.atan2(alpha.imag, alpha.real))
    log_pref = 0.5 * (log_factorial(low) - log_factorial(low + k)) + k * math.log(math.sqrt(x)) - 0.5 * x
    return complex(math.exp(log_pref) * assoc_laguerre(low, k, x) * phase**k)


def _scaled_laguerre_table(x: float, m_max: int, k_max: int) -> np.ndarray:
    """Table d[m, k] = |<m+k|D(alpha)|m>| up to sign, for |alpha|^2 = x.

    d[m, k] = sqrt(m!/(m+k)!) x^{k/2} e^{-x/2} L_m^k(x).  The Laguerre recurrence
    is rescaled so every entry stays bounded by one.
    """
    k = np.arange(k_max + 1, dtype=float)
    d = np.zeros((m_max + 1, k_max + 1))
    if x == 0:
        d[:, 0] = 1.0
        return d
    d[0] = np.exp(0.5 * k * math.log(x) - 0.5 * x - 0.5 * log_factorial(np.arange(k_max + 1)))
    if m_max >= 1:
        d[1] = d[0] * (1.0 + k - x) / np.sqrt(k + 1.0)
    for m in range(1, m_max):
        d[m + 1] = ((2 * m + 1 + k - x) * d[m] - np.sqrt(m * (m + k)) * d[m - 1]) / np.sqrt(
            (m + 1) * (m + 1 + k)
        )
    return d


def displacement_columns(alpha: complex, dim: int, m_max: int) -> np.ndarray:
    """The first ``m_max + 1`` columns of D(alpha) on a ``dim``-level truncation."""
    if dim < 1 or m_max < 0 or m_max >= dim:
        raise DomainError("need 0 <= m_max < dim")
    alpha = complex(alpha)
    d = _scaled_laguerre_table(abs(alpha) ** 2, m_max, dim - 1)
    theta = math.atan2(alpha.imag, alpha.real)
    n = np.arange(dim)[:, None]
    m = np.arange(m_max + 1)[None, :]
    upper = n >= m
    k_up = np.where(upper, n - m, 0)
    k_lo = np.where(upper, 0, m - n)
    row_lo = np.where(upper, 0, np.minimum(n, m_max))
    vals_up = d[np.broadcast_to(m, upper.shape), k_up] * np.exp(1j * theta * k_up)
    vals_lo = d[row_lo, k_lo] * (-np.exp(-1j * theta)) ** k_lo
    return np.where(upper, vals_up, vals_lo)


def displacement_matrix(alpha: complex, dim: int) -> np.ndarray:
    """Truncated D(alpha); accurate away from the truncation edge."""
    return displacement_columns(alpha, dim, dim - 1)


def pair_rotation_matrix(dim: int, theta: float) -> np.ndarray:
    """Rotation mixing each Fock pair (2n, 2n+1); an unpaired top level stays fixed."""
    r = np.eye(dim)
    c, s = math.cos(theta), math.sin(theta)
    for top in range(0, dim - 1, 2):
        # |2n> -> c|2n> + s|2n+1>,  |2n+1> -> c|2n+1> - s|2n>
        r[top, top], r[top + 1, top] = c, s
        r[top, top + 1], r[top + 1, top + 1] = -s, c
    return r


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class JointState:
    """Qubit-pointer state stored as Fock-space blocks.

    ``eg`` is derived as ``ge^dagger`` so Hermiticity holds by construction.
    """

    gg: np.ndarray
    ge: np.ndarray
    ee: np.ndarray
    dephased: bool = False
    tail_bound: float = 0.0

    def __post_init__(self):
        gg, ge, ee = (_frozen(b) for b in (self.gg, self.ge, self.ee))
        if not (gg.shape == ge.shape == ee.shape) or gg.ndim != 2 or gg.shape[0] != gg.shape[1]:
            raise DomainError("blocks must be square matrices of a common size")
        object.__setattr__(self, "gg", gg)
        object.__setattr__(self, "ge", ge)
        object.__setattr__(self, "ee", ee)

    @property
    def eg(self) -> np.ndarray:
        return self.ge.conj().T

    @property
    def dim(self) -> int:
        return self.gg.shape[0]

    def trace(self) -> float:
        return float(np.trace(self.gg).real + np.trace(self.ee).real)

    def reduced_qubit(self) -> QubitState:
        """Partial trace over the pointer, renormalized against truncation loss."""
        tr = self.trace()
        return QubitState(
            float(np.trace(self.gg).real) / tr,
            float(np.trace(self.ee).real) / tr,
            complex(np.trace(self.ge)) / tr,
        )

    def ancilla(self) -> np.ndarray:
        return self.gg + self.ee

    def number_blocks(self):
        """Diagonal entries (gg_nn, ee_nn, ge_nn) for every Fock index n."""
        return np.diag(self.gg).real.copy(), np.diag(self.ee).real.copy(), np.diag(self.ge).copy()


def _joint_cutoff(params: MeasurementParams):
    init = params.init
    if init.is_vacuum:
        weights, m_max = np.array([1.0]), 0
        init_tail = 0.0
    else:
        pv = thermal_weights(init.beta_omega)
        weights, m_max, init_tail = pv.weights, len(pv) - 1, pv.tail_bound
    reach = max(abs(params.alpha_1), abs(params.alpha_2)) + math.sqrt(m_max)
    intensity = reach**2
    n_max = max(truncation_cutoff(intensity), m_max + 1)
    return weights, m_max, n_max, init_tail + poisson_tail_bound(intensity, n_max)


def build_joint_predephasing(params: MeasurementParams, qubit: QubitState) -> JointState:
    """Joint state right after the interaction, before the pointer dephases.

    Each block is the congruence D(alpha_i) rho_A D(alpha_j)^dagger of the initial
    pointer state (vacuum or thermal, diagonal in Fock space).
    """
    weights, m_max, n_max, tail = _joint_cutoff(params)
    dim = n_max + 1
    c1 = displacement_columns(params.alpha_1, dim, m_max)
    c2 = displacement_columns(params.alpha_2, dim, m_max)
    w1 = c1 * weights
    w2 = c2 * weights
    gg = qubit.p_g * (w1 @ c1.conj().T)
    ee = qubit.p_e * (w2 @ c2.conj().T)
    ge = qubit.rho_ge * np.exp(-1j * params.phi) * (w1 @ c2.conj().T)
    lost = 1.0 - float(np.trace(gg).real + np.trace(ee).real)
    tail = max(tail, lost)
    if tail > TAIL_TOLERANCE:
        raise TruncationError(f"truncation at n_max={n_max} leaves tail {tail:.3g}")
    return JointState(gg, ge, ee, dephased=False, tail_bound=tail)


def dephase(joint: JointState) -> JointState:
    """Complete dephasing of the pointer in the Fock basis (keeps Fock-diagonal entries)."""
    keep = [np.diag(np.diag(b)) for b in (joint.gg, joint.ge, joint.ee)]
    return JointState(*keep, dephased=True, tail_bound=joint.tail_bound)


def rotate_pairs(joint: JointState, theta: float) -> JointState:
    """Apply the Fock pair rotation to the pointer before dephasing."""
    if joint.dephased:
        raise DomainError("the pair rotation acts on the pointer before dephasing")
    r = pair_rotation_matrix(joint.dim, theta)
    blocks = [r @ b @ r.T for b in (joint.gg, joint.ge, joint.ee)]
    return JointState(*blocks, dephased=False, tail_bound=joint.tail_bound)
