"""Value types shared across modules: qubit state, ancilla preparation, model knobs."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

_STATE_TOL = 1e-12


@dataclass(frozen=True)
class QubitState:
    """Density matrix of the measured qubit in the ordered basis (g, e).

    Only the upper coherence ``rho_ge = <g|rho|e>`` is stored; ``rho_eg`` is its
    complex conjugate.
    """

    p_g: float
    p_e: float
    rho_ge: complex = 0j

    def __post_init__(self):
        p_g, p_e, c = float(self.p_g), float(self.p_e), complex(self.rho_ge)
        if not (math.isfinite(p_g) and math.isfinite(p_e) and math.isfinite(abs(c))):
            raise DomainError("qubit state entries must be finite")
        if p_g < -_STATE_TOL or p_e < -_STATE_TOL:
            raise DomainError(f"negative population: p_g={p_g}, p_e={p_e}")
        if abs(p_g + p_e - 1.0) > _STATE_TOL:
            raise DomainError(f"populations sum to {p_g + p_e}, expected 1")
        if abs(c) ** 2 > p_g * p_e + _STATE_TOL:
            raise DomainError("coherence too large: state is not positive semidefinite")
        object.__setattr__(self, "p_g", p_g)
        object.__setattr__(self, "p_e", p_e)
        object.__setattr__(self, "rho_ge", c)

    @classmethod
    def reference(cls) -> "QubitState":
        """The maximally uncertain input (|g> + |e>)/sqrt(2)."""
        return cls(0.5, 0.5, 0.5 + 0j)

    @classmethod
    def ground(cls) -> "QubitState":
        return cls(1.0, 0.0, 0j)

    @classmethod
    def excited(cls) -> "QubitState":
        return cls(0.0, 1.0, 0j)

    @classmethod
    def from_bloch(cls, x: float, y: float, z: float) -> "QubitState":
        """Build from Bloch components with sigma_z = |e><e| - |g><g|."""
        r = math.sqrt(x * x + y * y + z * z)
        if r > 1 + _STATE_TOL:
            raise DomainError("Bloch vector longer than 1")
        # rho = (I + x X + y Y + z Z)/2 in (g, e) ordering with Z = diag(-1, 1)
        return cls(0.5 * (1 - z), 0.5 * (1 + z), 0.5 * complex(x, -y))

    @classmethod
    def from_matrix(cls, m) -> "QubitState":
        m = np.asarray(m, dtype=complex)
        if m.shape != (2, 2):
            raise DomainError("expected a 2x2 matrix")
        if abs(m[0, 1] - np.conj(m[1, 0])) > 1e-10:
            raise DomainError("matrix is not Hermitian")
        return cls(float(m[0, 0].real), float(m[1, 1].real), complex(m[0, 1]))

    @property
    def rho_eg(self) -> complex:
        return self.rho_ge.conjugate()

    def matrix(self) -> np.ndarray:
        return np.array([[self.p_g, self.rho_ge], [self.rho_eg, self.p_e]], dtype=complex)

    def eigenvalues(self) -> tuple[float, float]:
        """Closed-form eigenvalues, largest first."""
        d = math.sqrt((self.p_g - self.p_e) ** 2 + 4.0 * abs(self.rho_ge) ** 2)
        lam_hi = 0.5 * (1.0 + d)
        det = self.p_g * self.p_e - abs(self.rho_ge) ** 2
        lam_lo = max(det / lam_hi, 0.0) if lam_hi > 0 else 0.0
        return lam_hi, lam_lo


@dataclass(frozen=True)
class AncillaInit:
    """Initial pointer state: the Fock vacuum or a Gibbs state at beta*omega_a."""

    kind: str = "vacuum"
    beta_omega: float | None = None

    def __post_init__(self):
        if self.kind not in ("vacuum", "thermal"):
            raise DomainError(f"unknown ancilla initialization {self.kind!r}")
        if self.kind == "thermal":
            if self.beta_omega is None or not self.beta_omega > 0 or not math.isfinite(self.beta_omega):
                raise DomainError("thermal initialization needs a finite beta_omega > 0")
            object.__setattr__(self, "beta_omega", float(self.beta_omega))

    @classmethod
    def vacuum(cls) -> "AncillaInit":
        return cls("vacuum")

    @classmethod
    def thermal(cls, beta_omega: float) -> "AncillaInit":
        return cls("thermal", beta_omega)

    @property
    def is_vacuum(self) -> bool:
        return self.kind == "vacuum"

    @property
    def mean_occupation(self) -> float:
        if self.is_vacuum:
            return 0.0
        return 1.0 / math.expm1(self.beta_omega)


@dataclass(frozen=True)
class MeasurementParams:
    """Knobs of the qubit-oscillator measurement.

    The pointer is displaced by ``alpha_1 = alpha_bar + epsilon`` when the qubit is
    in |g> and by ``alpha_2 = alpha_bar - epsilon`` when it is in |e>.  ``phi`` is
    the net phase carried by the ge coherence.  ``omega_q`` only enters the qubit
    energy bookkeeping.
    """

    alpha_bar: complex = 0.0
    epsilon: complex = 0.0
    phi: float = 0.0
    beta: float = 1.0
    omega_a: float = 1.0
    omega_q: float = 0.0
    init: AncillaInit = field(default_factory=AncillaInit.vacuum)

    def __post_init__(self):
        a1, a2 = self.alpha_1, self.alpha_2
        if not (math.isfinite(abs(a1)) and math.isfinite(abs(a2))):
            raise DomainError("displacements must be finite")
        if not self.beta > 0:
            raise DomainError("beta must be positive")
        if not self.omega_a > 0:
            raise DomainError("omega_a must be positive")
        if self.omega_q < 0:
            raise DomainError("omega_q must be nonnegative")

    @property
    def alpha_1(self) -> complex:
        return complex(self.alpha_bar) + complex(self.epsilon)

    @property
    def alpha_2(self) -> complex:
        return complex(self.alpha_bar) - complex(self.epsilon)
