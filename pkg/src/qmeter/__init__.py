"""Nonideal qubit measurements through an oscillator pointer: channels, figures of
merit, work bounds and weak-measurement sequences."""

from .errors import (
    ConfigError,
    DomainError,
    QmeterError,
    ToleranceError,
    TruncationError,
    UnsupportedError,
)
from .fock import JointState, build_joint_predephasing, dephase, displacement_element, rotate_pairs
from .measurement import (
    CoarseGraining,
    OutcomeChannel,
    coarse_grain,
    conditional_states,
    kraus_operator,
    outcome_probabilities,
    unconditional_post_state,
    weak_expansion,
)
from .metrics import (
    MetricsReport,
    efficiency_eta,
    eta_mutual,
    evaluate,
    hierarchy_check,
    holevo_chi,
    mutual_information,
    strength_xi,
)
from .numerics import Entropy, ProbVector, assoc_laguerre, log_factorial, shannon_entropy, vn_entropy_2x2
from .sequence import (
    ScalingModel,
    SequenceSpec,
    StatTable,
    build_stat_table,
    find_n_star,
    monte_carlo_oracle,
    scaling_predictions,
    sequence_metrics,
    total_work_sequence,
)
from .states import AncillaInit, MeasurementParams, QubitState
from .thermo import SbsParams, ThermoLedger, sbs_overlap, thermo_ledger, work_bound_dephasing, work_bound_dissipation

__version__ = "0.1.0"
