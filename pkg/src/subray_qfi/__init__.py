"""Quantum Fisher information and resolution limits for two incoherent thermal
point sources, with a thermal-background model of detector dark counts."""

__version__ = "0.1.0"

from .errors import DomainError, NoCrossing, QuadratureNonConvergence, TruncationWarning
from .psf import (
    OverlapFunctionals,
    PointSpreadFunction,
    PsfKind,
    QuadratureConfig,
    amplitude,
    delta_k2,
    functionals,
    load_table,
    overlap_delta,
    overlap_gamma,
)
from .photostat import ModeMeans, SourceScenario, mode_means, pmf, prob_fisher_term, series_oracle_fisher
from .qfi import (
    QfiBreakdown,
    classical_limit,
    cramer_rao_error,
    operator_term,
    qfi_exact,
    qfi_ideal_closed_form,
    qfi_noisy_closed_form,
)
from .analysis import HalfMaxResult, ScalingFit, SweepTable, find_s_half, snr_scaling_fit, sweep_qfi
