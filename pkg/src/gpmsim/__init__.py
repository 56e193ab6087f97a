"""Measurement-based preparation of large Fock and Dicke states.

Sequential ancilla measurements with tailored joint-evolution intervals
realise an effective generalized parity measurement that conditionally
steers a bosonic mode (or a symmetric spin ensemble) onto a target number
(Dicke) state.  The package provides the closed-system protocols, their
idealized comb-projector oracles, Lindblad open-system runs, scaling-law
fits, quantum Fisher information, and an experiment-runner CLI.
"""

from .analysis import (DegenerateInputError, NotReachedError, ScalingFit,
                       fit_log_scaling, fit_qfi_quadratic, min_rounds,
                       scaling_curve)
from .dicke import (DickeEnsemble, DickeSchedule, build_dicke_schedule,
                    dicke_filter, dicke_gpm_operator, initial_product_state,
                    lambda_coefficient, optimal_phi, qfi_x, run_dicke_protocol)
from .dispersive import (DispersiveSchedule, build_dispersive_schedule,
                         dispersive_filter, run_dispersive_protocol)
from .hilbert import (CouplingParams, DensityMatrix, DiagonalFilter,
                      IntegrationError, PureState, RunRecord, TruncationError,
                      ZeroProbabilityError, apply_filter, coherent_state,
                      fidelity_with_basis_state, fock_cutoff, integrate_ode)
from .jc_fock import (FockSchedule, beta_coefficient, build_fock_schedule,
                      gpm_operator, resonant_filter, run_ideal_protocol,
                      success_prob_theory)
from .open_system import (NoiseParams, compose_with_ancilla, hadamard_ancilla,
                          lindblad_rhs, make_lindblad_rhs, project_ancilla,
                          reset_ancilla_ground, run_noisy_protocol)

__version__ = "0.1.0"

__all__ = [
    "CouplingParams", "DegenerateInputError", "DensityMatrix",
    "DiagonalFilter", "DickeEnsemble", "DickeSchedule", "DispersiveSchedule",
    "FockSchedule", "IntegrationError", "NoiseParams", "NotReachedError",
    "PureState", "RunRecord", "ScalingFit", "TruncationError",
    "ZeroProbabilityError", "apply_filter", "beta_coefficient",
    "build_dicke_schedule", "build_dispersive_schedule", "build_fock_schedule",
    "coherent_state", "compose_with_ancilla", "dicke_filter",
    "dicke_gpm_operator", "dispersive_filter", "fidelity_with_basis_state",
    "fit_log_scaling", "fit_qfi_quadratic", "fock_cutoff", "gpm_operator",
    "hadamard_ancilla", "initial_product_state", "integrate_ode",
    "lambda_coefficient", "lindblad_rhs", "make_lindblad_rhs", "min_rounds",
    "optimal_phi", "project_ancilla", "qfi_x", "reset_ancilla_ground",
    "resonant_filter", "run_dicke_protocol", "run_dispersive_protocol",
    "run_ideal_protocol", "run_noisy_protocol", "scaling_curve",
    "success_prob_theory",
]
