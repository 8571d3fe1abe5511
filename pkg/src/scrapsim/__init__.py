"""Adiabatic-passage quantum state engineering in flux-biased phase qubits.

Solves the junction bound-state problem from circuit parameters, propagates
driven multi-level dynamics under pump + Stark pulse schedules, and runs the
single-qubit gate protocols and the two-qubit chirped swap passage.
"""

from .circuit import (CircuitParams, LevelStructure, PhaseGrid,
                      PotentialProfile, REFERENCE_PARAMS, dipole_matrix,
                      levels_report, locate_left_well, momentum_matrix,
                      potential_energy, potential_profile, solve_bound_states)
from .dynamics import (TimeDependentHamiltonian, TrajectoryResult,
                       adiabatic_populations, basis_state, evolve, frame_shift,
                       instantaneous_eigensystem, pi_pulse_analytic,
                       state_vector)
from .pulses import (AdiabaticityReport, PulseSchedule, PulseShape,
                     adiabaticity_margin, constant, evaluate, gaussian,
                     linear_ramp, make_chirped_inversion_schedule,
                     make_hadamard_schedule, make_inversion_schedule,
                     mixing_angle, schedule_mixing_summary, zero)
from .single_qubit import (GateResult, QubitModel3,
                           build_three_level_hamiltonian, calibrate_amplitude,
                           not_gate, phase_gate, readout_transfer,
                           run_hadamard, run_inversion)
from .two_qubit import (CoupledCircuitParams, SubspaceModel, TwoQubitResult,
                        assemble_nine_level_model, build_subspace_hamiltonians,
                        renormalized_capacitances, resonant_swap_period,
                        run_iswap_passage, solve_coupled_levels,
                        stark_shift_ratio, subspace_invariance_check)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
