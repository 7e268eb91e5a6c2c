"""Collective-encoding quantum register in a Rydberg-blockaded atomic ensemble.

The ensemble is described in the symmetric Fock basis of occupation numbers
of a reservoir level, ``N`` register levels and the Rydberg level(s).  Gates
are compiled into collectively enhanced pulses and simulated directly in
that basis.
"""

from .circuit import Circuit, format_circuit, parse_circuit
from .dynamics import (
    TWO_PI,
    BlockadeModel,
    DecayModel,
    PulseSpec,
    apply_pulse,
    build_hamiltonian,
    evolve,
    forster_shift,
    mhz,
    propagate,
    to_mhz,
)
from .errors import *  # noqa: F401,F403
from .fock import (
    EnsembleState,
    FockBasis,
    FockState,
    encode_register,
    enumerate_basis,
    fidelity,
    register_distribution,
    state_from_register,
)
from .physics import (
    ForsterParams,
    LevelScheme,
    TrapGeometry,
    blockade_statistics,
    default_forster_params,
    degenerate_transition_check,
    fit_forster_params,
    forster_curve,
    load_level_scheme,
    rydberg_lifetime,
    zeeman_selectivity,
)
from .protocols import (
    CalibrationPolicy,
    GateFidelity,
    GateOp,
    PhysicsConfig,
    PulseSchedule,
    apply_ideal_gate,
    compile_cnot,
    compile_cz,
    compile_gate,
    compile_rotation,
    compile_rz,
    gate_fidelity,
    ideal_register_unitary,
    load_golden_tables,
    rotation_matrix,
    simulate_schedule,
)
from .runner import RunConfig, RunReport, emit_interaction_curve, load_run_config, run_circuit, sweep

__version__ = "0.1.0"
