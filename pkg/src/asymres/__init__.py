"""Asymmetrically coupled resonators: spectra, exceptional points, dynamics.

A desk-scale simulation toolkit for two-mode and chain resonator systems
with non-reciprocal coupling, their optomechanical realization, the reduced
two-mode dynamics after mechanical elimination, and the driven nonlinear
regime where the asymmetric coupling induces chaos.
"""

__version__ = "0.1.0"

from .spectra import (
    EPDegenerateError,
    TwoModeParams,
    GainLossParams,
    ChainParams,
    SpectrumResult,
    BiorthogonalBasis,
    ParamSweep,
    EPLocation,
    two_mode_hamiltonian,
    two_mode_spectrum,
    gain_loss_hamiltonian,
    gain_loss_spectrum,
    build_chain_hamiltonian,
    chain_spectrum,
    sweep_spectra,
    find_exceptional_points,
    biorthogonal_basis,
)
from .integrator import IntegrationError, IntegratorConfig, Trajectory
from .dynamics import (
    EliminationValidityWarning,
    OptomechParams,
    EffectiveParams,
    ChaosParams,
    ModalSolution,
    exact_rhs,
    effective_rhs,
    chaos_rhs,
    derive_effective_params,
    balanced_gain_coupling,
    chaos_subsystem_spectrum,
    integrate,
    modal_solution,
    analytic_solution,
)
from .analysis import (
    AnalysisError,
    PearsonConfig,
    DiagnosticsReport,
    GrowthFit,
    LLEResult,
    pearson_factor,
    elimination_error,
    envelope_peaks,
    envelope_growth_rate,
    beat_frequency,
    lyapunov_exponent,
    classify,
)
from .scenarios import (
    ConfigError,
    Scenario,
    RunManifest,
    PRESET_NAMES,
    load_scenario,
    serialize_scenario,
    run_scenario,
)
