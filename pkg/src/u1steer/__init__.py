"""Steered-trajectory toolkit for entanglement transitions in U(1) circuits.

Subsystem charge fluctuations of a monitored, charge-conserving brickwork
circuit stand in for the entanglement entropy. Steered runs reproduce a
target trajectory's statistics without postselection; sector filtering and
a volume-law correction recover the postselected fluctuations, and a
scaling collapse locates the transition.
"""

from .state import (
    MAX_QUBITS,
    ChargeMoments,
    GateParams,
    NumericalCorruptionError,
    StateVector,
    apply_pauli_x,
    apply_u1_gate,
    entanglement_entropy,
    exact_charge_moments,
    fidelity,
    init_mirrored_zero_charge,
    init_neel,
    measure_qubit,
    sample_gate_params,
    schmidt_spectrum,
    total_charge_distribution,
)
from .circuits import (
    CircuitRealization,
    ExactSeries,
    ShotRecord,
    TargetRecord,
    TimeEvolution,
    batch_steer,
    brick_links,
    load_shots,
    load_targets,
    run_steered,
    run_target,
    run_time_evolution_experiment,
    sample_realization,
    save_shots,
    save_targets,
)
from .estimators import (
    FitDegenerateError,
    FluctuationCurve,
    InsufficientDataError,
    SectorStats,
    average_over_targets,
    corrected_fluctuation,
    effective_fluctuation,
    extract_cv,
    filter_sector,
    fit_entropy_fluctuation_relation,
    reconstruct_entropy,
    sample_variance,
    sector_stats,
    smooth_step,
    subsystem_charge_histogram,
)
from .collapse import (
    AnalysisFailedError,
    CollapseInput,
    CollapseResult,
    EmptyWindowError,
    collapse_cost,
    collapse_scatter,
    grid_search,
    select_half_parity,
)
from .oracles import (
    AnalyticSpectrum,
    LemmaReport,
    OverheadEstimate,
    brute_force_reference,
    lemma_checks,
    oracle_entropy,
    oracle_spectrum,
    oracle_variance,
    overhead_estimate,
    variance_of_variance,
)
from .rng import child_seed, substream

__version__ = "0.1.0"
