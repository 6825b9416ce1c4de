"""Multiphoton rates of heralded photon-pair sources synchronized by quantum memories.

The package computes, in closed form and by independent Monte Carlo
simulation, the N-photon coincidence probability, waiting time, and state
fidelity of N heralded sources whose outputs are stored in quantum
memories until all units can deliver a photon at once.
"""

from .core import (
    DEFAULT_N_MAX,
    MemoryParams,
    ProbDist,
    SourceParams,
    SystemParams,
    binomial_loss,
    decoherence_step_prob,
    herald_prob,
    heralded_dist,
    loss_matrix,
    params_fingerprint,
    thermal_dist,
)
from .belief import BeliefSolution, belief_transfer, consistency_residual, solve_belief
from .binary import (
    ChainRates,
    SyncReport,
    chain_rates,
    chain_transfer_matrix,
    coincidence_closed_form,
    small_rate_limit,
    steady_occupancy,
    unit_gain_factor,
    waiting_time,
)
from .resolved import (
    FidelityReport,
    SystemAnalysis,
    ThresholdResult,
    TransferMatrix,
    analyze_system,
    build_transfer_matrix,
    coincidence_exact,
    fidelity_no_memory,
    fidelity_postselected,
    fidelity_unpostselected,
    nfold_convolution,
    prob_at_least,
    prob_fewer_than,
    readout_conditional_dist,
    retrieved_dist,
    steady_state,
    sync_output_dist,
    threshold_p_sync,
    threshold_p_unsync,
)
from .montecarlo import (
    BinaryChainStats,
    DiscrepancyRow,
    DiscrepancyTable,
    SimConfig,
    SimStats,
    SingleMemoryStats,
    compare_to_analytic,
    run_binary_chain,
    run_simulation,
    run_single_memory,
)
from .config import ExperimentConfig, parse_config
from . import errors

__version__ = "0.1.0"
