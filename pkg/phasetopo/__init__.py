"""
Purpose
=======

phasetopo recovers the topology and the phase labels of multi-phase radial
distribution grids from voltage measurements. It provides the linearized
three-phase network model, a measurement panel simulator, the covariance based
decision statistics, the greedy recovery and an experiment harness.

The following functionalities are directly provided on module-level.

Network model
=============

.. autosummary::
   :toctree: _autosummary

    Phase
    PhaseSet
    LineModel
    RadialNetwork
    ImpedanceParams
    validate_network
    check_line_condition
    random_radial
    preset_network
    toynet
    load_network
    save_network

System matrices
===============

.. autosummary::
   :toctree: _autosummary

    BlockIndex
    SystemMatrices
    build_incidence
    build_admittance
    reduce
    build_B
    path_impedances
    impedance_by_paths
    impedance_by_inverse
    system_matrices
    invert
    dump_matrix

Simulation
==========

.. autosummary::
   :toctree: _autosummary

    InjectionSpec
    NoiseSpec
    VoltagePanel
    sample_injections
    voltages_from_injections
    add_noise
    to_magnitudes
    balanced_reference
    scramble_phases
    simulate_panel
    load_panel
    save_panel

Statistics
==========

.. autosummary::
   :toctree: _autosummary

    CovarianceTable
    PairScores
    empirical_cov
    covariance_from_panel
    analytic_cov
    phase_match_score
    best_phase_match
    diff_variance
    pairwise_scores

Recovery
========

.. autosummary::
   :toctree: _autosummary

    RecoveryResult
    get_next
    gpt
    phase_id_known_topology
    topology_known_phases
    recover_from_magnitudes
    load_result
    save_result

Harness
=======

.. autosummary::
   :toctree: _autosummary

    TrialConfig
    TrialReport
    SweepGrid
    topology_error
    phase_error
    run_trials
    sweep
    edge_frequency_frame

"""
from phasetopo.__about__ import __author__, __name__, __version__
from phasetopo.admittance import (
    BlockIndex,
    SystemMatrices,
    build_admittance,
    build_B,
    build_incidence,
    dump_matrix,
    impedance_by_inverse,
    impedance_by_paths,
    invert,
    path_impedances,
    reduce,
    system_matrices,
)
from phasetopo.harness import (
    SweepGrid,
    TrialConfig,
    TrialReport,
    edge_frequency_frame,
    phase_error,
    run_trials,
    sweep,
    topology_error,
)
from phasetopo.network import (
    ImpedanceParams,
    LineModel,
    Phase,
    PhaseSet,
    RadialNetwork,
    check_line_condition,
    load_network,
    preset_network,
    random_radial,
    save_network,
    toynet,
    validate_network,
)
from phasetopo.recover import (
    RecoveryResult,
    get_next,
    gpt,
    load_result,
    phase_id_known_topology,
    recover_from_magnitudes,
    save_result,
    topology_known_phases,
)
from phasetopo.simulate import (
    InjectionSpec,
    NoiseSpec,
    VoltagePanel,
    add_noise,
    balanced_reference,
    load_panel,
    sample_injections,
    save_panel,
    scramble_phases,
    simulate_panel,
    to_magnitudes,
    voltages_from_injections,
)
from phasetopo.stats import (
    CovarianceTable,
    PairScores,
    analytic_cov,
    best_phase_match,
    covariance_from_panel,
    diff_variance,
    empirical_cov,
    pairwise_scores,
    phase_match_score,
)

__all__ = [
    "__version__",
    "__name__",
    "__author__",
    "Phase",
    "PhaseSet",
    "LineModel",
    "RadialNetwork",
    "ImpedanceParams",
    "validate_network",
    "check_line_condition",
    "random_radial",
    "preset_network",
    "toynet",
    "load_network",
    "save_network",
    "BlockIndex",
    "SystemMatrices",
    "build_incidence",
    "build_admittance",
    "reduce",
    "build_B",
    "path_impedances",
    "impedance_by_paths",
    "impedance_by_inverse",
    "system_matrices",
    "invert",
    "dump_matrix",
    "InjectionSpec",
    "NoiseSpec",
    "VoltagePanel",
    "sample_injections",
    "voltages_from_injections",
    "add_noise",
    "to_magnitudes",
    "balanced_reference",
    "scramble_phases",
    "simulate_panel",
    "load_panel",
    "save_panel",
    "CovarianceTable",
    "PairScores",
    "empirical_cov",
    "covariance_from_panel",
    "analytic_cov",
    "phase_match_score",
    "best_phase_match",
    "diff_variance",
    "pairwise_scores",
    "RecoveryResult",
    "get_next",
    "gpt",
    "phase_id_known_topology",
    "topology_known_phases",
    "recover_from_magnitudes",
    "load_result",
    "save_result",
    "TrialConfig",
    "TrialReport",
    "SweepGrid",
    "topology_error",
    "phase_error",
    "run_trials",
    "sweep",
    "edge_frequency_frame",
]
