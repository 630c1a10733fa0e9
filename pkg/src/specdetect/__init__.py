"""Spectral detectability laboratory for two-block random graphs.

Three analytical engines (population dynamics for the cavity equations,
closed-form effective-medium curves, defect-tree localization) plus a
microcanonical graph generator and sparse eigensolver to validate them
against, with an experiment harness tying everything together.
"""
from .eigen import (
    EigenResult,
    dense_spectrum_oracle,
    ipr,
    overlap,
    second_smallest_eigenpair,
)
from .ema import (
    EmaSolution,
    ThresholdRecord,
    appendix_c_diagnostic,
    detectability_threshold,
    gaussian_fraction_correct,
    ncut_ema,
    ratiocut_ema,
    regular_solution,
    sbm_delta_from_gamma,
    sbm_gamma_from_delta,
    sbm_lambda2_curve,
)
from .errors import SpecDetectError
from .experiments import (
    ExperimentConfig,
    derive_seed,
    emit_phase_diagram,
    figure_preset,
    run_experiment,
    write_csv,
)
from .graphs import (
    Bimodal,
    BlockParams,
    EnsembleCount,
    PlantedGraph,
    Poisson,
    Regular,
    log_count_graphs,
    mean_degree,
    sample_graph,
    save_edge_list,
    save_labels,
)
from .localization import (
    DefectTree,
    Ema,
    Kind,
    LocalizedMode,
    Uniform,
    bulk_damping_factor,
    defect_degree,
    localization_compare,
    localized_mode_ema,
    localized_mode_uniform,
)
from .operators import LaplacianKind, build_laplacian, matvec, zero_mode
from .replica import (
    Model,
    PdConfig,
    PdResult,
    Population,
    cavity_sweep,
    element_distribution,
    evaluate_lambda2,
    run_population_dynamics,
)

__version__ = "0.1.0"
