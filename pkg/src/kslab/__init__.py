"""kslab: Karp-Sipser leaf removal on sparse random graphs.

Simulation kernels for the leaf-removal process on random (multi)graphs,
exact matching/rank oracles, deterministic fluid-limit and covariance
numerics, and a Monte Carlo harness that checks the law of large numbers,
the phase transition at average degree e, and Gaussian fluctuations of the
matching number and adjacency rank.
"""

from .graphs import (
    MultiGraph,
    SimpleGraph,
    couple_configurations,
    edit_distance,
    gen_configuration,
    gen_gnm,
    gen_gnp,
    gen_multigraph,
    graph_from_text,
    graph_to_text,
    is_good_sequence,
    read_graph,
    write_graph,
)
from .covariance import (
    correlation_phi,
    initial_covariance,
    limiting_sigma44,
    low_rank_check,
    propagate_covariance,
    stopped_covariance,
)
from .fluid import (
    chi_of_z,
    diffusion_matrix,
    drift_F,
    jacobian_dF,
    lambert_w,
    limiting_eigensystem,
    rate_beta,
    s_delta,
    s_star,
    z_delta,
    z_of_s,
    z_of_x,
)
from .ks import (
    HAVE_COMPILED_KERNELS,
    KsCheckpoint,
    KsState,
    KsTrace,
    StopRule,
    active_engine,
    degree_histogram,
    ks_step,
    run_ks,
)
from .matching import brute_matching, max_matching
from .mc import (
    ExperimentConfig,
    SampleRecord,
    analyze,
    compare_models,
    degree_law_check,
    read_samples,
    run_monte_carlo,
    sweep_core,
    write_samples,
)
from .oracles import alpha_c, ks_accelerated
from .rank import adjacency_rank
from .rng import RngStream

__version__ = "0.1.0"
