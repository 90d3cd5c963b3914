"""Forest expansions of two-body partition functions on sparse graphs."""

from .approx import (
    AboveCriticalWarning,
    BoundReport,
    CorrectionFamily,
    CorrectionTerm,
    SIntegralResult,
    correction_terms,
    cycle_observable,
    error_bound,
    first_order_partition,
    multi_cycle_bound,
    q_correction_sets,
    reference_tree,
    s_closed_form,
    s_integral,
    s_quadrature,
    s_series,
    single_cycle_identity,
    tree_partition,
)
from .bp import Beliefs, kl_divergence, log_partition_tree, node_kl, run_bp
from .config import ExperimentConfig, ModelConfig, TempGrid
from .errors import CapExceededError, ConfigError
from .exact import ExactResult, exact_marginals, exact_partition
from .forests import (
    ForestFamily,
    RootedDecomposition,
    enumerate_forests,
    forest_partition,
    forest_term,
    graph_polynomial,
    orthogonalize,
)
from .graph import (
    Cycle,
    DensityReport,
    GraphFormatError,
    InteractionGraph,
    TreeCotree,
    classify_density,
    cycle_algebra,
    dual_graph,
    fundamental_cycles,
    girth,
    max_spanning_tree,
    parse_edge_list,
    read_edge_list,
)
from .model import (
    KAPPA,
    W1,
    PairwiseModel,
    TemperatureReport,
    critical_beta,
    edge_factor,
    edge_weight_for_mst,
    ising_model,
    table_model,
)
from .special import lambert_w, lower_gamma_scaled

__version__ = "0.1.0"
