"""regretlab: no-regret learning dynamics with mechanically checked guarantees.

A library and CLI for running decentralized learning in finite normal-form
games (including first-price auctions) and splittable routing games, with
certificates for every guarantee the implemented algorithms carry: per-player
variation bounds, constant sum-of-regrets in self-play, T^{1/4} individual
rates, adversarially robust doubling-wrapper bounds, and smooth-game welfare
floors.
"""

from .auctions import AuctionGame, AuctionSpec, make_auction, masked_values, uniform_values
from .config import ConfigError, ExperimentSpec, RobustSettings, parse_config
from .continuous import (
    CongestionNetwork,
    certify_total_regret,
    gradient,
    linearized_regret,
    lipschitz_constant,
    parse_network,
    run_continuous,
    true_regret,
)
from .costmode import (
    FirstOrderConstants,
    FirstOrderHedge,
    certify_cost_welfare,
    fit_first_order_constants,
    opt_min_cost,
    verify_cost_smoothness,
)
from .dynamics import (
    RegretReport,
    Trace,
    coupling_margin,
    read_trace_csv,
    regret,
    regret_series,
    report,
    run,
    variation_terms,
    write_trace_csv,
)
from .experiment import (
    OUTPUT_ROOT_ENV,
    bid_trajectory,
    build_game_from_config,
    full_report,
    mean_bid_oscillation,
    run_experiment,
)
from .games import (
    DenseGame,
    EnumerationCapError,
    NormalFormGame,
    SmoothnessCertificate,
    brute_force_opt,
    dump_dense_csv,
    load_dense_csv,
    poa_welfare_bound,
    search_smoothness,
    verify_smoothness,
)
from .learners import (
    BestResponseLearner,
    Certificate,
    FtrlLearner,
    LearnerSpec,
    OmdLearner,
    OnlineLearner,
    VariationBound,
    certify_prox_inequality,
    certify_stability,
    certify_variation_bound,
    declared_variation_bound,
    make_learner,
    variation_sums,
)
from .library import (
    build_game,
    lower_bound_experiment,
    make_matrix_game,
    make_random_game,
    make_random_smooth_game,
    splitmix64_floats,
    splitmix64_stream,
)
from .regularizers import NegativeEntropy, SquaredEuclidean, get_regularizer
from .robust import (
    DoublingWrapper,
    certify_robust,
    parametric_constants,
    recommended_eta_star,
    wrap_doubling,
)

__version__ = "0.1.0"

__all__ = [
    "AuctionGame", "AuctionSpec", "make_auction", "masked_values", "uniform_values",
    "ConfigError", "ExperimentSpec", "RobustSettings", "parse_config",
    "CongestionNetwork", "certify_total_regret", "gradient", "linearized_regret",
    "lipschitz_constant", "parse_network", "run_continuous", "true_regret",
    "FirstOrderConstants", "FirstOrderHedge", "certify_cost_welfare",
    "fit_first_order_constants", "opt_min_cost", "verify_cost_smoothness",
    "RegretReport", "Trace", "coupling_margin", "read_trace_csv", "regret",
    "regret_series", "report", "run", "variation_terms", "write_trace_csv",
    "OUTPUT_ROOT_ENV", "bid_trajectory", "build_game_from_config", "full_report",
    "mean_bid_oscillation", "run_experiment",
    "DenseGame", "EnumerationCapError", "NormalFormGame", "SmoothnessCertificate",
    "brute_force_opt", "dump_dense_csv", "load_dense_csv", "poa_welfare_bound",
    "search_smoothness", "verify_smoothness",
    "BestResponseLearner", "Certificate", "FtrlLearner", "LearnerSpec",
    "OmdLearner", "OnlineLearner", "VariationBound", "certify_prox_inequality",
    "certify_stability", "certify_variation_bound", "declared_variation_bound",
    "make_learner", "variation_sums",
    "build_game", "lower_bound_experiment", "make_matrix_game", "make_random_game",
    "make_random_smooth_game", "splitmix64_floats", "splitmix64_stream",
    "NegativeEntropy", "SquaredEuclidean", "get_regularizer",
    "DoublingWrapper", "certify_robust", "parametric_constants",
    "recommended_eta_star", "wrap_doubling",
    "__version__",
]
