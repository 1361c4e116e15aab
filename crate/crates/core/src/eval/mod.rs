//! Metrics, significance testing and tuning harnesses.

mod experiment;
mod stats;
mod tuning;

pub use experiment::{
    run_experiment, select_lambda, stratified_split, ExperimentConfig, ExperimentReport, LambdaCell, Split,
    SystemReport, DECISION_THRESHOLD, DEFAULT_SEED, DEFAULT_TEST_FRACTION,
};
pub use stats::{chi_square_sf, gamma_q, ln_gamma, mcnemar, mcnemar_from_counts, score, EvalReport, McNemarResult};
pub use tuning::{
    co_clustering_counts, default_eps_grid, load_grouped, load_pairs, parse_grouped, parse_pairs, tune_dedup, tune_eps,
    tune_eps_matrix, DedupCell, DedupGrid, DedupPair, DedupTuning, EpsCell, EpsTuning, GroupedDoc,
};
