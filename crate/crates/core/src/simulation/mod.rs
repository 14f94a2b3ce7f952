//! Seeded generators and Monte Carlo study runners.

mod model;
mod scenario;
mod study;

pub use model::{
    ma_covariance_traces, sparse_generate, BandedToeplitz, Innovation, MAModel, MaTraces,
    FULL_DEPENDENCE_SEED, TWO_DEPENDENCE_RHO,
};
pub use scenario::{
    build_mu2, default_total_n, load_scenario, ma_grid, parse_scenario, sparse_support, Allocation,
    Dependence, MeanTarget, ModelKind, SimScenario, TRUE_NULL_GRID,
};
pub use study::{
    replication_rng, run_study, trace_ratio_study, MethodRate, RatioSummary, StudyMethod,
    StudyResult, TraceRatioStudy,
};
