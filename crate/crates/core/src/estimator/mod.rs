//! Stacked least-squares channel estimation from training symbols, hard
//! decision feedback, or both.

pub mod ml;
pub mod solver;
pub mod stacked;
pub mod stats;

pub use ml::{
    decompose_error, ml_estimate, ml_estimate_leave_one_out, ApproximationMode, ChannelEstimate,
    ErrorDecomposition,
};
pub use solver::{
    jacobi_precheck, jacobi_spectral_radius, solve_normal_equations, SolveDiagnostics,
    SolverMethod, SolverSettings, SolverWarning,
};
pub use stacked::{all_periods, training_periods, StackedMatrix, SymbolSource};
pub use stats::{empirical_estimation_stats, ChannelPolicy, EstimationExperiment, EstimationStats};
