//! Propensity-score matching and weighting, and covariate balance
//! diagnostics.

mod assignment;
mod balance;
mod balance_stats;
mod genetic;
mod matching;
mod weights;

pub use assignment::solve_assignment;
pub use balance::{balance_report, Adjustment, BalanceReport, BalanceRow};
pub use balance_stats::{chi_square_test, smd, two_sample_t_test, TestResult};
pub use genetic::{genetic_match, GeneticConfig, GeneticOutcome};
pub use matching::{nearest_neighbor_match, optimal_match, Caliper, MatchSet};
pub use weights::{compute_weights, WeightScheme, WeightVector};
