//! Energy budget, dissipation rates and their split, flow scales, the
//! dissipation bound and the inequality ledger behind it.
//!
//! A run records a [`Sample`] at every diagnostics instant. Every derived
//! quantity (budgets, running averages, scales, ledgers) is a function of the
//! sample history alone, so it can be recomputed offline from `samples.csv`.

mod budget;
mod checks;
mod ledger;
mod sample;
mod scales;

pub use budget::{budget_series, instantaneous_budget, running_averages, time_average, trapezoid_weights, EnergyBudget};
pub use checks::{boundedness, stationarity_drift, BoundednessCheck, BOUNDED_GROWTH, STATIONARY_DRIFT};
pub use ledger::{ledger_windows, proof_ledger, tail_start, LedgerConfig, ProofLedger, SLACK_TOL};
pub use sample::{take_sample, ForceData, MemberSample, Sample};
pub use scales::{bound_coefficient, flow_scales, dissipation_bound, FlowScales};
