//! Configuration, runs, Reynolds sweeps, the verification suite and the
//! file formats they write.

pub mod config;
pub mod io;
pub mod report;
pub mod run;
pub mod sweep;
pub mod verify;

pub use config::{OutputSection, RunConfig, RunSection, TimeUnits, OUTPUT_ROOT_ENV};
pub use report::{report, ReportOutput};
pub use run::{execute, initial_state, run, RunOutcome, RunSummary};
pub use sweep::{sweep, Calibration, SweepPlan, SweepReport, SweepRow, UniformCheck};
pub use verify::{verify, CheckResult, Status, VerifyReport};
