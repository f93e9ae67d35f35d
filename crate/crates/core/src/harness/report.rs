//! Regenerates the tables of a finished run or sweep from its recorded
//! samples and summaries.

use std::path::{Path, PathBuf};

use log::{info, warn};

use super::io::{
    read_csv, read_json, samples_from_rows, write_csv, write_ledger_csv, BudgetRow, SampleRow, BUDGET_SCHEMA,
    SAMPLES_SCHEMA, SWEEP_SCHEMA,
};
use super::run::RunSummary;
use super::sweep::SweepRow;
use crate::diagnostics::{budget_series, ledger_windows, ProofLedger};
use crate::error::{Error, Result};

/// Files written by [`report`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReportOutput {
    pub written: Vec<PathBuf>,
    /// Recomputed ledgers that differ from the ones stored in `summary.json`.
    pub mismatches: usize,
}

/// Re-emits `budget.csv` and `ledger.csv` for a run directory, or
/// `sweep.csv` (and every run's tables) for a sweep directory.
pub fn report(dir: &Path) -> Result<ReportOutput> {
    if dir.join("sweep.csv").is_file() {
        report_sweep(dir)
    } else if dir.join("summary.json").is_file() {
        report_run(dir)
    } else {
        Err(Error::config(format!("{} holds neither summary.json nor sweep.csv", dir.display())))
    }
}

fn report_run(dir: &Path) -> Result<ReportOutput> {
    let summary: RunSummary = read_json(&dir.join("summary.json"))?;
    let rows: Vec<SampleRow> = read_csv(&dir.join("samples.csv"), SAMPLES_SCHEMA)?;
    let samples = samples_from_rows(&rows)?;
    let cfg = &summary.config;
    let ledgers = ledger_windows(&samples, &summary.forcing, &summary.grad_f_inf_members, &cfg.model, &cfg.ledger)?;
    let mismatches = count_mismatches(&ledgers, &summary.ledgers);
    if mismatches > 0 {
        warn!("{}: {mismatches} recomputed ledger(s) differ from summary.json", dir.display());
    }
    let budget: Vec<BudgetRow> = budget_series(&samples)?.iter().map(BudgetRow::from).collect();
    let b = dir.join("budget.csv");
    let l = dir.join("ledger.csv");
    write_csv(&b, BUDGET_SCHEMA, &budget)?;
    write_ledger_csv(&l, &ledgers)?;
    info!("{}: wrote budget.csv and ledger.csv", dir.display());
    Ok(ReportOutput { written: vec![b, l], mismatches })
}

fn count_mismatches(a: &[ProofLedger], b: &[ProofLedger]) -> usize {
    if a.len() != b.len() {
        return a.len().max(b.len());
    }
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

fn report_sweep(dir: &Path) -> Result<ReportOutput> {
    // Failed rows hold NaN, which JSON cannot carry, so rows come from the CSV.
    let stored: Vec<SweepRow> = read_csv(&dir.join("sweep.csv"), SWEEP_SCHEMA)?;
    let mut written = Vec::new();
    let mut mismatches = 0;
    let mut rows: Vec<SweepRow> = Vec::with_capacity(stored.len());
    for row in &stored {
        let sub = dir.join(format!("re_{:e}", row.re));
        if row.status == "ok" && sub.join("summary.json").is_file() {
            let out = report_run(&sub)?;
            mismatches += out.mismatches;
            written.extend(out.written);
            let summary: RunSummary = read_json(&sub.join("summary.json"))?;
            rows.push(SweepRow::from_summary(row.re, &summary));
        } else {
            rows.push(row.clone());
        }
    }
    let path = dir.join("sweep.csv");
    write_csv(&path, SWEEP_SCHEMA, &rows)?;
    written.push(path);
    Ok(ReportOutput { written, mismatches })
}
