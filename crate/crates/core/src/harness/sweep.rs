//! Reynolds sweeps at fixed forcing.
//!
//! A calibration run of the base configuration measures `U_target` (tail
//! window) and `L`. Each requested `Re` then sets `ν = L U_target / Re`,
//! `τ = tau_factor · L / U_target` and a duration of `duration` multiples of
//! `L / U_target`, starting from the final state of the calibration run. The
//! table reports the values measured on each run.

use std::path::{Path, PathBuf};

use log::{error, info};
use serde::{Deserialize, Serialize};

use super::config::{RunConfig, TimeUnits};
use super::io::{write_csv, write_json, SWEEP_SCHEMA};
use super::run::{run, RunSummary};
use crate::diagnostics::bound_coefficient;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    /// `τ` in units of `L / U_target`.
    pub tau_factor: f64,
    /// Run length in units of `L / U_target`.
    pub duration: f64,
}

impl Default for SweepPlan {
    fn default() -> Self {
        Self { tau_factor: 0.05, duration: 20.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub nu: f64,
    pub u_target: f64,
    pub l: f64,
    pub re: f64,
    /// Final state of the calibration run; sweep runs start from it.
    pub checkpoint: Option<PathBuf>,
}

/// One row of `sweep.csv`. The first six columns are the stable interface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(rename = "Re")]
    pub re: f64,
    pub eps_norm: f64,
    pub bound_coeff: f64,
    pub margin: f64,
    #[serde(rename = "I")]
    pub intensity: f64,
    #[serde(rename = "tau_over_Tstar")]
    pub tau_over_t_star: f64,
    pub re_measured: f64,
    pub finite_t_norm: f64,
    pub defect_norm: f64,
    #[serde(rename = "T_over_Tstar")]
    pub t_over_t_star: f64,
    pub nu: f64,
    pub tau: f64,
    pub verdict: bool,
    pub slacks_ok: bool,
    pub status: String,
}

impl SweepRow {
    pub fn failed(re: f64, nu: f64, tau: f64, err: &Error) -> Self {
        Self {
            re,
            eps_norm: f64::NAN,
            bound_coeff: f64::NAN,
            margin: f64::NAN,
            intensity: f64::NAN,
            tau_over_t_star: f64::NAN,
            re_measured: f64::NAN,
            finite_t_norm: f64::NAN,
            defect_norm: f64::NAN,
            t_over_t_star: f64::NAN,
            nu,
            tau,
            verdict: false,
            slacks_ok: false,
            status: format!("failed: {err}"),
        }
    }

    pub fn from_summary(re: f64, summary: &RunSummary) -> Self {
        let cfg = &summary.config;
        let Some(lg) = summary.ledger("full").filter(|l| !l.partial) else {
            return Self::failed(re, cfg.model.nu, cfg.model.tau, &Error::contract("ledger is partial"));
        };
        Self {
            re,
            eps_norm: lg.eps_norm,
            bound_coeff: lg.coefficient,
            margin: lg.margin,
            intensity: lg.intensity,
            tau_over_t_star: lg.tau_over_t_star,
            re_measured: lg.re,
            finite_t_norm: lg.finite_t_norm,
            defect_norm: lg.defect_norm,
            t_over_t_star: lg.span / lg.t_star,
            nu: cfg.model.nu,
            tau: cfg.model.tau,
            verdict: lg.verdict,
            slacks_ok: lg.slacks_ok,
            status: "ok".into(),
        }
    }
}

/// Re-independent ceiling of the normalized dissipation over the sweep:
/// the bound coefficient at the smallest measured `Re` and the largest
/// `(τ/T*) I`, without the finite-T terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformCheck {
    pub max_eps_norm: f64,
    pub ceiling: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub plan: SweepPlan,
    pub calibration: Calibration,
    pub rows: Vec<SweepRow>,
    pub uniform: Option<UniformCheck>,
    /// Every row ran and has a true verdict.
    pub all_verdicts: bool,
    pub dir: PathBuf,
}

pub fn uniform_check(rows: &[SweepRow], alpha: f64, mu: f64) -> Result<Option<UniformCheck>> {
    let ok_rows: Vec<&SweepRow> = rows.iter().filter(|r| r.status == "ok").collect();
    if ok_rows.is_empty() {
        return Ok(None);
    }
    let re_min = ok_rows.iter().map(|r| r.re_measured).fold(f64::INFINITY, f64::min);
    let ti = ok_rows.iter().map(|r| r.tau_over_t_star * r.intensity).fold(0.0, f64::max);
    let ceiling = bound_coefficient(alpha, mu, re_min, ti, 1.0)?;
    let max_eps_norm = ok_rows.iter().map(|r| r.eps_norm).fold(f64::NEG_INFINITY, f64::max);
    Ok(Some(UniformCheck { max_eps_norm, ceiling, ok: max_eps_norm <= ceiling }))
}

/// Configuration of the run at nominal Reynolds number `re`.
pub fn config_for_re(base: &RunConfig, cal: &Calibration, plan: &SweepPlan, re: f64) -> RunConfig {
    let mut cfg = base.clone();
    cfg.model.nu = cal.l * cal.u_target / re;
    cfg.model.tau = plan.tau_factor * cal.l / cal.u_target;
    cfg.run.t_end = plan.duration;
    cfg.run.t_end_units = TimeUnits::TStar;
    cfg.run.u_reference = Some(cal.u_target);
    cfg.run.initial_checkpoint = cal.checkpoint.clone();
    cfg.run.write_checkpoints = false;
    cfg.output.dir = base.output.dir.join(format!("re_{re:e}"));
    cfg
}

/// Calibration run: the base configuration as given, in `<dir>/calibration`.
pub fn calibrate(base: &RunConfig, output_root: Option<&Path>) -> Result<Calibration> {
    let mut cfg = base.clone();
    cfg.output.dir = base.output.dir.join("calibration");
    cfg.run.write_checkpoints = true;
    let out = run(&cfg, output_root)?;
    let tail = out.summary.ledger("tail").filter(|l| !l.partial && l.u > 0.0).ok_or_else(|| {
        Error::contract("calibration run produced no velocity scale (unforced or too short)")
    })?;
    let dir = out.dir.as_ref().expect("run writes files");
    let checkpoint = Some(std::path::absolute(dir.join("checkpoint_final.json"))?);
    let cal = Calibration { nu: base.model.nu, u_target: tail.u, l: tail.l, re: tail.re, checkpoint };
    info!("calibration: U_target = {:.4e}, L = {:.4e}, Re = {:.1}", cal.u_target, cal.l, cal.re);
    Ok(cal)
}

pub fn sweep(base: &RunConfig, re_values: &[f64], plan: &SweepPlan, output_root: Option<&Path>) -> Result<SweepReport> {
    base.validate()?;
    if re_values.is_empty() || re_values.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(Error::config(format!("Re values must be positive and finite, got {re_values:?}")));
    }
    if !(plan.tau_factor > 0.0 && plan.duration > 0.0) {
        return Err(Error::config("sweep plan needs tau_factor > 0 and duration > 0"));
    }
    let dir = base.resolved_output_dir(output_root);
    std::fs::create_dir_all(&dir)?;
    let calibration = calibrate(base, output_root)?;
    let mut rows = Vec::with_capacity(re_values.len());
    for &re in re_values {
        let cfg = config_for_re(base, &calibration, plan, re);
        let row = match run(&cfg, output_root) {
            Ok(out) => SweepRow::from_summary(re, &out.summary),
            Err(e) => {
                error!("Re = {re:e}: {e}");
                SweepRow::failed(re, cfg.model.nu, cfg.model.tau, &e)
            }
        };
        info!(
            "Re = {re:e}: eps_norm = {:.4} coeff = {:.4} finite_t = {:.4} margin = {:.3} verdict = {}",
            row.eps_norm, row.bound_coeff, row.finite_t_norm, row.margin, row.verdict
        );
        rows.push(row);
    }
    let uniform = uniform_check(&rows, base.ledger.alpha, base.model.mu)?;
    let all_verdicts = rows.iter().all(|r| r.status == "ok" && r.verdict);
    let report = SweepReport { plan: *plan, calibration, rows, uniform, all_verdicts, dir: dir.clone() };
    write_csv(&dir.join("sweep.csv"), SWEEP_SCHEMA, &report.rows)?;
    write_json(&dir.join("sweep.json"), &report)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::io::read_csv;
    use crate::spectral::GridSpec;
    use std::f64::consts::PI;

    fn small() -> RunConfig {
        let mut cfg = RunConfig::default();
        cfg.grid = GridSpec::new(2, 32, 2.0 * PI);
        cfg.model.nu = 0.05;
        cfg.model.ensemble_size = 2;
        cfg.perturbation.k_min = 1;
        cfg.perturbation.k_max = 2;
        cfg.run.t_end = 1.0;
        cfg.output.dir = "s".into();
        cfg
    }

    #[test]
    fn config_for_re_sets_viscosity_and_time_scales() {
        let cal = Calibration { nu: 0.1, u_target: 2.0, l: 0.5, re: 10.0, checkpoint: None };
        let cfg = config_for_re(&small(), &cal, &SweepPlan::default(), 100.0);
        assert!((cfg.model.nu - 0.01).abs() < 1e-15);
        assert!((cfg.model.tau - 0.0125).abs() < 1e-15);
        assert!((cfg.absolute_t_end(0.5) - 5.0).abs() < 1e-12);
        assert_eq!(cfg.output.dir, PathBuf::from("s/re_1e2"));
    }

    #[test]
    fn uniform_ceiling_uses_worst_row() {
        let row = |re_measured: f64, eps_norm: f64, ti: f64| SweepRow {
            re: 1.0,
            eps_norm,
            bound_coeff: 0.0,
            margin: 0.0,
            intensity: 1.0,
            tau_over_t_star: ti,
            re_measured,
            finite_t_norm: 0.0,
            defect_norm: 0.0,
            t_over_t_star: 0.0,
            nu: 0.0,
            tau: 0.0,
            verdict: true,
            slacks_ok: true,
            status: "ok".into(),
        };
        let rows = vec![row(100.0, 0.5, 0.1), row(1000.0, 1.9, 0.2)];
        let u = uniform_check(&rows, 0.5, 0.55).unwrap().unwrap();
        assert!((u.ceiling - (2.0 + 0.01 + 0.55 * 0.2)).abs() < 1e-12);
        assert!(u.ok);
        assert_eq!(uniform_check(&[], 0.5, 0.55).unwrap(), None);
    }

    #[test]
    fn small_sweep_writes_a_table() {
        let root = tempfile::tempdir().unwrap();
        let mut plan = SweepPlan::default();
        plan.duration = 2.0;
        let rep = sweep(&small(), &[20.0], &plan, Some(root.path())).unwrap();
        let rows: Vec<SweepRow> = read_csv(&rep.dir.join("sweep.csv"), SWEEP_SCHEMA).unwrap();
        assert_eq!(rows, rep.rows);
        assert_eq!(rows[0].status, "ok");
        assert!(rep.dir.join("re_2e1/summary.json").is_file());
        assert!(sweep(&small(), &[], &plan, Some(root.path())).is_err());
    }
}
