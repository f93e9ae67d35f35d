use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::io::{
    read_checkpoint, sample_rows, write_checkpoint, write_csv, write_json, write_ledger_csv, BudgetRow, BUDGET_SCHEMA, SAMPLES_SCHEMA,
    SUMMARY_SCHEMA,
};
use crate::diagnostics::{
    boundedness, budget_series, flow_scales, ledger_windows, tail_start, take_sample, dissipation_bound, BoundednessCheck,
    EnergyBudget, FlowScales, ForceData, ProofLedger, Sample,
};
use crate::dynamics::{advance_to, AdvanceReport};
use crate::ensemble::EnsembleState;
use crate::error::{Error, Result};
use crate::setup::{forcing_scales, make_body_force, make_initial_condition, ForcingScales};
use crate::spectral::{Grid, SpectralField};

/// Everything a run reports; serialized as `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema: String,
    pub config: RunConfig,
    pub t_end: f64,
    pub forcing: ForcingScales,
    /// `max_x |∇f_j|` per member.
    pub grad_f_inf_members: Vec<f64>,
    pub scales: FlowScales,
    pub tail_scales: FlowScales,
    /// `C(α)` on the full window; `None` when `U_T = 0`.
    pub bound_coefficient: Option<f64>,
    pub ledgers: Vec<ProofLedger>,
    pub boundedness: Vec<BoundednessCheck>,
    pub stationarity_drift: f64,
    pub advance: AdvanceReport,
    pub final_budget: EnergyBudget,
    pub samples: usize,
    pub manifest: Vec<String>,
}

impl RunSummary {
    pub fn ledger(&self, window: &str) -> Option<&ProofLedger> {
        self.ledgers.iter().find(|l| l.window == window)
    }
}

/// In-memory result of a run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: RunSummary,
    pub samples: Vec<Sample>,
    pub final_state: EnsembleState,
    /// Run directory when files were written.
    pub dir: Option<PathBuf>,
}

/// Builds the initial ensemble and its force data.
pub fn initial_state(cfg: &RunConfig) -> Result<(EnsembleState, ForceData, ForcingScales)> {
    cfg.validate()?;
    let grid = Grid::new(cfg.grid)?;
    let j = cfg.model.ensemble_size;
    let forces: Vec<SpectralField> =
        (0..j).map(|m| make_body_force(&cfg.perturbation, m, &grid)).collect::<Result<_>>()?;
    let members: Vec<SpectralField> = match &cfg.run.initial_checkpoint {
        Some(path) => {
            let (header, members) = read_checkpoint(path)?;
            if header.grid != cfg.grid || header.ensemble_size != j {
                return Err(Error::config(format!(
                    "checkpoint {} holds {} members on {:?}, configuration needs {j} on {:?}",
                    path.display(),
                    header.ensemble_size,
                    header.grid,
                    cfg.grid
                )));
            }
            members
        }
        None => (0..j).map(|m| make_initial_condition(&cfg.perturbation, m, &grid)).collect::<Result<_>>()?,
    };
    let fd = ForceData::new(&forces);
    let scales = forcing_scales(&forces)?;
    let state = EnsembleState::new(0.0, members, forces, &cfg.model)?;
    Ok((state, fd, scales))
}

/// Integrates and evaluates the diagnostics without touching the file system.
pub fn execute(cfg: &RunConfig) -> Result<RunOutcome> {
    simulate(cfg, None)
}

/// Integrates, evaluates the diagnostics and writes the run directory.
pub fn run(cfg: &RunConfig, output_root: Option<&Path>) -> Result<RunOutcome> {
    let dir = cfg.resolved_output_dir(output_root);
    std::fs::create_dir_all(&dir)?;
    simulate(cfg, Some(dir))
}

fn simulate(cfg: &RunConfig, dir: Option<PathBuf>) -> Result<RunOutcome> {
    let clock = Instant::now();
    let (state, fd, forcing) = initial_state(cfg)?;
    let t_end = cfg.absolute_t_end(forcing.l);
    let params = &cfg.model;
    let mut samples = vec![take_sample(&state, params, &fd)?];
    let mut manifest = Vec::new();
    let checkpoints = cfg.run.write_checkpoints && dir.is_some();
    info!(
        "run: {}D n={} J={} nu={:.3e} tau={:.3e} t_end={t_end:.4}",
        cfg.grid.dim, cfg.grid.n, params.ensemble_size, params.nu, params.tau
    );
    let (final_state, advance) = advance_to(state, t_end, params, &cfg.stepper, 1, 0, &mut |s, step| {
        let last = s.t == t_end;
        if step.index % cfg.run.sample_every == 0 || last {
            samples.push(take_sample(s, params, &fd)?);
        }
        if checkpoints && cfg.run.checkpoint_every > 0 && step.index % cfg.run.checkpoint_every == 0 && !last {
            let stem = format!("checkpoint_{:08}", step.index);
            write_checkpoint(dir.as_deref().expect("checked"), &stem, s.t, step.index, &s.members)?;
            manifest.push(format!("{stem}.bin"));
            manifest.push(format!("{stem}.json"));
        }
        Ok(())
    })?;
    if checkpoints {
        let stem = "checkpoint_final";
        write_checkpoint(dir.as_deref().expect("checked"), stem, final_state.t, advance.steps, &final_state.members)?;
        manifest.push(format!("{stem}.bin"));
        manifest.push(format!("{stem}.json"));
    }

    let scales = flow_scales(&samples, &forcing, params)?;
    let tail_scales = flow_scales(&samples[tail_start(&samples)..], &forcing, params)?;
    let bound_coefficient =
        if scales.defined { Some(dissipation_bound(&scales, params, cfg.ledger.alpha)?) } else { None };
    let ledgers = ledger_windows(&samples, &forcing, &fd.grad_inf, params, &cfg.ledger)?;
    let budget = budget_series(&samples)?;
    let summary = RunSummary {
        schema: SUMMARY_SCHEMA.to_string(),
        config: cfg.clone(),
        t_end,
        forcing,
        grad_f_inf_members: fd.grad_inf.clone(),
        scales,
        tail_scales,
        bound_coefficient,
        ledgers,
        boundedness: boundedness(&samples)?,
        stationarity_drift: crate::diagnostics::stationarity_drift(&samples)?,
        advance,
        final_budget: budget[budget.len() - 1].clone(),
        samples: samples.len(),
        manifest,
    };
    let mut outcome = RunOutcome { summary, samples, final_state, dir: None };
    if let Some(dir) = dir {
        write_run_files(&dir, &mut outcome.summary, &outcome.samples, &budget)?;
        outcome.dir = Some(dir);
    }
    log_summary(&outcome.summary);
    info!("run finished in {:.1} s ({} steps)", clock.elapsed().as_secs_f64(), outcome.summary.advance.steps);
    Ok(outcome)
}

/// Writes the tables, the resolved configuration and `summary.json`, and
/// completes the manifest.
pub fn write_run_files(dir: &Path, summary: &mut RunSummary, samples: &[Sample], budget: &[EnergyBudget]) -> Result<()> {
    write_csv(&dir.join("samples.csv"), SAMPLES_SCHEMA, &sample_rows(samples))?;
    let rows: Vec<BudgetRow> = budget.iter().map(BudgetRow::from).collect();
    write_csv(&dir.join("budget.csv"), BUDGET_SCHEMA, &rows)?;
    write_ledger_csv(&dir.join("ledger.csv"), &summary.ledgers)?;
    std::fs::write(dir.join("config.toml"), summary.config.to_toml_string())?;
    for name in ["samples.csv", "budget.csv", "ledger.csv", "config.toml", "summary.json"] {
        if !summary.manifest.iter().any(|m| m == name) {
            summary.manifest.push(name.to_string());
        }
    }
    write_json(&dir.join("summary.json"), summary)
}

fn log_summary(s: &RunSummary) {
    for lg in &s.ledgers {
        if lg.partial {
            info!("ledger[{}]: partial", lg.window);
            continue;
        }
        info!(
            "ledger[{}]: T={:.3} Re={:.1} eps*L/U^3={:.4} bound={:.4} finite_t={:.4} defect={:.2e} margin={:.3} verdict={} min_slack={:.2e}",
            lg.window,
            lg.span,
            lg.re,
            lg.eps_norm,
            lg.coefficient,
            lg.finite_t_norm,
            lg.defect_norm,
            lg.margin,
            lg.verdict,
            lg.min_relative_slack
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::io::read_json;
    use crate::spectral::GridSpec;
    use std::f64::consts::PI;

    fn small() -> RunConfig {
        let mut cfg = RunConfig::default();
        cfg.grid = GridSpec::new(2, 32, 2.0 * PI);
        cfg.model.nu = 0.02;
        cfg.model.tau = 0.1;
        cfg.model.ensemble_size = 2;
        cfg.perturbation.k_min = 1;
        cfg.perturbation.k_max = 3;
        cfg.stepper.dt = 1e-2;
        cfg.run.t_end = 0.5;
        cfg.run.sample_every = 2;
        cfg
    }

    #[test]
    fn unforced_decay_has_monotone_energy() {
        let mut cfg = small();
        cfg.perturbation.base_amplitude = 0.0;
        cfg.model.mu = 0.0;
        let out = execute(&cfg).unwrap();
        assert!(out.summary.forcing.unforced);
        let ke: Vec<f64> = out.samples.iter().map(Sample::ke_mean).collect();
        assert!(ke.windows(2).all(|w| w[1] <= w[0]), "{ke:?}");
        assert!(out.summary.ledgers.iter().all(|l| l.partial));
    }

    #[test]
    fn files_match_the_manifest_and_rerun_is_bitwise() {
        let root = tempfile::tempdir().unwrap();
        let mut cfg = small();
        cfg.run.write_checkpoints = true;
        cfg.run.checkpoint_every = 20;
        cfg.output.dir = "a".into();
        let a = run(&cfg, Some(root.path())).unwrap();
        let dir = a.dir.clone().unwrap();
        for name in &a.summary.manifest {
            assert!(dir.join(name).is_file(), "{name} missing");
        }
        assert!(a.summary.manifest.iter().any(|m| m == "checkpoint_00000020.json"));
        let back: RunSummary = read_json(&dir.join("summary.json")).unwrap();
        assert_eq!(back, a.summary);
        let first = std::fs::read(dir.join("summary.json")).unwrap();
        run(&cfg, Some(root.path())).unwrap();
        assert_eq!(std::fs::read(dir.join("summary.json")).unwrap(), first);
        assert_eq!(a.samples.last().unwrap().t, 0.5);
    }
}
