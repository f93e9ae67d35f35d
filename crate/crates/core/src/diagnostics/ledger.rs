//! Term-by-term evaluation of the dissipation bound on recorded samples.
//!
//! Over a window `[t0, t1]` of length `T`, with `⟨⟨·⟩⟩` the trapezoid time
//! average of the ensemble mean:
//!
//! - energy: `KE(t1)/T + ⟨ε⟩ = KE(t0)/T + W` up to the time-quadrature
//!   residual, where `W = ⟨⟨(1/|Ω|)(f,u)⟩⟩ ≤ F U_T`;
//! - forcing balance: `F² = S1 + S2 + S3 + S4 + R2` with the remainder `R2`
//!   coming only from time quadrature;
//! - each of `S2`, `S3`, `S4` is bounded through a chain of Cauchy–Schwarz and
//!   Young steps that hold exactly for the discrete data;
//! - assembling everything gives
//!   `⟨ε⟩ ≤ C U³/L + [ΔKE/T + (U/F) S1]/(1−β/2) + [(U/F) R2 + R1]/(1−β/2)`,
//!   where the last bracket is the discretization defect.

use serde::{Deserialize, Serialize};

use super::budget::trapezoid_weights;
use super::sample::Sample;
use crate::ensemble::ModelParams;
use crate::error::{Error, Result};
use crate::setup::ForcingScales;

/// Relative tolerance for the slack of an exact inequality.
pub const SLACK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LedgerConfig {
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Young weight used in the chain; the bound's `α` is `β/2`.
    #[serde(default = "default_beta")]
    pub beta: f64,
}

fn default_alpha() -> f64 {
    0.5
}

fn default_beta() -> f64 {
    1.0
}

impl Default for LedgerConfig {
    fn default() -> Self {
        Self { alpha: default_alpha(), beta: default_beta() }
    }
}

impl LedgerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::config(format!("ledger.alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.beta > 0.0 && self.beta < 2.0) {
            return Err(Error::config(format!("ledger.beta must lie in (0, 2), got {}", self.beta)));
        }
        Ok(())
    }
}

/// Every term and bound of the chain on one window. Fields ending in `_bN`
/// are the successive majorants of the term before them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProofLedger {
    pub window: String,
    pub t0: f64,
    pub t1: f64,
    #[serde(rename = "T")]
    pub span: f64,
    pub samples: usize,
    pub partial: bool,

    pub u: f64,
    pub u_prime: f64,
    pub f: f64,
    pub l: f64,
    pub grad_f_inf: f64,
    pub grad_f_l2: f64,
    pub re: f64,
    pub t_star: f64,
    pub intensity: f64,
    pub tau_over_t_star: f64,

    pub ke_start: f64,
    pub ke_end: f64,
    pub eps: f64,
    pub eps_viscous: f64,
    pub eps_turb: f64,
    pub power: f64,
    pub first_lhs: f64,
    pub first_rhs: f64,
    pub energy_residual: f64,
    pub power_bound: f64,

    pub f_sq: f64,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
    pub s4: f64,
    pub step2_residual: f64,

    pub second_abs: f64,
    pub second_b1: f64,
    pub second_b2: f64,
    pub second_b3: f64,

    pub third_abs: f64,
    pub third_b1: f64,
    pub third_b2: f64,
    pub third_b3: f64,

    pub fourth_abs: f64,
    pub fourth_b1: f64,
    pub fourth_b2: f64,
    pub fourth_b3: f64,
    pub fourth_b4: f64,
    pub fourth_b5: f64,
    pub fourth_b6: f64,
    pub fourth_b7: f64,

    pub alpha: f64,
    pub beta: f64,
    /// `C(β/2)`, the coefficient the chain produces.
    pub coefficient: f64,
    pub bound_main: f64,
    pub finite_t: f64,
    pub defect: f64,
    pub rhs: f64,
    pub eps_norm: f64,
    pub finite_t_norm: f64,
    pub defect_norm: f64,
    pub margin: f64,
    pub verdict: bool,
    pub verdict_without_defect: bool,
    pub min_relative_slack: f64,
    pub slacks_ok: bool,
}

impl ProofLedger {
    /// `(name, lhs, rhs)` of every exact inequality in the chain.
    pub fn inequalities(&self) -> Vec<(&'static str, f64, f64)> {
        vec![
            ("power_cs", self.power, self.power_bound),
            ("second_1", self.second_abs, self.second_b1),
            ("second_2", self.second_b1, self.second_b2),
            ("second_3", self.second_b2, self.second_b3),
            ("third_1", self.third_abs, self.third_b1),
            ("third_2", self.third_b1, self.third_b2),
            ("third_3", self.third_b2, self.third_b3),
            ("fourth_1", self.fourth_abs, self.fourth_b1),
            ("fourth_2", self.fourth_b1, self.fourth_b2),
            ("fourth_3", self.fourth_b2, self.fourth_b3),
            ("fourth_4", self.fourth_b3, self.fourth_b4),
            ("fourth_5", self.fourth_b4, self.fourth_b5),
            ("fourth_6", self.fourth_b5, self.fourth_b6),
            ("fourth_7", self.fourth_b6, self.fourth_b7),
        ]
    }
}

fn relative_slack(lhs: f64, rhs: f64) -> f64 {
    let slack = rhs - lhs;
    if rhs.abs() > 0.0 {
        slack / rhs.abs()
    } else {
        slack
    }
}

/// Evaluates the chain on `samples`, which must span the window in order.
pub fn proof_ledger(
    window: &str,
    samples: &[Sample],
    forcing: &ForcingScales,
    grad_inf: &[f64],
    params: &ModelParams,
    cfg: &LedgerConfig,
) -> Result<ProofLedger> {
    cfg.validate()?;
    let first = samples.first().ok_or_else(|| Error::EmptyHistory("ledger window has no samples".into()))?;
    let last = &samples[samples.len() - 1];
    let mut lg = ProofLedger {
        window: window.to_string(),
        t0: first.t,
        t1: last.t,
        span: last.t - first.t,
        samples: samples.len(),
        alpha: cfg.alpha,
        beta: cfg.beta,
        f: forcing.f,
        l: forcing.l,
        grad_f_inf: forcing.grad_f_inf,
        grad_f_l2: forcing.grad_f_l2,
        ..Default::default()
    };
    if samples.len() < 2 || forcing.unforced {
        lg.partial = true;
        return Ok(lg);
    }
    let j = first.members.len();
    if grad_inf.len() != j || samples.iter().any(|s| s.members.len() != j) {
        return Err(Error::config("ledger samples and force data disagree on the ensemble size"));
    }
    let ts: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let w = trapezoid_weights(&ts)?;
    let span = lg.span;
    let inv_j = 1.0 / j as f64;
    // ⟨⟨φ⟩⟩ of a per-member quantity.
    let avg = |phi: &dyn Fn(&Sample, usize) -> f64| -> f64 {
        samples
            .iter()
            .zip(&w)
            .map(|(s, wk)| wk * inv_j * (0..j).map(|m| phi(s, m)).sum::<f64>())
            .sum::<f64>()
            / span
    };

    let nu = params.nu;
    let (f, l, ginf, g2) = (forcing.f, forcing.l, forcing.grad_f_inf, forcing.grad_f_l2);
    let u_sq = avg(&|s, m| 2.0 * s.members[m].ke);
    let up_sq = avg(&|s, _| s.fluct_ms);
    let u = u_sq.sqrt();
    let up = up_sq.sqrt();
    lg.u = u;
    lg.u_prime = up;
    if !(u > 0.0) {
        lg.partial = true;
        return Ok(lg);
    }
    lg.t_star = l / u;
    lg.re = l * u / nu;
    lg.intensity = up_sq / u_sq;
    lg.tau_over_t_star = params.tau / lg.t_star;

    lg.ke_start = first.ke_mean();
    lg.ke_end = last.ke_mean();
    lg.eps_viscous = avg(&|s, m| s.members[m].eps_viscous);
    lg.eps_turb = avg(&|s, m| s.members[m].eps_turb);
    lg.eps = lg.eps_viscous + lg.eps_turb;
    lg.power = avg(&|s, m| s.members[m].power);
    lg.first_lhs = lg.ke_end / span + lg.eps;
    lg.first_rhs = lg.ke_start / span + lg.power;
    lg.energy_residual = lg.first_lhs - lg.first_rhs;
    lg.power_bound = f * u;

    lg.f_sq = f * f;
    lg.s1 = (last.power() - first.power()) / span;
    lg.s2 = avg(&|s, m| s.members[m].advect_force);
    lg.s3 = avg(&|s, m| s.members[m].viscous_force);
    lg.s4 = avg(&|s, m| s.members[m].eddy_force);
    lg.step2_residual = lg.f_sq - (lg.s1 + lg.s2 + lg.s3 + lg.s4);

    let beta = cfg.beta;
    lg.second_abs = lg.s2.abs();
    lg.second_b1 = avg(&|s, m| grad_inf[m] * 2.0 * s.members[m].ke);
    lg.second_b2 = ginf * u_sq;
    lg.second_b3 = f / l * u_sq;

    lg.third_abs = lg.s3.abs();
    lg.third_b1 = (nu * lg.eps_viscous).sqrt() * g2;
    lg.third_b2 = (nu * lg.eps_viscous).sqrt() * f / l;
    lg.third_b3 = 0.5 * beta * f / u * lg.eps_viscous + u * f * nu / (2.0 * beta * l * l);

    let mu_tau = params.mu * params.tau;
    let nt_avg = avg(&|s, _| s.nu_turb_mean);
    lg.fourth_abs = lg.s4.abs();
    lg.fourth_b1 = avg(&|s, m| s.members[m].eddy_force_abs);
    lg.fourth_b2 = avg(&|s, m| grad_inf[m] * s.nu_turb_mean.max(0.0).sqrt() * s.members[m].eps_turb.max(0.0).sqrt());
    lg.fourth_b3 = ginf * avg(&|s, m| s.nu_turb_mean.max(0.0).sqrt() * s.members[m].eps_turb.max(0.0).sqrt());
    lg.fourth_b4 = ginf * (nt_avg * lg.eps_turb).max(0.0).sqrt();
    lg.fourth_b5 = f / l * (nt_avg * lg.eps_turb).max(0.0).sqrt();
    lg.fourth_b6 = f / l * mu_tau.sqrt() * up * lg.eps_turb.max(0.0).sqrt();
    lg.fourth_b7 = 0.5 * beta * f / u * lg.eps_turb + mu_tau / (2.0 * beta) * u * f / (l * l) * up_sq;

    let keep = 1.0 - 0.5 * beta;
    let u3l = u * u_sq / l;
    lg.coefficient = (1.0 + 1.0 / (2.0 * beta * lg.re) + params.mu * lg.tau_over_t_star * lg.intensity / (2.0 * beta))
        / keep;
    lg.bound_main = lg.coefficient * u3l;
    lg.finite_t = ((lg.ke_start - lg.ke_end) / span + u / f * lg.s1) / keep;
    lg.defect = (u / f * lg.step2_residual + lg.energy_residual) / keep;
    lg.rhs = lg.bound_main + lg.finite_t + lg.defect;
    lg.eps_norm = lg.eps / u3l;
    lg.finite_t_norm = lg.finite_t / u3l;
    lg.defect_norm = lg.defect / u3l;
    lg.margin = (lg.rhs - lg.eps) / lg.rhs;
    lg.verdict = lg.eps <= lg.rhs;
    lg.verdict_without_defect = lg.eps <= lg.bound_main + lg.finite_t;
    lg.min_relative_slack =
        lg.inequalities().iter().map(|&(_, a, b)| relative_slack(a, b)).fold(f64::INFINITY, f64::min);
    lg.slacks_ok = lg.min_relative_slack >= -SLACK_TOL;
    Ok(lg)
}

/// Index of the first sample of the second half of the history.
pub fn tail_start(samples: &[Sample]) -> usize {
    match (samples.first(), samples.last()) {
        (Some(a), Some(b)) => {
            let mid = 0.5 * (a.t + b.t);
            samples.iter().position(|s| s.t >= mid).unwrap_or(0)
        }
        _ => 0,
    }
}

/// Ledgers for the full history and for its second half.
pub fn ledger_windows(
    samples: &[Sample],
    forcing: &ForcingScales,
    grad_inf: &[f64],
    params: &ModelParams,
    cfg: &LedgerConfig,
) -> Result<Vec<ProofLedger>> {
    let full = proof_ledger("full", samples, forcing, grad_inf, params, cfg)?;
    let tail = proof_ledger("tail", &samples[tail_start(samples)..], forcing, grad_inf, params, cfg)?;
    Ok(vec![full, tail])
}
