use serde::{Deserialize, Serialize};

use super::budget::running_averages;
use super::sample::Sample;
use crate::error::{Error, Result};

/// Run-wide maxima of the quantities that must stay bounded, first half
/// against second half of the history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundednessCheck {
    pub name: String,
    pub max_first_half: f64,
    pub max_second_half: f64,
    pub ok: bool,
}

/// Allowed growth of a maximum from the first to the second half.
pub const BOUNDED_GROWTH: f64 = 1.1;

/// Relative drift of the running `⟨ε⟩_T` over the last quarter that still
/// counts as stationary.
pub const STATIONARY_DRIFT: f64 = 0.01;

fn split_max(ts: &[f64], values: &[f64]) -> (f64, f64) {
    let mid = 0.5 * (ts[0] + ts[ts.len() - 1]);
    let mut a = f64::NEG_INFINITY;
    let mut b = f64::NEG_INFINITY;
    for (t, v) in ts.iter().zip(values) {
        if *t < mid {
            a = a.max(*v);
        } else {
            b = b.max(*v);
        }
    }
    (a, b)
}

/// `‖u(t)‖²`, `∫ν_turb`, running `⟨ε⟩_T` and `‖u′(t)‖²` (all normalized by `|Ω|`).
pub fn boundedness(samples: &[Sample]) -> Result<Vec<BoundednessCheck>> {
    if samples.len() < 2 {
        return Err(Error::EmptyHistory("boundedness needs at least two samples".into()));
    }
    let ts: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let eps: Vec<f64> = samples.iter().map(Sample::eps).collect();
    let series: [(&'static str, Vec<f64>); 4] = [
        ("kinetic_energy", samples.iter().map(Sample::ms).collect()),
        ("nu_turb_mean", samples.iter().map(|s| s.nu_turb_mean).collect()),
        ("running_eps", running_averages(&ts, &eps)?),
        ("fluctuation_energy", samples.iter().map(|s| s.fluct_ms).collect()),
    ];
    Ok(series
        .into_iter()
        .map(|(name, v)| {
            let (a, b) = split_max(&ts, &v);
            BoundednessCheck { name: name.to_string(), max_first_half: a, max_second_half: b, ok: b <= BOUNDED_GROWTH * a.max(0.0) }
        })
        .collect())
}

/// Relative change of the running `⟨ε⟩_T` over the last quarter of the history.
pub fn stationarity_drift(samples: &[Sample]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::EmptyHistory("stationarity needs at least two samples".into()));
    }
    let ts: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let eps: Vec<f64> = samples.iter().map(Sample::eps).collect();
    let run = running_averages(&ts, &eps)?;
    let cut = ts[0] + 0.75 * (ts[ts.len() - 1] - ts[0]);
    let k = ts.iter().position(|&t| t >= cut).unwrap_or(0);
    let end = run[run.len() - 1];
    Ok(if end != 0.0 { (end - run[k]).abs() / end.abs() } else { 0.0 })
}
