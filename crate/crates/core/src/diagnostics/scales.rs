use serde::{Deserialize, Serialize};

use super::budget::time_average;
use super::sample::Sample;
use crate::ensemble::ModelParams;
use crate::error::{Error, Result};
use crate::setup::ForcingScales;

/// Finite-window velocity scales and the dimensionless groups built on them.
///
/// When `U_T = 0` the groups `T*`, `I`, `Re` are meaningless; they are then
/// reported as zero with `defined = false`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowScales {
    /// Length of the averaging window.
    pub window: f64,
    /// `U_T = ⟨⟨(1/|Ω|)‖u‖²⟩ₑ⟩_T^{1/2}`
    pub u: f64,
    /// `U′_T = ⟨⟨(1/|Ω|)‖u′‖²⟩ₑ⟩_T^{1/2}`
    pub u_prime: f64,
    pub f: f64,
    pub l: f64,
    /// `T* = L / U_T`
    pub t_star: f64,
    /// `I = (U′_T / U_T)²`
    pub intensity: f64,
    /// `Re = L U_T / ν`
    pub re: f64,
    pub tau_over_t_star: f64,
    /// `η ≈ Re^{−3/4} L`
    pub eta_estimate: f64,
    pub defined: bool,
}

pub fn flow_scales(samples: &[Sample], forcing: &ForcingScales, params: &ModelParams) -> Result<FlowScales> {
    let ts: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let ms: Vec<f64> = samples.iter().map(Sample::ms).collect();
    let fl: Vec<f64> = samples.iter().map(|s| s.fluct_ms).collect();
    let u = time_average(&ts, &ms)?.max(0.0).sqrt();
    let u_prime = time_average(&ts, &fl)?.max(0.0).sqrt();
    let window = ts[ts.len() - 1] - ts[0];
    let l = forcing.l;
    if !(u > 0.0) {
        return Ok(FlowScales {
            window,
            u,
            u_prime,
            f: forcing.f,
            l,
            t_star: 0.0,
            intensity: 0.0,
            re: 0.0,
            tau_over_t_star: 0.0,
            eta_estimate: 0.0,
            defined: false,
        });
    }
    let t_star = l / u;
    let re = l * u / params.nu;
    Ok(FlowScales {
        window,
        u,
        u_prime,
        f: forcing.f,
        l,
        t_star,
        intensity: (u_prime / u).powi(2),
        re,
        tau_over_t_star: params.tau / t_star,
        eta_estimate: re.powf(-0.75) * l,
        defined: true,
    })
}

/// `C(α) = 1/(1−α) + Re⁻¹/(4α(1−α)) + μ (τ/T*) I / (4α(1−α))`.
pub fn bound_coefficient(alpha: f64, mu: f64, re: f64, tau_over_t_star: f64, intensity: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::config(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let d = 4.0 * alpha * (1.0 - alpha);
    Ok(1.0 / (1.0 - alpha) + 1.0 / (re * d) + mu * tau_over_t_star * intensity / d)
}

/// Coefficient `C` of the dissipation bound `⟨ε⟩ ≤ C U³/L` for the given scales.
pub fn dissipation_bound(scales: &FlowScales, params: &ModelParams, alpha: f64) -> Result<f64> {
    if !scales.defined {
        return Err(Error::contract("flow scales are undefined (U_T = 0)"));
    }
    bound_coefficient(alpha, params.mu, scales.re, scales.tau_over_t_star, scales.intensity)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficient_examples() {
        let c = bound_coefficient(0.5, 0.55, 100.0, 0.1, 0.5).unwrap();
        assert!((c - 2.0375).abs() < 1e-14);
        let c = bound_coefficient(0.5, 0.55, 250.0, 0.3, 0.2).unwrap();
        assert!((c - (2.0 + 1.0 / 250.0 + 0.55 * 0.3 * 0.2)).abs() < 1e-14);
        let c = bound_coefficient(0.3, 0.55, f64::INFINITY, 0.2, 0.0).unwrap();
        assert!((c - 1.0 / 0.7).abs() < 1e-15);
        assert!(bound_coefficient(0.0, 0.55, 1.0, 1.0, 1.0).is_err());
        assert!(bound_coefficient(1.0, 0.55, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn coefficient_monotonicity() {
        let c = |re: f64, t: f64, i: f64| bound_coefficient(0.4, 0.55, re, t, i).unwrap();
        let h = 1e-6;
        for &(re, t, i) in &[(10.0, 0.1, 0.3), (1e3, 0.5, 0.9), (1e5, 0.01, 0.01)] {
            assert!(c(re * (1.0 + h), t, i) < c(re, t, i));
            assert!(c(re, t + h, i) > c(re, t, i));
            assert!(c(re, t, i + h) > c(re, t, i));
        }
    }
}
