//! Time integration of the ensemble.
//!
//! The viscous term is integrated exactly with the factor `E(h) = e^{−ν|k|²h}`;
//! advection, eddy diffusion and forcing are explicit. With
//! `G(u) = P[−N(u) + ∇·(ν_turb ∇u) + f]` the default third-order scheme is
//!
//! ```text
//! u1      = E(dt)   (u + dt G(u))
//! u2      = ¾ E(dt/2) u + ¼ E(−dt/2) (u1 + dt G(u1))
//! u_{n+1} = ⅓ E(dt) u   + ⅔ E(dt/2)  (u2 + dt G(u2))
//! ```
//!
//! Members advance in parallel; the ensemble statistics are a barrier between
//! stages, so every member sees the same `ν_turb` at every stage.

use log::warn;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{compute_stats, ensemble_mean, stats_from_physical, EnsembleState, ModelParams};
use crate::error::{Error, Result};
use crate::spectral::{
    advective_physical, clear_unrepresentable, divergence_coeffs, forward_real, gradient, leray_in_place,
    linf_norm, mask_in_place, tensor_to_physical, to_physical, Grid, PhysicalScalar, PhysicalVector,
    SpectralField,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Rk2Heun,
    #[default]
    Rk3Ssp,
}

/// When the shared eddy viscosity is recomputed inside a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EddyRefresh {
    /// From the stage values of all members at every stage.
    #[default]
    PerStage,
    /// Once, from the start-of-step members, for all stages.
    PerStep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepperConfig {
    /// Base (and maximum) step.
    pub dt: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "default_eddy_factor")]
    pub eddy_stability_factor: f64,
    #[serde(default = "default_true")]
    pub adapt: bool,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default)]
    pub eddy_refresh: EddyRefresh,
    /// Sign in front of the eddy term; only the mutation check flips it.
    #[serde(skip, default = "default_sign")]
    pub(crate) eddy_sign: f64,
}

fn default_cfl() -> f64 {
    0.4
}

fn default_eddy_factor() -> f64 {
    0.25
}

fn default_true() -> bool {
    true
}

fn default_sign() -> f64 {
    1.0
}

impl StepperConfig {
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            cfl: default_cfl(),
            eddy_stability_factor: default_eddy_factor(),
            adapt: true,
            scheme: Scheme::default(),
            eddy_refresh: EddyRefresh::default(),
            eddy_sign: 1.0,
        }
    }

    /// Fixed step `dt` with no adaptation.
    pub fn fixed(dt: f64) -> Self {
        Self { adapt: false, ..Self::new(dt) }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config(format!("stepper.dt must be > 0, got {}", self.dt)));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::config(format!("stepper.cfl must lie in (0, 1], got {}", self.cfl)));
        }
        if !(self.eddy_stability_factor > 0.0 && self.eddy_stability_factor.is_finite()) {
            return Err(Error::config(format!(
                "stepper.eddy_stability_factor must be > 0, got {}",
                self.eddy_stability_factor
            )));
        }
        Ok(())
    }

    /// Mutation hook for the verification suite.
    pub(crate) fn with_flipped_eddy_sign(mut self) -> Self {
        self.eddy_sign = -self.eddy_sign;
        self
    }
}

/// Explicit stability limit `min(cfl Δx / max‖u_j‖∞, c_e Δx² / max ν_turb, cfg.dt)`.
pub fn stable_dt(state: &EnsembleState, cfg: &StepperConfig, _params: &ModelParams) -> f64 {
    let dx = state.grid().spec().dx();
    let umax = state.members.par_iter().map(linf_norm).collect::<Vec<_>>().into_iter().fold(0.0, f64::max);
    let nt_max = state.stats.nu_turb.max().max(0.0);
    let mut dt = cfg.dt;
    if umax > 0.0 {
        dt = dt.min(cfg.cfl * dx / umax);
    }
    if nt_max > 0.0 {
        dt = dt.min(cfg.eddy_stability_factor * dx * dx / nt_max);
    }
    dt
}

/// Outcome of one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub index: u64,
    pub dt: f64,
    /// Stability limit evaluated at the start of the step.
    pub dt_limit: f64,
    /// The step exceeded the limit (possible only when adaptation is off).
    pub stability_warning: bool,
}

/// Integrating-factor tables for one step size.
struct Factors {
    full: Vec<f64>,
    half: Vec<f64>,
    neg_half: Vec<f64>,
    ones: Vec<f64>,
}

impl Factors {
    fn new(grid: &Grid, nu: f64, dt: f64) -> Self {
        let ks = grid.k_sq_table();
        Self {
            full: ks.iter().map(|k| (-nu * k * dt).exp()).collect(),
            half: ks.iter().map(|k| (-nu * k * 0.5 * dt).exp()).collect(),
            neg_half: ks.iter().map(|k| (nu * k * 0.5 * dt).exp()).collect(),
            ones: vec![1.0; ks.len()],
        }
    }
}

/// `Σ c · E ⊙ field` over the given terms.
fn lincomb(terms: &[(f64, &[f64], &SpectralField)]) -> SpectralField {
    let grid = terms[0].2.grid().clone();
    let dim = grid.dim();
    let npts = grid.points();
    let mut comps = vec![vec![Complex64::new(0.0, 0.0); npts]; dim];
    for (i, out) in comps.iter_mut().enumerate() {
        for &(c, e, f) in terms {
            for ((o, v), ek) in out.iter_mut().zip(f.component(i)).zip(e) {
                *o += v * (c * ek);
            }
        }
    }
    SpectralField::from_parts(grid, comps, true, true)
}

/// `G(u) = P[−½(u·∇)u − ∇·(½ u⊗u − s ν_turb ∇u) + f]`, with all products on
/// the grid and a single mask applied to the sum.
fn rhs_member(
    u: &SpectralField,
    phys: &PhysicalVector,
    nu_turb: &PhysicalScalar,
    f: &SpectralField,
    eddy_sign: f64,
) -> SpectralField {
    let grid = u.grid().clone();
    let dim = grid.dim();
    let npts = grid.points();
    let grad = tensor_to_physical(&gradient(u));
    let adv = advective_physical(phys, &grad);
    let nt = &nu_turb.values;
    let mut flux_hat = Vec::with_capacity(dim * dim);
    for i in 0..dim {
        for j in 0..dim {
            let (ui, uj, gij) = (&phys.comps[i], &phys.comps[j], grad.entry(i, j));
            let t: Vec<f64> = (0..npts).map(|p| 0.5 * ui[p] * uj[p] - eddy_sign * nt[p] * gij[p]).collect();
            flux_hat.push(forward_real(&grid, &t));
        }
    }
    let div = divergence_coeffs(&grid, &flux_hat);
    let mut comps = Vec::with_capacity(dim);
    for (i, d) in div.into_iter().enumerate() {
        let a = forward_real(&grid, &adv[i]);
        let mut c: Vec<Complex64> = a.iter().zip(&d).map(|(a, d)| -0.5 * a - d).collect();
        mask_in_place(&grid, &mut c);
        clear_unrepresentable(&grid, &mut c);
        for (v, fv) in c.iter_mut().zip(f.component(i)) {
            *v += fv;
        }
        comps.push(c);
    }
    let mut out = SpectralField::from_parts(grid, comps, false, true);
    leray_in_place(&mut out);
    out
}

/// Evaluates `G` for every member. With `frozen = None` the statistics are
/// computed from the given stage values.
fn evaluate(
    members: &[SpectralField],
    forces: &[SpectralField],
    params: &ModelParams,
    frozen: Option<&PhysicalScalar>,
    eddy_sign: f64,
) -> Result<Vec<SpectralField>> {
    let phys: Vec<PhysicalVector> = members.par_iter().map(to_physical).collect();
    let fresh;
    let nu_turb = match frozen {
        Some(nt) => nt,
        None => {
            fresh = stats_from_physical(ensemble_mean(members)?, &phys, params).nu_turb;
            &fresh
        }
    };
    Ok(members
        .par_iter()
        .zip(phys.par_iter())
        .zip(forces.par_iter())
        .map(|((u, p), f)| rhs_member(u, p, nu_turb, f, eddy_sign))
        .collect())
}

/// Advances every member by `dt`. The returned state carries fresh statistics.
pub fn step(state: &EnsembleState, dt: f64, params: &ModelParams, cfg: &StepperConfig) -> Result<EnsembleState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::config(format!("step size must be > 0, got {dt}")));
    }
    let grid = state.grid().clone();
    let e = Factors::new(&grid, params.nu, dt);
    let u0 = &state.members;
    let forces = &state.forces;
    let start_nt = &state.stats.nu_turb;
    let stage_nt = |first: bool| match cfg.eddy_refresh {
        EddyRefresh::PerStep => Some(start_nt),
        EddyRefresh::PerStage if first => Some(start_nt),
        EddyRefresh::PerStage => None,
    };
    let sign = cfg.eddy_sign;

    let g0 = evaluate(u0, forces, params, stage_nt(true), sign)?;
    let u1: Vec<SpectralField> =
        u0.par_iter().zip(&g0).map(|(u, g)| lincomb(&[(1.0, &e.full, u), (dt, &e.full, g)])).collect();
    let g1 = evaluate(&u1, forces, params, stage_nt(false), sign)?;
    let next: Vec<SpectralField> = match cfg.scheme {
        Scheme::Rk2Heun => u0
            .par_iter()
            .zip(&u1)
            .zip(&g1)
            .map(|((u, v), g)| lincomb(&[(0.5, &e.full, u), (0.5, &e.ones, v), (0.5 * dt, &e.ones, g)]))
            .collect(),
        Scheme::Rk3Ssp => {
            let u2: Vec<SpectralField> = u0
                .par_iter()
                .zip(&u1)
                .zip(&g1)
                .map(|((u, v), g)| {
                    lincomb(&[(0.75, &e.half, u), (0.25, &e.neg_half, v), (0.25 * dt, &e.neg_half, g)])
                })
                .collect();
            let g2 = evaluate(&u2, forces, params, stage_nt(false), sign)?;
            u0.par_iter()
                .zip(&u2)
                .zip(&g2)
                .map(|((u, v), g)| {
                    lincomb(&[(1.0 / 3.0, &e.full, u), (2.0 / 3.0, &e.half, v), (2.0 / 3.0 * dt, &e.half, g)])
                })
                .collect()
        }
    };
    let stats = compute_stats(&next, params)?;
    Ok(EnsembleState { t: state.t + dt, members: next, forces: state.forces.clone(), stats })
}

/// Returns a blow-up error if any member holds a non-finite coefficient.
fn check_finite(state: &EnsembleState) -> Result<()> {
    for (j, u) in state.members.iter().enumerate() {
        let bad = u.components().iter().flat_map(|c| c.iter()).any(|v| !(v.re.is_finite() && v.im.is_finite()));
        if bad {
            let max_value = u
                .components()
                .iter()
                .flat_map(|c| c.iter())
                .map(|v| v.norm())
                .fold(0.0_f64, |m, v| if v.is_nan() { f64::NAN } else { m.max(v) });
            return Err(Error::BlowUp { time: state.t, member: j, max_value });
        }
    }
    Ok(())
}

/// Summary of an [`advance_to`] call.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AdvanceReport {
    pub steps: u64,
    pub stability_warnings: u64,
    pub min_dt: f64,
    pub max_dt: f64,
}

/// Steps until `t_end`, clipping the last step to land on it exactly.
///
/// `observe` is called after every `every`-th step and after the final step.
/// Step indices continue from `first_index`.
pub fn advance_to(
    mut state: EnsembleState,
    t_end: f64,
    params: &ModelParams,
    cfg: &StepperConfig,
    every: u64,
    first_index: u64,
    observe: &mut dyn FnMut(&EnsembleState, &StepInfo) -> Result<()>,
) -> Result<(EnsembleState, AdvanceReport)> {
    cfg.validate()?;
    if !(t_end >= state.t) {
        return Err(Error::config(format!("t_end = {t_end} lies before the current time {}", state.t)));
    }
    let every = every.max(1);
    let mut report = AdvanceReport { min_dt: f64::INFINITY, ..Default::default() };
    let mut index = first_index;
    while state.t < t_end {
        let limit = stable_dt(&state, cfg, params);
        let mut dt = if cfg.adapt { limit } else { cfg.dt };
        let warning = !cfg.adapt && cfg.dt > limit * (1.0 + 1e-12);
        let remaining = t_end - state.t;
        let last = dt >= remaining * (1.0 - 1e-10);
        // A remainder equal to dt up to rounding keeps dt, so fixed-step runs
        // see the same step sequence however the interval is split.
        if last && (dt - remaining).abs() > 1e-10 * dt {
            dt = remaining;
        }
        let mut next = step(&state, dt, params, cfg)?;
        if last {
            next.t = t_end;
        }
        check_finite(&next)?;
        index += 1;
        let info = StepInfo { index, dt, dt_limit: limit, stability_warning: warning };
        if warning {
            report.stability_warnings += 1;
            if report.stability_warnings == 1 {
                warn!("step {index}: dt = {dt:.3e} exceeds the stability limit {limit:.3e}");
            }
        }
        report.steps += 1;
        report.min_dt = report.min_dt.min(dt);
        report.max_dt = report.max_dt.max(dt);
        state = next;
        if index % every == 0 || last {
            observe(&state, &info)?;
        }
    }
    if report.steps == 0 {
        report.min_dt = 0.0;
    }
    Ok((state, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::fixtures::{random_field, taylor_green};
    use crate::spectral::{dealias, mean_square, GridSpec};
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn grid(dim: usize, n: usize) -> Arc<Grid> {
        Grid::new(GridSpec::new(dim, n, 2.0 * PI)).unwrap()
    }

    fn state(members: Vec<SpectralField>, forces: Vec<SpectralField>, params: &ModelParams) -> EnsembleState {
        EnsembleState::new(0.0, members, forces, params).unwrap()
    }

    fn zero_forces(g: &Arc<Grid>, j: usize) -> Vec<SpectralField> {
        vec![SpectralField::zeros(g); j]
    }

    fn run(s: EnsembleState, t_end: f64, p: &ModelParams, cfg: &StepperConfig) -> EnsembleState {
        advance_to(s, t_end, p, cfg, 1, 0, &mut |_, _| Ok(())).unwrap().0
    }

    #[test]
    fn stable_dt_examples() {
        let g = grid(2, 64);
        let p = ModelParams::new(0.01, 0.1, 1);
        let cfg = StepperConfig::new(10.0);
        let zero = state(vec![SpectralField::zeros(&g)], zero_forces(&g, 1), &p);
        assert_eq!(stable_dt(&zero, &cfg, &p), 10.0);

        // u = (sin y, 0) has max |u| = 1 on the grid.
        let half = Complex64::new(0.0, -0.5);
        let z = Complex64::new(0.0, 0.0);
        let shear = SpectralField::from_modes(&g, &[([0, 1, 0], [half, z, z])]).unwrap();
        let mut s = state(vec![shear], zero_forces(&g, 1), &p);
        let dx = 2.0 * PI / 64.0;
        assert!((stable_dt(&s, &cfg, &p) - 0.4 * dx).abs() < 1e-15);

        s.stats.nu_turb = PhysicalScalar::constant(&g, 1.0);
        let a = stable_dt(&s, &cfg, &p);
        s.stats.nu_turb = PhysicalScalar::constant(&g, 2.0);
        let b = stable_dt(&s, &cfg, &p);
        assert!((a - 0.25 * dx * dx).abs() < 1e-15);
        assert!((b - 0.5 * a).abs() < 1e-15);
    }

    #[test]
    fn single_mode_decays_exactly() {
        let g = grid(2, 32);
        let mut p = ModelParams::new(0.05, 0.1, 1);
        p.mu = 0.0;
        let z = Complex64::new(0.0, 0.0);
        let u = SpectralField::from_modes(&g, &[([0, 3, 0], [Complex64::new(0.2, -0.4), z, z])]).unwrap();
        let s = state(vec![u.clone()], zero_forces(&g, 1), &p);
        let dt = 0.01;
        let out = step(&s, dt, &p, &StepperConfig::fixed(dt)).unwrap();
        let decay = (-0.05 * 9.0 * dt as f64).exp();
        let expect = u.scaled(decay);
        assert!(out.members[0].sub(&expect).unwrap().max_coefficient() <= 1e-16);
    }

    #[test]
    fn taylor_green_matches_analytic_decay() {
        let g = grid(2, 64);
        let nu = 1e-2;
        let mut p = ModelParams::new(nu, 0.1, 1);
        p.mu = 0.0;
        let u0 = dealias(&taylor_green(&g));
        let s = state(vec![u0.clone()], zero_forces(&g, 1), &p);
        let out = run(s, 1.0, &p, &StepperConfig::fixed(1e-3));
        assert_eq!(out.t, 1.0);
        let exact = u0.scaled((-2.0 * nu).exp());
        let err = mean_square(&out.members[0].sub(&exact).unwrap()).sqrt();
        assert!(err <= 1e-6, "L2 error {err}");
    }

    #[test]
    fn degenerate_ensemble_reduces_to_single_member() {
        let g = grid(2, 32);
        let u = dealias(&random_field(&g, 4, 4, true));
        let f = dealias(&random_field(&g, 5, 2, true));
        let p1 = ModelParams::new(0.02, 0.1, 1);
        let p2 = ModelParams::new(0.02, 0.1, 2);
        let cfg = StepperConfig::fixed(2e-3);
        let one = run(state(vec![u.clone()], vec![f.clone()], &p1), 0.05, &p1, &cfg);
        let two = run(state(vec![u.clone(), u], vec![f.clone(), f], &p2), 0.05, &p2, &cfg);
        assert!(two.stats.fluct_mag_sq.values.iter().all(|&v| v == 0.0));
        for m in &two.members {
            assert_eq!(m.components(), one.members[0].components());
        }
    }

    #[test]
    fn split_advance_is_bitwise_identical() {
        let g = grid(2, 32);
        let p = ModelParams::new(0.02, 0.2, 3);
        let members: Vec<_> = (0..3).map(|s| dealias(&random_field(&g, 10 + s, 4, true))).collect();
        let forces: Vec<_> = (0..3).map(|s| dealias(&random_field(&g, 20 + s, 2, true))).collect();
        let cfg = StepperConfig::fixed(1e-3);
        let whole = run(state(members.clone(), forces.clone(), &p), 0.04, &p, &cfg);
        let half = run(state(members, forces, &p), 0.02, &p, &cfg);
        let rest = run(half, 0.04, &p, &cfg);
        for (a, b) in whole.members.iter().zip(&rest.members) {
            assert_eq!(a.components(), b.components());
        }
    }

    #[test]
    fn unforced_inviscid_closure_free_energy_is_monotone() {
        let g = grid(2, 32);
        let mut p = ModelParams::new(0.01, 0.1, 2);
        p.mu = 0.0;
        let members: Vec<_> = (0..2).map(|s| dealias(&random_field(&g, 30 + s, 6, true))).collect();
        let s = state(members, zero_forces(&g, 2), &p);
        let mut last: Vec<f64> = s.members.iter().map(mean_square).collect();
        let cfg = StepperConfig::new(5e-3);
        advance_to(s, 0.5, &p, &cfg, 1, 0, &mut |st, _| {
            for (j, m) in st.members.iter().enumerate() {
                let e = mean_square(m);
                assert!(e < last[j], "energy rose at t = {}", st.t);
                last[j] = e;
            }
            Ok(())
        })
        .unwrap();
    }

    #[test]
    fn steps_preserve_solenoidality_and_mean() {
        let g = grid(3, 16);
        let p = ModelParams::new(0.02, 0.2, 2);
        let members: Vec<_> = (0..2).map(|s| dealias(&random_field(&g, 50 + s, 3, true))).collect();
        let forces: Vec<_> = (0..2).map(|s| dealias(&random_field(&g, 60 + s, 2, true))).collect();
        let out = run(state(members, forces, &p), 0.05, &p, &StepperConfig::new(1e-2));
        for m in &out.members {
            assert!(m.divergence_defect() <= 1e-12);
            assert!(m.components().iter().all(|c| c[0] == Complex64::new(0.0, 0.0)));
            assert!(m.is_divergence_free() && m.is_dealiased());
        }
    }

    #[test]
    fn blow_up_is_reported() {
        let g = grid(2, 16);
        let p = ModelParams::new(0.01, 0.1, 1);
        let mut u = dealias(&random_field(&g, 1, 3, true));
        u.comps_mut()[0][1] = Complex64::new(f64::NAN, 0.0);
        let s = EnsembleState { t: 0.0, members: vec![u], forces: zero_forces(&g, 1), stats: {
            let v = dealias(&random_field(&g, 1, 3, true));
            compute_stats(&[v], &p).unwrap()
        } };
        let err = advance_to(s, 0.1, &p, &StepperConfig::fixed(0.01), 1, 0, &mut |_, _| Ok(())).unwrap_err();
        assert!(matches!(err, Error::BlowUp { member: 0, .. }));
    }

    #[test]
    fn fixed_step_beyond_limit_warns() {
        let g = grid(2, 16);
        let p = ModelParams::new(0.01, 0.1, 1);
        let u = dealias(&random_field(&g, 2, 3, true)).scaled(50.0);
        let s = state(vec![u], zero_forces(&g, 1), &p);
        let mut warned = false;
        let cfg = StepperConfig::fixed(0.01);
        let (_, report) = advance_to(s, 0.01, &p, &cfg, 1, 0, &mut |_, info| {
            warned |= info.stability_warning;
            Ok(())
        })
        .unwrap();
        assert!(warned);
        assert_eq!(report.stability_warnings, 1);
    }
}
