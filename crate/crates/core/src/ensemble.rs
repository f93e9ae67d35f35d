//! Ensemble statistics and the shared eddy viscosity.
//!
//! Given realizations `u_1..u_J`, the fluctuation magnitude
//! `|u′|²ₑ(x) = (1/J) Σ_j |u_j(x) − ⟨u⟩ₑ(x)|²` is evaluated pointwise on the
//! collocation grid. The length scale is `l = |u′|ₑ τ`, optionally capped at
//! `cap_length`, and `ν_turb = μ |u′|ₑ l`. Because `|u′|ₑ` does not depend on
//! the realization index, every member sees the same `ν_turb` field.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{
    clear_unrepresentable, divergence_coeffs, forward_real, gradient, mask_in_place, tensor_to_physical,
    to_physical, Grid, PhysicalScalar, PhysicalVector, SpectralField,
};

/// Default calibration constant of the Kolmogorov–Prandtl closure.
pub const DEFAULT_MU: f64 = 0.55;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CapMode {
    #[default]
    Uncapped,
    HardCap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Kinematic viscosity ν.
    pub nu: f64,
    /// Closure constant μ.
    #[serde(default = "default_mu")]
    pub mu: f64,
    /// Model time scale τ.
    pub tau: f64,
    pub ensemble_size: usize,
    #[serde(default)]
    pub cap_mode: CapMode,
    /// Cap for the length scale; `None` means the box length.
    #[serde(default)]
    pub cap_length: Option<f64>,
}

fn default_mu() -> f64 {
    DEFAULT_MU
}

impl ModelParams {
    pub fn new(nu: f64, tau: f64, ensemble_size: usize) -> Self {
        Self { nu, mu: DEFAULT_MU, tau, ensemble_size, cap_mode: CapMode::Uncapped, cap_length: None }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(Error::config(format!("model.nu must be > 0, got {}", self.nu)));
        }
        // μ = 0 switches the eddy term off; negative values are rejected.
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(Error::config(format!("model.mu must be >= 0, got {}", self.mu)));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::config(format!("model.tau must be > 0, got {}", self.tau)));
        }
        if self.ensemble_size == 0 {
            return Err(Error::config("model.ensemble_size must be >= 1"));
        }
        if let Some(c) = self.cap_length {
            if !(c > 0.0) {
                return Err(Error::config(format!("model.cap_length must be > 0, got {c}")));
            }
        }
        Ok(())
    }

    pub fn resolved_cap_length(&self, box_len: f64) -> f64 {
        self.cap_length.unwrap_or(box_len)
    }

    /// Turbulence length scale for a fluctuation magnitude `s = |u′|ₑ`.
    pub fn length_scale(&self, s: f64, box_len: f64) -> f64 {
        let l = s * self.tau;
        match self.cap_mode {
            CapMode::Uncapped => l,
            CapMode::HardCap => l.min(self.resolved_cap_length(box_len)),
        }
    }

    /// `ν_turb = μ s l(s)`; equals `μ τ s²` when uncapped.
    pub fn eddy_viscosity(&self, s: f64, box_len: f64) -> f64 {
        self.mu * s * self.length_scale(s, box_len)
    }
}

/// Pointwise ensemble statistics shared by all members.
#[derive(Debug, Clone)]
pub struct FluctuationStats {
    /// `⟨u⟩ₑ`
    pub mean: SpectralField,
    /// `|u′|²ₑ`
    pub fluct_mag_sq: PhysicalScalar,
    /// `k′ = ½ |u′|²ₑ`
    pub tke: PhysicalScalar,
    pub length_scale: PhysicalScalar,
    pub nu_turb: PhysicalScalar,
}

fn check_members(members: &[SpectralField]) -> Result<()> {
    let first = members.first().ok_or_else(|| Error::config("ensemble has no members (J = 0)"))?;
    for m in &members[1..] {
        first.check_grid(m)?;
    }
    Ok(())
}

/// `⟨u⟩ₑ = (1/J) Σ_j u_j` in spectral space.
pub fn ensemble_mean(members: &[SpectralField]) -> Result<SpectralField> {
    check_members(members)?;
    let mut mean = SpectralField::zeros(members[0].grid());
    let w = 1.0 / members.len() as f64;
    for m in members {
        mean.add_scaled(w, m)?;
    }
    Ok(mean)
}

pub fn compute_stats(members: &[SpectralField], params: &ModelParams) -> Result<FluctuationStats> {
    check_members(members)?;
    let phys: Vec<PhysicalVector> = members.iter().map(to_physical).collect();
    let mean = ensemble_mean(members)?;
    Ok(stats_from_physical(mean, &phys, params))
}

/// Statistics from members already evaluated on the grid.
pub(crate) fn stats_from_physical(
    mean: SpectralField,
    phys: &[PhysicalVector],
    params: &ModelParams,
) -> FluctuationStats {
    let grid = mean.grid().clone();
    let dim = grid.dim();
    let npts = grid.points();
    let box_len = grid.spec().box_len;
    let inv_j = 1.0 / phys.len() as f64;

    let mut mean_phys = vec![vec![0.0; npts]; dim];
    for p in phys {
        for (acc, c) in mean_phys.iter_mut().zip(&p.comps) {
            for (a, v) in acc.iter_mut().zip(c) {
                *a += v;
            }
        }
    }
    for c in mean_phys.iter_mut() {
        for v in c.iter_mut() {
            *v *= inv_j;
        }
    }
    let mut fluct = vec![0.0; npts];
    for p in phys {
        for (i, c) in p.comps.iter().enumerate() {
            let m = &mean_phys[i];
            for x in 0..npts {
                let d = c[x] - m[x];
                fluct[x] += d * d;
            }
        }
    }
    for v in fluct.iter_mut() {
        *v *= inv_j;
    }
    let tke: Vec<f64> = fluct.iter().map(|v| 0.5 * v).collect();
    let mut length = Vec::with_capacity(npts);
    let mut nu_turb = Vec::with_capacity(npts);
    for &q in &fluct {
        let s = q.sqrt();
        length.push(params.length_scale(s, box_len));
        nu_turb.push(params.eddy_viscosity(s, box_len));
    }
    let wrap = |values: Vec<f64>| PhysicalScalar { grid: grid.clone(), values };
    FluctuationStats {
        mean,
        fluct_mag_sq: wrap(fluct),
        tke: wrap(tke),
        length_scale: wrap(length),
        nu_turb: wrap(nu_turb),
    }
}

/// `∇·(ν_turb ∇u)`: gradient spectrally, product with `ν_turb` on the grid,
/// divergence back in spectral space, dealiased.
pub fn eddy_diffusion(u: &SpectralField, nu_turb: &PhysicalScalar) -> Result<SpectralField> {
    if !u.grid().same_as(nu_turb.grid()) {
        return Err(Error::GridMismatch);
    }
    if let Some(bad) = nu_turb.values.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::contract(format!("nu_turb must be non-negative, found {bad}")));
    }
    let grid = u.grid().clone();
    let grad = tensor_to_physical(&gradient(u));
    let flux: Vec<Vec<Complex64>> = grad
        .comps
        .iter()
        .map(|c| {
            let prod: Vec<f64> = c.iter().zip(&nu_turb.values).map(|(g, nt)| g * nt).collect();
            let mut hat = forward_real(&grid, &prod);
            mask_in_place(&grid, &mut hat);
            hat
        })
        .collect();
    let mut comps = divergence_coeffs(&grid, &flux);
    for c in comps.iter_mut() {
        clear_unrepresentable(&grid, c);
    }
    Ok(SpectralField::from_parts(grid, comps, false, true))
}

/// Normalized closure map `A(s) = ν + s·min{s, 1}` for `s ≥ 0`.
pub fn viscosity_map(s: f64, params: &ModelParams) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::contract(format!("viscosity_map requires s >= 0, got {s}")));
    }
    Ok(params.nu + s * s.min(1.0))
}

/// Pointwise (Nemytskii) application of [`viscosity_map`] to grid samples.
pub fn viscosity_map_field(s: &PhysicalScalar, params: &ModelParams) -> Result<PhysicalScalar> {
    let values = s.values.iter().map(|&v| viscosity_map(v, params)).collect::<Result<Vec<_>>>()?;
    Ok(PhysicalScalar { grid: s.grid.clone(), values })
}

/// Time `t`, the `J` realizations, their (time-independent) body forces and
/// the statistics of the current members.
#[derive(Debug, Clone)]
pub struct EnsembleState {
    pub t: f64,
    pub members: Vec<SpectralField>,
    pub forces: Vec<SpectralField>,
    pub stats: FluctuationStats,
}

impl EnsembleState {
    pub fn new(
        t: f64,
        members: Vec<SpectralField>,
        forces: Vec<SpectralField>,
        params: &ModelParams,
    ) -> Result<Self> {
        check_members(&members)?;
        if forces.len() != members.len() {
            return Err(Error::config(format!(
                "{} members but {} forces",
                members.len(),
                forces.len()
            )));
        }
        for (j, (u, f)) in members.iter().zip(&forces).enumerate() {
            u.check_grid(f)?;
            if !u.is_divergence_free() {
                return Err(Error::contract(format!("member {j} is not divergence-free")));
            }
            if !f.is_divergence_free() {
                return Err(Error::contract(format!("force {j} is not divergence-free")));
            }
        }
        let stats = compute_stats(&members, params)?;
        Ok(Self { t, members, forces, stats })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.members[0].grid()
    }

    pub fn ensemble_size(&self) -> usize {
        self.members.len()
    }

    pub fn refresh_stats(&mut self, params: &ModelParams) -> Result<()> {
        self.stats = compute_stats(&self.members, params)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::fixtures::random_field;
    use crate::spectral::{
        dealias, laplacian, leray_project, mean_inner, mean_square, tensor_to_physical, GridSpec,
    };
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn grid(dim: usize, n: usize) -> Arc<Grid> {
        Grid::new(GridSpec::new(dim, n, 2.0 * PI)).unwrap()
    }

    fn field(g: &Arc<Grid>, seed: u64) -> SpectralField {
        dealias(&random_field(g, seed, 4, true))
    }

    #[test]
    fn antisymmetric_pair() {
        let g = grid(2, 16);
        let v = field(&g, 1);
        let params = ModelParams::new(0.01, 0.1, 2);
        let stats = compute_stats(&[v.clone(), v.scaled(-1.0)], &params).unwrap();
        assert!(stats.mean.max_coefficient() < 1e-15);
        let vv = to_physical(&v).magnitude_sq();
        for x in 0..g.points() {
            assert!((stats.fluct_mag_sq.values[x] - vv.values[x]).abs() <= 1e-14 * (1.0 + vv.values[x]));
            assert!((stats.tke.values[x] - 0.5 * vv.values[x]).abs() <= 1e-14 * (1.0 + vv.values[x]));
        }
    }

    #[test]
    fn single_member_has_no_eddy_viscosity() {
        let g = grid(2, 16);
        let v = field(&g, 2);
        let stats = compute_stats(&[v.clone()], &ModelParams::new(0.01, 0.1, 1)).unwrap();
        assert_eq!(stats.mean.sub(&v).unwrap().max_coefficient(), 0.0);
        assert!(stats.fluct_mag_sq.values.iter().all(|&q| q == 0.0));
        assert!(stats.nu_turb.values.iter().all(|&q| q == 0.0));
    }

    #[test]
    fn empty_ensemble_is_config_error() {
        assert!(matches!(compute_stats(&[], &ModelParams::new(0.01, 0.1, 1)), Err(Error::Config(_))));
    }

    #[test]
    fn closure_point_values() {
        let mut p = ModelParams::new(0.01, 0.01, 2);
        assert!((p.eddy_viscosity(1.0, 2.0 * PI) - 0.0055).abs() < 1e-15);
        p.tau = 1.0;
        p.cap_mode = CapMode::HardCap;
        assert_eq!(p.length_scale(10.0, 2.0 * PI), 2.0 * PI);
        assert!((p.eddy_viscosity(10.0, 2.0 * PI) - 0.55 * 10.0 * 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn fluctuations_average_to_zero() {
        let g = grid(3, 12);
        let members: Vec<_> = (0..5).map(|s| field(&g, 10 + s)).collect();
        let mean = ensemble_mean(&members).unwrap();
        let mut acc = SpectralField::zeros(&g);
        for m in &members {
            acc.add_scaled(0.2, &m.sub(&mean).unwrap()).unwrap();
        }
        assert!(acc.max_coefficient() <= 1e-13);
    }

    #[test]
    fn gradient_decomposition_pointwise() {
        let g = grid(2, 32);
        let members: Vec<_> = (0..4).map(|s| field(&g, 40 + s)).collect();
        let mean = ensemble_mean(&members).unwrap();
        let jinv = 0.25;
        let mut lhs = vec![0.0; g.points()];
        let mut fluct = vec![0.0; g.points()];
        for m in &members {
            let gm = tensor_to_physical(&gradient(m)).frobenius_sq();
            let gp = tensor_to_physical(&gradient(&m.sub(&mean).unwrap())).frobenius_sq();
            for x in 0..g.points() {
                lhs[x] += jinv * gm.values[x];
                fluct[x] += jinv * gp.values[x];
            }
        }
        let gmean = tensor_to_physical(&gradient(&mean)).frobenius_sq();
        let scale = lhs.iter().copied().fold(0.0, f64::max);
        for x in 0..g.points() {
            assert!((lhs[x] - gmean.values[x] - fluct[x]).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn capped_matches_uncapped_below_cap() {
        let g = grid(2, 16);
        let members: Vec<_> = (0..3).map(|s| field(&g, 70 + s).scaled(3.0)).collect();
        let mut p = ModelParams::new(0.01, 0.5, 3);
        let free = compute_stats(&members, &p).unwrap();
        let mut ls = free.length_scale.values.clone();
        ls.sort_by(f64::total_cmp);
        let cap = ls[ls.len() / 2];
        p.cap_mode = CapMode::HardCap;
        p.cap_length = Some(cap);
        let capped = compute_stats(&members, &p).unwrap();
        let mut below = 0;
        for x in 0..g.points() {
            assert!(capped.length_scale.values[x] <= cap);
            if free.length_scale.values[x] <= cap {
                below += 1;
                assert_eq!(free.nu_turb.values[x], capped.nu_turb.values[x]);
            } else {
                assert!(capped.nu_turb.values[x] < free.nu_turb.values[x]);
            }
        }
        assert!(below > 0 && below < g.points());
    }

    #[test]
    fn constant_eddy_viscosity_is_laplacian() {
        let g = grid(2, 16);
        let u = field(&g, 5);
        let c = 0.3;
        let d = eddy_diffusion(&u, &PhysicalScalar::constant(&g, c)).unwrap();
        let lap = laplacian(&u).scaled(c);
        assert!(d.sub(&lap).unwrap().max_coefficient() < 1e-13);
        let z = eddy_diffusion(&SpectralField::zeros(&g), &PhysicalScalar::constant(&g, c)).unwrap();
        assert_eq!(z.max_coefficient(), 0.0);
    }

    #[test]
    fn eddy_diffusion_is_dissipative_and_rejects_negative() {
        let g = grid(3, 12);
        let u = field(&g, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let nt = PhysicalScalar::new(&g, (0..g.points()).map(|_| rng.gen_range(0.0..2.0)).collect()).unwrap();
        let d = eddy_diffusion(&u, &nt).unwrap();
        let e = mean_inner(&d, &u).unwrap();
        let quad = {
            let gr = tensor_to_physical(&gradient(&u)).frobenius_sq();
            gr.values.iter().zip(&nt.values).map(|(a, b)| a * b).sum::<f64>() / g.points() as f64
        };
        assert!(e <= 0.0);
        assert!((e + quad).abs() <= 1e-10 * quad);
        let mut neg = nt.clone();
        neg.values[0] = -1e-3;
        assert!(matches!(eddy_diffusion(&u, &neg), Err(Error::Contract(_))));
    }

    #[test]
    fn eddy_diffusion_matches_finite_differences() {
        // ∇·(ν∇u) with second-order centred differences on the grid.
        fn fd_error(n: usize) -> f64 {
            let g = grid(2, n);
            let u = leray_project(&random_field(&g, 99, 3, true));
            let nt_fn = |x: [f64; 3]| 0.2 + 0.1 * x[0].sin() * (2.0 * x[1]).cos() + 0.05 * (x[1] + 0.3).cos();
            let nt = PhysicalScalar::new(&g, (0..g.points()).map(|i| nt_fn(g.point(i))).collect()).unwrap();
            let exact = to_physical(&eddy_diffusion(&u, &nt).unwrap());
            let up = to_physical(&u);
            let dx = g.spec().dx();
            let at = |a: usize, b: usize| (a % n) * n + (b % n);
            let mut err: f64 = 0.0;
            let mut scale: f64 = 0.0;
            for i in 0..2 {
                let c = &up.comps[i];
                for a in 0..n {
                    for b in 0..n {
                        let mid = |p: usize, q: usize| 0.5 * (nt.values[p] + nt.values[q]);
                        let here = at(a, b);
                        let xp = at(a + 1, b);
                        let xm = at(a + n - 1, b);
                        let yp = at(a, b + 1);
                        let ym = at(a, b + n - 1);
                        let fd = (mid(xp, here) * (c[xp] - c[here]) - mid(here, xm) * (c[here] - c[xm])
                            + mid(yp, here) * (c[yp] - c[here])
                            - mid(here, ym) * (c[here] - c[ym]))
                            / (dx * dx);
                        err = err.max((fd - exact.comps[i][here]).abs());
                        scale = scale.max(exact.comps[i][here].abs());
                    }
                }
            }
            err / scale
        }
        let e64 = fd_error(64);
        let e128 = fd_error(128);
        assert!(e64 <= 1e-2, "n=64 relative error {e64}");
        assert!(e128 < e64);
    }

    #[test]
    fn viscosity_map_values_and_domain() {
        let p = ModelParams::new(0.2, 1.0, 1);
        assert_eq!(viscosity_map(0.0, &p).unwrap(), 0.2);
        assert_eq!(viscosity_map(2.0, &p).unwrap(), 2.2);
        assert!(matches!(viscosity_map(-1.0, &p), Err(Error::Contract(_))));
    }

    #[test]
    fn state_rejects_mismatched_forces() {
        let g = grid(2, 16);
        let p = ModelParams::new(0.01, 0.1, 2);
        let u = field(&g, 1);
        assert!(EnsembleState::new(0.0, vec![u.clone(), u.clone()], vec![u.clone()], &p).is_err());
        let st = EnsembleState::new(0.0, vec![u.clone(), u.clone()], vec![u.clone(), u], &p).unwrap();
        assert!(mean_square(&st.stats.mean) > 0.0);
    }
}
