//! Seeded ensemble data: body forces, initial conditions and forcing scales.
//!
//! Each generated field starts from a base pattern shared by all members.
//! Member `j` jitters every mode of that pattern by an amplitude factor
//! `1 + δξ₁` and a phase `δπξ₂`, with `ξ` uniform on `[−1, 1]` drawn from
//! the ChaCha8 stream `(seed, purpose, j)`. The result is Leray-projected and
//! rescaled so that `(1/|Ω|)‖·‖²` hits its target exactly.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{
    gradient, leray_project, mean_square, tensor_to_physical, Grid, SpectralField,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ForcingPattern {
    /// Random solenoidal modes with `k_min ≤ |m| ≤ k_max`.
    #[default]
    RandomBand,
    /// `F₀ (sin(2π k_min y / L_Ω), 0, 0)` before normalization.
    Shear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSpec {
    pub seed: u64,
    /// Relative jitter amplitude `δ ≥ 0`.
    pub delta: f64,
    pub k_min: i64,
    pub k_max: i64,
    /// Force scale `F₀`; every member satisfies `(1/|Ω|)‖f_j‖² = F₀²`.
    pub base_amplitude: f64,
    #[serde(default)]
    pub pattern: ForcingPattern,
    /// Root-mean-square speed of every initial member; zero starts from rest.
    #[serde(default = "default_ic_amplitude")]
    pub ic_amplitude: f64,
    /// Upper end of the initial-condition band `1 ≤ |m| ≤ ic_k_max`; defaults to `k_max`.
    #[serde(default)]
    pub ic_k_max: Option<i64>,
}

fn default_ic_amplitude() -> f64 {
    1.0
}

impl PerturbationSpec {
    pub fn new(seed: u64, delta: f64, k_min: i64, k_max: i64, base_amplitude: f64) -> Self {
        Self {
            seed,
            delta,
            k_min,
            k_max,
            base_amplitude,
            pattern: ForcingPattern::RandomBand,
            ic_amplitude: default_ic_amplitude(),
            ic_k_max: None,
        }
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::config(format!("perturbation.delta must be >= 0, got {}", self.delta)));
        }
        let cutoff = grid.spec().dealias_cutoff();
        if !(1 <= self.k_min && self.k_min <= self.k_max && self.k_max <= cutoff) {
            return Err(Error::config(format!(
                "perturbation band must satisfy 1 <= k_min <= k_max <= {cutoff}, got [{}, {}]",
                self.k_min, self.k_max
            )));
        }
        if let Some(k) = self.ic_k_max {
            if !(1 <= k && k <= cutoff) {
                return Err(Error::config(format!("perturbation.ic_k_max must lie in [1, {cutoff}], got {k}")));
            }
        }
        if !(self.base_amplitude >= 0.0 && self.base_amplitude.is_finite()) {
            return Err(Error::config(format!(
                "perturbation.base_amplitude must be >= 0, got {}",
                self.base_amplitude
            )));
        }
        if !(self.ic_amplitude >= 0.0 && self.ic_amplitude.is_finite()) {
            return Err(Error::config(format!(
                "perturbation.ic_amplitude must be >= 0, got {}",
                self.ic_amplitude
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy)]
enum Purpose {
    Force = 1,
    Initial = 2,
}

const BASE_STREAM: u64 = u32::MAX as u64;

fn rng(seed: u64, purpose: Purpose, member: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(((purpose as u64) << 32) | member);
    r
}

/// One representative of every `±m` pair with `lo ≤ |m| ≤ hi`, in index order.
fn band_modes(grid: &Grid, lo: i64, hi: i64) -> Vec<usize> {
    let (lo2, hi2) = (lo * lo, hi * hi);
    (0..grid.points())
        .filter(|&idx| {
            let m = grid.mode(idx);
            let r2: i64 = m.iter().map(|x| x * x).sum();
            !grid.is_nyquist(idx) && r2 >= lo2 && r2 <= hi2 && grid.conjugate_index(idx) > idx
        })
        .collect()
}

fn unit_complex(r: &mut ChaCha8Rng) -> Complex64 {
    loop {
        let z = Complex64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
        if z.norm_sqr() <= 1.0 {
            return z;
        }
    }
}

/// Base amplitudes `(idx, [c; 3])` of the shared pattern.
type Pattern = Vec<(usize, [Complex64; 3])>;

fn random_pattern(grid: &Grid, seed: u64, purpose: Purpose, lo: i64, hi: i64) -> Pattern {
    let mut r = rng(seed, purpose, BASE_STREAM);
    band_modes(grid, lo, hi)
        .into_iter()
        .map(|idx| {
            let mut amp = [Complex64::new(0.0, 0.0); 3];
            for a in amp.iter_mut().take(grid.dim()) {
                *a = unit_complex(&mut r);
            }
            (idx, amp)
        })
        .collect()
}

fn shear_pattern(grid: &Grid, k: i64) -> Result<Pattern> {
    let idx = grid
        .index_of([0, k, 0])
        .ok_or_else(|| Error::config(format!("shear mode {k} is not representable")))?;
    let z = Complex64::new(0.0, 0.0);
    Ok(vec![(idx, [Complex64::new(0.0, -0.5), z, z])])
}

/// Applies member `j`'s jitter, projects and rescales to `(1/|Ω|)‖·‖² = target²`.
fn realize(
    grid: &Arc<Grid>,
    pattern: &Pattern,
    delta: f64,
    mut r: ChaCha8Rng,
    target: f64,
) -> Result<SpectralField> {
    let modes: Vec<([i64; 3], [Complex64; 3])> = pattern
        .iter()
        .map(|(idx, amp)| {
            let scale = 1.0 + delta * r.gen_range(-1.0..=1.0);
            let phase = delta * std::f64::consts::PI * r.gen_range(-1.0..=1.0);
            let w = Complex64::from_polar(scale, phase);
            (grid.mode(*idx), amp.map(|a| a * w))
        })
        .collect();
    let raw = leray_project(&SpectralField::from_modes(grid, &modes)?);
    let ms = mean_square(&raw);
    if target == 0.0 {
        return Ok(SpectralField::zeros(grid));
    }
    if !(ms > 0.0) {
        return Err(Error::config("perturbation band carries no solenoidal modes"));
    }
    Ok(raw.scaled(target / ms.sqrt()))
}

/// Time-independent body force of member `j`.
pub fn make_body_force(spec: &PerturbationSpec, j: usize, grid: &Arc<Grid>) -> Result<SpectralField> {
    spec.validate(grid)?;
    let pattern = match spec.pattern {
        ForcingPattern::RandomBand => random_pattern(grid, spec.seed, Purpose::Force, spec.k_min, spec.k_max),
        ForcingPattern::Shear => shear_pattern(grid, spec.k_min)?,
    };
    if pattern.is_empty() {
        return Err(Error::config(format!("forcing band [{}, {}] holds no modes", spec.k_min, spec.k_max)));
    }
    realize(grid, &pattern, spec.delta, rng(spec.seed, Purpose::Force, j as u64), spec.base_amplitude)
}

/// Initial velocity of member `j`.
pub fn make_initial_condition(spec: &PerturbationSpec, j: usize, grid: &Arc<Grid>) -> Result<SpectralField> {
    spec.validate(grid)?;
    let hi = spec.ic_k_max.unwrap_or(spec.k_max);
    let pattern = random_pattern(grid, spec.seed, Purpose::Initial, 1, hi);
    if pattern.is_empty() {
        return Err(Error::config(format!("initial-condition band [1, {hi}] holds no modes")));
    }
    realize(grid, &pattern, spec.delta, rng(spec.seed, Purpose::Initial, j as u64), spec.ic_amplitude)
}

/// Scales of the body force.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForcingScales {
    /// `F = ⟨(1/|Ω|)‖f‖²⟩ₑ^{1/2}`
    pub f: f64,
    /// `max_j max_x |∇f_j(x)|` on the collocation grid.
    pub grad_f_inf: f64,
    /// `⟨(1/|Ω|)‖∇f‖²⟩ₑ^{1/2}`
    pub grad_f_l2: f64,
    /// `L = min(L_Ω, F/grad_f_inf, F/grad_f_l2)`
    pub l: f64,
    pub unforced: bool,
}

pub fn forcing_scales(forces: &[SpectralField]) -> Result<ForcingScales> {
    let first = forces.first().ok_or_else(|| Error::config("forcing_scales needs at least one force"))?;
    let box_len = first.grid().spec().box_len;
    let inv_j = 1.0 / forces.len() as f64;
    let mut f2 = 0.0;
    let mut g2 = 0.0;
    let mut ginf: f64 = 0.0;
    for f in forces {
        first.check_grid(f)?;
        f2 += inv_j * mean_square(f);
        let gr = tensor_to_physical(&gradient(f)).frobenius_sq();
        g2 += inv_j * gr.mean();
        ginf = ginf.max(gr.max().sqrt());
    }
    let f = f2.sqrt();
    if f == 0.0 {
        return Ok(ForcingScales { f: 0.0, grad_f_inf: 0.0, grad_f_l2: 0.0, l: box_len, unforced: true });
    }
    let g2 = g2.sqrt();
    let l = box_len.min(f / ginf).min(f / g2);
    Ok(ForcingScales { f, grad_f_inf: ginf, grad_f_l2: g2, l, unforced: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{to_physical, GridSpec};
    use std::f64::consts::PI;

    fn grid(dim: usize, n: usize) -> Arc<Grid> {
        Grid::new(GridSpec::new(dim, n, 2.0 * PI)).unwrap()
    }

    fn spec(delta: f64) -> PerturbationSpec {
        PerturbationSpec::new(17, delta, 2, 4, 1.5)
    }

    #[test]
    fn zero_jitter_gives_identical_members() {
        let g = grid(2, 32);
        let s = spec(0.0);
        let f0 = make_body_force(&s, 0, &g).unwrap();
        let u0 = make_initial_condition(&s, 0, &g).unwrap();
        for j in 1..4 {
            assert_eq!(make_body_force(&s, j, &g).unwrap().components(), f0.components());
            assert_eq!(make_initial_condition(&s, j, &g).unwrap().components(), u0.components());
        }
    }

    #[test]
    fn jitter_separates_members_deterministically() {
        let g = grid(2, 32);
        let s = spec(0.2);
        let a = make_body_force(&s, 1, &g).unwrap();
        let b = make_body_force(&s, 1, &g).unwrap();
        assert_eq!(a.components(), b.components());
        let c = make_body_force(&s, 2, &g).unwrap();
        assert!(a.sub(&c).unwrap().max_coefficient() > 1e-3);
        let u1 = make_initial_condition(&s, 1, &g).unwrap();
        let u2 = make_initial_condition(&s, 2, &g).unwrap();
        assert!(u1.sub(&u2).unwrap().max_coefficient() > 1e-3);
        assert!(a.sub(&u1).unwrap().max_coefficient() > 1e-3);
    }

    #[test]
    fn generated_fields_satisfy_invariants() {
        for dim in [2, 3] {
            let g = grid(dim, 16);
            let s = PerturbationSpec::new(3, 0.3, 1, 3, 2.0);
            for j in 0..3 {
                for f in [make_body_force(&s, j, &g).unwrap(), make_initial_condition(&s, j, &g).unwrap()] {
                    assert!(f.is_divergence_free() && f.divergence_defect() <= 1e-12);
                    assert!(f.is_dealiased());
                    assert!(f.hermitian_defect() <= 1e-15);
                    assert!(f.components().iter().all(|c| c[0] == Complex64::new(0.0, 0.0)));
                }
                let f = make_body_force(&s, j, &g).unwrap();
                assert!((mean_square(&f) - 4.0).abs() <= 1e-13);
                for idx in 0..g.points() {
                    let m = g.mode(idx);
                    let r2: i64 = m.iter().map(|x| x * x).sum();
                    if !(1..=9).contains(&r2) {
                        assert!(f.components().iter().all(|c| c[idx] == Complex64::new(0.0, 0.0)));
                    }
                }
            }
        }
    }

    #[test]
    fn shear_force_and_its_scales() {
        let g = grid(2, 32);
        let mut s = PerturbationSpec::new(1, 0.0, 1, 1, 2.0);
        s.pattern = ForcingPattern::Shear;
        let f = make_body_force(&s, 0, &g).unwrap();
        let p = to_physical(&f);
        // Normalized to F₀: the pattern F₀ sin y has mean square F₀²/2, so it is scaled by √2.
        for idx in 0..g.points() {
            let y = g.point(idx)[1];
            assert!((p.comps[0][idx] - 2.0 * 2f64.sqrt() * y.sin()).abs() < 1e-13);
            assert_eq!(p.comps[1][idx], 0.0);
        }
        let sc = forcing_scales(&[f]).unwrap();
        assert!((sc.f - 2.0).abs() < 1e-14);
    }

    #[test]
    fn scales_of_unit_shear() {
        let g = grid(2, 32);
        let f0 = 3.0;
        let z = Complex64::new(0.0, 0.0);
        let f = SpectralField::from_modes(&g, &[([0, 1, 0], [Complex64::new(0.0, -0.5 * f0), z, z])]).unwrap();
        let sc = forcing_scales(&[f.clone()]).unwrap();
        let r2 = 2f64.sqrt();
        assert!((sc.f - f0 / r2).abs() < 1e-14);
        assert!((sc.grad_f_inf - f0).abs() < 1e-14);
        assert!((sc.grad_f_l2 - f0 / r2).abs() < 1e-14);
        assert!((sc.l - 1.0 / r2).abs() < 1e-14);
        assert!(!sc.unforced);

        let scaled = forcing_scales(&[f.scaled(2.5)]).unwrap();
        assert!((scaled.f - 2.5 * sc.f).abs() < 1e-13);
        assert!((scaled.l - sc.l).abs() < 1e-14);
    }

    #[test]
    fn scale_inequalities_hold_for_random_ensembles() {
        let g = grid(2, 32);
        for seed in 0..5 {
            let s = PerturbationSpec::new(seed, 0.4, 1, 5, 0.7);
            let forces: Vec<_> = (0..4).map(|j| make_body_force(&s, j, &g).unwrap()).collect();
            let sc = forcing_scales(&forces).unwrap();
            assert!((sc.f - 0.7).abs() < 1e-13);
            assert!(sc.grad_f_inf <= sc.f / sc.l * (1.0 + 1e-15));
            assert!(sc.grad_f_l2 <= sc.f / sc.l * (1.0 + 1e-15));
            assert!(sc.l > 0.0 && sc.l <= 2.0 * PI);
        }
    }

    #[test]
    fn zero_forcing_is_flagged() {
        let g = grid(2, 16);
        let sc = forcing_scales(&[SpectralField::zeros(&g), SpectralField::zeros(&g)]).unwrap();
        assert_eq!(sc, ForcingScales { f: 0.0, grad_f_inf: 0.0, grad_f_l2: 0.0, l: 2.0 * PI, unforced: true });
        let mut s = spec(0.0);
        s.base_amplitude = 0.0;
        assert_eq!(make_body_force(&s, 0, &g).unwrap().max_coefficient(), 0.0);
    }

    #[test]
    fn invalid_bands_are_rejected() {
        let g = grid(2, 16);
        assert!(make_body_force(&PerturbationSpec::new(1, 0.0, 0, 2, 1.0), 0, &g).is_err());
        assert!(make_body_force(&PerturbationSpec::new(1, 0.0, 3, 2, 1.0), 0, &g).is_err());
        assert!(make_body_force(&PerturbationSpec::new(1, 0.0, 1, 6, 1.0), 0, &g).is_err());
        assert!(make_body_force(&PerturbationSpec::new(1, -0.1, 1, 2, 1.0), 0, &g).is_err());
    }
}
