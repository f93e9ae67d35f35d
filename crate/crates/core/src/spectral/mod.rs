//! Fourier representation of periodic fields on `(0, L_Ω)^d` and the
//! spectral calculus built on it: derivatives, Leray projection, dealiasing,
//! norms and the skew-symmetric advection term.

mod field;
mod grid;
mod ops;

pub use field::{
    tensor_to_physical, to_physical, to_spectral, PhysicalScalar, PhysicalTensor, PhysicalVector,
    SpectralField, SpectralTensor, DIVERGENCE_TOL,
};
pub use grid::{Grid, GridSpec};
pub use ops::{
    dealias, gradient, inner, l2_norm_sq, laplacian, leray_project, linf_norm, mean_inner, mean_square,
    nonlinear_term, physical_linf,
};

pub(crate) use field::{clear_unrepresentable, forward_real};
pub(crate) use ops::{advective_physical, divergence_coeffs, leray_in_place, mask_in_place};

/// Seeded random fields and analytic flows shared by tests and the
/// verification suite.
pub(crate) mod fixtures {
    use std::f64::consts::PI;
    use std::sync::Arc;

    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    /// Random real field with modes `0 < |m_i| ≤ k_max`, optionally projected.
    pub fn random_field(grid: &Arc<Grid>, seed: u64, k_max: i64, solenoidal: bool) -> SpectralField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut modes = Vec::new();
        for idx in 0..grid.points() {
            let m = grid.mode(idx);
            if grid.is_nyquist(idx) || m.iter().all(|&x| x == 0) || m.iter().any(|x| x.abs() > k_max) {
                continue;
            }
            // keep one representative of each ±m pair
            if grid.conjugate_index(idx) < idx {
                continue;
            }
            let mut amp = [Complex64::new(0.0, 0.0); 3];
            for a in amp.iter_mut().take(grid.dim()) {
                *a = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
            modes.push((m, amp));
        }
        let f = SpectralField::from_modes(grid, &modes).unwrap();
        if solenoidal {
            leray_project(&f)
        } else {
            f
        }
    }

    /// `(sin x cos y, −cos x sin y)` on a `2π` box (requires `box_len = 2π`).
    pub fn taylor_green(grid: &Arc<Grid>) -> SpectralField {
        assert!((grid.spec().box_len - 2.0 * PI).abs() < 1e-12);
        to_spectral(&PhysicalVector::from_fn(grid, |x| {
            [x[0].sin() * x[1].cos(), -x[0].cos() * x[1].sin(), 0.0]
        }))
    }
}
