use num_complex::Complex64;

use super::field::{
    clear_unrepresentable, forward_real, tensor_to_physical, to_physical, PhysicalTensor,
    PhysicalVector, SpectralField, SpectralTensor,
};
use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `(∇f)_{ij} = ∂_j f_i`, coefficients `i k_j f̂_i`.
pub fn gradient(f: &SpectralField) -> SpectralTensor {
    let grid = f.grid();
    let dim = grid.dim();
    let mut comps = Vec::with_capacity(dim * dim);
    for i in 0..dim {
        let fi = f.component(i);
        for j in 0..dim {
            let c: Vec<Complex64> =
                fi.iter().enumerate().map(|(idx, v)| I * grid.wavevector(idx)[j] * v).collect();
            comps.push(c);
        }
    }
    SpectralTensor { grid: grid.clone(), comps }
}

/// `(∇·T)_i = Σ_j ∂_j T_ij` for a tensor given in spectral space.
pub(crate) fn divergence_coeffs(grid: &super::Grid, tensor: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    let dim = grid.dim();
    (0..dim)
        .map(|i| {
            let mut out = vec![ZERO; grid.points()];
            for j in 0..dim {
                for (idx, o) in out.iter_mut().enumerate() {
                    *o += I * grid.wavevector(idx)[j] * tensor[i * dim + j][idx];
                }
            }
            out
        })
        .collect()
}

/// Orthogonal projection onto solenoidal fields: `û ← û − k(k·û)/|k|²`.
pub fn leray_project(f: &SpectralField) -> SpectralField {
    let mut out = f.clone();
    leray_in_place(&mut out);
    out
}

pub(crate) fn leray_in_place(f: &mut SpectralField) {
    let grid = f.grid().clone();
    let dim = grid.dim();
    let dealiased = f.is_dealiased();
    let comps = f.comps_mut();
    for idx in 1..grid.points() {
        let ksq = grid.k_sq(idx);
        if ksq == 0.0 {
            continue;
        }
        let k = grid.wavevector(idx);
        let mut dot = ZERO;
        for (i, c) in comps.iter().enumerate().take(dim) {
            dot += c[idx] * k[i];
        }
        let s = dot / ksq;
        for (i, c) in comps.iter_mut().enumerate().take(dim) {
            c[idx] -= s * k[i];
        }
    }
    for c in comps.iter_mut() {
        c[0] = ZERO;
    }
    f.set_flags(true, dealiased);
}

/// Zeros every coefficient outside the retained band `|m_i| ≤ fraction·n/2`.
pub fn dealias(f: &SpectralField) -> SpectralField {
    let mut out = f.clone();
    let divergence_free = f.is_divergence_free();
    let grid = f.grid().clone();
    for c in out.comps_mut() {
        mask_in_place(&grid, c);
    }
    out.set_flags(divergence_free, true);
    out
}

pub(crate) fn mask_in_place(grid: &super::Grid, c: &mut [Complex64]) {
    for (idx, v) in c.iter_mut().enumerate() {
        if !grid.is_retained(idx) {
            *v = ZERO;
        }
    }
}

/// Spectral Laplacian `Δf`, coefficients `−|k|² f̂`.
pub fn laplacian(f: &SpectralField) -> SpectralField {
    let grid = f.grid().clone();
    let comps = f
        .components()
        .iter()
        .map(|c| c.iter().enumerate().map(|(idx, v)| v * -grid.k_sq(idx)).collect())
        .collect();
    SpectralField::from_parts(grid, comps, f.is_divergence_free(), f.is_dealiased())
}

/// `‖f‖² = ∫_Ω |f|² dx`, evaluated with Parseval.
pub fn l2_norm_sq(f: &SpectralField) -> f64 {
    mean_square(f) * f.grid().spec().volume()
}

/// `(1/|Ω|) ‖f‖²`.
pub fn mean_square(f: &SpectralField) -> f64 {
    f.components().iter().flat_map(|c| c.iter()).map(|v| v.norm_sqr()).sum()
}

/// `(f, g) = ∫_Ω f·g dx`.
pub fn inner(f: &SpectralField, g: &SpectralField) -> Result<f64> {
    Ok(mean_inner(f, g)? * f.grid().spec().volume())
}

/// `(1/|Ω|) (f, g)`.
pub fn mean_inner(f: &SpectralField, g: &SpectralField) -> Result<f64> {
    f.check_grid(g)?;
    let mut s = 0.0;
    for (a, b) in f.components().iter().zip(g.components()) {
        for (x, y) in a.iter().zip(b) {
            s += (x * y.conj()).re;
        }
    }
    Ok(s)
}

/// `‖f‖_{L∞}` as the maximum pointwise magnitude on the collocation grid.
pub fn linf_norm(f: &SpectralField) -> f64 {
    physical_linf(&to_physical(f))
}

pub fn physical_linf(p: &PhysicalVector) -> f64 {
    p.magnitude_sq().values.iter().copied().fold(0.0, f64::max).sqrt()
}

/// Skew-symmetric advection `½[(u·∇)u + ∇·(u⊗u)]`, products formed on the
/// grid and dealiased. The result is not projected.
pub fn nonlinear_term(u: &SpectralField) -> Result<SpectralField> {
    if !u.is_divergence_free() {
        return Err(Error::contract(format!(
            "nonlinear_term requires a divergence-free field (defect {:.3e})",
            u.divergence_defect()
        )));
    }
    if !u.is_dealiased() {
        return Err(Error::contract("nonlinear_term requires a dealiased field".to_string()));
    }
    let phys = to_physical(u);
    let grad = tensor_to_physical(&gradient(u));
    let grid = u.grid().clone();
    let dim = grid.dim();
    let npts = grid.points();
    let advective = advective_physical(&phys, &grad);
    let mut flux = vec![vec![0.0; npts]; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            let (a, b) = (&phys.comps[i], &phys.comps[j]);
            for (p, out) in flux[i * dim + j].iter_mut().enumerate() {
                *out = a[p] * b[p];
            }
        }
    }
    let flux_hat: Vec<Vec<Complex64>> = flux.iter().map(|c| forward_real(&grid, c)).collect();
    let div = divergence_coeffs(&grid, &flux_hat);
    let mut comps = Vec::with_capacity(dim);
    for (i, d) in div.into_iter().enumerate() {
        let conv = forward_real(&grid, &advective[i]);
        let mut c: Vec<Complex64> = conv.iter().zip(&d).map(|(a, b)| 0.5 * (a + b)).collect();
        clear_unrepresentable(&grid, &mut c);
        mask_in_place(&grid, &mut c);
        comps.push(c);
    }
    Ok(SpectralField::from_parts(grid, comps, false, true))
}

/// `(u·∇)u_i = Σ_j u_j ∂_j u_i` on the grid.
pub(crate) fn advective_physical(u: &PhysicalVector, grad: &PhysicalTensor) -> Vec<Vec<f64>> {
    let dim = u.comps.len();
    let npts = u.comps[0].len();
    (0..dim)
        .map(|i| {
            let mut out = vec![0.0; npts];
            for j in 0..dim {
                let uj = &u.comps[j];
                let dij = grad.entry(i, j);
                for p in 0..npts {
                    out[p] += uj[p] * dij[p];
                }
            }
            out
        })
        .collect()
}
