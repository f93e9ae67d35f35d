use std::sync::Arc;

use num_complex::Complex64;

use super::grid::Grid;
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Relative tolerance used when inspecting a field for solenoidality.
pub const DIVERGENCE_TOL: f64 = 1e-12;

/// A real, mean-zero periodic vector field stored as Fourier coefficients
/// `û_i(k)` with `u_i(x) = Σ_k û_i(k) e^{ik·x}`.
///
/// The zero mode and the Nyquist modes are always exactly zero. The two flags
/// are kept truthful: constructors inspect the data, and operations set them
/// only when the property holds by construction.
#[derive(Clone)]
pub struct SpectralField {
    grid: Arc<Grid>,
    comps: Vec<Vec<Complex64>>,
    divergence_free: bool,
    dealiased: bool,
}

impl std::fmt::Debug for SpectralField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralField")
            .field("grid", self.grid.spec())
            .field("divergence_free", &self.divergence_free)
            .field("dealiased", &self.dealiased)
            .finish()
    }
}

impl SpectralField {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        let comps = vec![vec![ZERO; grid.points()]; grid.dim()];
        Self { grid: grid.clone(), comps, divergence_free: true, dealiased: true }
    }

    /// Builds a field from raw coefficient arrays. The zero and Nyquist modes
    /// are cleared; the flags are determined by inspection.
    pub fn from_components(grid: &Arc<Grid>, mut comps: Vec<Vec<Complex64>>) -> Result<Self> {
        if comps.len() != grid.dim() {
            return Err(Error::config(format!(
                "expected {} components, got {}",
                grid.dim(),
                comps.len()
            )));
        }
        if let Some(c) = comps.iter().find(|c| c.len() != grid.points()) {
            return Err(Error::config(format!(
                "component has {} coefficients, grid has {}",
                c.len(),
                grid.points()
            )));
        }
        for c in comps.iter_mut() {
            clear_unrepresentable(grid, c);
        }
        Ok(Self::inspected(grid.clone(), comps))
    }

    pub(crate) fn inspected(grid: Arc<Grid>, comps: Vec<Vec<Complex64>>) -> Self {
        let mut f = Self { grid, comps, divergence_free: false, dealiased: false };
        f.divergence_free = f.divergence_defect() <= DIVERGENCE_TOL;
        f.dealiased = f.is_mask_clean();
        f
    }

    pub(crate) fn from_parts(
        grid: Arc<Grid>,
        comps: Vec<Vec<Complex64>>,
        divergence_free: bool,
        dealiased: bool,
    ) -> Self {
        Self { grid, comps, divergence_free, dealiased }
    }

    /// Sums `Σ_m c_m e^{i k_m·x}` over explicit modes, adding the conjugate
    /// partner of every entry so the field is real.
    pub fn from_modes(grid: &Arc<Grid>, modes: &[([i64; 3], [Complex64; 3])]) -> Result<Self> {
        let mut comps = vec![vec![ZERO; grid.points()]; grid.dim()];
        for (m, amp) in modes {
            let idx = grid
                .index_of(*m)
                .ok_or_else(|| Error::config(format!("mode {m:?} is not representable on the grid")))?;
            let conj = grid.conjugate_index(idx);
            for (i, comp) in comps.iter_mut().enumerate() {
                comp[idx] += amp[i];
                comp[conj] += amp[i].conj();
            }
        }
        Self::from_components(grid, comps)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn component(&self, i: usize) -> &[Complex64] {
        &self.comps[i]
    }

    pub fn components(&self) -> &[Vec<Complex64>] {
        &self.comps
    }

    pub fn into_components(self) -> Vec<Vec<Complex64>> {
        self.comps
    }

    pub fn is_divergence_free(&self) -> bool {
        self.divergence_free
    }

    pub fn is_dealiased(&self) -> bool {
        self.dealiased
    }

    /// Largest `|k·û(k)| / |k|` over nonzero modes, relative to the largest
    /// coefficient magnitude of the field (zero for the zero field).
    pub fn divergence_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        let mut biggest: f64 = 0.0;
        for idx in 0..self.grid.points() {
            let k = self.grid.wavevector(idx);
            let mut dot = ZERO;
            let mut mag = 0.0;
            for (i, c) in self.comps.iter().enumerate() {
                dot += c[idx] * k[i];
                mag += c[idx].norm_sqr();
            }
            biggest = biggest.max(mag.sqrt());
            if mag > 0.0 {
                worst = worst.max(dot.norm() / self.grid.k_sq(idx).sqrt());
            }
        }
        if biggest > 0.0 {
            worst / biggest
        } else {
            0.0
        }
    }

    /// Largest `|û(-k) - conj(û(k))|` over all modes and components.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for c in &self.comps {
            for idx in 0..self.grid.points() {
                let j = self.grid.conjugate_index(idx);
                worst = worst.max((c[j] - c[idx].conj()).norm());
            }
        }
        worst
    }

    fn is_mask_clean(&self) -> bool {
        self.comps.iter().all(|c| {
            c.iter().enumerate().all(|(idx, v)| self.grid.is_retained(idx) || *v == ZERO)
        })
    }

    pub fn max_coefficient(&self) -> f64 {
        self.comps.iter().flat_map(|c| c.iter()).fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn scaled(&self, a: f64) -> Self {
        let comps = self.comps.iter().map(|c| c.iter().map(|v| v * a).collect()).collect();
        Self::from_parts(self.grid.clone(), comps, self.divergence_free, self.dealiased)
    }

    /// `self += a * other`.
    pub fn add_scaled(&mut self, a: f64, other: &SpectralField) -> Result<()> {
        self.check_grid(other)?;
        for (c, o) in self.comps.iter_mut().zip(&other.comps) {
            for (v, w) in c.iter_mut().zip(o) {
                *v += w * a;
            }
        }
        self.divergence_free &= other.divergence_free;
        self.dealiased &= other.dealiased;
        Ok(())
    }

    pub fn sub(&self, other: &SpectralField) -> Result<SpectralField> {
        let mut out = self.clone();
        out.add_scaled(-1.0, other)?;
        Ok(out)
    }

    pub fn check_grid(&self, other: &SpectralField) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub(crate) fn comps_mut(&mut self) -> &mut [Vec<Complex64>] {
        &mut self.comps
    }

    pub(crate) fn set_flags(&mut self, divergence_free: bool, dealiased: bool) {
        self.divergence_free = divergence_free;
        self.dealiased = dealiased;
    }
}

pub(crate) fn clear_unrepresentable(grid: &Grid, c: &mut [Complex64]) {
    c[0] = ZERO;
    for (idx, v) in c.iter_mut().enumerate() {
        if grid.is_nyquist(idx) {
            *v = ZERO;
        }
    }
}

/// Gradient tensor in spectral space; entry `(i, j)` holds `∂_j f_i`.
#[derive(Clone)]
pub struct SpectralTensor {
    pub(crate) grid: Arc<Grid>,
    pub(crate) comps: Vec<Vec<Complex64>>,
}

impl SpectralTensor {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn entry(&self, i: usize, j: usize) -> &[Complex64] {
        &self.comps[i * self.grid.dim() + j]
    }
}

/// Real scalar samples on the collocation grid.
#[derive(Debug, Clone)]
pub struct PhysicalScalar {
    pub(crate) grid: Arc<Grid>,
    pub values: Vec<f64>,
}

impl PhysicalScalar {
    pub fn new(grid: &Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.points() {
            return Err(Error::config(format!(
                "scalar has {} samples, grid has {}",
                values.len(),
                grid.points()
            )));
        }
        Ok(Self { grid: grid.clone(), values })
    }

    pub fn constant(grid: &Arc<Grid>, c: f64) -> Self {
        Self { grid: grid.clone(), values: vec![c; grid.points()] }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Grid quadrature of `(1/|Ω|) ∫ φ dx`.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// Real vector samples on the collocation grid.
#[derive(Debug, Clone)]
pub struct PhysicalVector {
    pub(crate) grid: Arc<Grid>,
    pub comps: Vec<Vec<f64>>,
}

impl PhysicalVector {
    pub fn new(grid: &Arc<Grid>, comps: Vec<Vec<f64>>) -> Result<Self> {
        if comps.len() != grid.dim() || comps.iter().any(|c| c.len() != grid.points()) {
            return Err(Error::config("physical vector shape does not match grid".to_string()));
        }
        Ok(Self { grid: grid.clone(), comps })
    }

    /// Samples `g(x)` at every collocation point.
    pub fn from_fn(grid: &Arc<Grid>, g: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let mut comps = vec![vec![0.0; grid.points()]; grid.dim()];
        for idx in 0..grid.points() {
            let v = g(grid.point(idx));
            for (i, c) in comps.iter_mut().enumerate() {
                c[idx] = v[i];
            }
        }
        Self { grid: grid.clone(), comps }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// Pointwise `|g(x)|²`.
    pub fn magnitude_sq(&self) -> PhysicalScalar {
        let mut out = vec![0.0; self.grid.points()];
        for c in &self.comps {
            for (o, v) in out.iter_mut().zip(c) {
                *o += v * v;
            }
        }
        PhysicalScalar { grid: self.grid.clone(), values: out }
    }
}

/// Real rank-2 tensor samples on the grid; entry `(i, j)` at `comps[i*dim + j]`.
#[derive(Debug, Clone)]
pub struct PhysicalTensor {
    pub(crate) grid: Arc<Grid>,
    pub comps: Vec<Vec<f64>>,
}

impl PhysicalTensor {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn entry(&self, i: usize, j: usize) -> &[f64] {
        &self.comps[i * self.grid.dim() + j]
    }

    /// Pointwise Frobenius norm squared `|∇u|² = Σ_ij (∂_j u_i)²`.
    pub fn frobenius_sq(&self) -> PhysicalScalar {
        let mut out = vec![0.0; self.grid.points()];
        for c in &self.comps {
            for (o, v) in out.iter_mut().zip(c) {
                *o += v * v;
            }
        }
        PhysicalScalar { grid: self.grid.clone(), values: out }
    }
}

pub(crate) fn inverse_real(grid: &Grid, coeffs: &[Complex64]) -> Vec<f64> {
    let mut buf = coeffs.to_vec();
    grid.inverse(&mut buf);
    buf.into_iter().map(|c| c.re).collect()
}

pub(crate) fn forward_real(grid: &Grid, values: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    grid.forward(&mut buf);
    buf
}

/// Evaluates the field on the collocation grid.
pub fn to_physical(f: &SpectralField) -> PhysicalVector {
    let comps = f.comps.iter().map(|c| inverse_real(&f.grid, c)).collect();
    PhysicalVector { grid: f.grid.clone(), comps }
}

/// Transforms grid samples to Fourier coefficients. The mean and the Nyquist
/// modes are dropped.
pub fn to_spectral(g: &PhysicalVector) -> SpectralField {
    let comps = g
        .comps
        .iter()
        .map(|c| {
            let mut s = forward_real(&g.grid, c);
            clear_unrepresentable(&g.grid, &mut s);
            s
        })
        .collect();
    SpectralField::inspected(g.grid.clone(), comps)
}

pub fn tensor_to_physical(t: &SpectralTensor) -> PhysicalTensor {
    let comps = t.comps.iter().map(|c| inverse_real(&t.grid, c)).collect();
    PhysicalTensor { grid: t.grid.clone(), comps }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::GridSpec;
    use std::f64::consts::PI;

    fn grid(dim: usize, n: usize) -> Arc<Grid> {
        Grid::new(GridSpec::new(dim, n, 2.0 * PI)).unwrap()
    }

    #[test]
    fn single_mode_round_trip() {
        let g = grid(2, 16);
        let one = Complex64::new(1.0, 0.0);
        let f = SpectralField::from_modes(&g, &[([0, 1, 0], [one, ZERO, ZERO])]).unwrap();
        let p = to_physical(&f);
        for idx in 0..g.points() {
            let x = g.point(idx);
            assert!((p.comps[0][idx] - 2.0 * x[1].cos()).abs() < 1e-14);
            assert_eq!(p.comps[1][idx], 0.0);
        }
        let back = to_spectral(&p);
        for (a, b) in back.component(0).iter().zip(f.component(0)) {
            assert!((a - b).norm() < 1e-15);
        }
        assert!(back.is_divergence_free());
    }

    #[test]
    fn zero_field_round_trip() {
        let g = grid(3, 8);
        let z = SpectralField::zeros(&g);
        let p = to_physical(&z);
        assert!(p.comps.iter().all(|c| c.iter().all(|&v| v == 0.0)));
        assert_eq!(to_spectral(&p).max_coefficient(), 0.0);
    }

    #[test]
    fn shape_mismatch_is_config_error() {
        let g = grid(2, 8);
        assert!(matches!(
            SpectralField::from_components(&g, vec![vec![ZERO; 64]]),
            Err(Error::Config(_))
        ));
        assert!(PhysicalVector::new(&g, vec![vec![0.0; 10]; 2]).is_err());
        assert!(PhysicalScalar::new(&g, vec![0.0; 63]).is_err());
    }

    #[test]
    fn mean_and_nyquist_are_dropped() {
        let g = grid(2, 8);
        let p = PhysicalVector::from_fn(&g, |x| [1.0 + (4.0 * x[0]).cos(), 0.0, 0.0]);
        let s = to_spectral(&p);
        assert!(s.max_coefficient() < 1e-15);
    }

    #[test]
    fn flags_reflect_content() {
        let g = grid(2, 16);
        let one = Complex64::new(1.0, 0.0);
        let solenoidal = SpectralField::from_modes(&g, &[([0, 1, 0], [one, ZERO, ZERO])]).unwrap();
        assert!(solenoidal.is_divergence_free());
        let gradient = SpectralField::from_modes(&g, &[([1, 0, 0], [one, ZERO, ZERO])]).unwrap();
        assert!(!gradient.is_divergence_free());
        let high = SpectralField::from_modes(&g, &[([0, 7, 0], [one, ZERO, ZERO])]).unwrap();
        assert!(!high.is_dealiased());
    }
}
