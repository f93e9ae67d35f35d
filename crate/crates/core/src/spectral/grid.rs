use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Geometry of the periodic box `(0, box_len)^dim` sampled on `n` points per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dim: usize,
    pub n: usize,
    pub box_len: f64,
    #[serde(default = "default_dealias")]
    pub dealias_fraction: f64,
}

fn default_dealias() -> f64 {
    2.0 / 3.0
}

impl GridSpec {
    pub fn new(dim: usize, n: usize, box_len: f64) -> Self {
        Self { dim, n, box_len, dealias_fraction: default_dealias() }
    }

    pub fn with_dealias(mut self, fraction: f64) -> Self {
        self.dealias_fraction = fraction;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dim == 2 || self.dim == 3) {
            return Err(Error::config(format!("grid.dim must be 2 or 3, got {}", self.dim)));
        }
        if self.n < 8 || self.n % 2 != 0 {
            return Err(Error::config(format!("grid.n must be even and >= 8, got {}", self.n)));
        }
        if !(self.box_len.is_finite() && self.box_len > 0.0) {
            return Err(Error::config(format!("grid.box_len must be > 0, got {}", self.box_len)));
        }
        if !(self.dealias_fraction > 0.0 && self.dealias_fraction <= 1.0) {
            return Err(Error::config(format!(
                "grid.dealias_fraction must lie in (0, 1], got {}",
                self.dealias_fraction
            )));
        }
        Ok(())
    }

    /// Number of collocation points, `n^dim`.
    pub fn points(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn dx(&self) -> f64 {
        self.box_len / self.n as f64
    }

    /// `|Ω| = box_len^dim`.
    pub fn volume(&self) -> f64 {
        self.box_len.powi(self.dim as i32)
    }

    /// Largest retained integer mode index along any axis after dealiasing.
    pub fn dealias_cutoff(&self) -> i64 {
        (self.dealias_fraction * (self.n / 2) as f64 + 1e-12).floor() as i64
    }
}

/// A validated grid together with its wavevector tables and FFT plans.
///
/// Fields share a grid through `Arc<Grid>`; two fields are compatible iff
/// their `GridSpec`s compare equal.
pub struct Grid {
    spec: GridSpec,
    modes: Vec<[i64; 3]>,
    wavevectors: Vec<[f64; 3]>,
    k_sq: Vec<f64>,
    retained: Vec<bool>,
    nyquist: Vec<bool>,
    transform: Transform,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid").field("spec", &self.spec).finish()
    }
}

impl Grid {
    pub fn new(spec: GridSpec) -> Result<Arc<Grid>> {
        spec.validate()?;
        let n = spec.n;
        let total = spec.points();
        let cutoff = spec.dealias_cutoff();
        let k0 = 2.0 * PI / spec.box_len;
        let mut modes = Vec::with_capacity(total);
        let mut wavevectors = Vec::with_capacity(total);
        let mut k_sq = Vec::with_capacity(total);
        let mut retained = Vec::with_capacity(total);
        let mut nyquist = Vec::with_capacity(total);
        for flat in 0..total {
            let idx = unflatten(flat, n, spec.dim);
            let mut m = [0i64; 3];
            let mut k = [0.0; 3];
            let mut is_nyq = false;
            for a in 0..spec.dim {
                let i = idx[a] as i64;
                let half = (n / 2) as i64;
                m[a] = if i < half { i } else if i == half { half } else { i - n as i64 };
                is_nyq |= i == half;
                k[a] = k0 * m[a] as f64;
            }
            let keep = !is_nyq && m.iter().all(|mi| mi.abs() <= cutoff);
            modes.push(m);
            wavevectors.push(k);
            k_sq.push(k.iter().map(|x| x * x).sum());
            retained.push(keep);
            nyquist.push(is_nyq);
        }
        Ok(Arc::new(Grid {
            spec,
            modes,
            wavevectors,
            k_sq,
            retained,
            nyquist,
            transform: Transform::new(n, spec.dim),
        }))
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    pub fn n(&self) -> usize {
        self.spec.n
    }

    pub fn points(&self) -> usize {
        self.modes.len()
    }

    /// Integer mode vector `m` at a flat spectral index (unused axes are zero).
    pub fn mode(&self, flat: usize) -> [i64; 3] {
        self.modes[flat]
    }

    /// Physical wavevector `k = 2π m / L_Ω`.
    pub fn wavevector(&self, flat: usize) -> [f64; 3] {
        self.wavevectors[flat]
    }

    pub fn k_sq(&self, flat: usize) -> f64 {
        self.k_sq[flat]
    }

    pub fn k_sq_table(&self) -> &[f64] {
        &self.k_sq
    }

    /// True if the mode survives the dealiasing mask (Nyquist modes never do).
    pub fn is_retained(&self, flat: usize) -> bool {
        self.retained[flat]
    }

    pub fn is_nyquist(&self, flat: usize) -> bool {
        self.nyquist[flat]
    }

    /// Flat index of the mode `-m`.
    pub fn conjugate_index(&self, flat: usize) -> usize {
        let n = self.spec.n;
        let idx = unflatten(flat, n, self.spec.dim);
        let mut out = 0;
        for a in 0..self.spec.dim {
            out = out * n + (n - idx[a]) % n;
        }
        out
    }

    /// Flat index of an integer mode vector, if it lies on the grid.
    pub fn index_of(&self, m: [i64; 3]) -> Option<usize> {
        let n = self.spec.n as i64;
        let mut out = 0usize;
        for &mi in m.iter().take(self.spec.dim) {
            if mi.abs() >= n / 2 {
                return None;
            }
            out = out * n as usize + mi.rem_euclid(n) as usize;
        }
        Some(out)
    }

    /// Physical coordinates of a collocation point.
    pub fn point(&self, flat: usize) -> [f64; 3] {
        let idx = unflatten(flat, self.spec.n, self.spec.dim);
        let dx = self.spec.dx();
        let mut x = [0.0; 3];
        for a in 0..self.spec.dim {
            x[a] = idx[a] as f64 * dx;
        }
        x
    }

    pub(crate) fn forward(&self, data: &mut [Complex64]) {
        self.transform.forward(data);
    }

    pub(crate) fn inverse(&self, data: &mut [Complex64]) {
        self.transform.inverse(data);
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self.spec == other.spec
    }
}

fn unflatten(mut flat: usize, n: usize, dim: usize) -> [usize; 3] {
    let mut idx = [0usize; 3];
    for a in (0..dim).rev() {
        idx[a] = flat % n;
        flat /= n;
    }
    idx
}

/// Multi-dimensional complex FFT built from 1-D `rustfft` plans, row-major
/// layout with the last axis contiguous. The forward transform is normalized
/// by `1/n^dim` so that `u(x) = Σ_k û(k) e^{ik·x}`.
struct Transform {
    n: usize,
    dim: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Transform {
    fn new(n: usize, dim: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { n, dim, fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n) }
    }

    fn forward(&self, data: &mut [Complex64]) {
        self.apply(data, &self.fwd);
        let scale = 1.0 / data.len() as f64;
        for c in data.iter_mut() {
            *c *= scale;
        }
    }

    fn inverse(&self, data: &mut [Complex64]) {
        self.apply(data, &self.inv);
    }

    fn apply(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        let total = data.len();
        debug_assert_eq!(total, n.pow(self.dim as u32));
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        let mut lines: Vec<Complex64> = Vec::new();
        for axis in 0..self.dim {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            if stride == 1 {
                fft.process_with_scratch(data, &mut scratch);
                continue;
            }
            lines.resize(total, Complex64::new(0.0, 0.0));
            let mut line = 0;
            for block in (0..total).step_by(n * stride) {
                for inner in 0..stride {
                    let base = block + inner;
                    let dst = &mut lines[line * n..(line + 1) * n];
                    for (i, d) in dst.iter_mut().enumerate() {
                        *d = data[base + i * stride];
                    }
                    line += 1;
                }
            }
            fft.process_with_scratch(&mut lines, &mut scratch);
            let mut line = 0;
            for block in (0..total).step_by(n * stride) {
                for inner in 0..stride {
                    let base = block + inner;
                    let src = &lines[line * n..(line + 1) * n];
                    for (i, s) in src.iter().enumerate() {
                        data[base + i * stride] = *s;
                    }
                    line += 1;
                }
            }
        }
    }
}
