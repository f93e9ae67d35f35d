use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{EnsembleState, ModelParams};
use crate::error::{Error, Result};
use crate::spectral::{
    gradient, mean_inner, mean_square, tensor_to_physical, to_physical, PhysicalTensor, SpectralField,
};

/// Per-member scalars at one sample time. All integrals are `(1/|Ω|)`
/// normalized grid quadratures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemberSample {
    /// `½ (1/|Ω|) ‖u_j‖²`
    pub ke: f64,
    /// `(1/|Ω|) (f_j, u_j)`
    pub power: f64,
    /// `ν (1/|Ω|) ∫ |∇u_j|²`
    pub eps_viscous: f64,
    /// `(1/|Ω|) ∫ ν_turb |∇u_j|²`
    pub eps_turb: f64,
    /// `−(1/|Ω|) (u_j u_j, ∇f_j)`
    pub advect_force: f64,
    /// `ν (1/|Ω|) ∫ ∇u_j : ∇f_j`
    pub viscous_force: f64,
    /// `(1/|Ω|) ∫ ν_turb ∇u_j : ∇f_j`
    pub eddy_force: f64,
    /// `(1/|Ω|) ∫ ν_turb |∇u_j| |∇f_j|`
    pub eddy_force_abs: f64,
}

/// Everything the diagnostics need from one instant of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub members: Vec<MemberSample>,
    /// `(1/|Ω|) ∫ ν_turb`
    pub nu_turb_mean: f64,
    /// `(1/|Ω|) ∫ |u′|²ₑ = ⟨(1/|Ω|)‖u′‖²⟩ₑ`
    pub fluct_ms: f64,
    /// `(1/|Ω|) ∫ ν_turb |∇⟨u⟩ₑ|²`
    pub eps_turb_mean_part: f64,
    /// `⟨(1/|Ω|) ∫ ν_turb |∇u′_j|²⟩ₑ`
    pub eps_turb_fluct_part: f64,
}

impl Sample {
    fn ens(&self, f: impl Fn(&MemberSample) -> f64) -> f64 {
        self.members.iter().map(f).sum::<f64>() / self.members.len() as f64
    }

    pub fn ke_mean(&self) -> f64 {
        self.ens(|m| m.ke)
    }

    pub fn eps_viscous(&self) -> f64 {
        self.ens(|m| m.eps_viscous)
    }

    pub fn eps_turb(&self) -> f64 {
        self.ens(|m| m.eps_turb)
    }

    pub fn eps(&self) -> f64 {
        self.eps_viscous() + self.eps_turb()
    }

    pub fn power(&self) -> f64 {
        self.ens(|m| m.power)
    }

    /// `⟨(1/|Ω|) ‖u‖²⟩ₑ`
    pub fn ms(&self) -> f64 {
        self.ens(|m| 2.0 * m.ke)
    }
}

/// Gradients of the (time-independent) forces, evaluated once per run.
#[derive(Debug, Clone)]
pub struct ForceData {
    forces: Vec<SpectralField>,
    grads: Vec<PhysicalTensor>,
    grad_mag: Vec<Vec<f64>>,
    /// `max_x |∇f_j(x)|` per member.
    pub grad_inf: Vec<f64>,
}

impl ForceData {
    pub fn new(forces: &[SpectralField]) -> Self {
        let grads: Vec<PhysicalTensor> = forces.iter().map(|f| tensor_to_physical(&gradient(f))).collect();
        let grad_mag: Vec<Vec<f64>> =
            grads.iter().map(|g| g.frobenius_sq().values.into_iter().map(f64::sqrt).collect()).collect();
        let grad_inf = grad_mag.iter().map(|m| m.iter().copied().fold(0.0, f64::max)).collect();
        Self { forces: forces.to_vec(), grads, grad_mag, grad_inf }
    }
}

fn grid_mean(values: impl Iterator<Item = f64>, n: usize) -> f64 {
    values.sum::<f64>() / n as f64
}

/// Evaluates every diagnostic scalar of the current state.
pub fn take_sample(state: &EnsembleState, params: &ModelParams, forces: &ForceData) -> Result<Sample> {
    let j = state.ensemble_size();
    if forces.forces.len() != j {
        return Err(Error::config(format!("{} force gradients for {j} members", forces.forces.len())));
    }
    let grid = state.grid().clone();
    let npts = grid.points();
    let dim = grid.dim();
    let nt = &state.stats.nu_turb.values;
    let grads: Vec<PhysicalTensor> = state.members.par_iter().map(|u| tensor_to_physical(&gradient(u))).collect();

    let members: Vec<MemberSample> = (0..j)
        .into_par_iter()
        .map(|m| -> Result<MemberSample> {
            let u = &state.members[m];
            let phys = to_physical(u);
            let g = &grads[m];
            let gf = &forces.grads[m];
            let gmag = &forces.grad_mag[m];
            let mut visc = 0.0;
            let mut turb = 0.0;
            let mut adv = 0.0;
            let mut vf = 0.0;
            let mut ef = 0.0;
            let mut efa = 0.0;
            for p in 0..npts {
                let mut gu2 = 0.0;
                let mut gu_gf = 0.0;
                let mut uu_gf = 0.0;
                for a in 0..dim {
                    for b in 0..dim {
                        let gab = g.comps[a * dim + b][p];
                        let fab = gf.comps[a * dim + b][p];
                        gu2 += gab * gab;
                        gu_gf += gab * fab;
                        uu_gf += phys.comps[a][p] * phys.comps[b][p] * fab;
                    }
                }
                visc += gu2;
                turb += nt[p] * gu2;
                adv += uu_gf;
                vf += gu_gf;
                ef += nt[p] * gu_gf;
                efa += nt[p] * gu2.sqrt() * gmag[p];
            }
            let inv = 1.0 / npts as f64;
            Ok(MemberSample {
                ke: 0.5 * mean_square(u),
                power: mean_inner(&forces.forces[m], u)?,
                eps_viscous: params.nu * visc * inv,
                eps_turb: turb * inv,
                advect_force: -adv * inv,
                viscous_force: params.nu * vf * inv,
                eddy_force: ef * inv,
                eddy_force_abs: efa * inv,
            })
        })
        .collect::<Result<_>>()?;

    // Gradient of the mean is the mean of the gradients on the grid.
    let inv_j = 1.0 / j as f64;
    let ncomp = dim * dim;
    let mut mean_grad = vec![vec![0.0; npts]; ncomp];
    for g in &grads {
        for (acc, c) in mean_grad.iter_mut().zip(&g.comps) {
            for (a, v) in acc.iter_mut().zip(c) {
                *a += v;
            }
        }
    }
    for c in mean_grad.iter_mut() {
        for v in c.iter_mut() {
            *v *= inv_j;
        }
    }
    let mean_part = grid_mean(
        (0..npts).map(|p| nt[p] * mean_grad.iter().map(|c| c[p] * c[p]).sum::<f64>()),
        npts,
    );
    let fluct_part = inv_j
        * grads
            .iter()
            .map(|g| {
                grid_mean(
                    (0..npts).map(|p| {
                        nt[p]
                            * (0..ncomp)
                                .map(|c| {
                                    let d = g.comps[c][p] - mean_grad[c][p];
                                    d * d
                                })
                                .sum::<f64>()
                    }),
                    npts,
                )
            })
            .sum::<f64>();

    Ok(Sample {
        t: state.t,
        members,
        nu_turb_mean: state.stats.nu_turb.mean(),
        fluct_ms: state.stats.fluct_mag_sq.mean(),
        eps_turb_mean_part: mean_part,
        eps_turb_fluct_part: fluct_part,
    })
}
