//! The Scrooge ensemble and the single-outcome probability laws of the Haar
//! and Scrooge ensembles.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::hermitian_eigen;
use crate::random::{haar_state, stream};

use super::ProjectedEnsemble;

/// Density of p = |⟨z|ψ⟩|² for Haar states in dimension `d`.
pub fn haar_conditional_pdf(p: f64, d: usize) -> f64 {
    (d as f64 - 1.0) * (1.0 - p).powi(d as i32 - 2)
}

pub fn haar_conditional_cdf(p: f64, d: usize) -> f64 {
    1.0 - (1.0 - p.clamp(0.0, 1.0)).powi(d as i32 - 1)
}

/// Parameters of P_S(p) = (a p + b (1−p))^−3 for a qubit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScroogeDensity {
    pub a: f64,
    pub b: f64,
}

/// Solves ∫P_S = 1 and ∫p P_S = `mean` in closed form.
pub fn scrooge_ab(mean: f64) -> Result<ScroogeDensity> {
    if !(mean > 0.0 && mean < 1.0) {
        return Err(Error::InvalidInput(format!("marginal {mean} must lie strictly inside (0, 1)")));
    }
    let b = (mean / (2.0 * (1.0 - mean).powi(2))).cbrt();
    Ok(ScroogeDensity { a: b * (1.0 - mean) / mean, b })
}

pub fn scrooge_pdf(p: f64, s: &ScroogeDensity) -> f64 {
    (s.a * p + s.b * (1.0 - p)).powi(-3)
}

pub fn scrooge_cdf(p: f64, s: &ScroogeDensity) -> f64 {
    let p = p.clamp(0.0, 1.0);
    let c = s.a - s.b;
    if c.abs() < 1e-12 * s.b {
        return p / s.b.powi(3);
    }
    (s.b.powi(-2) - (s.b + c * p).powi(-2)) / (2.0 * c)
}

impl ScroogeDensity {
    pub fn pdf(&self, p: f64) -> f64 {
        scrooge_pdf(p, self)
    }

    pub fn cdf(&self, p: f64) -> f64 {
        scrooge_cdf(p, self)
    }
}

/// Draws `n_states` Haar states ψ, maps them to ρ^{1/2}ψ/‖ρ^{1/2}ψ‖ and
/// weights them by D⟨ψ|ρ|ψ⟩ (normalized).
pub fn scrooge_ensemble(rho: &DMatrix<Complex64>, n_states: usize, seed: u64) -> Result<ProjectedEnsemble> {
    let d = rho.nrows();
    if d == 0 || rho.ncols() != d {
        return Err(Error::InvalidInput("density operator must be square".into()));
    }
    if (rho - rho.adjoint()).norm() > 1e-10 || (rho.trace().re - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidInput("density operator must be Hermitian with unit trace".into()));
    }
    let (vals, vecs) = hermitian_eigen(rho);
    if vals[0] < -1e-10 {
        return Err(Error::InvalidInput(format!("density operator has eigenvalue {}", vals[0])));
    }
    let sqrt_diag =
        DMatrix::from_diagonal(&DVector::from_iterator(d, vals.iter().map(|v| Complex64::new(v.max(0.0).sqrt(), 0.0))));
    let root = &vecs * sqrt_diag * vecs.adjoint();
    let (states, weights): (Vec<Vec<Complex64>>, Vec<f64>) = (0..n_states)
        .into_par_iter()
        .map(|i| {
            let psi = DVector::from_vec(haar_state(d, &mut stream(seed, i as u64)));
            let phi = &root * &psi;
            let w = phi.norm_squared();
            (phi.iter().copied().collect(), d as f64 * w)
        })
        .unzip();
    let n_a = if d.is_power_of_two() { d.trailing_zeros() as usize } else { 0 };
    ProjectedEnsemble::from_states(n_a, (0..d as u64).collect(), states, Some(weights))
}
