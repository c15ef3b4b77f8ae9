//! Fidelity estimators from bitstring statistics: the correlation estimator
//! F_c (exact, empirical, blockade/parity-adjusted), F_XEB, KL divergence,
//! sample-complexity fits and single-error experiments.

mod table;

pub use table::ProbTable;

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::{apply_single, evolve_states, SampleSet};
use crate::hilbert::{Constraint, StateVector};
use crate::linalg::SparseMatrix;
use crate::stats::{bootstrap_se, proportional_fit};

/// Default number of bootstrap resamples.
pub const BOOTSTRAP_RESAMPLES: usize = 200;

/// Which F_c formula produced a report.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FcVariant {
    Exact,
    Empirical,
    BlockadeParity,
}

/// An F_c value with its provenance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FcReport {
    pub value: f64,
    pub variant: FcVariant,
    /// Number of shots, for sample-based estimates.
    pub shots: Option<usize>,
    /// Bootstrap standard deviation, for sample-based estimates.
    pub sigma: Option<f64>,
    /// Blockade-sector weight of the noisy distribution.
    pub b: Option<f64>,
    /// Blockade-sector weight of the reference distribution.
    pub b0: Option<f64>,
    /// Shots absent from the reference table (counted with p0 = 0).
    pub out_of_basis: usize,
}

fn check_sites(a: &ProbTable, b: usize) -> Result<()> {
    if a.n_sites() != b {
        return Err(Error::Mismatch(format!("tables over {} and {b} sites", a.n_sites())));
    }
    Ok(())
}

fn reference_norm(p0: &ProbTable) -> Result<f64> {
    let s = p0.sum_sq();
    if !(s > 0.0) {
        return Err(Error::InvalidInput("reference table has no weight".into()));
    }
    Ok(s)
}

/// F_c = 2 Σ p0 p / Σ p0² − 1.
pub fn fc_exact(p0: &ProbTable, p: &ProbTable) -> Result<f64> {
    check_sites(p0, p.n_sites())?;
    Ok(2.0 * p0.dot(p) / reference_norm(p0)? - 1.0)
}

/// Empirical F_c = 2 (1/M) Σ_i p0(z_i) / Σ p0² − 1 with a bootstrap error.
pub fn fc_empirical(p0: &ProbTable, samples: &SampleSet, resamples: usize, seed: u64) -> Result<FcReport> {
    check_sites(p0, samples.n_sites)?;
    if samples.is_empty() {
        return Err(Error::Empty("no shots".into()));
    }
    let norm = reference_norm(p0)?;
    let mut out_of_basis = 0;
    let vals: Vec<f64> = samples
        .shots
        .iter()
        .map(|z| {
            p0.get_checked(z.value()).unwrap_or_else(|| {
                out_of_basis += 1;
                0.0
            })
        })
        .collect();
    let m = vals.len();
    let est = |idx: &[usize]| 2.0 * idx.iter().map(|&i| vals[i]).sum::<f64>() / idx.len() as f64 / norm - 1.0;
    let value = 2.0 * vals.iter().sum::<f64>() / m as f64 / norm - 1.0;
    let sigma = bootstrap_se(m, resamples, seed, est);
    Ok(FcReport {
        value,
        variant: FcVariant::Empirical,
        shots: Some(m),
        sigma: (sigma.is_finite()).then_some(sigma),
        b: None,
        b0: None,
        out_of_basis,
    })
}

/// Noisy input for the blockade/parity estimator.
#[derive(Clone, Debug)]
pub enum Observed<'a> {
    Table(&'a ProbTable),
    Samples(&'a SampleSet),
}

/// Blockade- and parity-adjusted F_c. Probabilities are restricted to
/// blockade-legal strings and renormalized, each mirror pair {z, z̄} is merged
/// into one even-parity outcome, and the result is scaled by B·B0. When `b`
/// or `b0` is `None` it is taken from the blockade weight of the input.
pub fn fc_rydberg(
    p0: &ProbTable,
    observed: Observed<'_>,
    b0: Option<f64>,
    b: Option<f64>,
    resamples: usize,
    seed: u64,
) -> Result<FcReport> {
    let (p, shots) = match observed {
        Observed::Table(t) => (t.clone(), None),
        Observed::Samples(s) => (ProbTable::from_samples(s)?, Some(s)),
    };
    check_sites(p0, p.n_sites())?;
    let b0 = b0.unwrap_or_else(|| p0.blockade_weight());
    let b = b.unwrap_or_else(|| p.blockade_weight());
    for (name, v) in [("B", b), ("B0", b0)] {
        if !(v > 0.0 && v <= 1.0 + 1e-12) {
            return Err(Error::InvalidInput(format!("{name} = {v} outside (0, 1]")));
        }
    }
    let q0 = p0.restrict_blockade().parity_merged();
    let norm = reference_norm(&q0)?;
    let (value, sigma, shots_used) = match shots {
        None => {
            let q = p.restrict_blockade().parity_merged();
            if q0.dot(&q) == 0.0 && q.total() == 0.0 {
                return Err(Error::Empty("no weight inside the blockade sector".into()));
            }
            (b * b0 * (2.0 * q0.dot(&q) / norm - 1.0), None, None)
        }
        Some(s) => {
            // per-shot values of the merged reference at the shot's parity class
            let vals: Vec<f64> = s
                .shots
                .iter()
                .filter(|z| z.is_blockade_legal())
                .map(|z| q0.get(ProbTable::parity_class(z.value(), s.n_sites)))
                .collect();
            if vals.is_empty() {
                return Err(Error::Empty("no shot inside the blockade sector".into()));
            }
            let m = vals.len();
            let est = |idx: &[usize]| {
                b * b0 * (2.0 * idx.iter().map(|&i| vals[i]).sum::<f64>() / idx.len() as f64 / norm - 1.0)
            };
            let all: Vec<usize> = (0..m).collect();
            let sigma = bootstrap_se(m, resamples, seed, est);
            (est(&all), sigma.is_finite().then_some(sigma), Some(m))
        }
    };
    Ok(FcReport {
        value,
        variant: FcVariant::BlockadeParity,
        shots: shots_used,
        sigma,
        b: Some(b),
        b0: Some(b0),
        out_of_basis: 0,
    })
}

/// F_XEB = (D+1) Σ p0 p − 1.
pub fn fxeb(p0: &ProbTable, p: &ProbTable, d: usize) -> Result<f64> {
    check_sites(p0, p.n_sites())?;
    Ok((d as f64 + 1.0) * p0.dot(p) - 1.0)
}

/// KL divergence with a flag for support violations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KlResult {
    /// Nats; +∞ when `support_violation`.
    pub value: f64,
    pub support_violation: bool,
}

/// Σ p_ref ln(p_ref / p_model).
pub fn kl_divergence(p_ref: &ProbTable, p_model: &ProbTable) -> Result<KlResult> {
    check_sites(p_ref, p_model.n_sites())?;
    let mut v = 0.0;
    for &(z, p) in p_ref.entries() {
        if p <= 0.0 {
            continue;
        }
        let q = p_model.get(z);
        if q <= 0.0 {
            return Ok(KlResult { value: f64::INFINITY, support_violation: true });
        }
        v += p * (p / q).ln();
    }
    Ok(KlResult { value: v.max(0.0), support_violation: false })
}

/// One point of a sample-complexity sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FcSpread {
    pub n_sites: usize,
    pub shots: usize,
    /// Standard deviation of F_c at this (N, M).
    pub sigma: f64,
}

/// Fit of σ(F_c)·√M = a^N.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SampleComplexityFit {
    pub a: f64,
    pub a_se: f64,
}

/// Least-squares fit of ln(σ√M) = N ln a (no intercept).
pub fn sample_complexity(points: &[FcSpread]) -> Result<SampleComplexityFit> {
    let mut ns: Vec<usize> = points.iter().map(|p| p.n_sites).collect();
    let mut ms: Vec<usize> = points.iter().map(|p| p.shots).collect();
    ns.sort_unstable();
    ns.dedup();
    ms.sort_unstable();
    ms.dedup();
    if ns.len() < 3 || ms.len() < 4 {
        return Err(Error::InvalidInput(format!(
            "need ≥ 3 system sizes and ≥ 4 shot counts, got {} and {}",
            ns.len(),
            ms.len()
        )));
    }
    if points.iter().any(|p| !(p.sigma > 0.0)) {
        return Err(Error::InvalidInput("spreads must be positive".into()));
    }
    let x: Vec<f64> = points.iter().map(|p| p.n_sites as f64).collect();
    let y: Vec<f64> = points.iter().map(|p| (p.sigma * (p.shots as f64).sqrt()).ln()).collect();
    let slope = proportional_fit(&x, &y)?;
    let a = slope.mean.exp();
    Ok(SampleComplexityFit { a, a_se: a * slope.se })
}

/// Axis of a single-site rotation error.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorAxis {
    X,
    Y,
    #[default]
    Z,
}

/// exp(−i θ σ/2).
pub fn rotation(axis: ErrorAxis, angle: f64) -> Matrix2<Complex64> {
    let c = Complex64::new((angle / 2.0).cos(), 0.0);
    let s = (angle / 2.0).sin();
    let z = Complex64::new(0.0, 0.0);
    match axis {
        ErrorAxis::X => Matrix2::new(c, Complex64::new(0.0, -s), Complex64::new(0.0, -s), c),
        ErrorAxis::Y => Matrix2::new(c, Complex64::new(-s, 0.0), Complex64::new(s, 0.0), c),
        ErrorAxis::Z => Matrix2::new(c - Complex64::new(0.0, s), z, z, c + Complex64::new(0.0, s)),
    }
}

/// Applies a rotation on `site`. Off-diagonal rotations need a full basis.
pub fn apply_rotation(psi: &StateVector, site: usize, axis: ErrorAxis, angle: f64) -> Result<StateVector> {
    let basis = psi.basis().clone();
    let n = basis.n_sites();
    if site >= n {
        return Err(Error::OutOfRange(format!("site {site} of {n}")));
    }
    let u = rotation(axis, angle);
    match (axis, basis.constraint(), basis.sector()) {
        (_, Constraint::Full, crate::hilbert::Sector::All) => {
            let mut amps = psi.amps().to_vec();
            apply_single(&mut amps, n, site, &u);
            StateVector::new(basis, amps)
        }
        (ErrorAxis::Z, _, crate::hilbert::Sector::All) => {
            let amps = psi
                .amps()
                .iter()
                .enumerate()
                .map(|(i, a)| {
                    let bit = crate::hilbert::get_bit(basis.state(i), n, site) as usize;
                    a * u[(bit, bit)]
                })
                .collect();
            StateVector::new(basis, amps)
        }
        _ => {
            Err(Error::InvalidInput("this rotation leaves the constrained basis; use a full sector-less basis".into()))
        }
    }
}

/// F and F_c versus delay τ after a single rotation error.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SingleErrorTrace {
    pub tau: Vec<f64>,
    pub fidelity: Vec<f64>,
    pub fc: Vec<f64>,
}

/// Evolves `psi0` to `t_err`, applies the rotation on `site`, then evolves the
/// ideal and the erroneous state together for every delay in `taus`.
pub fn single_error_experiment(
    h: &SparseMatrix,
    psi0: &StateVector,
    site: usize,
    t_err: f64,
    axis: ErrorAxis,
    angle: f64,
    taus: &[f64],
) -> Result<SingleErrorTrace> {
    let at_err = evolve_states(h, psi0, &[t_err])?.remove(0);
    let bad = apply_rotation(&at_err, site, axis, angle)?;
    let ideal = evolve_states(h, &at_err, taus)?;
    let noisy = evolve_states(h, &bad, taus)?;
    let mut fidelity = Vec::with_capacity(taus.len());
    let mut fc = Vec::with_capacity(taus.len());
    for (a, b) in ideal.iter().zip(&noisy) {
        fidelity.push(a.overlap(b));
        fc.push(fc_exact(&ProbTable::from_state(a), &ProbTable::from_state(b))?);
    }
    Ok(SingleErrorTrace { tau: taus.to_vec(), fidelity, fc })
}

/// Rotation angle in [0, π] whose immediate fidelity |⟨ψ|U|ψ⟩|² equals
/// `target`, by bisection. Errors if the target is unreachable.
pub fn angle_for_fidelity(psi: &StateVector, site: usize, axis: ErrorAxis, target: f64) -> Result<f64> {
    let f = |theta: f64| -> Result<f64> { Ok(psi.overlap(&apply_rotation(psi, site, axis, theta)?)) };
    let (mut lo, mut hi) = (0.0, std::f64::consts::PI);
    if f(hi)? > target || target > 1.0 {
        return Err(Error::InvalidInput(format!("fidelity {target} not reachable with one rotation")));
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
