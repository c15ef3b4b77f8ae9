//! Projected ensembles and their randomness diagnostics: moment operators,
//! k-design distances, conditional-probability histograms, scalar moments,
//! two-point correlator fluctuations and the Scrooge ensemble.

mod scrooge;

pub use scrooge::{
    haar_conditional_cdf, haar_conditional_pdf, scrooge_ab, scrooge_cdf, scrooge_ensemble, scrooge_pdf, ScroogeDensity,
};

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::SampleSet;
use crate::hilbert::{Bipartition, Constraint, StateVector};
use crate::linalg::hermitian_eigenvalues;
use crate::random::{haar_state, stream};
use crate::stats::{bootstrap_se, Estimate};

/// Outcomes with p(z_B) below this are dropped.
pub const MIN_WEIGHT: f64 = 1e-14;
/// Default minimum number of shots per z_B for sample-based conditionals.
pub const MIN_SHOTS: usize = 20;
pub const DEFAULT_BINS: usize = 30;
/// Highest moment order with a materialized Haar reference.
pub const MAX_ORDER: usize = 4;
/// Largest dense operator (entries) built by moment and distance routines.
pub const MAX_DENSE_ENTRIES: usize = 1 << 24;

/// How outcomes z_B are weighted in the ensemble.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", deny_unknown_fields)]
pub enum Weighting {
    /// p(z_B).
    #[default]
    Born,
    /// p(z_B)^k / Σ p(z_B)^k.
    Power { k: u32 },
}

impl Weighting {
    fn apply(&self, probs: &[f64]) -> Vec<f64> {
        let raw: Vec<f64> = match self {
            Weighting::Born => probs.to_vec(),
            Weighting::Power { k } => probs.iter().map(|p| p.powi(*k as i32)).collect(),
        };
        let s: f64 = raw.iter().sum();
        raw.into_iter().map(|w| w / s).collect()
    }
}

/// One member of an ensemble on A.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleEntry {
    /// Packed z_B value, or the draw index for synthetic ensembles.
    pub label: u64,
    /// Born probability p(z_B) (uniform for synthetic ensembles).
    pub probability: f64,
    pub weight: f64,
    /// Normalized amplitudes over `a_states`.
    pub state: Vec<Complex64>,
}

/// A weighted list of pure states on subsystem A.
#[derive(Clone, Debug)]
pub struct ProjectedEnsemble {
    bipartition: Option<Bipartition>,
    n_a: usize,
    a_states: Vec<u64>,
    weighting: Weighting,
    entries: Vec<EnsembleEntry>,
}

impl ProjectedEnsemble {
    /// An ensemble of explicit states on `n_a` sites spanned by `a_states`.
    /// Weights default to uniform and are normalized.
    pub fn from_states(
        n_a: usize,
        a_states: Vec<u64>,
        states: Vec<Vec<Complex64>>,
        weights: Option<Vec<f64>>,
    ) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::Empty("ensemble has no states".into()));
        }
        let d = a_states.len();
        let w = weights.unwrap_or_else(|| vec![1.0; states.len()]);
        if w.len() != states.len() {
            return Err(Error::Mismatch("one weight per state required".into()));
        }
        let total: f64 = w.iter().sum();
        if !(total > 0.0) || w.iter().any(|x| *x < 0.0) {
            return Err(Error::InvalidInput("weights must be ≥ 0 with positive sum".into()));
        }
        let entries = states
            .into_iter()
            .zip(w)
            .enumerate()
            .map(|(i, (s, w))| {
                if s.len() != d {
                    return Err(Error::Mismatch(format!("state {i} has length {}, expected {d}", s.len())));
                }
                let nrm = s.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
                Ok(EnsembleEntry {
                    label: i as u64,
                    probability: w / total,
                    weight: w / total,
                    state: s.into_iter().map(|a| a / nrm).collect(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ProjectedEnsemble { bipartition: None, n_a, a_states, weighting: Weighting::Born, entries })
    }

    /// `n` Haar-random states of dimension `d` with equal weights.
    pub fn haar(n_a: usize, d: usize, n: usize, seed: u64) -> Result<Self> {
        let states = (0..n).into_par_iter().map(|i| haar_state(d, &mut stream(seed, i as u64))).collect();
        ProjectedEnsemble::from_states(n_a, (0..d as u64).collect(), states, None)
    }

    pub fn bipartition(&self) -> Option<&Bipartition> {
        self.bipartition.as_ref()
    }

    pub fn n_a(&self) -> usize {
        self.n_a
    }

    /// Packed z_A values spanning A, in increasing order.
    pub fn a_states(&self) -> &[u64] {
        &self.a_states
    }

    pub fn dim_a(&self) -> usize {
        self.a_states.len()
    }

    pub fn weighting(&self) -> Weighting {
        self.weighting
    }

    pub fn entries(&self) -> &[EnsembleEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Same states under a different weighting.
    pub fn reweighted(&self, weighting: Weighting) -> Self {
        let probs: Vec<f64> = self.entries.iter().map(|e| e.probability).collect();
        let w = weighting.apply(&probs);
        let mut out = self.clone();
        out.weighting = weighting;
        for (e, w) in out.entries.iter_mut().zip(w) {
            e.weight = w;
        }
        out
    }

    /// Σ w |ψ⟩⟨ψ| on A.
    pub fn first_moment(&self) -> DMatrix<Complex64> {
        let d = self.dim_a();
        let mut rho = DMatrix::zeros(d, d);
        for e in &self.entries {
            let v = DVector::from_column_slice(&e.state);
            rho += v.clone() * v.adjoint() * Complex64::new(e.weight, 0.0);
        }
        rho
    }
}

/// Builds the projected ensemble of `psi` on A conditioned on z-basis
/// outcomes of B.
pub fn project(psi: &StateVector, bip: &Bipartition, weighting: Weighting) -> Result<ProjectedEnsemble> {
    let lifted;
    let psi = if psi.basis().sector() != crate::hilbert::Sector::All {
        lifted = psi.lift()?;
        &lifted
    } else {
        psi
    };
    let basis = psi.basis();
    let n = basis.n_sites();
    if bip.n_sites() != n {
        return Err(Error::Mismatch(format!("bipartition has {} sites, state {n}", bip.n_sites())));
    }
    let a_states = bip.a_states(basis.constraint());
    let a_index: BTreeMap<u64, usize> = a_states.iter().enumerate().map(|(i, &z)| (z, i)).collect();
    let d = a_states.len();
    let mut groups: BTreeMap<u64, Vec<Complex64>> = BTreeMap::new();
    for (i, a) in psi.amps().iter().enumerate() {
        let (za, zb) = bip.split_value(basis.state(i));
        if !bip.admissible_b(zb) {
            continue;
        }
        let slot = groups.entry(zb).or_insert_with(|| vec![Complex64::new(0.0, 0.0); d]);
        slot[a_index[&za]] = *a;
    }
    let entries: Vec<EnsembleEntry> = groups
        .into_par_iter()
        .filter_map(|(zb, v)| {
            let p: f64 = v.iter().map(|a| a.norm_sqr()).sum();
            if p < MIN_WEIGHT {
                return None;
            }
            let s = p.sqrt();
            Some(EnsembleEntry { label: zb, probability: p, weight: p, state: v.into_iter().map(|a| a / s).collect() })
        })
        .collect();
    if entries.is_empty() {
        return Err(Error::Empty("no admissible z_B outcome carries weight".into()));
    }
    let probs: Vec<f64> = entries.iter().map(|e| e.probability).collect();
    let w = weighting.apply(&probs);
    let entries = entries
        .into_iter()
        .zip(w)
        .map(|(mut e, w)| {
            e.weight = w;
            e
        })
        .collect();
    Ok(ProjectedEnsemble { bipartition: Some(bip.clone()), n_a: bip.sites_a().len(), a_states, weighting, entries })
}

/// Reduced density matrix Tr_B|ψ⟩⟨ψ| over the admissible A states, ignoring
/// the boundary rule (so it equals the Born-weighted first moment only when
/// the rule is off).
pub fn reduced_density_matrix(psi: &StateVector, bip: &Bipartition) -> Result<DMatrix<Complex64>> {
    let plain = Bipartition::new(bip.n_sites(), bip.sites_a(), false)?;
    Ok(project(psi, &plain, Weighting::Born)?.first_moment())
}

/// The k-th moment operator on the k-fold tensor power of A.
#[derive(Clone, Debug)]
pub struct MomentOperator {
    pub k: usize,
    pub dim_a: usize,
    pub matrix: DMatrix<Complex64>,
}

fn guard_dense(d: usize, k: usize) -> Result<usize> {
    if k == 0 || k > MAX_ORDER {
        return Err(Error::OutOfRange(format!("moment order {k} outside 1..={MAX_ORDER}")));
    }
    let dk = d.checked_pow(k as u32).unwrap_or(usize::MAX);
    if dk.saturating_mul(dk) > MAX_DENSE_ENTRIES {
        return Err(Error::MemoryGuard(format!("D_A^(2k) = {d}^{} exceeds {MAX_DENSE_ENTRIES} entries", 2 * k)));
    }
    Ok(dk)
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..k {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

/// Σ_π P_π / [D(D+1)…(D+k−1)], the Haar k-th moment.
pub fn haar_moment(d: usize, k: usize) -> Result<MomentOperator> {
    let dk = guard_dense(d, k)?;
    let norm: f64 = (0..k).map(|j| (d + j) as f64).product();
    let mut m = DMatrix::zeros(dk, dk);
    let mut digits = vec![0usize; k];
    for perm in permutations(k) {
        for col in 0..dk {
            let mut c = col;
            for j in (0..k).rev() {
                digits[j] = c % d;
                c /= d;
            }
            let row = perm.iter().fold(0usize, |acc, &p| acc * d + digits[p]);
            m[(row, col)] += Complex64::new(1.0 / norm, 0.0);
        }
    }
    Ok(MomentOperator { k, dim_a: d, matrix: m })
}

fn tensor_power(v: &[Complex64], k: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(1.0, 0.0)];
    for _ in 0..k {
        out = out.iter().flat_map(|a| v.iter().map(move |b| a * b)).collect();
    }
    out
}

/// Σ w (|ψ⟩⟨ψ|)^{⊗k}, accumulated in fixed-size chunks.
pub fn ensemble_moment(ens: &ProjectedEnsemble, k: usize) -> Result<MomentOperator> {
    let dk = guard_dense(ens.dim_a(), k)?;
    let matrix = ens
        .entries
        .par_chunks(64)
        .map(|chunk| {
            let mut m = DMatrix::<Complex64>::zeros(dk, dk);
            for e in chunk {
                let v = DVector::from_vec(tensor_power(&e.state, k));
                m += &v * v.adjoint() * Complex64::new(e.weight, 0.0);
            }
            m
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(DMatrix::zeros(dk, dk), |a, b| a + b);
    Ok(MomentOperator { k, dim_a: ens.dim_a(), matrix })
}

fn trace_norm(m: &DMatrix<Complex64>) -> f64 {
    hermitian_eigenvalues(m).iter().map(|x| x.abs()).sum()
}

/// ℓ1 distance between the ensemble and Haar k-th moments, from the full
/// D_A^k-dimensional operators.
pub fn design_distance_dense(ens: &ProjectedEnsemble, k: usize) -> Result<f64> {
    let a = ensemble_moment(ens, k)?;
    let h = haar_moment(ens.dim_a(), k)?;
    Ok(trace_norm(&(a.matrix - h.matrix)))
}

/// Occupation tuples (n_1..n_D) with Σn = k, lexicographic.
fn compositions(d: usize, k: usize) -> Vec<Vec<u32>> {
    fn rec(d: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() + 1 == d {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for take in (0..=left).rev() {
            cur.push(take);
            rec(d, left - take, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(d, k as u32, &mut Vec::with_capacity(d), &mut out);
    out
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// ℓ1 distance between the ensemble and Haar k-th moments. Both operators
/// live on the symmetric subspace, where the Haar moment is the normalized
/// projector; the distance is evaluated there.
pub fn design_distance(ens: &ProjectedEnsemble, k: usize) -> Result<f64> {
    if k == 0 || k > MAX_ORDER {
        return Err(Error::OutOfRange(format!("moment order {k} outside 1..={MAX_ORDER}")));
    }
    let d = ens.dim_a();
    let occ = compositions(d, k);
    let s = occ.len();
    if s.saturating_mul(s) > MAX_DENSE_ENTRIES {
        return Err(Error::MemoryGuard(format!("symmetric subspace of dimension {s} too large")));
    }
    let coef: Vec<f64> =
        occ.iter().map(|n| (factorial(k as u32) / n.iter().map(|&x| factorial(x)).product::<f64>()).sqrt()).collect();
    let mut m = ens
        .entries
        .par_chunks(64)
        .map(|chunk| {
            let mut m = DMatrix::<Complex64>::zeros(s, s);
            for e in chunk {
                let v = DVector::from_iterator(
                    s,
                    occ.iter().zip(&coef).map(|(n, c)| {
                        n.iter().zip(&e.state).fold(Complex64::new(*c, 0.0), |acc, (&p, a)| acc * a.powu(p))
                    }),
                );
                m += &v * v.adjoint() * Complex64::new(e.weight, 0.0);
            }
            m
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(DMatrix::zeros(s, s), |a, b| a + b);
    for i in 0..s {
        m[(i, i)] -= Complex64::new(1.0 / s as f64, 0.0);
    }
    Ok(trace_norm(&m))
}

/// Conditional distributions p(z_A|z_B) with their z_B weights, from an exact
/// ensemble or from samples.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalTable {
    pub dim_a: usize,
    /// (weight, p(·|z_B) over the A states); weights sum to 1.
    pub rows: Vec<(f64, Vec<f64>)>,
    /// True when built from finite samples.
    pub sampled: bool,
}

impl ConditionalTable {
    pub fn from_ensemble(ens: &ProjectedEnsemble) -> Self {
        ConditionalTable {
            dim_a: ens.dim_a(),
            rows: ens.entries.iter().map(|e| (e.weight, e.state.iter().map(|a| a.norm_sqr()).collect())).collect(),
            sampled: false,
        }
    }

    /// Empirical conditionals from shots. z_B with fewer than `min_shots`
    /// shots or failing the boundary rule are dropped, as are shots whose
    /// z_A is not an allowed A state. Rows are weighted by shot count.
    pub fn from_samples(
        samples: &SampleSet,
        bip: &Bipartition,
        constraint: Constraint,
        min_shots: usize,
    ) -> Result<Self> {
        if samples.n_sites != bip.n_sites() {
            return Err(Error::Mismatch(format!(
                "samples have {} sites, bipartition {}",
                samples.n_sites,
                bip.n_sites()
            )));
        }
        let a_states = bip.a_states(constraint);
        let a_index: BTreeMap<u64, usize> = a_states.iter().enumerate().map(|(i, &z)| (z, i)).collect();
        let mut counts: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
        for z in &samples.shots {
            let (za, zb) = bip.split_value(z.value());
            if !bip.admissible_b(zb) {
                continue;
            }
            if let Some(&ia) = a_index.get(&za) {
                counts.entry(zb).or_insert_with(|| vec![0; a_states.len()])[ia] += 1;
            }
        }
        let kept: Vec<Vec<usize>> =
            counts.into_values().filter(|c| c.iter().sum::<usize>() >= min_shots.max(1)).collect();
        let total: usize = kept.iter().map(|c| c.iter().sum::<usize>()).sum();
        if kept.is_empty() {
            return Err(Error::Empty(format!("no z_B outcome has ≥ {min_shots} shots")));
        }
        Ok(ConditionalTable {
            dim_a: a_states.len(),
            rows: kept
                .into_iter()
                .map(|c| {
                    let m: usize = c.iter().sum();
                    (m as f64 / total as f64, c.into_iter().map(|x| x as f64 / m as f64).collect())
                })
                .collect(),
            sampled: true,
        })
    }

    /// Pooled (values, weights) of p(z_A|z_B); `z_a = None` pools every A state
    /// with weight w(z_B)/D_A.
    pub fn values(&self, z_a: Option<usize>) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut v = Vec::new();
        let mut w = Vec::new();
        match z_a {
            Some(i) if i >= self.dim_a => return Err(Error::OutOfRange(format!("A state {i} of {}", self.dim_a))),
            Some(i) => {
                for (wt, p) in &self.rows {
                    v.push(p[i]);
                    w.push(*wt);
                }
            }
            None => {
                for (wt, p) in &self.rows {
                    for x in p {
                        v.push(*x);
                        w.push(wt / self.dim_a as f64);
                    }
                }
            }
        }
        Ok((v, w))
    }

    /// Density histogram of p(z_A|z_B) on `bins` equal cells of [0, 1].
    pub fn histogram(&self, z_a: Option<usize>, bins: usize) -> Result<ProbHistogram> {
        if bins < 5 {
            return Err(Error::InvalidInput(format!("need ≥ 5 bins, got {bins}")));
        }
        let (v, w) = self.values(z_a)?;
        let total: f64 = w.iter().sum();
        let mut mass = vec![0.0; bins];
        for (x, wt) in v.iter().zip(&w) {
            let k = ((x * bins as f64) as usize).min(bins - 1);
            mass[k] += wt / total;
        }
        let width = 1.0 / bins as f64;
        Ok(ProbHistogram {
            edges: (0..=bins).map(|i| i as f64 * width).collect(),
            density: mass.iter().map(|m| m / width).collect(),
            mass,
        })
    }

    fn raw_moment(&self, k: usize, rows: impl Iterator<Item = usize>) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for r in rows {
            let (w, p) = &self.rows[r];
            num += w * p.iter().map(|x| x.powi(k as i32)).sum::<f64>() / self.dim_a as f64;
            den += w;
        }
        num / den
    }

    /// p^(k) and the rescaled moment D_A…(D_A+k−1)·p^(k). Sample-based tables
    /// carry bootstrap errors over z_B rows.
    pub fn moment(&self, k: usize, resamples: usize, seed: u64) -> Result<MomentScalar> {
        if k == 0 || k > 6 {
            return Err(Error::OutOfRange(format!("scalar moment order {k} outside 1..=6")));
        }
        let scale = rescaling(self.dim_a, k);
        let raw = self.raw_moment(k, 0..self.rows.len());
        let se = if self.sampled {
            bootstrap_se(self.rows.len(), resamples, seed, |idx| self.raw_moment(k, idx.iter().copied()))
        } else {
            0.0
        };
        Ok(MomentScalar {
            k,
            raw: Estimate { mean: raw, se },
            rescaled: Estimate { mean: raw * scale, se: se * scale },
        })
    }
}

/// D(D+1)…(D+k−1).
pub fn rescaling(d: usize, k: usize) -> f64 {
    (0..k).map(|j| (d + j) as f64).product()
}

/// Haar value of p^(k): k!/[D(D+1)…(D+k−1)].
pub fn haar_scalar_moment(d: usize, k: usize) -> f64 {
    factorial(k as u32) / rescaling(d, k)
}

/// Raw and rescaled scalar moments of order k.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MomentScalar {
    pub k: usize,
    pub raw: Estimate,
    pub rescaled: Estimate,
}

/// Density of p over [0, 1].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbHistogram {
    pub edges: Vec<f64>,
    pub density: Vec<f64>,
    /// Probability mass per bin.
    pub mass: Vec<f64>,
}

impl ProbHistogram {
    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|e| 0.5 * (e[0] + e[1])).collect()
    }

    /// ∫ P(p) dp.
    pub fn integral(&self) -> f64 {
        self.density.iter().zip(self.edges.windows(2)).map(|(d, e)| d * (e[1] - e[0])).sum()
    }

    /// Σ p^k P(p) Δp evaluated at bin centers.
    pub fn moment(&self, k: usize) -> f64 {
        self.centers().iter().zip(&self.mass).map(|(c, m)| c.powi(k as i32) * m).sum()
    }

    /// CSV with header `bin_center,density`.
    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["bin_center", "density"])?;
        for (c, d) in self.centers().iter().zip(&self.density) {
            w.write_record([c.to_string(), d.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Histogram of the exact ensemble's conditional probabilities.
pub fn conditional_histogram(ens: &ProjectedEnsemble, z_a: Option<usize>, bins: usize) -> Result<ProbHistogram> {
    ConditionalTable::from_ensemble(ens).histogram(z_a, bins)
}

/// √(Σ w C²) with C the connected ZZ correlator of the two A sites.
pub fn correlator_fluctuation(ens: &ProjectedEnsemble) -> Result<f64> {
    if ens.n_a() != 2 {
        return Err(Error::InvalidInput(format!("correlator needs exactly 2 A sites, got {}", ens.n_a())));
    }
    let z = |bit: u64| if bit == 1 { -1.0 } else { 1.0 };
    let s: f64 = ens
        .entries
        .iter()
        .map(|e| {
            let (mut z1, mut z2, mut zz) = (0.0, 0.0, 0.0);
            for (a, &za) in e.state.iter().zip(&ens.a_states) {
                let p = a.norm_sqr();
                let (s1, s2) = (z((za >> 1) & 1), z(za & 1));
                z1 += p * s1;
                z2 += p * s2;
                zz += p * s1 * s2;
            }
            e.weight * (zz - z1 * z2).powi(2)
        })
        .sum();
    Ok(s.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::BasisMap;
    use crate::models::{build_rydberg, RydbergSpec};
    use proptest::prelude::*;
    use std::sync::Arc;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn bell() -> StateVector {
        let b = Arc::new(BasisMap::full(2).unwrap());
        let s = 0.5f64.sqrt();
        StateVector::new(b, vec![c(s), c(0.0), c(0.0), c(s)]).unwrap()
    }

    /// Partial trace by explicit index loops, independent of `project`.
    fn partial_trace_oracle(psi: &StateVector, sites_a: &[usize]) -> DMatrix<Complex64> {
        let n = psi.basis().n_sites();
        let la = sites_a.len();
        let mut rho = DMatrix::zeros(1 << la, 1 << la);
        let bits_a = |z: u64| sites_a.iter().fold(0usize, |acc, &s| (acc << 1) | ((z >> (n - 1 - s)) & 1) as usize);
        let mask_b = |z: u64| sites_a.iter().fold(z, |acc, &s| acc & !(1 << (n - 1 - s)));
        let amps = psi.amps();
        for i in 0..amps.len() {
            for j in 0..amps.len() {
                let (zi, zj) = (psi.basis().state(i), psi.basis().state(j));
                if mask_b(zi) == mask_b(zj) {
                    rho[(bits_a(zi), bits_a(zj))] += amps[i] * amps[j].conj();
                }
            }
        }
        rho
    }

    #[test]
    fn test_product_state_projects_to_single_state() {
        let b = Arc::new(BasisMap::full(5).unwrap());
        let e = project(
            &StateVector::zeros(b).unwrap(),
            &Bipartition::contiguous(5, 1, 2, false).unwrap(),
            Weighting::Born,
        )
        .unwrap();
        assert_eq!(e.len(), 1);
        assert!((e.entries()[0].weight - 1.0).abs() < 1e-15);
        assert_eq!(e.entries()[0].state[0], c(1.0));
    }

    #[test]
    fn test_bell_projection() {
        let e = project(&bell(), &Bipartition::new(2, &[0], false).unwrap(), Weighting::Born).unwrap();
        assert_eq!(e.len(), 2);
        for (k, en) in e.entries().iter().enumerate() {
            assert!((en.weight - 0.5).abs() < 1e-15);
            assert!((en.state[k].norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn test_first_moment_is_partial_trace() {
        for seed in 0..100u64 {
            let n = 2 + (seed % 7) as usize;
            let b = Arc::new(BasisMap::full(n).unwrap());
            let psi = StateVector::normalized(b, haar_state(1 << n, &mut stream(seed, 0))).unwrap();
            let la = 1 + (seed as usize % (n - 1).min(3));
            let mut sites = rand::seq::index::sample(&mut stream(seed, 1), n, la).into_vec();
            sites.sort_unstable();
            let e = project(&psi, &Bipartition::new(n, &sites, false).unwrap(), Weighting::Born).unwrap();
            let diff = e.first_moment() - partial_trace_oracle(&psi, &sites);
            assert!(trace_norm(&diff) * 0.5 <= 1e-10);
        }
    }

    #[test]
    fn test_haar_moment_examples() {
        let m = haar_moment(2, 1).unwrap().matrix;
        assert!((m - DMatrix::identity(2, 2) * c(0.5)).norm() < 1e-15);
        let m = haar_moment(2, 2).unwrap().matrix;
        let mut swap = DMatrix::<Complex64>::zeros(4, 4);
        swap[(0, 0)] = c(1.0);
        swap[(3, 3)] = c(1.0);
        swap[(1, 2)] = c(1.0);
        swap[(2, 1)] = c(1.0);
        let want = (DMatrix::identity(4, 4) + swap) / c(6.0);
        assert!((m - want).norm() < 1e-15);
        for d in 2..=5 {
            for k in 1..=4 {
                let m = haar_moment(d, k).unwrap().matrix;
                assert!((m.trace().re - 1.0).abs() < 1e-12);
                assert!(hermitian_eigenvalues(&m).iter().all(|&x| x > -1e-12));
            }
        }
    }

    #[test]
    fn test_memory_guard() {
        assert!(matches!(haar_moment(9, 4), Err(Error::MemoryGuard(_))));
        assert!(haar_moment(5, 5).is_err());
    }

    #[test]
    fn test_bell_moments_and_distance() {
        let e = project(&bell(), &Bipartition::new(2, &[0], false).unwrap(), Weighting::Born).unwrap();
        let m1 = ensemble_moment(&e, 1).unwrap().matrix;
        assert!((m1 - DMatrix::identity(2, 2) * c(0.5)).norm() < 1e-15);
        let m2 = ensemble_moment(&e, 2).unwrap().matrix;
        let want = DMatrix::from_diagonal(&DVector::from_vec(vec![c(0.5), c(0.0), c(0.0), c(0.5)]));
        assert!((m2 - want).norm() < 1e-15);
        assert!((design_distance_dense(&e, 2).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!((design_distance(&e, 2).unwrap() - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn test_single_state_moment_is_rank_one() {
        let v = haar_state(3, &mut stream(5, 0));
        let e = ProjectedEnsemble::from_states(2, vec![0, 1, 2], vec![v], None).unwrap();
        let m = ensemble_moment(&e, 2).unwrap().matrix;
        let ev = hermitian_eigenvalues(&m);
        assert!((ev[ev.len() - 1] - 1.0).abs() < 1e-12);
        assert!(ev[..ev.len() - 1].iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn test_symmetric_route_matches_dense() {
        for (d, k, seed) in [(2, 3, 1u64), (3, 2, 2), (3, 3, 3), (4, 2, 4), (2, 4, 5), (5, 2, 6)] {
            let e = ProjectedEnsemble::haar(0, d, 40, seed).unwrap();
            let a = design_distance(&e, k).unwrap();
            let b = design_distance_dense(&e, k).unwrap();
            assert!((a - b).abs() < 1e-10, "d={d} k={k}: {a} vs {b}");
        }
    }

    #[test]
    fn test_first_order_distance_is_marginal_distance() {
        let n = 8;
        let b = Arc::new(BasisMap::blockade(n).unwrap());
        let h = build_rydberg(&RydbergSpec::chain(n, 5.0, 0.4), &b).unwrap();
        let psi = crate::evolve::evolve_exact(&h, &StateVector::zeros(b).unwrap(), &[1.3]).unwrap().states.remove(0);
        let e = project(&psi, &Bipartition::contiguous(n, 3, 2, true).unwrap(), Weighting::Born).unwrap();
        let d = e.dim_a();
        let rho = e.first_moment() - DMatrix::identity(d, d) * c(1.0 / d as f64);
        assert!((design_distance(&e, 1).unwrap() - trace_norm(&rho)).abs() < 1e-12);
    }

    #[test]
    fn test_self_distance_zero() {
        let e = ProjectedEnsemble::haar(1, 2, 10, 9).unwrap();
        let a = ensemble_moment(&e, 2).unwrap().matrix;
        assert!(trace_norm(&(a.clone() - a)) == 0.0);
    }

    #[test]
    fn test_haar_scalar_moments_monte_carlo() {
        for d in 2..=5 {
            let e = ProjectedEnsemble::haar(0, d, 100_000, 40 + d as u64).unwrap();
            let t = ConditionalTable::from_ensemble(&e);
            for k in 1..=4 {
                let (v, _) = t.values(Some(0)).unwrap();
                let xs: Vec<f64> = v.iter().map(|p| p.powi(k as i32)).collect();
                let est = Estimate::from_samples(&xs);
                let want = haar_scalar_moment(d, k);
                assert!((est.mean - want).abs() <= 3.0 * est.se.max(1e-15), "d={d} k={k}");
            }
        }
        let e = ProjectedEnsemble::haar(0, 2, 2000, 1).unwrap();
        let m = ConditionalTable::from_ensemble(&e).moment(1, 0, 0).unwrap();
        assert!((m.rescaled.mean - 1.0).abs() < 1e-12);
        assert!((haar_scalar_moment(2, 2) - 1.0 / 3.0).abs() < 1e-15);
        assert!((rescaling(2, 2) * haar_scalar_moment(2, 2) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn test_haar_qubit_histogram_flat() {
        let e = ProjectedEnsemble::haar(1, 2, 10_000, 77).unwrap();
        let h = conditional_histogram(&e, None, DEFAULT_BINS).unwrap();
        assert!((h.integral() - 1.0).abs() < 1e-9);
        let mad = h.density.iter().map(|x| (x - 1.0).abs()).sum::<f64>() / h.density.len() as f64;
        assert!(mad <= 0.05, "{mad}");
        let (v, w) = ConditionalTable::from_ensemble(&e).values(Some(0)).unwrap();
        let g = crate::stats::chi_square_gof(&v, &w, |p| haar_conditional_cdf(p, 2), 30).unwrap();
        assert!(g.p_value > 0.01);
    }

    #[test]
    fn test_haar_d5_law() {
        let e = ProjectedEnsemble::haar(0, 5, 20_000, 3).unwrap();
        let (v, w) = ConditionalTable::from_ensemble(&e).values(Some(2)).unwrap();
        let g = crate::stats::chi_square_gof(&v, &w, |p| haar_conditional_cdf(p, 5), 30).unwrap();
        assert!(g.p_value > 0.01, "{g:?}");
        let flat = crate::stats::chi_square_gof(&v, &w, |p| p, 30).unwrap();
        assert!(flat.p_value < 1e-6);
    }

    #[test]
    fn test_decohered_concentrates_at_half() {
        let s = 0.5f64.sqrt();
        let e = ProjectedEnsemble::from_states(1, vec![0, 1], vec![vec![c(s), c(s)]; 10], None).unwrap();
        let h = conditional_histogram(&e, None, 10).unwrap();
        assert!((h.mass[5] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn test_correlator() {
        let prod = ProjectedEnsemble::from_states(
            2,
            vec![0, 1, 2, 3],
            vec![vec![c(1.0), c(0.0), c(0.0), c(0.0)], vec![c(0.0), c(0.0), c(1.0), c(0.0)]],
            None,
        )
        .unwrap();
        assert!(correlator_fluctuation(&prod).unwrap().abs() < 1e-15);
        let e = ProjectedEnsemble::haar(2, 4, 100_000, 8).unwrap();
        let s = correlator_fluctuation(&e).unwrap();
        assert!((s - (4.0f64 / 35.0).sqrt()).abs() <= 0.01, "{s}");
        let one = ProjectedEnsemble::haar(1, 2, 3, 8).unwrap();
        assert!(correlator_fluctuation(&one).is_err());
    }

    #[test]
    fn test_sample_conditionals() {
        let n = 6;
        let b = Arc::new(BasisMap::full(n).unwrap());
        let psi = StateVector::normalized(b, haar_state(64, &mut stream(1, 0))).unwrap();
        let bip = Bipartition::contiguous(n, 2, 1, false).unwrap();
        let s = crate::evolve::sample_bitstrings(&psi, 200_000, 3).unwrap();
        let t = ConditionalTable::from_samples(&s, &bip, Constraint::Full, MIN_SHOTS).unwrap();
        let exact = ConditionalTable::from_ensemble(&project(&psi, &bip, Weighting::Born).unwrap());
        assert_eq!(t.rows.len(), exact.rows.len());
        for (a, b) in t.rows.iter().zip(&exact.rows) {
            assert!((a.0 - b.0).abs() < 0.01 && (a.1[0] - b.1[0]).abs() < 0.05);
        }
        let m = t.moment(2, 200, 5).unwrap();
        assert!(m.raw.se > 0.0);
        let few = crate::evolve::SampleSet::new(n, "full", s.shots[..10].to_vec(), "").unwrap();
        assert!(matches!(
            ConditionalTable::from_samples(&few, &bip, Constraint::Full, MIN_SHOTS),
            Err(Error::Empty(_))
        ));
    }

    #[test]
    fn test_weightings() {
        let b = Arc::new(BasisMap::full(4).unwrap());
        let psi = StateVector::normalized(b, haar_state(16, &mut stream(2, 0))).unwrap();
        let bip = Bipartition::contiguous(4, 0, 1, false).unwrap();
        let e = project(&psi, &bip, Weighting::Power { k: 2 }).unwrap();
        let s2: f64 = e.entries().iter().map(|x| x.probability * x.probability).sum();
        for x in e.entries() {
            assert!((x.weight - x.probability.powi(2) / s2).abs() < 1e-14);
        }
        let back = e.reweighted(Weighting::Born);
        assert!((back.entries().iter().map(|x| x.weight).sum::<f64>() - 1.0).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn prop_distance_monotone_in_order(seed in 0u64..10_000, d in 2usize..=4, m in 1usize..12) {
            let e = ProjectedEnsemble::haar(0, d, m, seed).unwrap();
            let mut last = 0.0;
            for k in 1..=4 {
                let v = design_distance(&e, k).unwrap();
                prop_assert!(v >= last - 1e-10);
                last = v;
            }
        }

        #[test]
        fn prop_weights_normalized(seed in 0u64..10_000, n in 3usize..8, start in 0usize..2) {
            let b = Arc::new(BasisMap::blockade(n).unwrap());
            let psi = StateVector::normalized(b.clone(), haar_state(b.dim(), &mut stream(seed, 0))).unwrap();
            let e = project(&psi, &Bipartition::contiguous(n, start, 1, true).unwrap(), Weighting::Born).unwrap();
            let total: f64 = e.entries().iter().map(|x| x.weight).sum();
            prop_assert!((total - 1.0).abs() < 1e-10);
            for x in e.entries() {
                prop_assert!((x.state.iter().map(|a| a.norm_sqr()).sum::<f64>() - 1.0).abs() < 1e-10);
            }
        }
    }
}
