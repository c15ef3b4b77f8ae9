//! Hamiltonians and random circuits built from parametric specifications.
//!
//! All coefficients are ordinary frequencies (MHz for the Rydberg model, units
//! of the global scale otherwise); evolution routines supply the factor 2π.
//! Spin operators are `S = σ/2` with `Z|0⟩ = +|0⟩`.

mod circuit;

pub use circuit::{Circuit, CircuitSpec, FsimParams, GateSet, Layer, StartPhase, TwoQubitGate};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{get_bit, BasisMap, Constraint, Sector};
use crate::linalg::{lowest_eigenpairs, Eigenpairs, SparseMatrix};

/// C6/2π of the 70S₁ state used in the default Rydberg configuration, MHz·µm⁶.
pub const C6_DEFAULT: f64 = 249_000.0;
/// Default lattice spacing, µm.
pub const SPACING_DEFAULT: f64 = 3.75;

fn default_c6() -> f64 {
    C6_DEFAULT
}

fn default_spacing() -> f64 {
    SPACING_DEFAULT
}

/// Explicit interaction bond overriding the power-law chain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bond {
    pub i: usize,
    pub j: usize,
    /// Interaction strength, MHz.
    pub v: f64,
}

/// Driven Rydberg chain: `Σ Ω_i/2 σˣ_i − Σ Δ_i n_i + Σ_{i<j} V_ij n_i n_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RydbergSpec {
    pub n: usize,
    /// Rabi frequency Ω/2π, MHz.
    pub omega: f64,
    /// Detuning Δ/2π, MHz.
    pub delta: f64,
    /// C6/2π, MHz·µm⁶.
    #[serde(default = "default_c6")]
    pub c6: f64,
    /// Lattice spacing, µm.
    #[serde(default = "default_spacing")]
    pub spacing: f64,
    /// Per-site Rabi offsets δΩ_i (empty = none).
    #[serde(default)]
    pub omega_offsets: Vec<f64>,
    /// Per-site detuning offsets δΔ_i (empty = none).
    #[serde(default)]
    pub delta_offsets: Vec<f64>,
    /// Per-site position displacements along the chain, µm (empty = none).
    #[serde(default)]
    pub displacements: Vec<f64>,
    /// Explicit interaction graph; replaces the 1/R⁶ chain when present.
    #[serde(default)]
    pub bonds: Option<Vec<Bond>>,
}

impl RydbergSpec {
    /// Uniform chain with default C6 and spacing.
    pub fn chain(n: usize, omega: f64, delta: f64) -> Self {
        RydbergSpec {
            n,
            omega,
            delta,
            c6: C6_DEFAULT,
            spacing: SPACING_DEFAULT,
            omega_offsets: Vec::new(),
            delta_offsets: Vec::new(),
            displacements: Vec::new(),
            bonds: None,
        }
    }

    /// Next-nearest-neighbour interaction C6/(2a)⁶.
    pub fn v_nnn(&self) -> f64 {
        self.c6 / (2.0 * self.spacing).powi(6)
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidInput("Rydberg chain needs at least one site".into()));
        }
        if !(self.spacing > 0.0) {
            return Err(Error::InvalidInput(format!("spacing {} must be positive", self.spacing)));
        }
        for (name, v) in [
            ("omega_offsets", &self.omega_offsets),
            ("delta_offsets", &self.delta_offsets),
            ("displacements", &self.displacements),
        ] {
            if !v.is_empty() && v.len() != self.n {
                return Err(Error::Mismatch(format!("{name} has {} entries for {} sites", v.len(), self.n)));
            }
        }
        if let Some(b) = &self.bonds {
            if let Some(bad) = b.iter().find(|b| b.i >= self.n || b.j >= self.n || b.i == b.j) {
                return Err(Error::InvalidInput(format!("bond ({}, {}) invalid", bad.i, bad.j)));
            }
        }
        Ok(())
    }

    fn site(v: &[f64], i: usize) -> f64 {
        v.get(i).copied().unwrap_or(0.0)
    }

    pub fn omega_at(&self, i: usize) -> f64 {
        self.omega + Self::site(&self.omega_offsets, i)
    }

    pub fn delta_at(&self, i: usize) -> f64 {
        self.delta + Self::site(&self.delta_offsets, i)
    }

    /// All interaction bonds `(i, j, V_ij)` with `i < j`.
    pub fn interactions(&self) -> Vec<(usize, usize, f64)> {
        if let Some(b) = &self.bonds {
            // symmetric by construction: store each pair once
            let mut out: Vec<(usize, usize, f64)> = Vec::new();
            for b in b {
                let (i, j) = (b.i.min(b.j), b.i.max(b.j));
                match out.iter_mut().find(|e| e.0 == i && e.1 == j) {
                    Some(e) => e.2 += b.v,
                    None => out.push((i, j, b.v)),
                }
            }
            return out;
        }
        let x = |i: usize| self.spacing * i as f64 + Self::site(&self.displacements, i);
        let mut out = Vec::with_capacity(self.n * self.n / 2);
        for i in 0..self.n {
            for j in i + 1..self.n {
                let r = (x(j) - x(i)).abs();
                out.push((i, j, self.c6 / r.powi(6)));
            }
        }
        out
    }
}

/// Rydberg Hamiltonian split into a static part and global drift generators.
#[derive(Clone, Debug)]
pub struct RydbergTerms {
    pub static_h: SparseMatrix,
    /// `Σ_i σˣ_i` (drift enters as δΩ(t)/2 times this).
    pub flip_total: SparseMatrix,
    /// `Σ_i n_i` (drift enters as −δΔ(t) times this).
    pub n_total: SparseMatrix,
}

/// Rydberg Hamiltonian on the given basis (any constraint and sector).
pub fn build_rydberg(spec: &RydbergSpec, basis: &BasisMap) -> Result<SparseMatrix> {
    Ok(rydberg_terms(spec, basis)?.static_h)
}

/// Static Hamiltonian plus the operators needed for global drifts.
pub fn rydberg_terms(spec: &RydbergSpec, basis: &BasisMap) -> Result<RydbergTerms> {
    spec.validate()?;
    if spec.n != basis.n_sites() {
        return Err(Error::Mismatch(format!("spec has {} sites, basis has {}", spec.n, basis.n_sites())));
    }
    if basis.sector() != Sector::All {
        let parent = basis.parent()?;
        let t = rydberg_terms(spec, &parent)?;
        return Ok(RydbergTerms {
            static_h: restrict_to_sector(&t.static_h, &parent, basis)?,
            flip_total: restrict_to_sector(&t.flip_total, &parent, basis)?,
            n_total: restrict_to_sector(&t.n_total, &parent, basis)?,
        });
    }
    let n = spec.n;
    let bonds = spec.interactions();
    let dim = basis.dim();
    let mut h = Vec::with_capacity(dim * (n + 1));
    let mut flips = Vec::with_capacity(dim * n);
    let mut occ = Vec::with_capacity(dim);
    for idx in 0..dim {
        let z = basis.state(idx);
        let mut diag = 0.0;
        for i in 0..n {
            if get_bit(z, n, i) {
                diag -= spec.delta_at(i);
            }
        }
        for &(i, j, v) in &bonds {
            if get_bit(z, n, i) && get_bit(z, n, j) {
                diag += v;
            }
        }
        h.push((idx, idx, Complex64::new(diag, 0.0)));
        occ.push((idx, idx, Complex64::new(z.count_ones() as f64, 0.0)));
        for i in 0..n {
            let z2 = z ^ (1u64 << (n - 1 - i));
            if !basis.allows(z2) {
                continue;
            }
            if let Some(j) = basis.index_of_value(z2) {
                h.push((idx, j, Complex64::new(spec.omega_at(i) / 2.0, 0.0)));
                flips.push((idx, j, Complex64::new(1.0, 0.0)));
            }
        }
    }
    Ok(RydbergTerms {
        static_h: SparseMatrix::from_triplets(dim, h),
        flip_total: SparseMatrix::from_triplets(dim, flips),
        n_total: SparseMatrix::from_triplets(dim, occ),
    })
}

/// Compress an operator on the parent basis into a parity sector (`VᵀHV`).
pub fn restrict_to_sector(h: &SparseMatrix, parent: &BasisMap, sector: &BasisMap) -> Result<SparseMatrix> {
    let cols = sector.sector_embedding(parent)?;
    let mut owner = vec![Vec::new(); parent.dim()];
    for (k, col) in cols.iter().enumerate() {
        for &(p, w) in col {
            owner[p].push((k, w));
        }
    }
    let mut t = Vec::new();
    for (r, c, v) in h.entries() {
        for &(kr, wr) in &owner[r] {
            for &(kc, wc) in &owner[c] {
                t.push((kr, kc, v * (wr * wc)));
            }
        }
    }
    Ok(SparseMatrix::from_triplets(sector.dim(), t))
}

/// Generic chain Hamiltonian:
/// `Σ_i (hx_i Sˣ_i + hy_i Sʸ_i + hz_i Sᶻ_i) + Σ_bonds J Sˣ_i Sˣ_j`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuenchSpec {
    pub n: usize,
    pub hx: Vec<f64>,
    pub hy: Vec<f64>,
    pub hz: Vec<f64>,
    /// `(i, j, J)` couplings on Sˣ_i Sˣ_j.
    pub xx: Vec<(usize, usize, f64)>,
}

impl QuenchSpec {
    /// Translation-invariant fields with nearest-neighbour XX coupling.
    pub fn uniform(n: usize, hx: f64, hy: f64, hz: f64, jxx: f64) -> Self {
        QuenchSpec {
            n,
            hx: vec![hx; n],
            hy: vec![hy; n],
            hz: vec![hz; n],
            xx: (0..n.saturating_sub(1)).map(|i| (i, i + 1, jxx)).collect(),
        }
    }

    /// Every coefficient multiplied by `s`.
    pub fn scaled(mut self, s: f64) -> Self {
        for v in [&mut self.hx, &mut self.hy, &mut self.hz] {
            v.iter_mut().for_each(|x| *x *= s);
        }
        self.xx.iter_mut().for_each(|b| b.2 *= s);
        self
    }
}

/// Builds a [`QuenchSpec`] on the full basis.
pub fn build_quench(spec: &QuenchSpec, basis: &BasisMap) -> Result<SparseMatrix> {
    let n = spec.n;
    if basis.n_sites() != n {
        return Err(Error::Mismatch(format!("spec has {n} sites, basis has {}", basis.n_sites())));
    }
    if basis.constraint() != Constraint::Full || basis.sector() != Sector::All {
        return Err(Error::InvalidInput("spin-chain models need the full basis".into()));
    }
    for (name, v) in [("hx", &spec.hx), ("hy", &spec.hy), ("hz", &spec.hz)] {
        if v.len() != n {
            return Err(Error::Mismatch(format!("{name} has {} entries for {n} sites", v.len())));
        }
    }
    if let Some(b) = spec.xx.iter().find(|b| b.0 >= n || b.1 >= n || b.0 == b.1) {
        return Err(Error::InvalidInput(format!("coupling ({}, {}) invalid", b.0, b.1)));
    }
    let dim = basis.dim();
    let mut t = Vec::with_capacity(dim * (n + spec.xx.len() + 1));
    for z in 0..dim as u64 {
        let r = z as usize;
        let mut diag = 0.0;
        for i in 0..n {
            let up = !get_bit(z, n, i); // |0⟩ has Sᶻ = +1/2
            diag += if up { 0.5 } else { -0.5 } * spec.hz[i];
            let mask = 1u64 << (n - 1 - i);
            let c = (z ^ mask) as usize;
            // ⟨c|Sˣ|z⟩ = 1/2; ⟨1|Sʸ|0⟩ = i/2, ⟨0|Sʸ|1⟩ = −i/2
            let sy = if up { Complex64::new(0.0, 0.5) } else { Complex64::new(0.0, -0.5) };
            let v = Complex64::new(0.5 * spec.hx[i], 0.0) + sy * spec.hy[i];
            t.push((c, r, v));
        }
        if diag != 0.0 {
            t.push((r, r, Complex64::new(diag, 0.0)));
        }
        for &(i, j, jv) in &spec.xx {
            let mask = (1u64 << (n - 1 - i)) | (1u64 << (n - 1 - j));
            t.push(((z ^ mask) as usize, r, Complex64::new(0.25 * jv, 0.0)));
        }
    }
    Ok(SparseMatrix::from_triplets(dim, t))
}

/// Long-range trapped-ion chain
/// `J[Σ (fx Sˣ + fy Sʸ) + Σ_{i<j} Sˣ_i Sˣ_j/|i−j|]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IonSpec {
    pub n: usize,
    /// Global scale.
    pub j: f64,
    #[serde(default = "IonSpec::default_fx")]
    pub field_x: f64,
    #[serde(default = "IonSpec::default_fy")]
    pub field_y: f64,
}

impl IonSpec {
    fn default_fx() -> f64 {
        0.4
    }
    fn default_fy() -> f64 {
        0.45
    }

    pub fn new(n: usize, j: f64) -> Self {
        IonSpec { n, j, field_x: 0.4, field_y: 0.45 }
    }

    pub fn to_quench(&self) -> QuenchSpec {
        let n = self.n;
        let mut xx = Vec::new();
        for i in 0..n {
            for k in i + 1..n {
                xx.push((i, k, self.j / (k - i) as f64));
            }
        }
        QuenchSpec { n, hx: vec![self.j * self.field_x; n], hy: vec![self.j * self.field_y; n], hz: vec![0.0; n], xx }
    }
}

/// Builds the ion Hamiltonian on a full basis.
pub fn build_ion(spec: &IonSpec, basis: &BasisMap) -> Result<SparseMatrix> {
    if spec.n < 2 {
        return Err(Error::InvalidInput("ion chain needs at least two sites".into()));
    }
    build_quench(&spec.to_quench(), basis)
}

/// Mixed-field Ising chain `Σ (0.22 Sˣ + 0.25 Sʸ) + Σ Sˣ_i Sˣ_{i+1} + Σ J_i Sᶻ_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QimfSpec {
    pub n: usize,
    #[serde(default = "QimfSpec::default_fx")]
    pub field_x: f64,
    #[serde(default = "QimfSpec::default_fy")]
    pub field_y: f64,
    #[serde(default = "QimfSpec::default_coupling")]
    pub coupling: f64,
    /// Site fields J_i on Sᶻ (empty = all zero).
    #[serde(default)]
    pub z_fields: Vec<f64>,
}

impl QimfSpec {
    fn default_fx() -> f64 {
        0.22
    }
    fn default_fy() -> f64 {
        0.25
    }
    fn default_coupling() -> f64 {
        1.0
    }

    pub fn new(n: usize) -> Self {
        QimfSpec { n, field_x: 0.22, field_y: 0.25, coupling: 1.0, z_fields: Vec::new() }
    }

    pub fn with_fields(mut self, z: Vec<f64>) -> Self {
        self.z_fields = z;
        self
    }

    pub fn to_quench(&self) -> QuenchSpec {
        let mut q = QuenchSpec::uniform(self.n, self.field_x, self.field_y, 0.0, self.coupling);
        if !self.z_fields.is_empty() {
            q.hz = self.z_fields.clone();
        }
        q
    }
}

/// Builds the mixed-field Ising Hamiltonian on a full basis.
pub fn build_qimf(spec: &QimfSpec, basis: &BasisMap) -> Result<SparseMatrix> {
    if spec.n < 2 {
        return Err(Error::InvalidInput("Ising chain needs at least two sites".into()));
    }
    if !spec.z_fields.is_empty() && spec.z_fields.len() != spec.n {
        return Err(Error::Mismatch(format!("{} z fields for {} sites", spec.z_fields.len(), spec.n)));
    }
    build_quench(&spec.to_quench(), basis)
}

/// Disorder draw for the typicality ensemble: `J_i ~ U[−w, w]` followed by
/// mean subtraction, so `Σ J_i = 0`. Returns `(shifted, raw)`.
pub fn sample_qimf_fields<R: Rng + ?Sized>(n: usize, width: f64, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(-width..=width)).collect();
    let mean = raw.iter().sum::<f64>() / n as f64;
    (raw.iter().map(|x| x - mean).collect(), raw)
}

/// Lowest `k` eigenpairs of a Hamiltonian.
pub fn ground_state(h: &SparseMatrix, k: usize) -> Result<Eigenpairs> {
    lowest_eigenpairs(h, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Operator;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn test_single_atom() {
        let b = BasisMap::full(1).unwrap();
        let h = build_rydberg(&RydbergSpec::chain(1, 2.0, 0.0), &b).unwrap().to_dense();
        assert_eq!(h[(0, 1)], c(1.0));
        assert_eq!(h[(1, 0)], c(1.0));
        assert_eq!(h[(0, 0)], c(0.0));
        assert_eq!(h[(1, 1)], c(0.0));
    }

    #[test]
    fn test_interaction_values() {
        let b = BasisMap::full(2).unwrap();
        let h = build_rydberg(&RydbergSpec::chain(2, 0.0, 0.0), &b).unwrap();
        let want = C6_DEFAULT / 3.75f64.powi(6);
        assert!((h.get(3, 3).re - want).abs() < 1e-9);
        let s = RydbergSpec::chain(3, 0.0, 0.0);
        assert!((s.v_nnn() - 1.40).abs() < 0.005, "{}", s.v_nnn());
        let h3 = build_rydberg(&s, &BasisMap::full(3).unwrap()).unwrap();
        assert!((h3.get(0b101, 0b101).re - s.v_nnn()).abs() < 1e-12);
    }

    #[test]
    fn test_detuning_diagonal() {
        let s = RydbergSpec::chain(3, 1.0, 0.7);
        let b = BasisMap::blockade(3).unwrap();
        let h = build_rydberg(&s, &b).unwrap();
        let i = b.index_of_value(0b100).unwrap();
        assert!((h.get(i, i).re + 0.7).abs() < 1e-15);
    }

    #[test]
    fn test_hermitian_and_blockade_restriction() {
        for n in 2..=12 {
            let mut s = RydbergSpec::chain(n, 4.7, 0.9);
            s.delta_offsets = (0..n).map(|i| 0.1 * i as f64).collect();
            s.displacements = (0..n).map(|i| 0.01 * (i as f64).sin()).collect();
            let full = BasisMap::full(n).unwrap();
            let blk = BasisMap::blockade(n).unwrap();
            let hf = build_rydberg(&s, &full).unwrap();
            let hb = build_rydberg(&s, &blk).unwrap();
            assert!(hf.hermiticity_error() <= 1e-12);
            assert!(hb.hermiticity_error() <= 1e-12);
            for r in 0..blk.dim() {
                for cc in 0..blk.dim() {
                    let fr = blk.state(r) as usize;
                    let fc = blk.state(cc) as usize;
                    assert_eq!(hb.get(r, cc), hf.get(fr, fc));
                }
            }
        }
    }

    #[test]
    fn test_commutes_with_reversal() {
        for n in 2..=10 {
            let s = RydbergSpec::chain(n, 4.7, 0.9);
            let b = BasisMap::blockade(n).unwrap();
            let h = build_rydberg(&s, &b).unwrap().to_dense();
            let d = b.dim();
            let mut q = nalgebra::DMatrix::<Complex64>::zeros(d, d);
            for i in 0..d {
                let j = b.index_of(&b.bitstring(i).parity_partner()).unwrap();
                q[(j, i)] = c(1.0);
            }
            let comm = &h * &q - &q * &h;
            assert!(comm.iter().all(|x| x.norm() <= 1e-10));
        }
    }

    #[test]
    fn test_sector_blocks_reproduce_spectrum() {
        let s = RydbergSpec::chain(8, 4.7, 0.9);
        let parent = BasisMap::blockade(8).unwrap();
        let even = BasisMap::new(8, Constraint::Blockade, Sector::Even).unwrap();
        let odd = BasisMap::new(8, Constraint::Blockade, Sector::Odd).unwrap();
        let mut all: Vec<f64> = crate::linalg::hermitian_eigenvalues(&build_rydberg(&s, &parent).unwrap().to_dense());
        let mut split: Vec<f64> = crate::linalg::hermitian_eigenvalues(&build_rydberg(&s, &even).unwrap().to_dense());
        split.extend(crate::linalg::hermitian_eigenvalues(&build_rydberg(&s, &odd).unwrap().to_dense()));
        all.sort_by(f64::total_cmp);
        split.sort_by(f64::total_cmp);
        for (a, b) in all.iter().zip(&split) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn test_ion_terms() {
        let b2 = BasisMap::full(2).unwrap();
        let mut spec = IonSpec::new(2, 1.0);
        spec.field_x = 0.0;
        spec.field_y = 0.0;
        let h = build_ion(&spec, &b2).unwrap();
        // Sˣ₁Sˣ₂ with coefficient 1: ⟨11|H|00⟩ = 1/4
        assert!((h.get(3, 0) - c(0.25)).norm() < 1e-15);
        let b3 = BasisMap::full(3).unwrap();
        let mut s3 = IonSpec::new(3, 1.0);
        s3.field_x = 0.0;
        s3.field_y = 0.0;
        let h3 = build_ion(&s3, &b3).unwrap();
        let near = h3.get(0b110, 0).re;
        let far = h3.get(0b101, 0).re;
        assert!((far - near / 2.0).abs() < 1e-15);
        let full = build_ion(&IonSpec::new(5, 1.3), &BasisMap::full(5).unwrap()).unwrap();
        let tr: Complex64 = (0..32).map(|i| full.get(i, i)).sum();
        assert!(tr.norm() < 1e-12);
        assert!(full.hermiticity_error() <= 1e-12);
        assert!(build_ion(&IonSpec::new(3, 1.0), &BasisMap::blockade(3).unwrap()).is_err());
    }

    #[test]
    fn test_spin_conventions() {
        // hy Sʸ on |0⟩ gives (i/2)|1⟩
        let b = BasisMap::full(1).unwrap();
        let q = QuenchSpec { n: 1, hx: vec![0.0], hy: vec![1.0], hz: vec![1.0], xx: vec![] };
        let h = build_quench(&q, &b).unwrap();
        let mut y = vec![Complex64::default(); 2];
        h.apply(&[c(1.0), c(0.0)], &mut y);
        assert!((y[0] - c(0.5)).norm() < 1e-15);
        assert!((y[1] - Complex64::new(0.0, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn test_qimf_fields() {
        let b = BasisMap::full(6).unwrap();
        let h0 = build_qimf(&QimfSpec::new(6), &b).unwrap();
        let hz = build_qimf(&QimfSpec::new(6).with_fields(vec![0.0; 6]), &b).unwrap();
        assert_eq!(h0, hz);
        let mut rng = crate::random::stream(3, 0);
        for _ in 0..200 {
            let (j, raw) = sample_qimf_fields(10, 0.5, &mut rng);
            assert!(raw.iter().all(|x| (-0.5..=0.5).contains(x)));
            assert!(j.iter().sum::<f64>().abs() < 1e-14);
        }
    }

    #[test]
    fn test_ground_state_single_spin() {
        let b = BasisMap::full(1).unwrap();
        let h = build_rydberg(&RydbergSpec::chain(1, 3.0, 0.0), &b).unwrap();
        let g = ground_state(&h, 1).unwrap();
        assert!((g.values[0] + 1.5).abs() < 1e-12);
    }

    #[test]
    fn test_z2_ground_state() {
        // Δ/Ω = 3 and V_nnn/Ω = 0.26 near the ordering transition
        let n = 15;
        let omega = 5.3;
        let mut s = RydbergSpec::chain(n, omega, 3.0 * omega);
        s.c6 = 0.26 * omega * (2.0 * s.spacing).powi(6);
        let b = BasisMap::blockade(n).unwrap();
        let h = build_rydberg(&s, &b).unwrap();
        let g = ground_state(&h, 2).unwrap();
        assert!(g.values[0] <= g.values[1]);
        let v = &g.vectors[0];
        let mut occ = vec![0.0; n];
        for (i, a) in v.iter().enumerate() {
            let z = b.state(i);
            for (k, o) in occ.iter_mut().enumerate() {
                if get_bit(z, n, k) {
                    *o += a.norm_sqr();
                }
            }
        }
        // staggered: even sites (0, 2, ...) well above odd neighbours
        for k in (0..n - 1).step_by(2) {
            assert!(occ[k] > occ[k + 1] + 0.3, "{occ:?}");
        }
        let mut y = vec![Complex64::default(); b.dim()];
        h.apply(v, &mut y);
        let res: f64 = y.iter().zip(v).map(|(a, x)| (a - x * g.values[0]).norm_sqr()).sum::<f64>().sqrt();
        assert!(res <= 1e-8);
        let ov: Complex64 = g.vectors[0].iter().zip(&g.vectors[1]).map(|(a, b)| a.conj() * b).sum();
        assert!(ov.norm() < 1e-10);
    }
}
