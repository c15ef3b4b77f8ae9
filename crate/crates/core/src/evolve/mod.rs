//! Exact and noisy time evolution, circuit application, sampling and
//! observables.

mod circuit;
mod noise;
mod sampling;
mod trajectory;

pub use circuit::{
    apply_circuit, apply_layer, apply_pauli, apply_single, apply_two, run_noisy_circuit, NoisyCircuitResult, Pauli,
};
pub use noise::{Drift, NoiseModel, SpamParams};
pub use sampling::{apply_spam, sample_bitstrings, sample_from_distribution, SampleSet};
pub use trajectory::{run_trajectories, Jump, Trajectory, TrajectoryEnsemble, TrajectoryOptions};

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{get_bit, reverse_bits, Bipartition, Sector, StateVector};
use crate::linalg::{expm_krylov, hermitian_eigenvalues, EigenPropagator, KrylovOptions, SparseMatrix, DENSE_LIMIT};

/// Per-time diagnostics of a pure state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observables {
    /// Entanglement entropy across the bipartition, bits.
    pub entropy: f64,
    /// ⟨n_i⟩ per site.
    pub occupations: Vec<f64>,
    /// Probability on blockade-legal bitstrings.
    pub blockade_weight: f64,
    /// ⟨Q⟩ for the site-reversal operator Q.
    pub parity: f64,
}

/// States and observables along a time (or depth) axis.
#[derive(Clone, Debug)]
pub struct EvolutionResult {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    pub observables: Vec<Observables>,
}

#[derive(Serialize)]
struct ObservableRecord<'a> {
    time: f64,
    #[serde(flatten)]
    obs: &'a Observables,
}

impl EvolutionResult {
    fn from_states(times: Vec<f64>, states: Vec<StateVector>) -> Result<Self> {
        let observables = states.iter().map(|s| observables(s, None)).collect::<Result<Vec<_>>>()?;
        Ok(EvolutionResult { times, states, observables })
    }

    /// Observables as a JSON array of `{time, entropy, occupations, …}`.
    pub fn observables_json(&self) -> serde_json::Value {
        let recs: Vec<ObservableRecord> =
            self.times.iter().zip(&self.observables).map(|(&time, obs)| ObservableRecord { time, obs }).collect();
        serde_json::to_value(recs).expect("observables serialize")
    }

    /// CSV dump `time_index,bitstring,re,im` of every stored amplitude.
    pub fn write_amplitudes_csv(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "time_index,bitstring,re,im")?;
        for (t, s) in self.states.iter().enumerate() {
            let b = s.basis();
            for (i, a) in s.amps().iter().enumerate() {
                writeln!(w, "{t},{},{:e},{:e}", b.bitstring(i), a.re, a.im)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Propagator that picks dense diagonalization for small bases and Krylov
/// stepping otherwise.
pub enum Propagator<'a> {
    Dense(EigenPropagator),
    Krylov(&'a SparseMatrix, KrylovOptions),
}

impl<'a> Propagator<'a> {
    pub fn new(h: &'a SparseMatrix) -> Self {
        use crate::linalg::Operator;
        if h.dim() <= DENSE_LIMIT {
            Propagator::Dense(EigenPropagator::new(h))
        } else {
            Propagator::Krylov(h, KrylovOptions::default())
        }
    }

    /// ψ ← exp(−2πi t H) ψ.
    pub fn step(&self, psi: &mut Vec<Complex64>, t: f64) -> Result<()> {
        match self {
            Propagator::Dense(p) => {
                *psi = p.apply(psi, TAU * t);
                Ok(())
            }
            Propagator::Krylov(h, o) => expm_krylov(*h, psi, TAU * t, o).map(|_| ()),
        }
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidInput("no evolution times".into()));
    }
    if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("times must be finite and strictly increasing".into()));
    }
    Ok(())
}

/// `ψ(t) = exp(−2πi t H) ψ0` at each requested time (ψ0 sits at t = 0),
/// with observables.
pub fn evolve_exact(h: &SparseMatrix, psi0: &StateVector, times: &[f64]) -> Result<EvolutionResult> {
    EvolutionResult::from_states(times.to_vec(), evolve_states(h, psi0, times)?)
}

/// The states of [`evolve_exact`] without observables.
pub fn evolve_states(h: &SparseMatrix, psi0: &StateVector, times: &[f64]) -> Result<Vec<StateVector>> {
    use crate::linalg::Operator;
    check_times(times)?;
    if h.dim() != psi0.basis().dim() {
        return Err(Error::Mismatch(format!("Hamiltonian dim {} vs state dim {}", h.dim(), psi0.basis().dim())));
    }
    let prop = Propagator::new(h);
    let basis = psi0.basis().clone();
    let mut states = Vec::with_capacity(times.len());
    match &prop {
        Propagator::Dense(p) => {
            for &t in times {
                let amps = p.apply(psi0.amps(), TAU * t);
                states.push(StateVector::normalized(basis.clone(), amps)?);
            }
        }
        Propagator::Krylov(..) => {
            let mut psi = psi0.amps().to_vec();
            let mut now = 0.0;
            for &t in times {
                prop.step(&mut psi, t - now)?;
                now = t;
                states.push(StateVector::normalized(basis.clone(), psi.clone())?);
            }
        }
    }
    Ok(states)
}

/// Observables of a pure state. Entropy is taken across `bip`, or across the
/// half-chain cut when `None` (zero for a single site).
pub fn observables(state: &StateVector, bip: Option<&Bipartition>) -> Result<Observables> {
    let state = if state.basis().sector() == Sector::All {
        std::borrow::Cow::Borrowed(state)
    } else {
        std::borrow::Cow::Owned(state.lift()?)
    };
    let n = state.basis().n_sites();
    let entropy = match bip {
        Some(b) => entanglement_entropy(&state, b)?,
        None if n >= 2 => entanglement_entropy(&state, &Bipartition::half_chain(n)?)?,
        None => 0.0,
    };
    let b = state.basis();
    let mut occupations = vec![0.0; n];
    let mut blockade_weight = 0.0;
    for (i, a) in state.amps().iter().enumerate() {
        let p = a.norm_sqr();
        let z = b.state(i);
        for (k, o) in occupations.iter_mut().enumerate() {
            if get_bit(z, n, k) {
                *o += p;
            }
        }
        if z & (z >> 1) == 0 {
            blockade_weight += p;
        }
    }
    Ok(Observables { entropy, occupations, blockade_weight, parity: parity_expectation(&state) })
}

/// ⟨ψ|Q|ψ⟩ with Q the site-reversal permutation.
pub fn parity_expectation(state: &StateVector) -> f64 {
    let b = state.basis();
    let n = b.n_sites();
    let a = state.amps();
    (0..b.dim())
        .map(|i| {
            let m = reverse_bits(b.state(i), n);
            match b.index_of_value(m) {
                Some(j) => (a[j].conj() * a[i]).re,
                None => 0.0,
            }
        })
        .sum()
}

/// Von Neumann entropy (bits) of the reduced state on A.
pub fn entanglement_entropy(state: &StateVector, bip: &Bipartition) -> Result<f64> {
    let b = state.basis();
    if b.sector() != Sector::All {
        return entanglement_entropy(&state.lift()?, bip);
    }
    if bip.n_sites() != b.n_sites() {
        return Err(Error::Mismatch("bipartition and state differ in size".into()));
    }
    let mut ia: HashMap<u64, usize> = HashMap::new();
    let mut ib: HashMap<u64, usize> = HashMap::new();
    let mut entries = Vec::with_capacity(b.dim());
    for (i, amp) in state.amps().iter().enumerate() {
        let (za, zb) = bip.split_value(b.state(i));
        let na = ia.len();
        let ka = *ia.entry(za).or_insert(na);
        let nb = ib.len();
        let kb = *ib.entry(zb).or_insert(nb);
        entries.push((ka, kb, *amp));
    }
    // reduced density matrix on whichever side is smaller
    let (dim, swap) = if ia.len() <= ib.len() { (ia.len(), false) } else { (ib.len(), true) };
    let mut cols: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); if swap { ia.len() } else { ib.len() }];
    for (ka, kb, a) in entries {
        let (row, col) = if swap { (kb, ka) } else { (ka, kb) };
        cols[col].push((row, a));
    }
    let mut rho = nalgebra::DMatrix::<Complex64>::zeros(dim, dim);
    for list in &cols {
        for &(r, x) in list {
            for &(c, y) in list {
                rho[(r, c)] += x * y.conj();
            }
        }
    }
    Ok(hermitian_eigenvalues(&rho).into_iter().filter(|&l| l > 1e-15).map(|l| -l * l.log2()).sum())
}

/// Page value of the mean half-chain entropy for `n` qubits (large-n form).
pub fn page_entropy(n: usize) -> f64 {
    n as f64 / 2.0 - std::f64::consts::LOG2_E / 2.0
}
