//! Gate kernels, circuit application and stochastic Pauli noise.

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{inner, Constraint, Sector, StateVector};
use crate::models::{Circuit, Layer};
use crate::random::stream;
use crate::stats::Estimate;

use super::EvolutionResult;

/// Applies a single-qubit matrix on `site` of an `n`-qubit full-basis vector.
pub fn apply_single(psi: &mut [Complex64], n: usize, site: usize, u: &Matrix2<Complex64>) {
    let m = 1usize << (n - 1 - site);
    for z in 0..psi.len() {
        if z & m != 0 {
            continue;
        }
        let (a, b) = (psi[z], psi[z | m]);
        psi[z] = u[(0, 0)] * a + u[(0, 1)] * b;
        psi[z | m] = u[(1, 0)] * a + u[(1, 1)] * b;
    }
}

/// Applies a two-qubit matrix on `(i, j)`; matrix index is `2·b_i + b_j`.
pub fn apply_two(psi: &mut [Complex64], n: usize, i: usize, j: usize, u: &Matrix4<Complex64>) {
    let mi = 1usize << (n - 1 - i);
    let mj = 1usize << (n - 1 - j);
    for z in 0..psi.len() {
        if z & (mi | mj) != 0 {
            continue;
        }
        let idx = [z, z | mj, z | mi, z | mi | mj];
        let v = [psi[idx[0]], psi[idx[1]], psi[idx[2]], psi[idx[3]]];
        for (r, &k) in idx.iter().enumerate() {
            psi[k] = u[(r, 0)] * v[0] + u[(r, 1)] * v[1] + u[(r, 2)] * v[2] + u[(r, 3)] * v[3];
        }
    }
}

/// Single-qubit Pauli operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pauli {
    X,
    Y,
    Z,
}

pub fn apply_pauli(psi: &mut [Complex64], n: usize, site: usize, p: Pauli) {
    let m = 1usize << (n - 1 - site);
    let i = Complex64::new(0.0, 1.0);
    for z in 0..psi.len() {
        if z & m != 0 {
            continue;
        }
        let (a, b) = (psi[z], psi[z | m]);
        match p {
            Pauli::X => {
                psi[z] = b;
                psi[z | m] = a;
            }
            Pauli::Y => {
                psi[z] = -i * b;
                psi[z | m] = i * a;
            }
            Pauli::Z => psi[z | m] = -b,
        }
    }
}

pub fn apply_layer(psi: &mut [Complex64], n: usize, layer: &Layer) {
    for (q, r) in &layer.rotations {
        apply_single(psi, n, *q, r);
    }
    for g in &layer.gates {
        apply_two(psi, n, g.i, g.j, &g.u);
    }
}

fn check_full(circuit: &Circuit, psi0: &StateVector) -> Result<()> {
    let b = psi0.basis();
    if b.constraint() != Constraint::Full || b.sector() != Sector::All {
        return Err(Error::InvalidInput("circuits act on the full basis".into()));
    }
    if b.n_sites() != circuit.n_qubits() {
        return Err(Error::Mismatch(format!("circuit on {} qubits, state on {}", circuit.n_qubits(), b.n_sites())));
    }
    Ok(())
}

/// States after every layer; `times[d]` is the depth `d` (0 = input).
pub fn apply_circuit(circuit: &Circuit, psi0: &StateVector) -> Result<EvolutionResult> {
    check_full(circuit, psi0)?;
    let n = circuit.n_qubits();
    let mut psi = psi0.amps().to_vec();
    let mut states = vec![psi0.clone()];
    for layer in &circuit.layers {
        apply_layer(&mut psi, n, layer);
        states.push(StateVector::normalized(psi0.basis().clone(), psi.clone())?);
    }
    let times = (0..states.len()).map(|d| d as f64).collect();
    EvolutionResult::from_states(times, states)
}

/// Trajectory-averaged output of a circuit with stochastic Pauli errors.
#[derive(Clone, Debug, Serialize)]
pub struct NoisyCircuitResult {
    /// Depths 0..=D.
    pub depths: Vec<usize>,
    /// Noiseless bitstring distributions per depth.
    pub ideal: Vec<Vec<f64>>,
    /// Trajectory-averaged bitstring distributions per depth.
    pub noisy: Vec<Vec<f64>>,
    /// ⟨ψ|ρ|ψ⟩ per depth.
    pub fidelity: Vec<Estimate>,
    pub n_traj: usize,
}

struct Accum {
    probs: Vec<Vec<f64>>,
    f_sum: Vec<f64>,
    f_sq: Vec<f64>,
}

impl Accum {
    fn new(depths: usize, dim: usize) -> Self {
        Accum { probs: vec![vec![0.0; dim]; depths], f_sum: vec![0.0; depths], f_sq: vec![0.0; depths] }
    }

    fn merge(&mut self, o: &Accum) {
        for (a, b) in self.probs.iter_mut().zip(&o.probs) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        self.f_sum.iter_mut().zip(&o.f_sum).for_each(|(x, y)| *x += y);
        self.f_sq.iter_mut().zip(&o.f_sq).for_each(|(x, y)| *x += y);
    }
}

/// Trajectories per work item; fixed so results do not depend on threads.
pub(crate) const CHUNK: usize = 64;

/// After each layer every qubit independently suffers a uniformly chosen
/// Pauli with probability `gamma`.
pub fn run_noisy_circuit(
    circuit: &Circuit,
    gamma: f64,
    psi0: &StateVector,
    n_traj: usize,
    seed: u64,
) -> Result<NoisyCircuitResult> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidInput(format!("error rate {gamma} outside [0, 1]")));
    }
    if n_traj == 0 {
        return Err(Error::InvalidInput("need at least one trajectory".into()));
    }
    let ideal_run = apply_circuit(circuit, psi0)?;
    let n = circuit.n_qubits();
    let dim = psi0.basis().dim();
    let nd = ideal_run.states.len();
    let ideal: Vec<Vec<f64>> =
        ideal_run.states.iter().map(|s| s.amps().iter().map(|a| a.norm_sqr()).collect()).collect();
    let chunks: Vec<Accum> = (0..n_traj.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = Accum::new(nd, dim);
            for t in c * CHUNK..((c + 1) * CHUNK).min(n_traj) {
                let mut rng = stream(seed, t as u64);
                // None while no error has struck: the state is the ideal one
                let mut psi: Option<Vec<Complex64>> = None;
                for d in 0..nd {
                    if d > 0 {
                        if let Some(p) = psi.as_mut() {
                            apply_layer(p, n, &circuit.layers[d - 1]);
                        }
                        for q in 0..n {
                            if gamma > 0.0 && rng.random::<f64>() < gamma {
                                let p = psi.get_or_insert_with(|| ideal_run.states[d].amps().to_vec());
                                let op = [Pauli::X, Pauli::Y, Pauli::Z][rng.random_range(0..3)];
                                apply_pauli(p, n, q, op);
                            }
                        }
                    }
                    match &psi {
                        None => {
                            acc.probs[d].iter_mut().zip(&ideal[d]).for_each(|(a, p)| *a += p);
                            acc.f_sum[d] += 1.0;
                            acc.f_sq[d] += 1.0;
                        }
                        Some(p) => {
                            acc.probs[d].iter_mut().zip(p).for_each(|(a, x)| *a += x.norm_sqr());
                            let f = inner(ideal_run.states[d].amps(), p).norm_sqr();
                            acc.f_sum[d] += f;
                            acc.f_sq[d] += f * f;
                        }
                    }
                }
            }
            acc
        })
        .collect();
    let mut total = Accum::new(nd, dim);
    for c in &chunks {
        total.merge(c);
    }
    let inv = 1.0 / n_traj as f64;
    Ok(NoisyCircuitResult {
        depths: (0..nd).collect(),
        ideal,
        noisy: total.probs.into_iter().map(|p| p.into_iter().map(|x| x * inv).collect()).collect(),
        fidelity: (0..nd).map(|d| Estimate::from_sums(total.f_sum[d], total.f_sq[d], n_traj)).collect(),
        n_traj,
    })
}
