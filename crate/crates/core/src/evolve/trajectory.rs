//! Monte Carlo wavefunction trajectories for the Rydberg chain.
//!
//! Each step is `damp(h/2) · exp(−2πi h H_k) · damp(h/2)` where `H_k` holds the
//! drift values of the current grid cell and `damp` applies the non-Hermitian
//! decay `exp(−Γ h n_tot / 2)`. A jump `|0⟩⟨1|` fires when the squared norm
//! drops below a uniform threshold; the crossing time is located inside the
//! step by log-linear interpolation and the step is redone up to it.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{get_bit, inner, norm_sqr, BasisMap, Sector, StateVector};
use crate::linalg::{expm_krylov, Combination, KrylovOptions};
use crate::models::{rydberg_terms, RydbergSpec, RydbergTerms};
use crate::random::stream;
use crate::stats::Estimate;

use super::circuit::CHUNK;
use super::evolve_exact;
use super::noise::NoiseModel;

/// Integration settings.
#[derive(Clone, Copy, Debug)]
pub struct TrajectoryOptions {
    /// Drift-trace resolution and maximum step, µs.
    pub dt: f64,
    /// Keep per-trajectory records (final state, jumps, disorder).
    pub keep_trajectories: bool,
    pub krylov: KrylovOptions,
}

impl Default for TrajectoryOptions {
    fn default() -> Self {
        TrajectoryOptions { dt: 0.01, keep_trajectories: false, krylov: KrylovOptions::default() }
    }
}

/// A quantum jump at `time` on `site`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Jump {
    pub time: f64,
    pub site: usize,
}

/// One stochastic unfolding.
#[derive(Clone, Debug)]
pub struct Trajectory {
    /// Stream index under the master seed; identifies the disorder draw.
    pub index: usize,
    pub final_state: StateVector,
    pub jumps: Vec<Jump>,
    pub omega_offsets: Vec<f64>,
    pub delta_offsets: Vec<f64>,
    pub displacements: Vec<f64>,
}

/// Trajectory averages at the requested times.
#[derive(Clone, Debug)]
pub struct TrajectoryEnsemble {
    pub times: Vec<f64>,
    /// Mean Born distribution per time, in basis order.
    pub probabilities: Vec<Vec<f64>>,
    /// ⟨ψ_ideal|ρ|ψ_ideal⟩ per time.
    pub fidelity: Vec<Estimate>,
    /// ⟨n_i⟩ per time and site.
    pub occupations: Vec<Vec<Estimate>>,
    /// Noiseless reference states.
    pub ideal: Vec<StateVector>,
    pub n_traj: usize,
    pub trajectories: Vec<Trajectory>,
}

struct Accum {
    probs: Vec<Vec<f64>>,
    f: Vec<(f64, f64)>,
    occ: Vec<Vec<(f64, f64)>>,
    records: Vec<Trajectory>,
}

/// Runs `n_traj` trajectories from `psi0` under `noise`.
#[allow(clippy::too_many_arguments)]
pub fn run_trajectories(
    spec: &RydbergSpec,
    noise: &NoiseModel,
    psi0: &StateVector,
    times: &[f64],
    n_traj: usize,
    seed: u64,
    opts: &TrajectoryOptions,
) -> Result<TrajectoryEnsemble> {
    noise.validate()?;
    let basis = psi0.basis().clone();
    if basis.sector() != Sector::All {
        return Err(Error::InvalidInput("trajectories need a sector-less basis".into()));
    }
    if n_traj == 0 {
        return Err(Error::InvalidInput("need at least one trajectory".into()));
    }
    if !(opts.dt > 0.0) {
        return Err(Error::InvalidInput("time step must be positive".into()));
    }
    let base = rydberg_terms(spec, &basis)?;
    let ideal = evolve_exact(&base.static_h, psi0, times)?.states;
    let t_end = *times.last().unwrap();
    if times[0] < 0.0 {
        return Err(Error::InvalidInput("trajectory times must be ≥ 0".into()));
    }
    let grid = build_grid(times, opts.dt);
    let n = spec.n;
    let dim = basis.dim();
    let occ_of: Vec<f64> = (0..dim).map(|i| basis.state(i).count_ones() as f64).collect();
    let chunks: Vec<Result<Accum>> = (0..n_traj.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = Accum {
                probs: vec![vec![0.0; dim]; times.len()],
                f: vec![(0.0, 0.0); times.len()],
                occ: vec![vec![(0.0, 0.0); n]; times.len()],
                records: Vec::new(),
            };
            for t in c * CHUNK..((c + 1) * CHUNK).min(n_traj) {
                let mut rng = stream(seed, t as u64);
                let run = one_trajectory(spec, noise, &base, &basis, psi0, &grid, t_end, &occ_of, opts, &mut rng)?;
                for (k, phi) in run.states.iter().enumerate() {
                    let f = inner(ideal[k].amps(), phi).norm_sqr();
                    acc.f[k].0 += f;
                    acc.f[k].1 += f * f;
                    let mut occ = vec![0.0; n];
                    for (i, a) in phi.iter().enumerate() {
                        let p = a.norm_sqr();
                        acc.probs[k][i] += p;
                        let z = basis.state(i);
                        for (s, o) in occ.iter_mut().enumerate() {
                            if get_bit(z, n, s) {
                                *o += p;
                            }
                        }
                    }
                    for (s, o) in occ.into_iter().enumerate() {
                        acc.occ[k][s].0 += o;
                        acc.occ[k][s].1 += o * o;
                    }
                }
                if opts.keep_trajectories {
                    let last = run.states.last().unwrap().clone();
                    acc.records.push(Trajectory {
                        index: t,
                        final_state: StateVector::normalized(basis.clone(), last)?,
                        jumps: run.jumps,
                        omega_offsets: run.omega_offsets,
                        delta_offsets: run.delta_offsets,
                        displacements: run.displacements,
                    });
                }
            }
            Ok(acc)
        })
        .collect();
    let mut probs = vec![vec![0.0; dim]; times.len()];
    let mut f = vec![(0.0, 0.0); times.len()];
    let mut occ = vec![vec![(0.0, 0.0); n]; times.len()];
    let mut trajectories = Vec::new();
    for c in chunks {
        let c = c?;
        for k in 0..times.len() {
            probs[k].iter_mut().zip(&c.probs[k]).for_each(|(a, b)| *a += b);
            f[k].0 += c.f[k].0;
            f[k].1 += c.f[k].1;
            for s in 0..n {
                occ[k][s].0 += c.occ[k][s].0;
                occ[k][s].1 += c.occ[k][s].1;
            }
        }
        trajectories.extend(c.records);
    }
    let inv = 1.0 / n_traj as f64;
    Ok(TrajectoryEnsemble {
        times: times.to_vec(),
        probabilities: probs.into_iter().map(|p| p.into_iter().map(|x| x * inv).collect()).collect(),
        fidelity: f.iter().map(|&(s, q)| Estimate::from_sums(s, q, n_traj)).collect(),
        occupations: occ
            .iter()
            .map(|row| row.iter().map(|&(s, q)| Estimate::from_sums(s, q, n_traj)).collect())
            .collect(),
        ideal,
        n_traj,
        trajectories,
    })
}

/// Integration intervals `(start, end, drift cell, record index)`.
struct Grid {
    steps: Vec<(f64, f64, usize, Option<usize>)>,
    /// Record indices reached at t = 0 before any step.
    at_zero: Vec<usize>,
}

fn build_grid(times: &[f64], dt: f64) -> Grid {
    let mut steps = Vec::new();
    let mut at_zero = Vec::new();
    let mut now = 0.0f64;
    for (k, &t) in times.iter().enumerate() {
        if t <= 0.0 {
            at_zero.push(k);
            continue;
        }
        loop {
            let cell = ((now / dt) + 1e-9).floor() as usize;
            let edge = (cell + 1) as f64 * dt;
            if edge < t - 1e-12 {
                steps.push((now, edge, cell, None));
                now = edge;
            } else {
                steps.push((now, t, cell, Some(k)));
                now = t;
                break;
            }
        }
    }
    Grid { steps, at_zero }
}

struct Run {
    states: Vec<Vec<Complex64>>,
    jumps: Vec<Jump>,
    omega_offsets: Vec<f64>,
    delta_offsets: Vec<f64>,
    displacements: Vec<f64>,
}

#[allow(clippy::too_many_arguments)]
fn one_trajectory<R: Rng>(
    spec: &RydbergSpec,
    noise: &NoiseModel,
    base: &RydbergTerms,
    basis: &Arc<BasisMap>,
    psi0: &StateVector,
    grid: &Grid,
    t_end: f64,
    occ_of: &[f64],
    opts: &TrajectoryOptions,
    rng: &mut R,
) -> Result<Run> {
    let n = spec.n;
    let gauss = |s: f64, rng: &mut R| -> Vec<f64> {
        if s > 0.0 {
            (0..n).map(|_| s * rng.sample::<f64, _>(StandardNormal)).collect()
        } else {
            Vec::new()
        }
    };
    let omega_offsets = gauss(noise.rabi_disorder, rng);
    let delta_offsets = gauss(noise.detuning_disorder, rng);
    let displacements = gauss(noise.position_disorder, rng);
    let own;
    let terms = if noise.has_static_disorder() {
        let mut s = spec.clone();
        let add = |a: &[f64], b: &[f64]| -> Vec<f64> {
            if b.is_empty() {
                a.to_vec()
            } else {
                (0..n).map(|i| a.get(i).copied().unwrap_or(0.0) + b[i]).collect()
            }
        };
        s.omega_offsets = add(&spec.omega_offsets, &omega_offsets);
        s.delta_offsets = add(&spec.delta_offsets, &delta_offsets);
        s.displacements = add(&spec.displacements, &displacements);
        own = rydberg_terms(&s, basis)?;
        &own
    } else {
        base
    };
    let rabi = noise.rabi_drift.realize(opts.dt, t_end, rng);
    let det = noise.detuning_drift.realize(opts.dt, t_end, rng);
    let gamma = noise.decay_rate;

    let mut psi = psi0.amps().to_vec();
    let mut states: Vec<Vec<Complex64>> =
        vec![Vec::new(); grid.at_zero.len() + grid.steps.iter().filter(|s| s.3.is_some()).count()];
    for &k in &grid.at_zero {
        states[k] = psi.clone();
    }
    let mut jumps = Vec::new();
    let mut threshold: f64 = if gamma > 0.0 { rng.random() } else { 0.0 };

    let propagate = |psi: &mut Vec<Complex64>, h: f64, cell: usize| -> Result<()> {
        let damp = |psi: &mut Vec<Complex64>, h: f64| {
            if gamma > 0.0 {
                for (a, &o) in psi.iter_mut().zip(occ_of) {
                    *a *= (-0.5 * gamma * o * h).exp();
                }
            }
        };
        damp(psi, h / 2.0);
        let op = Combination {
            terms: vec![
                (1.0, &terms.static_h),
                (0.5 * rabi[cell.min(rabi.len() - 1)], &terms.flip_total),
                (-det[cell.min(det.len() - 1)], &terms.n_total),
            ],
        };
        expm_krylov(&op, psi, TAU * h, &opts.krylov)?;
        damp(psi, h / 2.0);
        Ok(())
    };

    for &(ta, tb, cell, record) in &grid.steps {
        let mut start = ta;
        while start < tb {
            let h = tb - start;
            let saved = if gamma > 0.0 { Some(psi.clone()) } else { None };
            let na = norm_sqr(&psi);
            propagate(&mut psi, h, cell)?;
            let nb = norm_sqr(&psi);
            if gamma > 0.0 && nb < threshold {
                // locate the crossing, redo the partial step, then jump
                let frac = ((threshold / na).ln() / (nb / na).ln()).clamp(0.0, 1.0);
                psi = saved.unwrap();
                propagate(&mut psi, frac * h, cell)?;
                let weights: Vec<f64> = (0..n)
                    .map(|s| {
                        psi.iter()
                            .enumerate()
                            .filter(|(i, _)| get_bit(basis.state(*i), n, s))
                            .map(|(_, a)| a.norm_sqr())
                            .sum()
                    })
                    .collect();
                let total: f64 = weights.iter().sum();
                if total > 0.0 {
                    let mut u = rng.random::<f64>() * total;
                    let mut site = n - 1;
                    for (s, w) in weights.iter().enumerate() {
                        if u < *w {
                            site = s;
                            break;
                        }
                        u -= w;
                    }
                    let mask = 1u64 << (n - 1 - site);
                    let mut next = vec![Complex64::new(0.0, 0.0); psi.len()];
                    for (i, a) in psi.iter().enumerate() {
                        let z = basis.state(i);
                        if z & mask != 0 {
                            let j = basis.index_of_value(z ^ mask).expect("lowering stays in basis");
                            next[j] = *a;
                        }
                    }
                    psi = next;
                    jumps.push(Jump { time: start + frac * h, site });
                }
                let nn = norm_sqr(&psi).sqrt();
                psi.iter_mut().for_each(|a| *a /= nn);
                threshold = rng.random();
                start += frac * h;
                if frac * h == 0.0 && h < 1e-15 {
                    break;
                }
            } else {
                start = tb;
            }
        }
        if let Some(k) = record {
            let nn = norm_sqr(&psi).sqrt();
            states[k] = psi.iter().map(|a| a / nn).collect();
        }
    }
    Ok(Run { states, jumps, omega_offsets, delta_offsets, displacements })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::Bitstring;
    use crate::linalg::hermitian_eigenvalues;
    use crate::models::build_rydberg;
    use nalgebra::DMatrix;

    #[test]
    fn test_grid_alignment() {
        let g = build_grid(&[0.0, 0.025, 0.03], 0.01);
        assert_eq!(g.at_zero, vec![0]);
        let ends: Vec<f64> = g.steps.iter().map(|s| s.1).collect();
        assert_eq!(ends.len(), 4);
        assert!((ends[2] - 0.025).abs() < 1e-15 && (ends[3] - 0.03).abs() < 1e-15);
        assert_eq!(g.steps[3].2, 2);
    }

    #[test]
    fn test_noiseless_limit_matches_exact() {
        let n = 6;
        let b = Arc::new(BasisMap::blockade(n).unwrap());
        let spec = RydbergSpec::chain(n, 4.7, 0.9);
        let psi0 = StateVector::zeros(b.clone()).unwrap();
        let times = [0.1, 0.37, 0.5];
        let ens = run_trajectories(&spec, &NoiseModel::default(), &psi0, &times, 3, 1, &TrajectoryOptions::default())
            .unwrap();
        let h = build_rydberg(&spec, &b).unwrap();
        let exact = evolve_exact(&h, &psi0, &times).unwrap();
        for k in 0..3 {
            assert!((ens.fidelity[k].mean - 1.0).abs() < 1e-8);
            for (p, (_, q)) in ens.probabilities[k].iter().zip(exact.states[k].probabilities()) {
                assert!((p - q).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn test_exponential_decay() {
        let b = Arc::new(BasisMap::full(1).unwrap());
        let spec = RydbergSpec::chain(1, 0.0, 0.0);
        let psi0 = StateVector::basis_state(b, &"1".parse::<Bitstring>().unwrap()).unwrap();
        let noise = NoiseModel { decay_rate: 1.3, ..Default::default() };
        let times = [0.2, 0.5, 1.0, 2.0];
        let ens = run_trajectories(&spec, &noise, &psi0, &times, 10_000, 6, &TrajectoryOptions::default()).unwrap();
        for (k, t) in times.iter().enumerate() {
            let want = (-1.3 * t).exp();
            let got = ens.occupations[k][0];
            let sigma = (want * (1.0 - want) / 10_000.0).sqrt();
            assert!((got.mean - want).abs() <= 3.0 * sigma, "t={t}: {} vs {want}", got.mean);
        }
    }

    /// Dense Lindblad integration (RK4) of the same two-atom problem.
    fn lindblad(h: &DMatrix<Complex64>, gamma: f64, rho0: DMatrix<Complex64>, t: f64) -> DMatrix<Complex64> {
        let d = h.nrows();
        let n = (d as f64).log2() as usize;
        let ls: Vec<DMatrix<Complex64>> = (0..n)
            .map(|s| {
                let mut l = DMatrix::zeros(d, d);
                let m = 1usize << (n - 1 - s);
                for z in 0..d {
                    if z & m != 0 {
                        l[(z ^ m, z)] = Complex64::new(gamma.sqrt(), 0.0);
                    }
                }
                l
            })
            .collect();
        let i = Complex64::new(0.0, 1.0);
        let rhs = |r: &DMatrix<Complex64>| {
            let mut out = (h * r - r * h) * (-i * TAU);
            for l in &ls {
                let ld = l.adjoint();
                let ldl = &ld * l;
                out += l * r * &ld - (&ldl * r + r * &ldl) * Complex64::new(0.5, 0.0);
            }
            out
        };
        let steps = 4000;
        let dt = Complex64::new(t / steps as f64, 0.0);
        let mut r = rho0;
        for _ in 0..steps {
            let k1 = rhs(&r);
            let k2 = rhs(&(&r + &k1 * (dt * 0.5)));
            let k3 = rhs(&(&r + &k2 * (dt * 0.5)));
            let k4 = rhs(&(&r + &k3 * dt));
            let two = Complex64::new(2.0, 0.0);
            r += (k1 + k2 * two + k3 * two + k4) * (dt / 6.0);
        }
        r
    }

    #[test]
    fn test_matches_master_equation() {
        let b = Arc::new(BasisMap::full(2).unwrap());
        let mut spec = RydbergSpec::chain(2, 2.0, 0.5);
        spec.spacing = 8.0; // V ≈ 0.95 MHz
        let gamma = 0.6;
        let psi0 = StateVector::zeros(b.clone()).unwrap();
        let noise = NoiseModel { decay_rate: gamma, ..Default::default() };
        let opts = TrajectoryOptions { keep_trajectories: true, ..Default::default() };
        let m = 100_000;
        let ens = run_trajectories(&spec, &noise, &psi0, &[1.0], m, 21, &opts).unwrap();
        let mut rho = DMatrix::<Complex64>::zeros(4, 4);
        for t in &ens.trajectories {
            let v = nalgebra::DVector::from_column_slice(t.final_state.amps());
            rho += &v * v.adjoint();
        }
        rho /= Complex64::new(m as f64, 0.0);
        let h = build_rydberg(&spec, &b).unwrap().to_dense();
        let mut rho0 = DMatrix::zeros(4, 4);
        rho0[(0, 0)] = Complex64::new(1.0, 0.0);
        let exact = lindblad(&h, gamma, rho0, 1.0);
        let dist: f64 = hermitian_eigenvalues(&(rho - exact)).iter().map(|x| x.abs()).sum::<f64>() * 0.5;
        assert!(dist <= 0.01, "trace distance {dist}");
    }

    #[test]
    fn test_disorder_changes_fidelity_and_is_reproducible() {
        let n = 6;
        let b = Arc::new(BasisMap::blockade(n).unwrap());
        let spec = RydbergSpec::chain(n, 4.7, 0.9);
        let psi0 = StateVector::zeros(b).unwrap();
        let noise = NoiseModel {
            detuning_disorder: 0.5,
            rabi_drift: super::super::Drift::OrnsteinUhlenbeck { amplitude: 0.2, correlation_time: 1.0 },
            decay_rate: 0.05,
            ..Default::default()
        };
        let opts = TrajectoryOptions { keep_trajectories: true, ..Default::default() };
        let a = run_trajectories(&spec, &noise, &psi0, &[0.5, 1.5], 40, 3, &opts).unwrap();
        let c = run_trajectories(&spec, &noise, &psi0, &[0.5, 1.5], 40, 3, &opts).unwrap();
        assert_eq!(a.probabilities, c.probabilities);
        assert!(a.fidelity[1].mean < 0.999);
        assert!(a.fidelity[0].mean > a.fidelity[1].mean);
        assert_eq!(a.trajectories.len(), 40);
        assert_eq!(a.trajectories[7].delta_offsets.len(), n);
        for t in &a.trajectories {
            assert!((t.final_state.norm() - 1.0).abs() < 1e-10);
        }
    }
}
