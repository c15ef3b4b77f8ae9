//! Builds the simulated system shared by evolve, ensemble and benchmark.

use std::sync::Arc;

use projens::evolve::{
    apply_circuit, evolve_exact, run_noisy_circuit, run_trajectories, EvolutionResult, NoiseModel, TrajectoryOptions,
};
use projens::hilbert::{BasisMap, Bipartition, Bitstring, Constraint, Sector, StateVector};
use projens::linalg::SparseMatrix;
use projens::models::{build_ion, build_qimf, build_quench, build_rydberg, ground_state, Circuit, RydbergSpec};
use projens::stats::Estimate;

use crate::config::{BasisConfig, BipartitionConfig, Grid, InitialState, ModelConfig};
use crate::error::{Classify, CliError, CliResult};

pub enum Dynamics {
    Hamiltonian { h: SparseMatrix, rydberg: Option<RydbergSpec> },
    Circuit(Circuit),
}

pub struct System {
    pub basis: Arc<BasisMap>,
    pub dynamics: Dynamics,
    pub psi0: StateVector,
    /// Times, or depths 0..=D for circuits.
    pub axis: Vec<f64>,
}

/// Fills basis defaults in place.
pub fn resolve_basis(model: &ModelConfig, basis: &mut BasisConfig) {
    let default = match model {
        ModelConfig::Rydberg(_) => Constraint::Blockade,
        _ => Constraint::Full,
    };
    basis.constraint.get_or_insert(default);
    basis.sector.get_or_insert(Sector::All);
}

/// Fills the boundary-rule default in place.
pub fn resolve_bipartition(b: &mut BipartitionConfig, basis: &BasisConfig) {
    b.boundary_rule.get_or_insert(basis.constraint == Some(Constraint::Blockade));
}

pub fn bipartition(n: usize, b: &BipartitionConfig) -> CliResult<Bipartition> {
    Bipartition::new(n, &b.sites_a, b.boundary_rule.unwrap_or(false)).run()
}

impl System {
    pub fn build(
        model: &ModelConfig,
        basis: &BasisConfig,
        initial: &InitialState,
        times: Option<&Grid>,
    ) -> CliResult<Self> {
        let n = model.n_sites();
        let b = Arc::new(
            BasisMap::new(n, basis.constraint.unwrap_or(Constraint::Full), basis.sector.unwrap_or(Sector::All))
                .run()?,
        );
        let dynamics = match model {
            ModelConfig::Rydberg(s) => {
                Dynamics::Hamiltonian { h: build_rydberg(s, &b).run()?, rydberg: Some(s.clone()) }
            }
            ModelConfig::Quench(s) => Dynamics::Hamiltonian { h: build_quench(s, &b).run()?, rydberg: None },
            ModelConfig::Ion(s) => Dynamics::Hamiltonian { h: build_ion(s, &b).run()?, rydberg: None },
            ModelConfig::Qimf(s) => Dynamics::Hamiltonian { h: build_qimf(s, &b).run()?, rydberg: None },
            ModelConfig::Circuit(s) => Dynamics::Circuit(s.build().run()?),
        };
        let axis = match (&dynamics, times) {
            (Dynamics::Circuit(c), None) => (0..=c.depth()).map(|d| d as f64).collect(),
            (Dynamics::Circuit(_), Some(_)) => {
                return Err(CliError::Config("`times` is not used by circuit models; set `depth` instead".into()))
            }
            (_, Some(g)) => g.values("times")?,
            (_, None) => return Err(CliError::Config("`times` is required for Hamiltonian models".into())),
        };
        if axis[0] < 0.0 {
            return Err(CliError::Config("times must be ≥ 0".into()));
        }
        let psi0 = match initial {
            InitialState::Zeros => StateVector::zeros(b.clone()).run()?,
            InitialState::Bitstring(s) => {
                let z: Bitstring = s.parse().map_err(|e: projens::Error| CliError::Config(format!("initial: {e}")))?;
                if z.len() != n {
                    return Err(CliError::Config(format!("initial bitstring has {} sites, model has {n}", z.len())));
                }
                StateVector::basis_state(b.clone(), &z).run()?
            }
            InitialState::Ground => match &dynamics {
                Dynamics::Hamiltonian { h, .. } => {
                    let e = ground_state(h, 1).run()?;
                    StateVector::normalized(b.clone(), e.vectors[0].clone()).run()?
                }
                Dynamics::Circuit(_) => return Err(CliError::Config("circuits have no ground state".into())),
            },
        };
        Ok(System { basis: b, dynamics, psi0, axis })
    }

    /// Noiseless states and observables along the axis.
    pub fn evolve(&self) -> CliResult<EvolutionResult> {
        match &self.dynamics {
            Dynamics::Hamiltonian { h, .. } => evolve_exact(h, &self.psi0, &self.axis).run(),
            Dynamics::Circuit(c) => apply_circuit(c, &self.psi0).run(),
        }
    }

    /// Trajectory-averaged distributions and fidelities along the axis.
    pub fn noisy(&self, noise: &NoiseModel, n_traj: usize, dt: f64, seed: u64) -> CliResult<NoisyRun> {
        let (probs, fidelity) = match &self.dynamics {
            Dynamics::Hamiltonian { rydberg: Some(spec), .. } => {
                let opts = TrajectoryOptions { dt, ..Default::default() };
                let e = run_trajectories(spec, noise, &self.psi0, &self.axis, n_traj, seed, &opts).run()?;
                (e.probabilities, e.fidelity)
            }
            Dynamics::Circuit(c) => {
                let r = run_noisy_circuit(c, noise.pauli_rate, &self.psi0, n_traj, seed).run()?;
                (r.noisy, r.fidelity)
            }
            Dynamics::Hamiltonian { rydberg: None, .. } => {
                return Err(CliError::Config("noise is supported for rydberg and circuit models only".into()))
            }
        };
        let probs = probs
            .into_iter()
            .map(|p| {
                p.into_iter().enumerate().filter(|(_, v)| *v > 0.0).map(|(i, v)| (self.basis.state(i), v)).collect()
            })
            .collect();
        Ok(NoisyRun { probs, fidelity })
    }
}

/// Noisy bitstring distributions as `(value, probability)` lists.
pub struct NoisyRun {
    pub probs: Vec<Vec<(u64, f64)>>,
    pub fidelity: Vec<Estimate>,
}

/// Independent seed for sub-task `k` of kind `purpose`.
pub fn sub_seed(seed: u64, purpose: u64, k: usize) -> u64 {
    use rand::Rng;
    projens::random::stream(seed, (purpose << 32) | k as u64).random()
}

/// Basis label written to sample sidecars.
pub fn basis_label(b: &BasisMap) -> &'static str {
    match b.constraint() {
        Constraint::Full => "full",
        Constraint::Blockade => "blockade",
    }
}
