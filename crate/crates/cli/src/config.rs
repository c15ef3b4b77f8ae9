//! Config schema for every subcommand. Files are JSON or TOML; unknown
//! fields are rejected.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use projens::analysis::{EntropyTrace, FidelityTrace};
use projens::bench::FcVariant;
use projens::ensemble::Weighting;
use projens::evolve::NoiseModel;
use projens::hilbert::{Constraint, Sector};
use projens::learn::{LearnParam, RydbergFamily, Window};
use projens::models::{CircuitSpec, IonSpec, QimfSpec, QuenchSpec, RydbergSpec};

use crate::error::{CliError, CliResult};

/// Explicit values or an evenly spaced range including both ends.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Range(RangeSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeSpec {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl Grid {
    pub fn values(&self, what: &str) -> CliResult<Vec<f64>> {
        let v = match self {
            Grid::List(v) => v.clone(),
            Grid::Range(r) => match r.steps {
                0 => Vec::new(),
                1 => vec![r.start],
                s => (0..s).map(|k| r.start + (r.stop - r.start) * k as f64 / (s - 1) as f64).collect(),
            },
        };
        if v.is_empty() {
            return Err(CliError::Config(format!("{what}: empty grid")));
        }
        if v.iter().any(|x| !x.is_finite()) || v.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Config(format!("{what}: values must be finite and strictly increasing")));
        }
        Ok(v)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelConfig {
    Rydberg(RydbergSpec),
    Quench(QuenchSpec),
    Ion(IonSpec),
    Qimf(QimfSpec),
    Circuit(CircuitSpec),
}

impl ModelConfig {
    pub fn n_sites(&self) -> usize {
        match self {
            ModelConfig::Rydberg(s) => s.n,
            ModelConfig::Quench(s) => s.n,
            ModelConfig::Ion(s) => s.n,
            ModelConfig::Qimf(s) => s.n,
            ModelConfig::Circuit(s) => s.n,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisConfig {
    /// Defaults to `blockade` for Rydberg models and `full` otherwise.
    pub constraint: Option<Constraint>,
    pub sector: Option<Sector>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialState {
    /// |0…0⟩.
    #[default]
    Zeros,
    /// A product state given as a 0/1 string, site 0 first.
    Bitstring(String),
    /// Lowest eigenstate of the model Hamiltonian.
    Ground,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BipartitionConfig {
    pub sites_a: Vec<usize>,
    /// Defaults to true on a blockade basis.
    pub boundary_rule: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistogramConfig {
    pub bipartition: BipartitionConfig,
    pub bins: Option<usize>,
    /// A-outcome index; pooled over all outcomes when absent.
    pub z_a: Option<usize>,
    pub weighting: Option<Weighting>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub basis: BasisConfig,
    #[serde(default)]
    pub initial: InitialState,
    /// Evolution times (µs for Rydberg models); unused for circuits.
    pub times: Option<Grid>,
    /// Bipartition for the entanglement entropy; half chain by default.
    pub bipartition: Option<BipartitionConfig>,
    pub noise: Option<NoiseModel>,
    pub trajectories: Option<usize>,
    /// Trajectory step, µs.
    pub dt: Option<f64>,
    /// Shots drawn per time and written as sample files.
    pub shots: Option<usize>,
    pub histogram: Option<HistogramConfig>,
    #[serde(default)]
    pub amplitudes: bool,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub basis: BasisConfig,
    #[serde(default)]
    pub initial: InitialState,
    pub times: Option<Grid>,
    pub bipartition: BipartitionConfig,
    pub weighting: Option<Weighting>,
    /// Design-distance orders k.
    pub orders: Option<Vec<usize>>,
    /// Orders of the rescaled scalar moments.
    pub moments: Option<Vec<usize>>,
    pub bins: Option<usize>,
    pub z_a: Option<usize>,
    /// When set, moments and histograms come from this many sampled shots
    /// per time instead of the exact conditionals.
    pub shots: Option<usize>,
    /// Minimum shots per z_B outcome kept from sampled data.
    pub min_shots: Option<usize>,
    /// Bootstrap resamples for sampled moment errors.
    pub resamples: Option<usize>,
    pub seed: Option<u64>,
}

/// Where the measured bitstrings of a benchmark come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum BenchmarkData {
    /// One sample file per time, relative to the config file.
    Samples(Vec<PathBuf>),
    /// One probability-table CSV per time.
    Tables(Vec<PathBuf>),
    /// Synthetic data from the noise model.
    Model(ModelData),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelData {
    #[serde(default)]
    pub noise: NoiseModel,
    pub trajectories: Option<usize>,
    pub dt: Option<f64>,
    /// Without shots the exact trajectory-averaged distribution is used.
    pub shots: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub basis: BasisConfig,
    #[serde(default)]
    pub initial: InitialState,
    pub times: Option<Grid>,
    pub data: BenchmarkData,
    /// Defaults to `blockade-parity` on a blockade basis, otherwise to
    /// `empirical` for shots and `exact` for tables.
    pub variant: Option<FcVariant>,
    pub resamples: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimedPath {
    pub time: f64,
    pub path: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum LearnData {
    Samples(Vec<TimedPath>),
    /// Data generated from `truth` (noiseless), exact or sampled.
    Synthetic(SyntheticData),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticData {
    pub truth: RydbergSpec,
    pub times: Grid,
    pub shots: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum LearnTask {
    Scan(ScanTask),
    Local(LocalTask),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanTask {
    pub param: LearnParam,
    pub grid: Grid,
    #[serde(default)]
    pub window: Window,
    /// Also evaluate the magnetization RSS comparator.
    #[serde(default)]
    pub rss: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalTask {
    pub restarts: Option<usize>,
    pub field_box: Option<f64>,
    pub max_evaluations: Option<usize>,
    #[serde(default)]
    pub window: Window,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnConfig {
    pub family: RydbergFamily,
    pub data: LearnData,
    pub task: LearnTask,
    pub seed: Option<u64>,
}

/// A line given by its parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineConfig {
    pub intercept: f64,
    pub slope: f64,
    #[serde(default)]
    pub intercept_se: f64,
    #[serde(default)]
    pub slope_se: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum DecayInput {
    Line(LineConfig),
    Traces(Vec<FidelityTrace>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum SaturationInput {
    Line(LineConfig),
    Traces(SaturationTraces),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SaturationTraces {
    pub c: f64,
    pub traces: Vec<EntropyTrace>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum EntropyInput {
    Line(LineConfig),
    /// Saturated entropies read off the `t_ent` traces.
    FromTraces,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    /// Analog system sizes N to report.
    pub sizes: Vec<f64>,
    pub gamma: DecayInput,
    pub t_ent: SaturationInput,
    pub d_ent: SaturationInput,
    pub entropy: EntropyInput,
    /// Single-atom preparation fidelity, for F_model at t_ent.
    pub f0: Option<f64>,
}

/// Parses a JSON (`.json`) or TOML (anything else) config, reporting the
/// field path of schema violations.
pub fn load<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let fail = |p: String, e: String| CliError::Config(format!("{}: at `{p}`: {e}", path.display()));
    if is_json {
        let de = &mut serde_json::Deserializer::from_str(&text);
        serde_path_to_error::deserialize(de).map_err(|e| fail(e.path().to_string(), e.inner().to_string()))
    } else {
        let de = toml::Deserializer::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        serde_path_to_error::deserialize(de).map_err(|e| fail(e.path().to_string(), e.inner().to_string()))
    }
}

/// Seed from the command line, else from the config; required when the run
/// is stochastic.
pub fn resolve_seed(cli: Option<u64>, cfg: Option<u64>, needed: bool) -> CliResult<Option<u64>> {
    match cli.or(cfg) {
        None if needed => Err(CliError::Config("this run is stochastic: set `seed` or pass --seed".into())),
        s => Ok(s),
    }
}
