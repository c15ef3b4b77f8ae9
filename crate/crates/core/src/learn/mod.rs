//! Hamiltonian learning from bitstring statistics: F_c parameter scans, a
//! magnetization RSS comparator, local-field learning and target-state
//! benchmarking through infinite-temperature quenches.

mod simplex;

use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bench::{fc_exact, ProbTable};
use crate::ensemble::{project, Weighting};
use crate::error::{Error, Result};
use crate::evolve::{evolve_exact, evolve_states, sample_from_distribution, SampleSet};
use crate::hilbert::{get_bit, BasisMap, Bipartition, Constraint, Sector, StateVector};
use crate::linalg::SparseMatrix;
use crate::models::{build_rydberg, RydbergSpec};
use crate::random::stream;
use crate::stats::{fwhm, std_dev, trapezoid};

/// Fraction of the maximum entropy that marks saturation.
pub const SATURATION_FRACTION: f64 = 0.9;
/// Allowed deviation of late-time marginals from 1/D_A.
pub const INFINITE_TEMPERATURE_TOL: f64 = 0.05;
pub const DEFAULT_RESTARTS: usize = 30;
/// Half-width of the default local-field box, MHz.
pub const DEFAULT_FIELD_BOX: f64 = 1.0;

/// A scanned Hamiltonian parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LearnParam {
    Omega,
    Delta,
    /// Next-nearest-neighbour interaction; C6 is rescaled to match.
    VNnn,
}

/// A Rydberg chain prepared in |0…0⟩ and simulated on the given basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RydbergFamily {
    pub spec: RydbergSpec,
    #[serde(default = "blockade")]
    pub constraint: Constraint,
}

fn blockade() -> Constraint {
    Constraint::Blockade
}

impl RydbergFamily {
    pub fn new(spec: RydbergSpec, constraint: Constraint) -> Self {
        RydbergFamily { spec, constraint }
    }

    fn basis(&self) -> Result<Arc<BasisMap>> {
        Ok(Arc::new(BasisMap::new(self.spec.n, self.constraint, Sector::All)?))
    }

    /// The family member with `param` set to `value`.
    pub fn with_param(&self, param: LearnParam, value: f64) -> RydbergSpec {
        let mut s = self.spec.clone();
        match param {
            LearnParam::Omega => s.omega = value,
            LearnParam::Delta => s.delta = value,
            LearnParam::VNnn => s.c6 = value * (2.0 * s.spacing).powi(6),
        }
        s
    }

    /// Evolved states at `times`.
    pub fn simulate(&self, spec: &RydbergSpec, times: &[f64]) -> Result<Vec<StateVector>> {
        let basis = self.basis()?;
        let h = build_rydberg(spec, &basis)?;
        evolve_states(&h, &StateVector::zeros(basis)?, times)
    }

    /// Born tables at `times`.
    pub fn tables(&self, spec: &RydbergSpec, times: &[f64]) -> Result<Vec<ProbTable>> {
        Ok(self.simulate(spec, times)?.iter().map(ProbTable::from_state).collect())
    }
}

/// Observed bitstring statistics at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct TimedTable {
    pub time: f64,
    pub table: ProbTable,
}

/// Converts sample sets to empirical tables.
pub fn tables_from_samples(data: &[(f64, SampleSet)]) -> Result<Vec<TimedTable>> {
    data.iter().map(|(t, s)| Ok(TimedTable { time: *t, table: ProbTable::from_samples(s)? })).collect()
}

/// Time window for integrating F_c.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", deny_unknown_fields)]
pub enum Window {
    /// From entanglement saturation of the nominal model to the last time.
    #[default]
    Auto,
    /// Every sampled time.
    All,
    Range {
        from: f64,
        to: f64,
    },
}

/// The window actually used, recorded in results.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WindowChoice {
    pub from: f64,
    pub to: f64,
    pub rule: String,
}

/// First time at which the half-chain entropy reaches `fraction` of its
/// maximum over `times`.
pub fn saturation_time(times: &[f64], entropy: &[f64], fraction: f64) -> f64 {
    let max = entropy.iter().copied().fold(0.0, f64::max);
    times.iter().zip(entropy).find(|(_, &s)| s >= fraction * max).map(|(&t, _)| t).unwrap_or(times[0])
}

fn check_data(data: &[TimedTable]) -> Result<Vec<f64>> {
    if data.len() < 3 {
        return Err(Error::InvalidInput(format!("need ≥ 3 time points, got {}", data.len())));
    }
    let times: Vec<f64> = data.iter().map(|d| d.time).collect();
    if times.windows(2).any(|w| w[1] <= w[0]) || times[0] < 0.0 {
        return Err(Error::InvalidInput("times must be ≥ 0 and strictly increasing".into()));
    }
    Ok(times)
}

fn choose_window(family: &RydbergFamily, times: &[f64], window: Window) -> Result<WindowChoice> {
    let last = *times.last().unwrap();
    let penult = times[times.len() - 2];
    match window {
        Window::All => Ok(WindowChoice { from: times[0], to: last, rule: "all sampled times".into() }),
        Window::Range { from, to } => {
            let inside = times.iter().filter(|&&t| t >= from && t <= to).count();
            if inside < 2 {
                return Err(Error::InvalidInput(format!("window [{from}, {to}] holds {inside} sampled times")));
            }
            Ok(WindowChoice { from, to, rule: "user range".into() })
        }
        Window::Auto => {
            let basis = family.basis()?;
            let r = evolve_exact(&build_rydberg(&family.spec, &basis)?, &StateVector::zeros(basis)?, times)?;
            let s: Vec<f64> = r.observables.iter().map(|o| o.entropy).collect();
            let from = saturation_time(times, &s, SATURATION_FRACTION).min(penult);
            Ok(WindowChoice {
                from,
                to: last,
                rule: format!("half-chain entropy ≥ {SATURATION_FRACTION} of its maximum, nominal model"),
            })
        }
    }
}

fn integrate(times: &[f64], y: &[f64], w: &WindowChoice) -> f64 {
    let (x, y): (Vec<f64>, Vec<f64>) =
        times.iter().zip(y).filter(|(&t, _)| t >= w.from - 1e-12 && t <= w.to + 1e-12).map(|(&t, &v)| (t, v)).unzip();
    trapezoid(&x, &y)
}

fn fc_trace(family: &RydbergFamily, spec: &RydbergSpec, data: &[TimedTable], times: &[f64]) -> Result<Vec<f64>> {
    family.tables(spec, times)?.iter().zip(data).map(|(p0, d)| fc_exact(p0, &d.table)).collect()
}

/// Outcome of a one-parameter F_c scan.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanResult {
    pub param: LearnParam,
    pub grid: Vec<f64>,
    pub times: Vec<f64>,
    /// F_c(t) per grid value (`None` where simulation failed).
    pub fc: Vec<Option<Vec<f64>>>,
    /// Time-integrated F_c over the window.
    pub integrated: Vec<Option<f64>>,
    /// `integrated` divided by its maximum over the grid.
    pub normalized: Vec<Option<f64>>,
    pub peak: Option<f64>,
    pub fwhm: Option<f64>,
    pub window: WindowChoice,
    /// Set when the data carry no information (a single outcome at every
    /// time, or a flat curve).
    pub degenerate: bool,
    /// Grid indices whose simulation failed.
    pub failed: Vec<usize>,
}

/// Scans `param` over `grid`, scoring each value by time-integrated F_c of
/// the simulated distributions against `data`.
pub fn scan_parameter(
    data: &[TimedTable],
    family: &RydbergFamily,
    param: LearnParam,
    grid: &[f64],
    window: Window,
) -> Result<ScanResult> {
    let times = check_data(data)?;
    if grid.len() < 5 {
        return Err(Error::InvalidInput(format!("grid needs ≥ 5 points, got {}", grid.len())));
    }
    if let Some(d) = data.iter().find(|d| d.table.n_sites() != family.spec.n) {
        return Err(Error::Mismatch(format!("data at t={} has {} sites", d.time, d.table.n_sites())));
    }
    let w = choose_window(family, &times, window)?;
    let fc: Vec<Option<Vec<f64>>> =
        grid.par_iter().map(|&v| fc_trace(family, &family.with_param(param, v), data, &times).ok()).collect();
    let integrated: Vec<Option<f64>> = fc.iter().map(|f| f.as_ref().map(|f| integrate(&times, f, &w))).collect();
    let failed: Vec<usize> = fc.iter().enumerate().filter(|(_, f)| f.is_none()).map(|(i, _)| i).collect();
    let ok: Vec<(f64, f64)> = grid.iter().zip(&integrated).filter_map(|(&g, v)| v.map(|v| (g, v))).collect();
    if ok.is_empty() {
        return Err(Error::Convergence { what: "parameter scan", step: 0, residual: f64::NAN });
    }
    let max = ok.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let min = ok.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let scale = if max > 0.0 { max } else { max.abs().max(f64::MIN_POSITIVE) };
    let normalized: Vec<Option<f64>> = integrated.iter().map(|v| v.map(|v| v / scale)).collect();
    let single_outcome = data.iter().all(|d| d.table.len() <= 1);
    let flat = (max - min) <= 1e-9 * max.abs().max(1e-300);
    let degenerate = single_outcome || flat || max <= 0.0;
    let peak = ok.iter().max_by(|a, b| a.1.total_cmp(&b.1)).map(|p| p.0);
    let (gx, gy): (Vec<f64>, Vec<f64>) = ok.iter().map(|&(g, v)| (g, v / scale)).unzip();
    Ok(ScanResult {
        param,
        grid: grid.to_vec(),
        times,
        fc,
        integrated,
        normalized,
        peak,
        fwhm: fwhm(&gx, &gy),
        window: w,
        degenerate,
        failed,
    })
}

/// ⟨Sᶻ_i⟩ = 1/2 − ⟨n_i⟩ per site.
pub fn magnetizations(psi: &StateVector) -> Vec<f64> {
    let b = psi.basis();
    let n = b.n_sites();
    let mut m = vec![0.5; n];
    for (i, a) in psi.amps().iter().enumerate() {
        let p = a.norm_sqr();
        let z = b.state(i);
        for (k, v) in m.iter_mut().enumerate() {
            if get_bit(z, n, k) {
                *v -= p;
            }
        }
    }
    m
}

/// 1 − RSS of local magnetizations per time and grid value.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RssResult {
    pub param: LearnParam,
    pub grid: Vec<f64>,
    pub times: Vec<f64>,
    /// `one_minus_rss[t][g]`.
    pub one_minus_rss: Vec<Vec<f64>>,
    /// Width of the 1 − RSS curve at each time.
    pub fwhm: Vec<Option<f64>>,
}

/// RSS(θ, t) = Σ_i (⟨Sᶻ_i⟩_θ − ⟨Sᶻ_i⟩_ref)² over `grid`.
pub fn rss_comparator(
    reference: &[(f64, Vec<f64>)],
    family: &RydbergFamily,
    param: LearnParam,
    grid: &[f64],
) -> Result<RssResult> {
    if reference.is_empty() || grid.len() < 5 {
        return Err(Error::InvalidInput("need reference traces and ≥ 5 grid points".into()));
    }
    let times: Vec<f64> = reference.iter().map(|r| r.0).collect();
    let cols: Vec<Vec<f64>> = grid
        .par_iter()
        .map(|&v| -> Result<Vec<f64>> {
            let states = family.simulate(&family.with_param(param, v), &times)?;
            states
                .iter()
                .zip(reference)
                .map(|(s, (_, r))| {
                    let m = magnetizations(s);
                    if m.len() != r.len() {
                        return Err(Error::Mismatch(format!("reference has {} sites", r.len())));
                    }
                    Ok(1.0 - m.iter().zip(r).map(|(a, b)| (a - b).powi(2)).sum::<f64>())
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;
    let one_minus_rss: Vec<Vec<f64>> = (0..times.len()).map(|t| cols.iter().map(|c| c[t]).collect()).collect();
    let widths = one_minus_rss.iter().map(|row| fwhm(grid, row)).collect();
    Ok(RssResult { param, grid: grid.to_vec(), times, one_minus_rss, fwhm: widths })
}

/// Options for local-field learning.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LocalOptions {
    pub restarts: usize,
    pub seed: u64,
    /// Initial points are uniform in [−box, box] per site, MHz.
    pub field_box: f64,
    pub max_evaluations: usize,
    pub window: Window,
}

impl Default for LocalOptions {
    fn default() -> Self {
        LocalOptions {
            restarts: DEFAULT_RESTARTS,
            seed: 0,
            field_box: DEFAULT_FIELD_BOX,
            max_evaluations: 3000,
            window: Window::Auto,
        }
    }
}

/// One optimizer run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RestartOutcome {
    pub start: Vec<f64>,
    pub fields: Vec<f64>,
    /// Time-integrated F_c at `fields`.
    pub objective: f64,
    pub evaluations: usize,
    /// False when the evaluation budget ran out first.
    pub converged: bool,
}

/// Learned site detunings with their spread over restarts.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalLearnResult {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub restarts: Vec<RestartOutcome>,
    pub window: WindowChoice,
}

/// Maximizes time-integrated F_c over per-site detuning offsets with a
/// simplex search from `restarts` random starts.
pub fn learn_local_fields(
    data: &[TimedTable],
    family: &RydbergFamily,
    opts: &LocalOptions,
) -> Result<LocalLearnResult> {
    let times = check_data(data)?;
    if opts.restarts == 0 {
        return Err(Error::InvalidInput("need at least one restart".into()));
    }
    let n = family.spec.n;
    let w = choose_window(family, &times, opts.window)?;
    let objective = |x: &[f64]| -> f64 {
        let mut s = family.spec.clone();
        s.delta_offsets = x.to_vec();
        match fc_trace(family, &s, data, &times) {
            Ok(f) => -integrate(&times, &f, &w),
            Err(_) => f64::INFINITY,
        }
    };
    let restarts: Vec<RestartOutcome> = (0..opts.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(opts.seed, r as u64);
            let start: Vec<f64> = (0..n).map(|_| rng.random_range(-opts.field_box..=opts.field_box)).collect();
            let m = simplex::nelder_mead(objective, &start, 0.25 * opts.field_box, opts.max_evaluations, 1e-10, 1e-5);
            RestartOutcome { start, fields: m.x, objective: -m.f, evaluations: m.evaluations, converged: m.converged }
        })
        .collect();
    let mean: Vec<f64> =
        (0..n).map(|i| restarts.iter().map(|r| r.fields[i]).sum::<f64>() / restarts.len() as f64).collect();
    let std: Vec<f64> = (0..n)
        .map(|i| {
            let v: Vec<f64> = restarts.iter().map(|r| r.fields[i]).collect();
            if v.len() > 1 {
                std_dev(&v)
            } else {
                0.0
            }
        })
        .collect();
    Ok(LocalLearnResult { mean, std, restarts, window: w })
}

/// Fidelity benchmark of a prepared mixture against a target state.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TargetBenchmark {
    /// ⟨ψ_target|ρ_prepared|ψ_target⟩.
    pub fidelity: f64,
    pub times: Vec<f64>,
    pub fc: Vec<f64>,
    /// Largest late-time deviation of single-site conditional marginals
    /// from 1/2.
    pub marginal_deviation: f64,
    /// Present when the quench fails the infinite-temperature check.
    pub warning: Option<String>,
}

/// Quenches target and prepared state with `h` and tracks F_c(t) between
/// their distributions. `prepared` is a list of (weight, pure state). With
/// `shots`, the prepared distribution is replaced by that many samples per
/// time.
pub fn target_state_benchmark(
    target: &StateVector,
    prepared: &[(f64, StateVector)],
    h: &SparseMatrix,
    times: &[f64],
    shots: Option<usize>,
    seed: u64,
) -> Result<TargetBenchmark> {
    if prepared.is_empty() {
        return Err(Error::Empty("prepared mixture has no components".into()));
    }
    let wsum: f64 = prepared.iter().map(|p| p.0).sum();
    if !(wsum > 0.0) || prepared.iter().any(|p| p.0 < 0.0) {
        return Err(Error::InvalidInput("mixture weights must be ≥ 0 with positive sum".into()));
    }
    let fidelity = prepared.iter().map(|(w, s)| w / wsum * target.overlap(s)).sum();
    let ideal = evolve_states(h, target, times)?;
    let comps = prepared.par_iter().map(|(_, s)| evolve_states(h, s, times)).collect::<Result<Vec<_>>>()?;
    let n = target.basis().n_sites();
    let mut fc = Vec::with_capacity(times.len());
    for (k, psi) in ideal.iter().enumerate() {
        let p0 = ProbTable::from_state(psi);
        let mut mix: Vec<(u64, f64)> = Vec::new();
        for ((w, _), states) in prepared.iter().zip(&comps) {
            mix.extend(states[k].probabilities().into_iter().map(|(z, p)| (z, p * w / wsum)));
        }
        let p = ProbTable::from_probs(n, mix)?;
        let p = match shots {
            None => p,
            Some(m) => {
                let draws = sample_from_distribution(p.entries(), n, m, &mut stream(seed, k as u64))?;
                ProbTable::from_samples(&SampleSet::new(n, "", draws, "")?)?
            }
        };
        fc.push(fc_exact(&p0, &p)?);
    }
    let late = ideal.last().ok_or_else(|| Error::Empty("no times".into()))?;
    let rule = late.basis().constraint() == Constraint::Blockade;
    let mut marginal_deviation: f64 = 0.0;
    for i in 0..n {
        let bip = Bipartition::new(n, &[i], rule)?;
        let rho = project(late, &bip, Weighting::Born)?.first_moment();
        marginal_deviation = marginal_deviation.max((rho[(0, 0)].re - 0.5).abs());
    }
    let warning = (marginal_deviation > INFINITE_TEMPERATURE_TOL).then(|| {
        format!("late-time marginals deviate from 1/2 by {marginal_deviation:.3}; quench may not reach infinite temperature")
    });
    Ok(TargetBenchmark { fidelity, times: times.to_vec(), fc, marginal_deviation, warning })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::apply_rotation;
    use crate::bench::ErrorAxis;
    use crate::evolve::{apply_two, sample_bitstrings};
    use crate::models::{build_quench, ground_state, QuenchSpec};
    use nalgebra::Matrix4;
    use num_complex::Complex64;

    fn synthetic(family: &RydbergFamily, times: &[f64]) -> Vec<TimedTable> {
        family
            .tables(&family.spec, times)
            .unwrap()
            .into_iter()
            .zip(times)
            .map(|(table, &time)| TimedTable { time, table })
            .collect()
    }

    #[test]
    fn test_scan_recovers_omega() {
        let fam = RydbergFamily::new(RydbergSpec::chain(8, 5.3, 1.0), Constraint::Blockade);
        let times: Vec<f64> = (1..=12).map(|k| 0.1 * k as f64).collect();
        let data = synthetic(&fam, &times);
        let grid: Vec<f64> = (0..13).map(|k| 4.7 + 0.1 * k as f64).collect();
        let r = scan_parameter(&data, &fam, LearnParam::Omega, &grid, Window::Auto).unwrap();
        assert!((r.peak.unwrap() - 5.3).abs() < 1e-9);
        assert!(!r.degenerate && r.failed.is_empty());
        let ones = r.normalized.iter().filter(|v| v.unwrap() == 1.0).count();
        assert_eq!(ones, 1);
        assert!(r.window.from > 0.1);
    }

    #[test]
    fn test_scan_from_samples() {
        let fam = RydbergFamily::new(RydbergSpec::chain(8, 5.3, 1.0), Constraint::Blockade);
        let times: Vec<f64> = (1..=10).map(|k| 0.15 * k as f64).collect();
        let states = fam.simulate(&fam.spec, &times).unwrap();
        let samples: Vec<(f64, SampleSet)> = states
            .iter()
            .zip(&times)
            .enumerate()
            .map(|(k, (s, &t))| (t, sample_bitstrings(s, 4000, k as u64).unwrap()))
            .collect();
        let data = tables_from_samples(&samples).unwrap();
        let grid: Vec<f64> = (0..9).map(|k| 4.9 + 0.1 * k as f64).collect();
        let r = scan_parameter(&data, &fam, LearnParam::Omega, &grid, Window::All).unwrap();
        assert!((r.peak.unwrap() - 5.3).abs() <= 0.1 + 1e-9);
    }

    #[test]
    fn test_flat_zero_samples_flagged() {
        let fam = RydbergFamily::new(RydbergSpec::chain(6, 5.0, 0.0), Constraint::Blockade);
        let zero = ProbTable::from_probs(6, vec![(0, 1.0)]).unwrap();
        let data: Vec<TimedTable> = (1..=4).map(|k| TimedTable { time: 0.2 * k as f64, table: zero.clone() }).collect();
        let grid = [4.0, 4.5, 5.0, 5.5, 6.0];
        let r = scan_parameter(&data, &fam, LearnParam::Omega, &grid, Window::All).unwrap();
        assert!(r.degenerate);
    }

    #[test]
    fn test_scan_validation() {
        let fam = RydbergFamily::new(RydbergSpec::chain(6, 5.0, 0.0), Constraint::Blockade);
        let data = synthetic(&fam, &[0.1, 0.2]);
        assert!(scan_parameter(&data, &fam, LearnParam::Omega, &[1.0, 2.0, 3.0, 4.0, 5.0], Window::All).is_err());
        let data = synthetic(&fam, &[0.1, 0.2, 0.3]);
        assert!(scan_parameter(&data, &fam, LearnParam::Omega, &[1.0, 2.0], Window::All).is_err());
    }

    #[test]
    fn test_vnnn_parameter_mapping() {
        let fam = RydbergFamily::new(RydbergSpec::chain(6, 5.0, 0.0), Constraint::Blockade);
        let s = fam.with_param(LearnParam::VNnn, 0.7);
        assert!((s.v_nnn() - 0.7).abs() < 1e-12);
    }

    #[test]
    fn test_rss_zero_at_truth() {
        let fam = RydbergFamily::new(RydbergSpec::chain(6, 5.0, 0.5), Constraint::Blockade);
        let times = [0.3, 0.6, 0.9];
        let reference: Vec<(f64, Vec<f64>)> =
            fam.simulate(&fam.spec, &times).unwrap().iter().zip(times).map(|(s, t)| (t, magnetizations(s))).collect();
        let grid = [4.0, 4.5, 5.0, 5.5, 6.0];
        let r = rss_comparator(&reference, &fam, LearnParam::Omega, &grid).unwrap();
        for row in &r.one_minus_rss {
            assert!((row[2] - 1.0).abs() < 1e-12);
            assert!(row.iter().all(|&v| v <= 1.0 + 1e-12));
        }
    }

    fn local_case(offsets: Vec<f64>, seed: u64) -> (Vec<f64>, LocalLearnResult) {
        let mut spec = RydbergSpec::chain(8, 5.0, 0.0);
        spec.delta_offsets = offsets.clone();
        let truth = RydbergFamily::new(spec, Constraint::Blockade);
        let times: Vec<f64> = (1..=20).map(|k| 0.2 * k as f64).collect();
        let data = synthetic(&truth, &times);
        let fam = RydbergFamily::new(RydbergSpec::chain(8, 5.0, 0.0), Constraint::Blockade);
        let opts = LocalOptions { restarts: 6, seed, ..Default::default() };
        (offsets, learn_local_fields(&data, &fam, &opts).unwrap())
    }

    #[test]
    fn test_local_fields_zero_disorder() {
        let (_, r) = local_case(vec![0.0; 8], 1);
        assert_eq!(r.restarts.len(), 6);
        for (m, s) in r.mean.iter().zip(&r.std) {
            assert!(m.abs() <= (2.0 * s).max(0.05), "{:?} {:?}", r.mean, r.std);
        }
    }

    #[test]
    fn test_local_fields_recovered() {
        let mut rng = stream(77, 0);
        let offsets: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let (truth, r) = local_case(offsets, 3);
        for i in 0..8 {
            assert!((r.mean[i] - truth[i]).abs() <= (2.0 * r.std[i]).max(0.05), "{truth:?} {:?} {:?}", r.mean, r.std);
        }
    }

    #[test]
    fn test_target_state_pure_and_mixed() {
        let n = 8;
        let b = Arc::new(BasisMap::full(n).unwrap());
        let h = build_quench(&QuenchSpec::uniform(n, 1.0, -1.79, 0.0, 4.64), &b).unwrap();
        // cluster state: CZ chain on |+⟩^N
        let s = (1.0 / (1 << n) as f64).sqrt();
        let mut amps = vec![Complex64::new(s, 0.0); 1 << n];
        let one = Complex64::new(1.0, 0.0);
        let cz = Matrix4::from_diagonal(&nalgebra::Vector4::new(one, one, one, -one));
        for i in 0..n - 1 {
            apply_two(&mut amps, n, i, i + 1, &cz);
        }
        let target = StateVector::new(b.clone(), amps).unwrap();
        let times: Vec<f64> = (0..=40).map(|k| 0.5 * k as f64).collect();
        let pure = target_state_benchmark(&target, &[(1.0, target.clone())], &h, &times, None, 0).unwrap();
        assert!(pure.fc.iter().all(|v| (v - 1.0).abs() < 1e-10));
        // global z rotation to F = 1/2: cos²(θ/2)^… solved numerically
        let rotate = |theta: f64| {
            let mut p = target.clone();
            for i in 0..n {
                p = apply_rotation(&p, i, ErrorAxis::Z, theta).unwrap();
            }
            p
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if target.overlap(&rotate(mid)) > 0.5 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let prep = rotate(lo);
        let r = target_state_benchmark(&target, &[(1.0, prep)], &h, &times, None, 0).unwrap();
        assert!((r.fidelity - 0.5).abs() < 1e-9);
        let late: Vec<f64> = r.fc[times.len() / 2..].to_vec();
        let mean = late.iter().sum::<f64>() / late.len() as f64;
        assert!((mean - 0.5).abs() <= 0.1, "{mean}");
        assert!(r.warning.is_none(), "{:?}", r.marginal_deviation);
    }

    #[test]
    fn test_ground_state_mixture() {
        let n = 15;
        let b = Arc::new(BasisMap::blockade(n).unwrap());
        let mut spec = RydbergSpec::chain(n, 1.0, 1.1);
        spec.c6 = 0.2 * (2.0 * spec.spacing).powi(6);
        let eig = ground_state(&build_rydberg(&spec, &b).unwrap(), 2).unwrap();
        let g0 = StateVector::normalized(b.clone(), eig.vectors[0].clone()).unwrap();
        let g1 = StateVector::normalized(b.clone(), eig.vectors[1].clone()).unwrap();
        let quench = build_rydberg(&RydbergSpec::chain(n, 5.0, 0.0), &b).unwrap();
        let times: Vec<f64> = (0..=40).map(|k| 0.1 * k as f64).collect();
        let r = target_state_benchmark(&g0, &[(0.5, g0.clone()), (0.5, g1)], &quench, &times, None, 0).unwrap();
        assert!((r.fidelity - 0.5).abs() < 1e-9);
        let late = &r.fc[20..];
        let mean = late.iter().sum::<f64>() / late.len() as f64;
        assert!((mean - 0.5).abs() <= 0.05, "{mean} {:?} {}", r.fc, r.marginal_deviation);
    }
}
