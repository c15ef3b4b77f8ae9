//! `projens benchmark`: F_c against the noiseless simulation, from sample
//! files, probability tables or the configured noise model.

use std::path::Path;

use serde::Serialize;

use projens::bench::{
    fc_empirical, fc_exact, fc_rydberg, FcReport, FcVariant, Observed, ProbTable, BOOTSTRAP_RESAMPLES,
};
use projens::evolve::{apply_spam, sample_from_distribution, SampleSet};
use projens::hilbert::Constraint;
use projens::random::stream;
use projens::stats::Estimate;

use crate::cmd_evolve::{DEFAULT_DT, DEFAULT_TRAJECTORIES};
use crate::config::{resolve_seed, BenchmarkConfig, BenchmarkData};
use crate::error::{Classify, CliError, CliResult};
use crate::output::{header, num, Output, Resolved};
use crate::system::{basis_label, resolve_basis, sub_seed, System};

const SAMPLE_PURPOSE: u64 = 1;
const SPAM_PURPOSE: u64 = 2;
const BOOTSTRAP_PURPOSE: u64 = 3;

enum Measured {
    Samples(Vec<SampleSet>),
    Tables(Vec<ProbTable>),
}

#[derive(Serialize)]
struct Report<'a> {
    times: &'a [f64],
    reports: Vec<FcReport>,
    /// Trajectory fidelity of the noise model, when it generated the data.
    model_fidelity: Option<Vec<Estimate>>,
}

fn check_count(what: &str, got: usize, want: usize) -> CliResult<()> {
    if got != want {
        return Err(CliError::Config(format!("{what}: {got} files for {want} times")));
    }
    Ok(())
}

pub fn run(mut cfg: BenchmarkConfig, seed: Option<u64>, base: &Path, out: &Output) -> CliResult<()> {
    resolve_basis(&cfg.model, &mut cfg.basis);
    let sampled = match &cfg.data {
        BenchmarkData::Samples(_) => true,
        BenchmarkData::Tables(_) => false,
        BenchmarkData::Model(m) => m.shots.is_some(),
    };
    if let BenchmarkData::Model(m) = &mut cfg.data {
        m.trajectories.get_or_insert(DEFAULT_TRAJECTORIES);
        m.dt.get_or_insert(DEFAULT_DT);
        if m.shots.is_none() && !m.noise.spam.is_identity() {
            return Err(CliError::Config("SPAM errors act on shots: set `shots` in the model data".into()));
        }
    }
    let default_variant = match (cfg.basis.constraint, sampled) {
        (Some(Constraint::Blockade), _) => FcVariant::BlockadeParity,
        (_, true) => FcVariant::Empirical,
        (_, false) => FcVariant::Exact,
    };
    let variant = *cfg.variant.get_or_insert(default_variant);
    match (variant, sampled) {
        (FcVariant::Exact, true) => return Err(CliError::Config("variant `exact` needs probability tables".into())),
        (FcVariant::Empirical, false) => return Err(CliError::Config("variant `empirical` needs shots".into())),
        _ => {}
    }
    if sampled {
        cfg.resamples.get_or_insert(BOOTSTRAP_RESAMPLES);
    }
    let stochastic = sampled || matches!(cfg.data, BenchmarkData::Model(_));
    cfg.seed = resolve_seed(seed, cfg.seed, stochastic)?;
    out.json("config.resolved.json", &Resolved { command: "benchmark", config: &cfg })?;

    let sys = System::build(&cfg.model, &cfg.basis, &cfg.initial, cfg.times.as_ref())?;
    let n = sys.basis.n_sites();
    let ideal = sys.evolve()?;
    let nt = sys.axis.len();
    let mut model_fidelity = None;
    let measured = match &cfg.data {
        BenchmarkData::Samples(paths) => {
            check_count("samples", paths.len(), nt)?;
            Measured::Samples(paths.iter().map(|p| SampleSet::read(&base.join(p)).input()).collect::<CliResult<_>>()?)
        }
        BenchmarkData::Tables(paths) => {
            check_count("tables", paths.len(), nt)?;
            Measured::Tables(
                paths.iter().map(|p| ProbTable::read_csv(&base.join(p)).input()).collect::<CliResult<_>>()?,
            )
        }
        BenchmarkData::Model(m) => {
            let seed = cfg.seed.unwrap();
            let noisy = sys.noisy(&m.noise, m.trajectories.unwrap(), m.dt.unwrap(), seed)?;
            model_fidelity = Some(noisy.fidelity.clone());
            match m.shots {
                None => Measured::Tables(
                    noisy.probs.into_iter().map(|p| ProbTable::from_probs(n, p).run()).collect::<CliResult<_>>()?,
                ),
                Some(shots) => {
                    let mut sets = Vec::with_capacity(nt);
                    for (k, p) in noisy.probs.iter().enumerate() {
                        let draws =
                            sample_from_distribution(p, n, shots, &mut stream(sub_seed(seed, SAMPLE_PURPOSE, k), 0))
                                .run()?;
                        let set = SampleSet::new(
                            n,
                            basis_label(&sys.basis),
                            draws,
                            format!("benchmark seed={seed} index={k}"),
                        )
                        .run()?;
                        sets.push(apply_spam(&set, &m.noise.spam, sub_seed(seed, SPAM_PURPOSE, k)).run()?);
                    }
                    Measured::Samples(sets)
                }
            }
        }
    };

    let resamples = cfg.resamples.unwrap_or(0);
    let mut reports = Vec::with_capacity(nt);
    for (k, psi) in ideal.states.iter().enumerate() {
        let p0 = ProbTable::from_state(psi);
        let bseed = cfg.seed.map(|s| sub_seed(s, BOOTSTRAP_PURPOSE, k)).unwrap_or(0);
        let r = match (&measured, variant) {
            (Measured::Samples(s), FcVariant::Empirical) => fc_empirical(&p0, &s[k], resamples, bseed).input()?,
            (Measured::Samples(s), FcVariant::BlockadeParity) => {
                fc_rydberg(&p0, Observed::Samples(&s[k]), None, None, resamples, bseed).input()?
            }
            (Measured::Tables(t), FcVariant::Exact) => FcReport {
                value: fc_exact(&p0, &t[k]).input()?,
                variant,
                shots: None,
                sigma: None,
                b: None,
                b0: None,
                out_of_basis: 0,
            },
            (Measured::Tables(t), FcVariant::BlockadeParity) => {
                fc_rydberg(&p0, Observed::Table(&t[k]), None, None, 0, 0).input()?
            }
            _ => unreachable!("variant checked against data kind"),
        };
        reports.push(r);
    }

    let mut cols = header(&["time", "fc", "sigma"]);
    if model_fidelity.is_some() {
        cols.extend(header(&["fidelity", "fidelity_se"]));
    }
    let rows = reports.iter().enumerate().map(|(k, r)| {
        let mut v = vec![num(sys.axis[k]), num(r.value), r.sigma.map(num).unwrap_or_default()];
        if let Some(f) = &model_fidelity {
            v.push(num(f[k].mean));
            v.push(num(f[k].se));
        }
        v
    });
    out.csv("fc.csv", &cols, rows)?;
    out.json("result.json", &Report { times: &sys.axis, reports, model_fidelity })
}
