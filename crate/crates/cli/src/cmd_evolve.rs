//! `projens evolve`: observables, optional noise, samples and histograms.

use serde::Serialize;

use projens::ensemble::{conditional_histogram, project, Weighting, DEFAULT_BINS};
use projens::evolve::{apply_spam, entanglement_entropy, sample_from_distribution, Observables, SampleSet};
use projens::random::stream;
use projens::stats::Estimate;

use crate::config::{resolve_seed, EvolveConfig};
use crate::error::{Classify, CliResult};
use crate::output::{header, num, Output, Resolved};
use crate::system::{basis_label, bipartition, resolve_basis, resolve_bipartition, sub_seed, System};

pub const DEFAULT_TRAJECTORIES: usize = 1000;
pub const DEFAULT_DT: f64 = 0.01;
const SAMPLE_PURPOSE: u64 = 1;
const SPAM_PURPOSE: u64 = 2;

#[derive(Serialize)]
struct Report<'a> {
    times: &'a [f64],
    entropy: Vec<f64>,
    observables: &'a [Observables],
    /// Trajectory fidelity ⟨ψ|ρ|ψ⟩, present for noisy runs.
    fidelity: Option<Vec<Estimate>>,
    samples: Vec<String>,
    histograms: Vec<String>,
}

pub fn run(mut cfg: EvolveConfig, seed: Option<u64>, out: &Output) -> CliResult<()> {
    resolve_basis(&cfg.model, &mut cfg.basis);
    cfg.seed = resolve_seed(seed, cfg.seed, cfg.shots.is_some() || cfg.noise.is_some())?;
    if let Some(b) = cfg.bipartition.as_mut() {
        resolve_bipartition(b, &cfg.basis);
    }
    if let Some(h) = cfg.histogram.as_mut() {
        resolve_bipartition(&mut h.bipartition, &cfg.basis);
        h.bins.get_or_insert(DEFAULT_BINS);
        h.weighting.get_or_insert(Weighting::Born);
    }
    if cfg.noise.is_some() {
        cfg.trajectories.get_or_insert(DEFAULT_TRAJECTORIES);
        cfg.dt.get_or_insert(DEFAULT_DT);
    }
    out.json("config.resolved.json", &Resolved { command: "evolve", config: &cfg })?;

    let sys = System::build(&cfg.model, &cfg.basis, &cfg.initial, cfg.times.as_ref())?;
    let n = sys.basis.n_sites();
    let res = sys.evolve()?;
    let entropy: Vec<f64> = match &cfg.bipartition {
        Some(b) => {
            let bip = bipartition(n, b)?;
            res.states.iter().map(|s| entanglement_entropy(s, &bip)).collect::<projens::Result<_>>().run()?
        }
        None => res.observables.iter().map(|o| o.entropy).collect(),
    };
    let noisy = match &cfg.noise {
        Some(nm) => Some(sys.noisy(nm, cfg.trajectories.unwrap(), cfg.dt.unwrap(), cfg.seed.unwrap())?),
        None => None,
    };

    let mut sample_files = Vec::new();
    if let Some(m) = cfg.shots {
        let seed = cfg.seed.unwrap();
        let dir = out.subdir("samples")?;
        for (k, psi) in res.states.iter().enumerate() {
            let probs = match &noisy {
                Some(r) => r.probs[k].clone(),
                None => psi.probabilities(),
            };
            let shots =
                sample_from_distribution(&probs, n, m, &mut stream(sub_seed(seed, SAMPLE_PURPOSE, k), 0)).run()?;
            let mut set =
                SampleSet::new(n, basis_label(&sys.basis), shots, format!("evolve seed={seed} index={k}")).run()?;
            if let Some(nm) = &cfg.noise {
                set = apply_spam(&set, &nm.spam, sub_seed(seed, SPAM_PURPOSE, k)).run()?;
            }
            let name = format!("t{k:03}.txt");
            set.write(&dir.join(&name)).output()?;
            sample_files.push(format!("samples/{name}"));
        }
    }

    let mut hist_files = Vec::new();
    if let Some(h) = &cfg.histogram {
        let bip = bipartition(n, &h.bipartition)?;
        let dir = out.subdir("histograms")?;
        for (k, psi) in res.states.iter().enumerate() {
            let ens = project(psi, &bip, h.weighting.unwrap()).run()?;
            let hist = conditional_histogram(&ens, h.z_a, h.bins.unwrap()).run()?;
            let name = format!("t{k:03}.csv");
            hist.write_csv(&dir.join(&name)).output()?;
            hist_files.push(format!("histograms/{name}"));
        }
    }

    if cfg.amplitudes {
        res.write_amplitudes_csv(&out.path("amplitudes.csv")).output()?;
    }

    let mut cols = header(&["time", "entropy", "blockade_weight", "parity"]);
    cols.extend((0..n).map(|i| format!("n_{i}")));
    if noisy.is_some() {
        cols.extend(header(&["fidelity", "fidelity_se"]));
    }
    let rows = res.times.iter().enumerate().map(|(k, &t)| {
        let o = &res.observables[k];
        let mut r = vec![num(t), num(entropy[k]), num(o.blockade_weight), num(o.parity)];
        r.extend(o.occupations.iter().map(|&v| num(v)));
        if let Some(nr) = &noisy {
            r.push(num(nr.fidelity[k].mean));
            r.push(num(nr.fidelity[k].se));
        }
        r
    });
    out.csv("observables.csv", &cols, rows)?;
    out.json(
        "result.json",
        &Report {
            times: &res.times,
            entropy,
            observables: &res.observables,
            fidelity: noisy.map(|r| r.fidelity),
            samples: sample_files,
            histograms: hist_files,
        },
    )
}
