//! `projens ensemble`: design distances, rescaled moments and histograms of
//! the projected ensemble along a trajectory.

use serde::Serialize;

use projens::bench::BOOTSTRAP_RESAMPLES;
use projens::ensemble::{design_distance, project, ConditionalTable, MomentScalar, Weighting, DEFAULT_BINS, MIN_SHOTS};
use projens::evolve::sample_bitstrings;

use crate::config::{resolve_seed, EnsembleConfig};
use crate::error::{Classify, CliError, CliResult};
use crate::output::{header, num, Output, Resolved};
use crate::system::{bipartition, resolve_basis, resolve_bipartition, sub_seed, System};

const SAMPLE_PURPOSE: u64 = 1;
const BOOTSTRAP_PURPOSE: u64 = 3;

#[derive(Serialize)]
struct Distance {
    k: usize,
    value: f64,
}

#[derive(Serialize)]
struct Row {
    time: f64,
    /// Number of retained z_B outcomes.
    outcomes: usize,
    distances: Vec<Distance>,
    moments: Vec<MomentScalar>,
    histogram: String,
}

#[derive(Serialize)]
struct Report {
    dim_a: usize,
    rows: Vec<Row>,
}

pub fn run(mut cfg: EnsembleConfig, seed: Option<u64>, out: &Output) -> CliResult<()> {
    resolve_basis(&cfg.model, &mut cfg.basis);
    resolve_bipartition(&mut cfg.bipartition, &cfg.basis);
    cfg.weighting.get_or_insert(Weighting::Born);
    cfg.orders.get_or_insert_with(|| vec![1, 2, 3, 4]);
    cfg.moments.get_or_insert_with(|| vec![2, 3, 4]);
    cfg.bins.get_or_insert(DEFAULT_BINS);
    if cfg.shots.is_some() {
        cfg.min_shots.get_or_insert(MIN_SHOTS);
        cfg.resamples.get_or_insert(BOOTSTRAP_RESAMPLES);
    }
    cfg.seed = resolve_seed(seed, cfg.seed, cfg.shots.is_some())?;
    out.json("config.resolved.json", &Resolved { command: "ensemble", config: &cfg })?;

    let sys = System::build(&cfg.model, &cfg.basis, &cfg.initial, cfg.times.as_ref())?;
    let n = sys.basis.n_sites();
    let bip = bipartition(n, &cfg.bipartition)?;
    let res = sys.evolve()?;
    let dir = out.subdir("histograms")?;
    let mut rows = Vec::with_capacity(res.states.len());
    let mut dim_a = 0;
    for (k, psi) in res.states.iter().enumerate() {
        let ens = project(psi, &bip, cfg.weighting.unwrap()).run()?;
        dim_a = ens.dim_a();
        let distances = cfg
            .orders
            .as_ref()
            .unwrap()
            .iter()
            .map(|&o| Ok(Distance { k: o, value: design_distance(&ens, o).run()? }))
            .collect::<CliResult<Vec<_>>>()?;
        let table = match cfg.shots {
            None => ConditionalTable::from_ensemble(&ens),
            Some(m) => {
                let s = sample_bitstrings(psi, m, sub_seed(cfg.seed.unwrap(), SAMPLE_PURPOSE, k)).run()?;
                ConditionalTable::from_samples(&s, &bip, sys.basis.constraint(), cfg.min_shots.unwrap()).run()?
            }
        };
        let bseed = cfg.seed.map(|s| sub_seed(s, BOOTSTRAP_PURPOSE, k)).unwrap_or(0);
        let moments = cfg
            .moments
            .as_ref()
            .unwrap()
            .iter()
            .map(|&o| table.moment(o, cfg.resamples.unwrap_or(0), bseed).run())
            .collect::<CliResult<Vec<_>>>()?;
        let hist = table.histogram(cfg.z_a, cfg.bins.unwrap()).run()?;
        let name = format!("t{k:03}.csv");
        hist.write_csv(&dir.join(&name)).output()?;
        rows.push(Row {
            time: res.times[k],
            outcomes: table.rows.len(),
            distances,
            moments,
            histogram: format!("histograms/{name}"),
        });
    }
    if rows.is_empty() {
        return Err(CliError::Config("no times to analyse".into()));
    }

    let mut cols = header(&["time", "outcomes"]);
    cols.extend(rows[0].distances.iter().map(|d| format!("distance_k{}", d.k)));
    cols.extend(rows[0].moments.iter().map(|m| format!("rescaled_k{}", m.k)));
    cols.extend(rows[0].moments.iter().map(|m| format!("rescaled_k{}_se", m.k)));
    let csv_rows = rows.iter().map(|r| {
        let mut v = vec![num(r.time), r.outcomes.to_string()];
        v.extend(r.distances.iter().map(|d| num(d.value)));
        v.extend(r.moments.iter().map(|m| num(m.rescaled.mean)));
        v.extend(r.moments.iter().map(|m| num(m.rescaled.se)));
        v
    });
    out.csv("ensemble.csv", &cols, csv_rows)?;
    out.json("result.json", &Report { dim_a, rows })
}
