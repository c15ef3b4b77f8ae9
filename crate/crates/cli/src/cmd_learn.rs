//! `projens learn`: F_c parameter scans and local-field learning.

use std::path::Path;

use serde::Serialize;

use projens::bench::ProbTable;
use projens::evolve::{sample_from_distribution, SampleSet};
use projens::hilbert::get_bit;
use projens::learn::{
    learn_local_fields, rss_comparator, scan_parameter, tables_from_samples, LocalLearnResult, LocalOptions, RssResult,
    RydbergFamily, ScanResult, TimedTable, DEFAULT_FIELD_BOX, DEFAULT_RESTARTS,
};
use projens::random::stream;

use crate::config::{resolve_seed, LearnConfig, LearnData, LearnTask};
use crate::error::{Classify, CliError, CliResult};
use crate::output::{header, num, Output, Resolved};
use crate::system::sub_seed;

const SAMPLE_PURPOSE: u64 = 1;
const DEFAULT_MAX_EVALUATIONS: usize = 3000;

#[derive(Serialize)]
#[serde(rename_all = "kebab-case", tag = "task")]
enum Report {
    Scan { scan: ScanResult, rss: Option<RssResult> },
    Local(LocalLearnResult),
}

/// ⟨Sᶻ_i⟩ = 1/2 − ⟨n_i⟩ from a table.
fn table_magnetizations(t: &ProbTable) -> Vec<f64> {
    let n = t.n_sites();
    (0..n).map(|i| 0.5 - t.entries().iter().filter(|(z, _)| get_bit(*z, n, i)).map(|e| e.1).sum::<f64>()).collect()
}

fn load_data(cfg: &LearnConfig, base: &Path) -> CliResult<Vec<TimedTable>> {
    match &cfg.data {
        LearnData::Samples(files) => {
            let sets = files
                .iter()
                .map(|f| Ok((f.time, SampleSet::read(&base.join(&f.path)).input()?)))
                .collect::<CliResult<Vec<_>>>()?;
            tables_from_samples(&sets).input()
        }
        LearnData::Synthetic(s) => {
            let times = s.times.values("data.synthetic.times")?;
            let truth = RydbergFamily::new(s.truth.clone(), cfg.family.constraint);
            let tables = truth.tables(&truth.spec, &times).run()?;
            let n = truth.spec.n;
            tables
                .into_iter()
                .zip(&times)
                .enumerate()
                .map(|(k, (table, &time))| {
                    let table = match s.shots {
                        None => table,
                        Some(m) => {
                            let mut rng = stream(sub_seed(cfg.seed.unwrap(), SAMPLE_PURPOSE, k), 0);
                            let draws = sample_from_distribution(table.entries(), n, m, &mut rng).run()?;
                            ProbTable::from_samples(&SampleSet::new(n, "", draws, "").run()?).run()?
                        }
                    };
                    Ok(TimedTable { time, table })
                })
                .collect()
        }
    }
}

pub fn run(mut cfg: LearnConfig, seed: Option<u64>, base: &Path, out: &Output) -> CliResult<()> {
    let sampled = matches!(&cfg.data, LearnData::Synthetic(s) if s.shots.is_some());
    if let LearnTask::Local(l) = &mut cfg.task {
        l.restarts.get_or_insert(DEFAULT_RESTARTS);
        l.field_box.get_or_insert(DEFAULT_FIELD_BOX);
        l.max_evaluations.get_or_insert(DEFAULT_MAX_EVALUATIONS);
    }
    let stochastic = sampled || matches!(cfg.task, LearnTask::Local(_));
    cfg.seed = resolve_seed(seed, cfg.seed, stochastic)?;
    out.json("config.resolved.json", &Resolved { command: "learn", config: &cfg })?;

    let data = load_data(&cfg, base)?;
    if let Some(d) = data.iter().find(|d| d.table.n_sites() != cfg.family.spec.n) {
        return Err(CliError::Input(format!(
            "data at t={} has {} sites, family has {}",
            d.time,
            d.table.n_sites(),
            cfg.family.spec.n
        )));
    }
    let report = match &cfg.task {
        LearnTask::Scan(t) => {
            let grid = t.grid.values("task.scan.grid")?;
            let scan = scan_parameter(&data, &cfg.family, t.param, &grid, t.window).run()?;
            let rows = grid.iter().enumerate().map(|(i, &g)| {
                vec![
                    num(g),
                    scan.integrated[i].map(num).unwrap_or_default(),
                    scan.normalized[i].map(num).unwrap_or_default(),
                ]
            });
            out.csv("scan.csv", &header(&["value", "integrated_fc", "normalized"]), rows)?;
            let rss = if t.rss {
                let reference: Vec<(f64, Vec<f64>)> =
                    data.iter().map(|d| (d.time, table_magnetizations(&d.table))).collect();
                let r = rss_comparator(&reference, &cfg.family, t.param, &grid).run()?;
                let mut cols = header(&["time"]);
                cols.extend(grid.iter().map(|g| format!("v={g}")));
                let rows = r.times.iter().zip(&r.one_minus_rss).map(|(&time, row)| {
                    let mut v = vec![num(time)];
                    v.extend(row.iter().map(|&x| num(x)));
                    v
                });
                out.csv("rss.csv", &cols, rows)?;
                Some(r)
            } else {
                None
            };
            Report::Scan { scan, rss }
        }
        LearnTask::Local(l) => {
            let opts = LocalOptions {
                restarts: l.restarts.unwrap(),
                seed: cfg.seed.unwrap(),
                field_box: l.field_box.unwrap(),
                max_evaluations: l.max_evaluations.unwrap(),
                window: l.window,
            };
            let r = learn_local_fields(&data, &cfg.family, &opts).run()?;
            let rows = r.mean.iter().zip(&r.std).enumerate().map(|(i, (m, s))| vec![i.to_string(), num(*m), num(*s)]);
            out.csv("fields.csv", &header(&["site", "mean", "std"]), rows)?;
            Report::Local(r)
        }
    };
    out.json("result.json", &report)
}
