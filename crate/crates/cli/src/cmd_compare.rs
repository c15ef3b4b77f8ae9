//! `projens compare`: entropy-matched circuit size and effective cycle
//! fidelity of an analog simulator.

use serde::Serialize;

use projens::analysis::{
    cycle_fidelity, fidelity_at_entanglement, fit_entanglement_time, fit_fidelity_decay, fit_saturated_entropy, line,
    page_equivalence, CycleInputs, DecayFit, PiecewiseFit,
};
use projens::stats::{Estimate, LinearFit};

use crate::config::{CompareConfig, DecayInput, EntropyInput, LineConfig, SaturationInput};
use crate::error::{Classify, CliError, CliResult};
use crate::output::{header, num, Output, Resolved};

#[derive(Serialize)]
struct PageReport {
    slope: f64,
    offset: f64,
    eta0: f64,
    eta1: f64,
}

#[derive(Serialize)]
struct Row {
    n: f64,
    n_ruc: Estimate,
    gamma: f64,
    t_ent: f64,
    d_ent: f64,
    f_cycle: Estimate,
    /// F0^N·exp(−γ t_ent), when `f0` is given.
    f_model: Option<f64>,
}

#[derive(Serialize)]
struct Report {
    page: PageReport,
    gamma: LinearFit,
    t_ent: LinearFit,
    d_ent: LinearFit,
    entropy: LinearFit,
    decay_fit: Option<DecayFit>,
    t_ent_fit: Option<PiecewiseFit>,
    d_ent_fit: Option<PiecewiseFit>,
    rows: Vec<Row>,
}

fn to_line(l: &LineConfig) -> LinearFit {
    line(l.intercept, l.slope, l.intercept_se, l.slope_se)
}

fn saturation(s: &SaturationInput) -> CliResult<(LinearFit, Option<PiecewiseFit>)> {
    match s {
        SaturationInput::Line(l) => Ok((to_line(l), None)),
        SaturationInput::Traces(t) => {
            let f = fit_entanglement_time(&t.traces, t.c).input()?;
            Ok((f.alpha, Some(f)))
        }
    }
}

pub fn run(cfg: CompareConfig, out: &Output) -> CliResult<()> {
    out.json("config.resolved.json", &Resolved { command: "compare", config: &cfg })?;
    if cfg.sizes.is_empty() {
        return Err(CliError::Config("`sizes` is empty".into()));
    }
    let (gamma, decay_fit) = match &cfg.gamma {
        DecayInput::Line(l) => (to_line(l), None),
        DecayInput::Traces(t) => {
            let f = fit_fidelity_decay(t).input()?;
            (f.gamma, Some(f))
        }
    };
    let (t_ent, t_ent_fit) = saturation(&cfg.t_ent)?;
    let (d_ent, d_ent_fit) = saturation(&cfg.d_ent)?;
    let entropy = match (&cfg.entropy, &cfg.t_ent) {
        (EntropyInput::Line(l), _) => to_line(l),
        (EntropyInput::FromTraces, SaturationInput::Traces(t)) => {
            fit_saturated_entropy(&t.traces, t_ent_fit.as_ref().unwrap()).input()?
        }
        (EntropyInput::FromTraces, SaturationInput::Line(_)) => {
            return Err(CliError::Config("`entropy = \"from-traces\"` needs `t_ent` traces".into()))
        }
    };
    let inputs = CycleInputs { gamma, t_ent, d_ent, entropy };
    let page = page_equivalence(entropy);
    let rows = cfg
        .sizes
        .iter()
        .map(|&n| {
            let n_ruc = page.n_ruc(n);
            Ok(Row {
                n,
                n_ruc,
                gamma: gamma.eval(n),
                t_ent: t_ent.eval(n),
                d_ent: d_ent.eval(n_ruc.mean),
                f_cycle: cycle_fidelity(&inputs, n).run()?,
                f_model: cfg.f0.map(|f0| fidelity_at_entanglement(f0, &gamma, &t_ent, n)),
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let cols = header(&["n", "n_ruc", "gamma", "t_ent", "d_ent", "f_cycle", "f_cycle_se", "f_model"]);
    let csv_rows = rows.iter().map(|r| {
        vec![
            num(r.n),
            num(r.n_ruc.mean),
            num(r.gamma),
            num(r.t_ent),
            num(r.d_ent),
            num(r.f_cycle.mean),
            num(r.f_cycle.se),
            r.f_model.map(num).unwrap_or_default(),
        ]
    });
    out.csv("compare.csv", &cols, csv_rows)?;
    out.json(
        "result.json",
        &Report {
            page: PageReport { slope: page.slope(), offset: page.offset(), eta0: page.eta0, eta1: page.eta1 },
            gamma,
            t_ent,
            d_ent,
            entropy,
            decay_fit,
            t_ent_fit,
            d_ent_fit,
            rows,
        },
    )
}
