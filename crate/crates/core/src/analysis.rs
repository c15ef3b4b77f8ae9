//! Fits for cross-platform comparison: entanglement saturation time,
//! many-body fidelity decay, entropy-matched system sizes and the effective
//! two-qubit cycle fidelity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{linear_fit, Estimate, LinearFit};

/// Saturation-time multipliers C in t_ent = C·t_c.
pub const C_RYDBERG: f64 = 1.35;
pub const C_FSIM: f64 = 1.0;
pub const C_SU4: f64 = 1.7;

/// Largest allowed drop below the running maximum, as a fraction of the
/// trace range, before a trace counts as non-monotone.
pub const MONOTONE_TOL: f64 = 0.1;

/// Page-curve intercept −log2(e)/2 of the random-state entropy line.
pub fn eta0() -> f64 {
    -std::f64::consts::LOG2_E / 2.0
}
/// Page-curve slope per qubit.
pub const ETA1: f64 = 0.5;

/// Entropy against time (or depth) for one system size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropyTrace {
    pub n: usize,
    pub times: Vec<f64>,
    pub entropy: Vec<f64>,
}

/// Fitted kink of one trace.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SizeFit {
    pub n: usize,
    pub m2: f64,
    pub t_c: f64,
    pub t_ent: f64,
}

/// Joint two-slope fit with an early slope shared by every size.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PiecewiseFit {
    pub m1: f64,
    pub c: f64,
    pub sizes: Vec<SizeFit>,
    /// t_ent(N) = α0 + α1·N.
    pub alpha: LinearFit,
    pub residual_ss: f64,
}

impl PiecewiseFit {
    pub fn t_ent(&self, n: f64) -> f64 {
        self.alpha.eval(n)
    }
}

fn piecewise(m1: f64, m2: f64, t_c: f64, t: f64) -> f64 {
    if t <= t_c {
        m1 * t
    } else {
        m1 * t_c + m2 * (t - t_c)
    }
}

fn cost(tr: &EntropyTrace, m1: f64, m2: f64, t_c: f64) -> f64 {
    tr.times.iter().zip(&tr.entropy).map(|(&t, &s)| (s - piecewise(m1, m2, t_c, t)).powi(2)).sum()
}

/// Least-squares m2 for fixed m1 and t_c.
fn slope_after(tr: &EntropyTrace, m1: f64, t_c: f64) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (&t, &s) in tr.times.iter().zip(&tr.entropy) {
        if t > t_c {
            num += (t - t_c) * (s - m1 * t_c);
            den += (t - t_c).powi(2);
        }
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Line through the points with index ≥ `from`, as (intercept, slope).
fn tail_line(tr: &EntropyTrace, from: usize) -> Option<(f64, f64)> {
    linear_fit(&tr.times[from..], &tr.entropy[from..]).ok().map(|f| (f.intercept, f.slope))
}

struct Kink {
    split: usize,
    m2: f64,
    t_c: f64,
    cost: f64,
}

/// Best kink for a trace at fixed m1. The kink lies between samples
/// `split` and `split + 1`.
fn best_kink(tr: &EntropyTrace, m1: f64) -> Kink {
    let n = tr.times.len();
    let mut best = Kink { split: 0, m2: 0.0, t_c: tr.times[0], cost: f64::INFINITY };
    for k in 0..n - 2 {
        let (lo, hi) = (tr.times[k], tr.times[k + 1]);
        let mut cands = vec![lo, hi];
        if let Some((a, m2)) = tail_line(tr, k + 1) {
            if m1 != m2 {
                let tc = a / (m1 - m2);
                if tc > lo && tc < hi {
                    cands.push(tc);
                }
            }
        }
        for tc in cands {
            let m2 = slope_after(tr, m1, tc);
            let c = cost(tr, m1, m2, tc);
            if c < best.cost {
                best = Kink { split: k, m2, t_c: tc, cost: c };
            }
        }
    }
    best
}

fn profile(traces: &[EntropyTrace], m1: f64) -> f64 {
    traces.iter().map(|t| best_kink(t, m1).cost).sum()
}

fn check_trace(tr: &EntropyTrace) -> Result<()> {
    if tr.times.len() != tr.entropy.len() || tr.times.len() < 4 {
        return Err(Error::InvalidInput(format!("trace N={} needs ≥ 4 matched points", tr.n)));
    }
    if tr.times.windows(2).any(|w| w[1] <= w[0]) || tr.times[0] < 0.0 {
        return Err(Error::InvalidInput(format!("trace N={}: times must be ≥ 0 and increasing", tr.n)));
    }
    if tr.entropy.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidInput(format!("trace N={} has non-finite entropy", tr.n)));
    }
    let max = tr.entropy.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = tr.entropy.iter().copied().fold(f64::INFINITY, f64::min);
    let mut run = f64::NEG_INFINITY;
    for (&t, &s) in tr.times.iter().zip(&tr.entropy) {
        run = run.max(s);
        if run - s > MONOTONE_TOL * (max - min) {
            return Err(Error::InvalidInput(format!("trace N={} is not monotone (drop at t={t})", tr.n)));
        }
    }
    Ok(())
}

/// Joint fit of S(t) = m1·t before t_c(N) and m1·t_c + m2(N)(t − t_c)
/// after it, with t_ent = C·t_c and a linear fit of t_ent against N.
pub fn fit_entanglement_time(traces: &[EntropyTrace], c: f64) -> Result<PiecewiseFit> {
    if traces.len() < 3 {
        return Err(Error::InvalidInput(format!("need ≥ 3 system sizes, got {}", traces.len())));
    }
    if !(c > 0.0) {
        return Err(Error::InvalidInput(format!("C = {c} must be positive")));
    }
    for tr in traces {
        check_trace(tr)?;
    }
    // coarse scan of the profiled cost over m1, then golden-section refinement
    let m1_max = traces
        .iter()
        .flat_map(|tr| tr.times.iter().zip(&tr.entropy).filter(|(t, _)| **t > 0.0).map(|(t, s)| s / t))
        .fold(0.0, f64::max)
        * 1.5
        + 1e-12;
    const GRID: usize = 400;
    let step = m1_max / GRID as f64;
    let costs: Vec<f64> = (0..=GRID).map(|i| profile(traces, i as f64 * step)).collect();
    let ib = (0..=GRID).min_by(|&a, &b| costs[a].total_cmp(&costs[b])).unwrap();
    let (mut a, mut b) = ((ib as f64 - 1.0).max(0.0) * step, (ib + 1) as f64 * step);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut x1, mut x2) = (b - g * (b - a), a + g * (b - a));
    let (mut f1, mut f2) = (profile(traces, x1), profile(traces, x2));
    for _ in 0..200 {
        if b - a <= 1e-15 * m1_max.max(1.0) {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = profile(traces, x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = profile(traces, x2);
        }
    }
    let mut m1 = if f1 <= f2 { x1 } else { x2 };
    let mut kinks: Vec<Kink> = traces.iter().map(|t| best_kink(t, m1)).collect();
    let mut total: f64 = kinks.iter().map(|k| k.cost).sum();

    // polish: with the splits fixed the problem is linear
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (tr, k) in traces.iter().zip(&kinks) {
        for i in 0..=k.split {
            sxy += tr.times[i] * tr.entropy[i];
            sxx += tr.times[i] * tr.times[i];
        }
    }
    if sxx > 0.0 {
        let m1p = sxy / sxx;
        let polished: Option<Vec<Kink>> = traces
            .iter()
            .zip(&kinks)
            .map(|(tr, k)| {
                let (a, m2) = tail_line(tr, k.split + 1)?;
                let tc = a / (m1p - m2);
                (tc >= tr.times[k.split] && tc <= tr.times[k.split + 1]).then(|| Kink {
                    split: k.split,
                    m2,
                    t_c: tc,
                    cost: cost(tr, m1p, m2, tc),
                })
            })
            .collect();
        if let Some(p) = polished {
            let pt: f64 = p.iter().map(|k| k.cost).sum();
            if pt <= total {
                m1 = m1p;
                kinks = p;
                total = pt;
            }
        }
    }
    let sizes: Vec<SizeFit> =
        traces.iter().zip(&kinks).map(|(tr, k)| SizeFit { n: tr.n, m2: k.m2, t_c: k.t_c, t_ent: c * k.t_c }).collect();
    let ns: Vec<f64> = sizes.iter().map(|s| s.n as f64).collect();
    let te: Vec<f64> = sizes.iter().map(|s| s.t_ent).collect();
    Ok(PiecewiseFit { m1, c, sizes, alpha: linear_fit(&ns, &te)?, residual_ss: total })
}

/// Linear interpolation of a trace at `t`, clamped to its ends.
pub fn entropy_at(tr: &EntropyTrace, t: f64) -> f64 {
    let k = tr.times.partition_point(|&x| x <= t);
    if k == 0 {
        return tr.entropy[0];
    }
    if k == tr.times.len() {
        return *tr.entropy.last().unwrap();
    }
    let (t0, t1) = (tr.times[k - 1], tr.times[k]);
    tr.entropy[k - 1] + (t - t0) / (t1 - t0) * (tr.entropy[k] - tr.entropy[k - 1])
}

/// S(N) = σ0 + σ1·N from each trace evaluated at its t_ent.
pub fn fit_saturated_entropy(traces: &[EntropyTrace], fit: &PiecewiseFit) -> Result<LinearFit> {
    let ns: Vec<f64> = traces.iter().map(|t| t.n as f64).collect();
    let s: Vec<f64> = traces.iter().zip(&fit.sizes).map(|(tr, sf)| entropy_at(tr, sf.t_ent)).collect();
    linear_fit(&ns, &s)
}

/// Fidelity against time for one system size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FidelityTrace {
    pub n: usize,
    pub times: Vec<f64>,
    pub fidelity: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecayRate {
    pub n: usize,
    pub gamma: Estimate,
    /// Fitted ln F at t = 0, left free to absorb preparation error.
    pub log_intercept: f64,
}

/// Exponential decay rates per size and γ(N) = γ0 + γ1·N.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    pub sizes: Vec<DecayRate>,
    pub gamma: LinearFit,
}

impl DecayFit {
    pub fn gamma_at(&self, n: f64) -> f64 {
        self.gamma.eval(n)
    }
}

/// Fits ln F = c − γ·t per size, then γ linearly in N.
pub fn fit_fidelity_decay(traces: &[FidelityTrace]) -> Result<DecayFit> {
    if traces.len() < 2 {
        return Err(Error::InvalidInput(format!("need ≥ 2 system sizes, got {}", traces.len())));
    }
    let mut sizes = Vec::with_capacity(traces.len());
    for tr in traces {
        if tr.times.len() != tr.fidelity.len() {
            return Err(Error::Mismatch(format!("trace N={}: times and fidelities differ in length", tr.n)));
        }
        if let Some(f) = tr.fidelity.iter().find(|f| !(**f > 0.0)) {
            return Err(Error::InvalidInput(format!("trace N={}: non-positive fidelity {f}", tr.n)));
        }
        let logf: Vec<f64> = tr.fidelity.iter().map(|f| f.ln()).collect();
        let f = linear_fit(&tr.times, &logf)?;
        if f.slope > 0.0 {
            return Err(Error::InvalidInput(format!("trace N={}: fidelity grows (rate {})", tr.n, -f.slope)));
        }
        sizes.push(DecayRate {
            n: tr.n,
            gamma: Estimate { mean: -f.slope, se: f.slope_se },
            log_intercept: f.intercept,
        });
    }
    let ns: Vec<f64> = sizes.iter().map(|s| s.n as f64).collect();
    let g: Vec<f64> = sizes.iter().map(|s| s.gamma.mean).collect();
    Ok(DecayFit { gamma: linear_fit(&ns, &g)?, sizes })
}

/// F0^N·exp(−γ(N)·t_ent(N)).
pub fn fidelity_at_entanglement(f0: f64, decay: &LinearFit, t_ent: &LinearFit, n: f64) -> f64 {
    f0.powf(n) * (-decay.eval(n) * t_ent.eval(n)).exp()
}

/// Entropy-matched RUC size N_RUC = (σ1·N + σ0 − η0)/η1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PageMap {
    pub sigma: LinearFit,
    pub eta0: f64,
    pub eta1: f64,
}

impl PageMap {
    pub fn slope(&self) -> f64 {
        self.sigma.slope / self.eta1
    }

    pub fn offset(&self) -> f64 {
        (self.sigma.intercept - self.eta0) / self.eta1
    }

    /// N_RUC with the uncertainty carried from σ0, σ1.
    pub fn n_ruc(&self, n: f64) -> Estimate {
        let c = &self.sigma.covariance;
        let var = c[0][0] + 2.0 * n * c[0][1] + n * n * c[1][1];
        Estimate { mean: self.slope() * n + self.offset(), se: var.max(0.0).sqrt() / self.eta1 }
    }
}

pub fn page_equivalence(sigma: LinearFit) -> PageMap {
    PageMap { sigma, eta0: eta0(), eta1: ETA1 }
}

/// A line known only through its parameters and their standard errors.
pub fn line(intercept: f64, slope: f64, intercept_se: f64, slope_se: f64) -> LinearFit {
    LinearFit {
        intercept,
        slope,
        intercept_se,
        slope_se,
        covariance: [[intercept_se * intercept_se, 0.0], [0.0, slope_se * slope_se]],
        residual_ss: 0.0,
    }
}

/// Fits entering the cycle-fidelity comparison.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CycleInputs {
    /// γ(N), MHz.
    pub gamma: LinearFit,
    /// t_ent(N), µs.
    pub t_ent: LinearFit,
    /// d_ent(N_RUC), cycles.
    pub d_ent: LinearFit,
    /// S(N) of the analog system.
    pub entropy: LinearFit,
}

/// Solves F_cycle^((N_RUC − 1)·d_ent/2) = exp(−γ(N)·t_ent(N)) with
/// first-order propagation of the fit covariances.
pub fn cycle_fidelity(inp: &CycleInputs, n: f64) -> Result<Estimate> {
    let page = page_equivalence(inp.entropy);
    let r = page.n_ruc(n).mean;
    let g = inp.gamma.eval(n);
    let t = inp.t_ent.eval(n);
    let d = inp.d_ent.eval(r);
    let den = (r - 1.0) * d;
    if !(den > 0.0) {
        return Err(Error::InvalidInput(format!("(N_RUC − 1)·d_ent = {den} at N = {n}")));
    }
    let l = -2.0 * g * t / den;
    let dl_dg = -2.0 * t / den;
    let dl_dt = -2.0 * g / den;
    let dl_dd = -l / d;
    let dl_dr = -l / (r - 1.0) + dl_dd * inp.d_ent.slope;
    let quad = |f: &LinearFit, da: f64, db: f64| {
        let c = &f.covariance;
        da * da * c[0][0] + 2.0 * da * db * c[0][1] + db * db * c[1][1]
    };
    let var = quad(&inp.gamma, dl_dg, dl_dg * n)
        + quad(&inp.t_ent, dl_dt, dl_dt * n)
        + quad(&inp.d_ent, dl_dd, dl_dd * r)
        + quad(&inp.entropy, dl_dr / page.eta1, dl_dr * n / page.eta1);
    let f = l.exp();
    Ok(Estimate { mean: f, se: f * var.max(0.0).sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn synthetic(m1: f64, n: usize, m2: f64, tc: f64, times: &[f64]) -> EntropyTrace {
        EntropyTrace { n, times: times.to_vec(), entropy: times.iter().map(|&t| piecewise(m1, m2, tc, t)).collect() }
    }

    #[test]
    fn test_piecewise_exact_recovery() {
        let times: Vec<f64> = (0..60).map(|k| 0.05 * k as f64).collect();
        let truth = [(8, 0.02, 0.37), (10, 0.035, 0.49), (12, 0.05, 0.61), (14, 0.06, 0.702)];
        let traces: Vec<EntropyTrace> = truth.iter().map(|&(n, m2, tc)| synthetic(2.3, n, m2, tc, &times)).collect();
        let f = fit_entanglement_time(&traces, C_RYDBERG).unwrap();
        assert!((f.m1 - 2.3).abs() < 1e-9, "{}", f.m1);
        for (s, &(_, m2, tc)) in f.sizes.iter().zip(&truth) {
            assert!((s.m2 - m2).abs() < 1e-9 && (s.t_c - tc).abs() < 1e-9, "{s:?}");
            assert!((s.t_ent - C_RYDBERG * tc).abs() < 1e-9);
        }
        assert!(f.residual_ss < 1e-18);
        assert!(f.alpha.slope > 0.0);
    }

    #[test]
    fn test_entanglement_rejects_bad_input() {
        let times: Vec<f64> = (0..20).map(|k| 0.1 * k as f64).collect();
        let good = synthetic(1.0, 8, 0.0, 0.5, &times);
        assert!(fit_entanglement_time(&[good.clone(), good.clone()], 1.0).is_err());
        let mut bad = good.clone();
        bad.entropy[15] = 0.0;
        assert!(fit_entanglement_time(&[good.clone(), good.clone(), bad], 1.0).is_err());
    }

    #[test]
    fn test_decay_exact() {
        let times: Vec<f64> = (0..10).map(|k| 0.3 * k as f64).collect();
        let traces: Vec<FidelityTrace> = [8usize, 10, 12]
            .iter()
            .map(|&n| {
                let g = 0.12 + 0.017 * n as f64;
                FidelityTrace {
                    n,
                    times: times.clone(),
                    fidelity: times.iter().map(|t| 0.9 * (-g * t).exp()).collect(),
                }
            })
            .collect();
        let f = fit_fidelity_decay(&traces).unwrap();
        assert!((f.gamma.intercept - 0.12).abs() < 1e-9 && (f.gamma.slope - 0.017).abs() < 1e-9);
        assert!((f.sizes[0].log_intercept - 0.9f64.ln()).abs() < 1e-9);
        let one =
            FidelityTrace { n: 4, times: times.clone(), fidelity: times.iter().map(|t| (-0.3 * t).exp()).collect() };
        let two = FidelityTrace { n: 6, ..one.clone() };
        let g = fit_fidelity_decay(&[one, two]).unwrap();
        assert!((g.sizes[0].gamma.mean - 0.3).abs() < 1e-6);
    }

    #[test]
    fn test_decay_rejects_nonpositive() {
        let tr = FidelityTrace { n: 4, times: vec![0.0, 1.0, 2.0], fidelity: vec![1.0, 0.5, 0.0] };
        assert!(fit_fidelity_decay(&[tr.clone(), tr]).is_err());
    }

    #[test]
    fn test_page_constants() {
        assert!((eta0() + 0.72).abs() < 0.005);
        let p = page_equivalence(line(0.16, 0.26, 0.04, 0.03));
        assert!((p.slope() - 0.52).abs() < 1e-12);
        assert!((p.offset() - 1.76).abs() < 0.005);
    }

    fn reference_inputs(b0: f64, b1: f64, b0_se: f64, b1_se: f64) -> CycleInputs {
        CycleInputs {
            gamma: line(0.12, 0.017, 0.04, 0.003),
            t_ent: line(-0.0580, 0.05404, 0.0002, 0.00001),
            d_ent: line(b0, b1, b0_se, b1_se),
            entropy: line(0.16, 0.26, 0.04, 0.03),
        }
    }

    #[test]
    fn test_cycle_fidelity_reference_values() {
        let fsim = reference_inputs(-0.395, 0.557, 0.017, 0.001);
        let su4 = reference_inputs(-3.18, 2.261, 0.77, 0.051);
        for n in [10.0, 16.0, 22.0] {
            let a = cycle_fidelity(&fsim, n).unwrap();
            let b = cycle_fidelity(&su4, n).unwrap();
            assert!((a.mean - 0.987).abs() < 0.001, "{a:?}");
            assert!((b.mean - 0.9965).abs() < 0.0005, "{b:?}");
            assert!(a.se > 0.0 && a.se < 0.01);
        }
    }

    #[test]
    fn test_cycle_fidelity_noiseless() {
        let mut inp = reference_inputs(-0.395, 0.557, 0.017, 0.001);
        inp.gamma = line(0.0, 0.0, 0.0, 0.0);
        let f = cycle_fidelity(&inp, 12.0).unwrap();
        assert_eq!(f.mean, 1.0);
    }

    proptest! {
        #[test]
        fn prop_cycle_error_shrinks(s in 0.01f64..0.99) {
            let base = reference_inputs(-0.395, 0.557, 0.017, 0.001);
            let scale = |f: LinearFit| line(f.intercept, f.slope, f.intercept_se * s, f.slope_se * s);
            let small = CycleInputs {
                gamma: scale(base.gamma),
                t_ent: scale(base.t_ent),
                d_ent: scale(base.d_ent),
                entropy: scale(base.entropy),
            };
            let a = cycle_fidelity(&base, 16.0).unwrap();
            let b = cycle_fidelity(&small, 16.0).unwrap();
            prop_assert!(b.se < a.se);
            prop_assert!((b.se / a.se - s).abs() < 1e-9);
        }

        #[test]
        fn prop_piecewise_recovery(m1 in 0.5f64..3.0, tcs in proptest::collection::vec(0.3f64..1.6, 3..5), m2 in 0.0f64..0.1) {
            let times: Vec<f64> = (0..50).map(|k| 0.05 * k as f64).collect();
            let traces: Vec<EntropyTrace> = tcs.iter().enumerate().map(|(i, &tc)| synthetic(m1, 6 + 2 * i, m2 * (i + 1) as f64 / 4.0, tc, &times)).collect();
            let f = fit_entanglement_time(&traces, 1.0).unwrap();
            prop_assert!((f.m1 - m1).abs() < 1e-9);
            for (s, &tc) in f.sizes.iter().zip(&tcs) {
                prop_assert!((s.t_c - tc).abs() < 1e-9);
            }
        }
    }
}
