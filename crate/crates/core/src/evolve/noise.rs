//! Parametric error model for analog and digital evolution.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Global time-dependent control drift, piecewise constant on the
/// integration grid.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", deny_unknown_fields)]
pub enum Drift {
    #[default]
    None,
    /// Stationary Ornstein–Uhlenbeck noise with rms `amplitude` (MHz) and
    /// `correlation_time` (µs), redrawn for every trajectory.
    OrnsteinUhlenbeck { amplitude: f64, correlation_time: f64 },
    /// Fixed trace: `values[k]` holds on `[k·dt, (k+1)·dt)`, last value after.
    Trace { dt: f64, values: Vec<f64> },
}

impl Drift {
    fn validate(&self, name: &str) -> Result<()> {
        match self {
            Drift::None => Ok(()),
            Drift::OrnsteinUhlenbeck { amplitude, correlation_time } => {
                if *amplitude < 0.0 || !(*correlation_time > 0.0) {
                    return Err(Error::InvalidInput(format!("{name}: amplitude must be ≥ 0 and correlation time > 0")));
                }
                Ok(())
            }
            Drift::Trace { dt, values } => {
                if !(*dt > 0.0) || values.is_empty() {
                    return Err(Error::InvalidInput(format!("{name}: trace needs dt > 0 and values")));
                }
                Ok(())
            }
        }
    }

    /// Samples the drift on cells of width `dt` covering `[0, t_end]`.
    pub fn realize<R: Rng + ?Sized>(&self, dt: f64, t_end: f64, rng: &mut R) -> Vec<f64> {
        let cells = (t_end / dt).ceil() as usize + 1;
        match self {
            Drift::None => vec![0.0; cells],
            Drift::OrnsteinUhlenbeck { amplitude, correlation_time } => {
                let decay = (-dt / correlation_time).exp();
                let kick = amplitude * (1.0 - decay * decay).sqrt();
                let mut x = amplitude * rng.sample::<f64, _>(StandardNormal);
                let mut out = Vec::with_capacity(cells);
                for _ in 0..cells {
                    out.push(x);
                    x = x * decay + kick * rng.sample::<f64, _>(StandardNormal);
                }
                out
            }
            Drift::Trace { dt: tdt, values } => (0..cells)
                .map(|k| {
                    let t = (k as f64 + 0.5) * dt;
                    let i = ((t / tdt) as usize).min(values.len() - 1);
                    values[i]
                })
                .collect(),
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, Drift::None)
    }
}

/// State-preparation and readout errors.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpamParams {
    /// Per-site probability that the atom is lost before the run (reads 0).
    #[serde(default)]
    pub prep_error: f64,
    /// Probability of reading 1 for a true 0.
    #[serde(default)]
    pub readout_0to1: f64,
    /// Probability of reading 0 for a true 1.
    #[serde(default)]
    pub readout_1to0: f64,
}

impl SpamParams {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in
            [("prep_error", self.prep_error), ("readout_0to1", self.readout_0to1), ("readout_1to0", self.readout_1to0)]
        {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidInput(format!("{name} = {p} outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn is_identity(&self) -> bool {
        self.prep_error == 0.0 && self.readout_0to1 == 0.0 && self.readout_1to0 == 0.0
    }

    /// Overall preparation fidelity `(1 − ε_prep)^N`.
    pub fn prep_fidelity(&self, n: usize) -> f64 {
        (1.0 - self.prep_error).powi(n as i32)
    }
}

/// Error channels applied during noisy evolution. Defaults are illustrative,
/// not calibrated to any device.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    /// Global Rabi-frequency drift δΩ(t), MHz.
    #[serde(default)]
    pub rabi_drift: Drift,
    /// Global detuning drift δΔ(t), MHz.
    #[serde(default)]
    pub detuning_drift: Drift,
    /// Std-dev of static per-site Rabi offsets, MHz.
    #[serde(default)]
    pub rabi_disorder: f64,
    /// Std-dev of static per-site detuning offsets, MHz.
    #[serde(default)]
    pub detuning_disorder: f64,
    /// Std-dev of per-site position displacements, µm.
    #[serde(default)]
    pub position_disorder: f64,
    /// Decay rate of the excited state, 1/µs.
    #[serde(default)]
    pub decay_rate: f64,
    #[serde(default)]
    pub spam: SpamParams,
    /// Per-qubit Pauli error probability per circuit layer.
    #[serde(default)]
    pub pauli_rate: f64,
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        self.rabi_drift.validate("rabi_drift")?;
        self.detuning_drift.validate("detuning_drift")?;
        for (name, v) in [
            ("rabi_disorder", self.rabi_disorder),
            ("detuning_disorder", self.detuning_disorder),
            ("position_disorder", self.position_disorder),
            ("decay_rate", self.decay_rate),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidInput(format!("{name} = {v} must be finite and ≥ 0")));
            }
        }
        if !(0.0..=1.0).contains(&self.pauli_rate) {
            return Err(Error::InvalidInput(format!("pauli_rate = {} outside [0, 1]", self.pauli_rate)));
        }
        self.spam.validate()
    }

    /// True if every trajectory would be identical.
    pub fn is_deterministic(&self) -> bool {
        self.rabi_drift.is_none()
            && self.detuning_drift.is_none()
            && self.rabi_disorder == 0.0
            && self.detuning_disorder == 0.0
            && self.position_disorder == 0.0
            && self.decay_rate == 0.0
    }

    pub fn has_static_disorder(&self) -> bool {
        self.rabi_disorder > 0.0 || self.detuning_disorder > 0.0 || self.position_disorder > 0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::stream;

    #[test]
    fn test_ou_stationary_moments() {
        let d = Drift::OrnsteinUhlenbeck { amplitude: 0.3, correlation_time: 0.5 };
        let mut rng = stream(2, 0);
        let mut s2 = 0.0;
        let mut lag = 0.0;
        let mut count = 0.0;
        for _ in 0..400 {
            let x = d.realize(0.01, 5.0, &mut rng);
            for w in x.windows(51) {
                s2 += w[0] * w[0];
                lag += w[0] * w[50];
                count += 1.0;
            }
        }
        let var = s2 / count;
        assert!((var - 0.09).abs() < 0.01, "{var}");
        // correlation at lag 0.5 µs = e^-1
        assert!((lag / count / var - (-1.0f64).exp()).abs() < 0.05);
    }

    #[test]
    fn test_trace_lookup() {
        let d = Drift::Trace { dt: 0.1, values: vec![1.0, 2.0] };
        let v = d.realize(0.05, 0.3, &mut stream(0, 0));
        assert_eq!(v, vec![1.0, 1.0, 2.0, 2.0, 2.0, 2.0, 2.0]);
    }

    #[test]
    fn test_validation() {
        let mut m = NoiseModel::default();
        assert!(m.validate().is_ok() && m.is_deterministic());
        m.decay_rate = -1.0;
        assert!(m.validate().is_err());
        m.decay_rate = 0.0;
        m.spam.readout_1to0 = 1.5;
        assert!(m.validate().is_err());
    }
}
