//! Bitstring sampling, SPAM corruption and sample-file persistence.

use std::io::{BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{Bitstring, StateVector};
use crate::random::stream;

use super::noise::SpamParams;

/// A multiset of measured bitstrings with metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet {
    pub n_sites: usize,
    /// Basis label, e.g. `"full"` or `"blockade"`.
    pub basis: String,
    pub shots: Vec<Bitstring>,
    /// Free-form provenance tag (seed and origin, never a wall-clock time).
    pub created: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Sidecar {
    n_sites: usize,
    basis: String,
    shots: usize,
    created: String,
}

impl SampleSet {
    pub fn new(
        n_sites: usize,
        basis: impl Into<String>,
        shots: Vec<Bitstring>,
        created: impl Into<String>,
    ) -> Result<Self> {
        if let Some(bad) = shots.iter().find(|s| s.len() != n_sites) {
            return Err(Error::Mismatch(format!("shot {bad} does not have {n_sites} sites")));
        }
        Ok(SampleSet { n_sites, basis: basis.into(), shots, created: created.into() })
    }

    pub fn len(&self) -> usize {
        self.shots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shots.is_empty()
    }

    /// Path of the JSON sidecar belonging to a sample file.
    pub fn sidecar_path(path: &Path) -> PathBuf {
        path.with_extension("json")
    }

    /// Writes one bitstring per line plus the JSON sidecar.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        for s in &self.shots {
            writeln!(w, "{s}")?;
        }
        w.flush()?;
        let meta = Sidecar {
            n_sites: self.n_sites,
            basis: self.basis.clone(),
            shots: self.shots.len(),
            created: self.created.clone(),
        };
        std::fs::write(Self::sidecar_path(path), serde_json::to_string_pretty(&meta)? + "\n")?;
        Ok(())
    }

    /// Reads a sample file; the sidecar is optional but must agree if present.
    /// Blank lines and lines starting with `#` are skipped.
    pub fn read(path: &Path) -> Result<Self> {
        let name = path.display().to_string();
        let f = std::fs::File::open(path)?;
        let mut shots = Vec::new();
        for (k, line) in std::io::BufReader::new(f).lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let z: Bitstring =
                t.parse().map_err(|e: Error| Error::Parse { path: name.clone(), line: k + 1, msg: e.to_string() })?;
            if let Some(first) = shots.first() {
                let first: &Bitstring = first;
                if first.len() != z.len() {
                    return Err(Error::Parse {
                        path: name,
                        line: k + 1,
                        msg: format!("length {} differs from first shot ({})", z.len(), first.len()),
                    });
                }
            }
            shots.push(z);
        }
        let side = Self::sidecar_path(path);
        let (n_sites, basis, created) = if side.exists() {
            let meta: Sidecar = serde_json::from_str(&std::fs::read_to_string(&side)?)?;
            if meta.shots != shots.len() {
                return Err(Error::InvalidInput(format!(
                    "{}: sidecar declares {} shots, file has {}",
                    side.display(),
                    meta.shots,
                    shots.len()
                )));
            }
            (meta.n_sites, meta.basis, meta.created)
        } else {
            let n = shots.first().map(|s| s.len()).unwrap_or(0);
            (n, "full".to_string(), String::new())
        };
        if shots.is_empty() {
            return Err(Error::Empty(format!("{name} contains no shots")));
        }
        SampleSet::new(n_sites, basis, shots, created)
    }
}

/// `m` i.i.d. draws from `(bitstring value, probability)` pairs.
pub fn sample_from_distribution<R: Rng + ?Sized>(
    probs: &[(u64, f64)],
    n_sites: usize,
    m: usize,
    rng: &mut R,
) -> Result<Vec<Bitstring>> {
    let w = WeightedIndex::new(probs.iter().map(|p| p.1.max(0.0)))
        .map_err(|e| Error::InvalidInput(format!("cannot sample distribution: {e}")))?;
    Ok((0..m).map(|_| Bitstring::new(probs[w.sample(rng)].0, n_sites)).collect())
}

/// Draws `m` shots from the Born distribution of `state`.
pub fn sample_bitstrings(state: &StateVector, m: usize, seed: u64) -> Result<SampleSet> {
    if m == 0 {
        return Err(Error::InvalidInput("need at least one shot".into()));
    }
    let probs = state.probabilities();
    let n = state.basis().n_sites();
    let mut rng = stream(seed, 0);
    let shots = sample_from_distribution(&probs, n, m, &mut rng)?;
    let label = match state.basis().constraint() {
        crate::hilbert::Constraint::Full => "full",
        crate::hilbert::Constraint::Blockade => "blockade",
    };
    SampleSet::new(n, label, shots, format!("sampled seed={seed}"))
}

/// Corrupts shots with preparation loss (site forced to 0) followed by
/// independent readout flips.
pub fn apply_spam(samples: &SampleSet, spam: &SpamParams, seed: u64) -> Result<SampleSet> {
    spam.validate()?;
    if spam.is_identity() {
        return Ok(samples.clone());
    }
    let mut rng = stream(seed, 0);
    let n = samples.n_sites;
    let shots = samples
        .shots
        .iter()
        .map(|z| {
            let mut out = *z;
            for i in 0..n {
                let mut bit = out.bit(i);
                if spam.prep_error > 0.0 && rng.random::<f64>() < spam.prep_error {
                    bit = false;
                }
                let flip = if bit { spam.readout_1to0 } else { spam.readout_0to1 };
                if flip > 0.0 && rng.random::<f64>() < flip {
                    bit = !bit;
                }
                out = out.with_bit(i, bit);
            }
            out
        })
        .collect();
    SampleSet::new(n, samples.basis.clone(), shots, format!("{} +spam seed={seed}", samples.created))
}
