//! Bitstring probability tables.

use std::path::Path;

use crate::error::{Error, Result};
use crate::evolve::SampleSet;
use crate::hilbert::{reverse_bits, BasisMap, Bitstring, StateVector};

/// Probabilities keyed by packed bitstring, sorted by value. Absent strings
/// have probability zero.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbTable {
    n_sites: usize,
    entries: Vec<(u64, f64)>,
}

impl ProbTable {
    /// Validates, merges duplicates and sorts.
    pub fn from_probs(n_sites: usize, mut entries: Vec<(u64, f64)>) -> Result<Self> {
        if n_sites == 0 || n_sites > 64 {
            return Err(Error::OutOfRange(format!("{n_sites} sites")));
        }
        if let Some(&(z, p)) = entries.iter().find(|(_, p)| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidInput(format!("probability {p} for {z:b}")));
        }
        if n_sites < 64 {
            if let Some(&(z, _)) = entries.iter().find(|(z, _)| *z >> n_sites != 0) {
                return Err(Error::InvalidInput(format!("bitstring value {z} exceeds {n_sites} sites")));
            }
        }
        entries.sort_by_key(|e| e.0);
        entries.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 += b.1;
                true
            } else {
                false
            }
        });
        let t = ProbTable { n_sites, entries };
        if t.total() > 1.0 + 1e-9 {
            return Err(Error::InvalidInput(format!("probabilities sum to {}", t.total())));
        }
        Ok(t)
    }

    /// Born probabilities of a state, over its sector-less basis.
    pub fn from_state(psi: &StateVector) -> Self {
        let mut entries = psi.probabilities();
        entries.sort_by_key(|e| e.0);
        ProbTable { n_sites: psi.basis().n_sites(), entries }
    }

    /// Empirical frequencies.
    pub fn from_samples(s: &SampleSet) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::Empty("no shots".into()));
        }
        let w = 1.0 / s.len() as f64;
        let mut v: Vec<u64> = s.shots.iter().map(|z| z.value()).collect();
        v.sort_unstable();
        let mut entries: Vec<(u64, f64)> = Vec::new();
        for z in v {
            match entries.last_mut() {
                Some(last) if last.0 == z => last.1 += w,
                _ => entries.push((z, w)),
            }
        }
        Ok(ProbTable { n_sites: s.n_sites, entries })
    }

    /// Uniform distribution over a sector-less basis.
    pub fn uniform(basis: &BasisMap) -> Self {
        let d = basis.dim();
        let p = 1.0 / d as f64;
        ProbTable { n_sites: basis.n_sites(), entries: (0..d).map(|i| (basis.state(i), p)).collect() }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn entries(&self) -> &[(u64, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Probability of `z`, `None` if the table has no entry for it.
    pub fn get_checked(&self, z: u64) -> Option<f64> {
        self.entries.binary_search_by_key(&z, |e| e.0).ok().map(|i| self.entries[i].1)
    }

    pub fn get(&self, z: u64) -> f64 {
        self.get_checked(z).unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|e| e.1).sum()
    }

    pub fn sum_sq(&self) -> f64 {
        self.entries.iter().map(|e| e.1 * e.1).sum()
    }

    /// Σ_z p(z) q(z), by a merge over both sorted tables.
    pub fn dot(&self, other: &ProbTable) -> f64 {
        let (a, b) = (&self.entries, &other.entries);
        let (mut i, mut j, mut s) = (0, 0, 0.0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    s += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        s
    }

    /// Mass on strings with no two adjacent 1s.
    pub fn blockade_weight(&self) -> f64 {
        self.entries.iter().filter(|(z, _)| z & (z >> 1) == 0).map(|e| e.1).sum()
    }

    /// Restriction to blockade-legal strings, renormalized (empty if no mass).
    pub fn restrict_blockade(&self) -> Self {
        let kept: Vec<(u64, f64)> = self.entries.iter().copied().filter(|(z, _)| z & (z >> 1) == 0).collect();
        let s: f64 = kept.iter().map(|e| e.1).sum();
        ProbTable {
            n_sites: self.n_sites,
            entries: if s > 0.0 { kept.into_iter().map(|(z, p)| (z, p / s)).collect() } else { Vec::new() },
        }
    }

    /// Representative of the mirror class {z, z̄}.
    pub fn parity_class(z: u64, n_sites: usize) -> u64 {
        z.min(reverse_bits(z, n_sites))
    }

    /// Merges each mirror pair into one outcome keyed by its representative.
    pub fn parity_merged(&self) -> Self {
        let merged = self.entries.iter().map(|&(z, p)| (Self::parity_class(z, self.n_sites), p)).collect();
        let mut entries: Vec<(u64, f64)> = merged;
        entries.sort_by_key(|e| e.0);
        entries.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 += b.1;
                true
            } else {
                false
            }
        });
        ProbTable { n_sites: self.n_sites, entries }
    }

    /// CSV `bitstring,probability` with a header row.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["bitstring", "probability"])?;
        for &(z, p) in &self.entries {
            w.write_record([Bitstring::new(z, self.n_sites).to_string(), format!("{p:e}")])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let name = path.display().to_string();
        let mut r = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_path(path)?;
        let mut n_sites = None;
        let mut entries = Vec::new();
        for (k, rec) in r.records().enumerate() {
            let line = k + 2;
            let perr = |msg: String| Error::Parse { path: name.clone(), line, msg };
            let rec = rec.map_err(|e| perr(e.to_string()))?;
            if rec.len() != 2 {
                return Err(perr(format!("expected 2 fields, found {}", rec.len())));
            }
            let z: Bitstring = rec[0].parse().map_err(|e: Error| perr(e.to_string()))?;
            let p: f64 = rec[1].parse().map_err(|e: std::num::ParseFloatError| perr(e.to_string()))?;
            match n_sites {
                None => n_sites = Some(z.len()),
                Some(n) if n != z.len() => return Err(perr(format!("length {} differs from {n}", z.len()))),
                _ => {}
            }
            entries.push((z.value(), p));
        }
        let n = n_sites.ok_or_else(|| Error::Empty(format!("{name} has no rows")))?;
        ProbTable::from_probs(n, entries)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_csv_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        let t = ProbTable::from_probs(4, vec![(3, 0.125), (0, 0.5), (9, 0.375)]).unwrap();
        t.write_csv(&p).unwrap();
        assert_eq!(ProbTable::read_csv(&p).unwrap(), t);
        std::fs::write(&p, "bitstring,probability\n0011,0.5\n01,0.5\n").unwrap();
        assert!(matches!(ProbTable::read_csv(&p), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn test_validation_and_merge() {
        assert!(ProbTable::from_probs(2, vec![(0, -0.1)]).is_err());
        assert!(ProbTable::from_probs(2, vec![(4, 0.1)]).is_err());
        assert!(ProbTable::from_probs(2, vec![(0, 0.7), (1, 0.7)]).is_err());
        let t = ProbTable::from_probs(2, vec![(1, 0.25), (1, 0.25)]).unwrap();
        assert_eq!(t.entries(), &[(1, 0.5)]);
    }
}
