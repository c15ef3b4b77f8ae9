//! Basis enumeration, bitstrings, blockade subspaces, parity sectors and bipartitions.
//!
//! Sites are numbered `0..n` from the left. Site 0 is the most significant bit of
//! the packed `u64`, so numeric order of packed values is lexicographic order of
//! the printed strings.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest chain for an unconstrained basis.
pub const MAX_SITES_FULL: usize = 24;
/// Largest chain for a blockaded basis.
pub const MAX_SITES_BLOCKADE: usize = 32;

/// A measurement outcome on `len` sites, printed site 0 first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bitstring {
    value: u64,
    len: u32,
}

impl Bitstring {
    /// Packs `value` (site 0 in bit `len-1`). Panics if `value` has bits above `len`.
    pub fn new(value: u64, len: usize) -> Self {
        assert!(len <= 64, "bitstring longer than 64 sites");
        assert!(len == 64 || value >> len == 0, "value {value:#b} exceeds {len} sites");
        Bitstring { value, len: len as u32 }
    }

    pub fn zeros(len: usize) -> Self {
        Bitstring::new(0, len)
    }

    /// Builds from per-site bits, site 0 first.
    pub fn from_bits(bits: &[bool]) -> Self {
        let value = bits.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64);
        Bitstring::new(value, bits.len())
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bit(&self, site: usize) -> bool {
        get_bit(self.value, self.len as usize, site)
    }

    pub fn with_bit(&self, site: usize, on: bool) -> Self {
        let mask = 1u64 << (self.len as usize - 1 - site);
        let value = if on { self.value | mask } else { self.value & !mask };
        Bitstring { value, len: self.len }
    }

    pub fn count_ones(&self) -> u32 {
        self.value.count_ones()
    }

    /// No two adjacent sites are both excited.
    pub fn is_blockade_legal(&self) -> bool {
        self.value & (self.value >> 1) == 0
    }

    /// Site-reversed string (mirror image of the chain).
    pub fn parity_partner(&self) -> Self {
        Bitstring { value: reverse_bits(self.value, self.len as usize), len: self.len }
    }

    pub fn bits(&self) -> Vec<bool> {
        (0..self.len()).map(|i| self.bit(i)).collect()
    }
}

impl fmt::Display for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len() {
            f.write_str(if self.bit(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Bitstring {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s.len() > 64 {
            return Err(Error::InvalidInput(format!("bitstring length {} not in 1..=64", s.len())));
        }
        let mut value = 0u64;
        for c in s.chars() {
            value = (value << 1)
                | match c {
                    '0' => 0,
                    '1' => 1,
                    other => return Err(Error::InvalidInput(format!("unexpected character {other:?} in bitstring"))),
                };
        }
        Ok(Bitstring::new(value, s.len()))
    }
}

impl Serialize for Bitstring {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Bitstring {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[inline]
/// Occupation of `site` in a packed configuration; site 0 is the most significant bit.
pub fn get_bit(value: u64, n: usize, site: usize) -> bool {
    (value >> (n - 1 - site)) & 1 == 1
}

#[inline]
pub(crate) fn reverse_bits(value: u64, n: usize) -> u64 {
    if n == 0 {
        0
    } else {
        value.reverse_bits() >> (64 - n)
    }
}

/// Which bitstrings are allowed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Constraint {
    Full,
    /// No two neighbouring excitations.
    Blockade,
}

/// Symmetry sector under site reversal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sector {
    All,
    Even,
    Odd,
}

/// An enumerated basis with bitstring ↔ index maps.
///
/// For `Sector::All` the basis vectors are the bitstrings themselves. For a
/// parity sector, entry `i` is the representative `r = min(z, mirror(z))` and
/// stands for `(|r⟩ ± |mirror r⟩)/√2` (or `|r⟩` for even palindromes).
#[derive(Clone, Debug, PartialEq)]
pub struct BasisMap {
    n: usize,
    constraint: Constraint,
    sector: Sector,
    /// Sorted packed values; `None` for the full unconstrained basis.
    states: Option<Vec<u64>>,
}

impl BasisMap {
    /// Enumerates the basis in lexicographic order.
    pub fn new(n: usize, constraint: Constraint, sector: Sector) -> Result<Self> {
        let max = match constraint {
            Constraint::Full => MAX_SITES_FULL,
            Constraint::Blockade => MAX_SITES_BLOCKADE,
        };
        if n == 0 || n > max {
            return Err(Error::OutOfRange(format!("{n} sites not supported for {constraint:?} basis (1..={max})")));
        }
        let states = match (constraint, sector) {
            (Constraint::Full, Sector::All) => None,
            _ => {
                let mut all = match constraint {
                    Constraint::Full => (0..1u64 << n).collect(),
                    Constraint::Blockade => enumerate_blockade(n),
                };
                if sector != Sector::All {
                    all.retain(|&z| {
                        let m = reverse_bits(z, n);
                        match sector {
                            Sector::Even => z <= m,
                            _ => z < m,
                        }
                    });
                }
                Some(all)
            }
        };
        Ok(BasisMap { n, constraint, sector, states })
    }

    pub fn full(n: usize) -> Result<Self> {
        BasisMap::new(n, Constraint::Full, Sector::All)
    }

    pub fn blockade(n: usize) -> Result<Self> {
        BasisMap::new(n, Constraint::Blockade, Sector::All)
    }

    pub fn n_sites(&self) -> usize {
        self.n
    }

    pub fn constraint(&self) -> Constraint {
        self.constraint
    }

    pub fn sector(&self) -> Sector {
        self.sector
    }

    pub fn dim(&self) -> usize {
        match &self.states {
            None => 1usize << self.n,
            Some(s) => s.len(),
        }
    }

    /// Packed value of basis vector `i` (the representative for sectors).
    #[inline]
    pub fn state(&self, i: usize) -> u64 {
        match &self.states {
            None => i as u64,
            Some(s) => s[i],
        }
    }

    pub fn bitstring(&self, i: usize) -> Bitstring {
        Bitstring::new(self.state(i), self.n)
    }

    /// Index of the packed value, or of its sector representative.
    #[inline]
    pub fn index_of_value(&self, z: u64) -> Option<usize> {
        let key = match self.sector {
            Sector::All => z,
            _ => z.min(reverse_bits(z, self.n)),
        };
        match &self.states {
            None => (key < (1u64 << self.n)).then_some(key as usize),
            Some(s) => s.binary_search(&key).ok(),
        }
    }

    pub fn index_of(&self, z: &Bitstring) -> Option<usize> {
        if z.len() != self.n {
            return None;
        }
        self.index_of_value(z.value())
    }

    /// Whether a bitstring satisfies this basis' constraint (ignoring sector).
    pub fn allows(&self, z: u64) -> bool {
        match self.constraint {
            Constraint::Full => true,
            Constraint::Blockade => z & (z >> 1) == 0,
        }
    }

    /// The sector-less basis with the same size and constraint.
    pub fn parent(&self) -> Result<BasisMap> {
        BasisMap::new(self.n, self.constraint, Sector::All)
    }

    /// Columns of the isometry from this sector into its parent basis:
    /// entry `i` lists `(parent index, coefficient)`.
    pub fn sector_embedding(&self, parent: &BasisMap) -> Result<Vec<Vec<(usize, f64)>>> {
        if parent.n != self.n || parent.constraint != self.constraint || parent.sector != Sector::All {
            return Err(Error::Mismatch("parent basis does not match sector".into()));
        }
        let r = std::f64::consts::FRAC_1_SQRT_2;
        Ok((0..self.dim())
            .map(|i| {
                let z = self.state(i);
                let m = reverse_bits(z, self.n);
                let iz = parent.index_of_value(z).expect("representative in parent");
                match self.sector {
                    Sector::All => vec![(iz, 1.0)],
                    _ if z == m => vec![(iz, 1.0)],
                    Sector::Even => vec![(iz, r), (parent.index_of_value(m).unwrap(), r)],
                    Sector::Odd => vec![(iz, r), (parent.index_of_value(m).unwrap(), -r)],
                }
            })
            .collect())
    }
}

/// Blockade-legal strings of length `n` in increasing order.
fn enumerate_blockade(n: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(fibonacci(n + 2) as usize);
    fn rec(n: usize, site: usize, prev: bool, acc: u64, out: &mut Vec<u64>) {
        if site == n {
            out.push(acc);
            return;
        }
        rec(n, site + 1, false, acc << 1, out);
        if !prev {
            rec(n, site + 1, true, (acc << 1) | 1, out);
        }
    }
    rec(n, 0, false, 0, &mut out);
    out
}

/// Fibonacci numbers with F(1) = F(2) = 1.
pub fn fibonacci(k: usize) -> u64 {
    let (mut a, mut b) = (0u64, 1u64);
    for _ in 0..k {
        let c = a + b;
        a = b;
        b = c;
    }
    a
}

/// Split of the chain into a measured-out region B and a kept region A.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bipartition {
    n: usize,
    sites_a: Vec<usize>,
    sites_b: Vec<usize>,
    boundary_rule: bool,
    /// B sites adjacent to A (positions within `sites_b`).
    boundary_b: Vec<usize>,
}

impl Bipartition {
    /// `sites_a` need not be contiguous. With `boundary_rule`, only z_B with
    /// zeros on every B site next to A are admissible.
    pub fn new(n: usize, sites_a: &[usize], boundary_rule: bool) -> Result<Self> {
        let mut a: Vec<usize> = sites_a.to_vec();
        a.sort_unstable();
        a.dedup();
        if a.is_empty() || a.len() != sites_a.len() || *a.last().unwrap() >= n {
            return Err(Error::InvalidInput(format!("subsystem {sites_a:?} is empty, repeated or outside 0..{n}")));
        }
        if n > 64 {
            return Err(Error::OutOfRange(format!("{n} sites")));
        }
        let sites_b: Vec<usize> = (0..n).filter(|i| !a.contains(i)).collect();
        let boundary_b = sites_b
            .iter()
            .enumerate()
            .filter(|(_, &s)| (s > 0 && a.contains(&(s - 1))) || a.contains(&(s + 1)))
            .map(|(k, _)| k)
            .collect();
        Ok(Bipartition { n, sites_a: a, sites_b, boundary_rule, boundary_b })
    }

    /// A contiguous block `start..start+len`.
    pub fn contiguous(n: usize, start: usize, len: usize, boundary_rule: bool) -> Result<Self> {
        let sites: Vec<usize> = (start..start + len).collect();
        Bipartition::new(n, &sites, boundary_rule)
    }

    /// Left half `0..n/2` versus the rest, with no boundary rule.
    pub fn half_chain(n: usize) -> Result<Self> {
        Bipartition::contiguous(n, 0, n / 2, false)
    }

    pub fn n_sites(&self) -> usize {
        self.n
    }

    pub fn sites_a(&self) -> &[usize] {
        &self.sites_a
    }

    pub fn sites_b(&self) -> &[usize] {
        &self.sites_b
    }

    pub fn boundary_rule(&self) -> bool {
        self.boundary_rule
    }

    /// Packed (z_A, z_B) values.
    #[inline]
    pub fn split_value(&self, z: u64) -> (u64, u64) {
        let n = self.n;
        let pick = |sites: &[usize]| sites.iter().fold(0u64, |acc, &s| (acc << 1) | ((z >> (n - 1 - s)) & 1));
        (pick(&self.sites_a), pick(&self.sites_b))
    }

    pub fn split(&self, z: &Bitstring) -> (Bitstring, Bitstring) {
        assert_eq!(z.len(), self.n, "bitstring length differs from bipartition");
        let (a, b) = self.split_value(z.value());
        (Bitstring::new(a, self.sites_a.len()), Bitstring::new(b, self.sites_b.len()))
    }

    #[inline]
    pub fn join_value(&self, za: u64, zb: u64) -> u64 {
        let n = self.n;
        let mut z = 0u64;
        let la = self.sites_a.len();
        for (k, &s) in self.sites_a.iter().enumerate() {
            z |= ((za >> (la - 1 - k)) & 1) << (n - 1 - s);
        }
        let lb = self.sites_b.len();
        for (k, &s) in self.sites_b.iter().enumerate() {
            z |= ((zb >> (lb - 1 - k)) & 1) << (n - 1 - s);
        }
        z
    }

    pub fn join(&self, za: &Bitstring, zb: &Bitstring) -> Bitstring {
        Bitstring::new(self.join_value(za.value(), zb.value()), self.n)
    }

    /// Whether z_B passes the boundary rule (always true when the rule is off).
    pub fn admissible_b(&self, zb: u64) -> bool {
        if !self.boundary_rule {
            return true;
        }
        let lb = self.sites_b.len();
        self.boundary_b.iter().all(|&k| (zb >> (lb - 1 - k)) & 1 == 0)
    }

    /// Allowed z_A values, in increasing order, given the constraint and the
    /// boundary rule. Without the rule a blockade basis still admits only
    /// strings legal inside A.
    pub fn a_states(&self, constraint: Constraint) -> Vec<u64> {
        let la = self.sites_a.len();
        (0..1u64 << la)
            .filter(|&za| match constraint {
                Constraint::Full => true,
                Constraint::Blockade => {
                    // adjacency measured on the chain, not within the list
                    let z = self.join_value(za, 0);
                    z & (z >> 1) == 0
                }
            })
            .collect()
    }
}

/// Dimension of the admissible z_A space.
pub fn subsystem_dim(bip: &Bipartition, constraint: Constraint) -> usize {
    bip.a_states(constraint).len()
}

/// A normalized amplitude vector over a shared basis.
#[derive(Clone, Debug)]
pub struct StateVector {
    basis: Arc<BasisMap>,
    amps: Vec<Complex64>,
}

/// Tolerance on Σ|amp|² − 1 accepted by [`StateVector::new`].
pub const NORM_TOL: f64 = 1e-10;

impl StateVector {
    /// Wraps amplitudes that must already be normalized.
    pub fn new(basis: Arc<BasisMap>, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != basis.dim() {
            return Err(Error::Mismatch(format!("{} amplitudes for basis of dim {}", amps.len(), basis.dim())));
        }
        let n2 = norm_sqr(&amps);
        if (n2 - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidInput(format!("state norm² {n2} is not 1")));
        }
        Ok(StateVector { basis, amps })
    }

    /// Normalizes on the way in; fails on a zero vector.
    pub fn normalized(basis: Arc<BasisMap>, mut amps: Vec<Complex64>) -> Result<Self> {
        let n = norm_sqr(&amps).sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidInput("cannot normalize a zero vector".into()));
        }
        amps.iter_mut().for_each(|a| *a /= n);
        StateVector::new(basis, amps)
    }

    /// The basis vector for `z`.
    pub fn basis_state(basis: Arc<BasisMap>, z: &Bitstring) -> Result<Self> {
        let i = basis.index_of(z).ok_or_else(|| Error::InvalidInput(format!("{z} not in basis")))?;
        let mut amps = vec![Complex64::new(0.0, 0.0); basis.dim()];
        amps[i] = Complex64::new(1.0, 0.0);
        Ok(StateVector { basis, amps })
    }

    /// |0…0⟩.
    pub fn zeros(basis: Arc<BasisMap>) -> Result<Self> {
        let z = Bitstring::zeros(basis.n_sites());
        StateVector::basis_state(basis, &z)
    }

    pub fn basis(&self) -> &Arc<BasisMap> {
        &self.basis
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amps(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        norm_sqr(&self.amps).sqrt()
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        inner(&self.amps, &other.amps)
    }

    /// |⟨self|other⟩|².
    pub fn overlap(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Born probabilities over bitstrings, in lexicographic order.
    ///
    /// Sector states are first lifted to the parent basis.
    pub fn probabilities(&self) -> Vec<(u64, f64)> {
        match self.basis.sector() {
            Sector::All => (0..self.basis.dim()).map(|i| (self.basis.state(i), self.amps[i].norm_sqr())).collect(),
            _ => {
                let lifted = self.lift().expect("sector embedding");
                lifted.probabilities()
            }
        }
    }

    /// The same state expressed in the sector-less parent basis.
    pub fn lift(&self) -> Result<StateVector> {
        if self.basis.sector() == Sector::All {
            return Ok(self.clone());
        }
        let parent = Arc::new(self.basis.parent()?);
        let cols = self.basis.sector_embedding(&parent)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); parent.dim()];
        for (c, col) in self.amps.iter().zip(&cols) {
            for &(j, w) in col {
                amps[j] += c * w;
            }
        }
        StateVector::normalized(parent, amps)
    }
}

#[inline]
pub(crate) fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum()
}

#[inline]
pub(crate) fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bs(s: &str) -> Bitstring {
        s.parse().unwrap()
    }

    /// Independent count: brute force over all strings.
    fn brute_blockade(n: usize) -> (usize, usize) {
        let mut count = 0;
        let mut pal = 0;
        for z in 0..1u64 << n {
            if z & (z >> 1) != 0 {
                continue;
            }
            count += 1;
            let s: String = (0..n).map(|i| if (z >> (n - 1 - i)) & 1 == 1 { '1' } else { '0' }).collect();
            if s.chars().rev().collect::<String>() == s {
                pal += 1;
            }
        }
        (count, pal)
    }

    #[test]
    fn test_dimensions() {
        assert_eq!(BasisMap::blockade(10).unwrap().dim(), 144);
        assert_eq!(BasisMap::full(1).unwrap().dim(), 2);
        let (d, p) = brute_blockade(10);
        assert_eq!((d, p), (144, 8));
        let even = BasisMap::new(10, Constraint::Blockade, Sector::Even).unwrap();
        let odd = BasisMap::new(10, Constraint::Blockade, Sector::Odd).unwrap();
        assert_eq!(even.dim(), 76);
        assert_eq!(even.dim(), (d + p) / 2);
        assert_eq!(even.dim() + odd.dim(), 144);
    }

    #[test]
    fn test_fibonacci_recurrence() {
        let mut prev2 = 2usize; // n = 1
        let mut prev1 = 3usize; // n = 2
        assert_eq!(BasisMap::blockade(1).unwrap().dim(), 2);
        assert_eq!(BasisMap::blockade(2).unwrap().dim(), 3);
        for n in 3..=26 {
            let d = BasisMap::blockade(n).unwrap().dim();
            assert_eq!(d, prev1 + prev2, "n = {n}");
            prev2 = prev1;
            prev1 = d;
        }
        assert_eq!(fibonacci(34), 5_702_887);
        assert_eq!(BasisMap::blockade(32).unwrap().dim(), 5_702_887);
    }

    #[test]
    fn test_range_errors() {
        assert!(BasisMap::full(0).is_err());
        assert!(BasisMap::full(25).is_err());
        assert!(BasisMap::blockade(33).is_err());
    }

    #[test]
    fn test_index_roundtrip_exhaustive() {
        for n in 1..=14 {
            for c in [Constraint::Full, Constraint::Blockade] {
                for s in [Sector::All, Sector::Even, Sector::Odd] {
                    let b = BasisMap::new(n, c, s).unwrap();
                    for i in 0..b.dim() {
                        assert_eq!(b.index_of(&b.bitstring(i)), Some(i));
                        if i > 0 {
                            assert!(b.state(i - 1) < b.state(i));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn test_sector_projectors() {
        for n in 1..=10 {
            for c in [Constraint::Full, Constraint::Blockade] {
                let parent = BasisMap::new(n, c, Sector::All).unwrap();
                let d = parent.dim();
                let proj = |s: Sector| {
                    let b = BasisMap::new(n, c, s).unwrap();
                    let mut p = nalgebra::DMatrix::<f64>::zeros(d, d);
                    for col in b.sector_embedding(&parent).unwrap() {
                        for &(i, x) in &col {
                            for &(j, y) in &col {
                                p[(i, j)] += x * y;
                            }
                        }
                    }
                    p
                };
                let pe = proj(Sector::Even);
                let po = proj(Sector::Odd);
                let id = nalgebra::DMatrix::<f64>::identity(d, d);
                assert!((&pe * &pe - &pe).amax() < 1e-12);
                assert!((&po * &po - &po).amax() < 1e-12);
                assert!((&pe * &po).amax() < 1e-12);
                assert!((&pe + &po - id).amax() < 1e-12);
            }
        }
    }

    #[test]
    fn test_subsystem_dims() {
        let b2 = Bipartition::contiguous(10, 4, 2, true).unwrap();
        assert_eq!(subsystem_dim(&b2, Constraint::Blockade), 3);
        let b1 = Bipartition::contiguous(10, 4, 1, true).unwrap();
        assert_eq!(subsystem_dim(&b1, Constraint::Blockade), 2);
        let b3 = Bipartition::contiguous(10, 4, 3, true).unwrap();
        assert_eq!(subsystem_dim(&b3, Constraint::Blockade), 5);
        assert_eq!(subsystem_dim(&b3, Constraint::Full), 8);
    }

    #[test]
    fn test_split_examples() {
        let bip = Bipartition::new(10, &[0, 1], false).unwrap();
        let (a, b) = bip.split(&bs("1010010010"));
        assert_eq!(a.to_string(), "10");
        assert_eq!(b.to_string(), "10010010");
        let bip = Bipartition::new(4, &[1, 3], false).unwrap();
        let (a, b) = bip.split(&bs("0000"));
        assert_eq!((a.to_string(), b.to_string()), ("00".into(), "00".into()));
        let (a, b) = bip.split(&bs("0110"));
        assert_eq!((a.to_string(), b.to_string()), ("10".into(), "01".into()));
    }

    #[test]
    fn test_boundary_rule() {
        // A = {3,4} in a 7-site chain: B sites 2 and 5 border A.
        let bip = Bipartition::contiguous(7, 3, 2, true).unwrap();
        let z = |s: &str| bip.split(&bs(s)).1.value();
        assert!(bip.admissible_b(z("1000001")));
        assert!(!bip.admissible_b(z("0010000")));
        assert!(!bip.admissible_b(z("0000010")));
        let off = Bipartition::contiguous(7, 3, 2, false).unwrap();
        assert!(off.admissible_b(off.split(&bs("0010010")).1.value()));
    }

    #[test]
    fn test_parity_partner() {
        assert_eq!(bs("100").parity_partner(), bs("001"));
        assert_eq!(bs("010").parity_partner(), bs("010"));
        let b = BasisMap::blockade(10).unwrap();
        let fixed = (0..b.dim()).filter(|&i| b.bitstring(i).parity_partner() == b.bitstring(i)).count();
        assert_eq!(fixed, brute_blockade(10).1);
    }

    #[test]
    fn test_display_parse() {
        let z = bs("0010110");
        assert_eq!(z.to_string(), "0010110");
        assert!(z.bit(2) && !z.bit(0) && z.bit(5));
        assert!("01a".parse::<Bitstring>().is_err());
        let j = serde_json::to_string(&z).unwrap();
        assert_eq!(j, "\"0010110\"");
        assert_eq!(serde_json::from_str::<Bitstring>(&j).unwrap(), z);
    }

    #[test]
    fn test_state_vector_norm_enforced() {
        let b = Arc::new(BasisMap::full(2).unwrap());
        let bad = vec![Complex64::new(1.0, 0.0); 4];
        assert!(StateVector::new(b.clone(), bad.clone()).is_err());
        let s = StateVector::normalized(b, bad).unwrap();
        assert!((s.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn test_sector_lift() {
        let even = Arc::new(BasisMap::new(3, Constraint::Full, Sector::Even).unwrap());
        let z = bs("100");
        let s = StateVector::basis_state(even, &z).unwrap();
        let p = s.probabilities();
        let get = |v: u64| p.iter().find(|e| e.0 == v).unwrap().1;
        assert!((get(0b100) - 0.5).abs() < 1e-12);
        assert!((get(0b001) - 0.5).abs() < 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn prop_index_roundtrip(n in 1usize..13, blockade in any::<bool>()) {
                let c = if blockade { Constraint::Blockade } else { Constraint::Full };
                let all = BasisMap::new(n, c, Sector::All).unwrap();
                for i in 0..all.dim() {
                    let z = all.state(i);
                    prop_assert_eq!(all.index_of_value(z), Some(i));
                    prop_assert!(!blockade || z & (z >> 1) == 0);
                }
                let even = BasisMap::new(n, c, Sector::Even).unwrap();
                let odd = BasisMap::new(n, c, Sector::Odd).unwrap();
                prop_assert_eq!(even.dim() + odd.dim(), all.dim());
            }

            #[test]
            fn prop_split_join_roundtrip(n in 2usize..12, mask in 1u64..4096, rule in any::<bool>()) {
                let sites: Vec<usize> = (0..n).filter(|&s| (mask >> s) & 1 == 1).collect();
                prop_assume!(!sites.is_empty() && sites.len() < n);
                let bip = Bipartition::new(n, &sites, rule).unwrap();
                let mut union: Vec<usize> = bip.sites_a().iter().chain(bip.sites_b()).copied().collect();
                union.sort_unstable();
                prop_assert_eq!(union, (0..n).collect::<Vec<_>>());
                for z in 0..1u64 << n {
                    let (za, zb) = bip.split_value(z);
                    prop_assert_eq!(bip.join_value(za, zb), z);
                    if rule {
                        let touches = bip.sites_b().iter().enumerate().any(|(k, &s)| {
                            get_bit(zb, bip.sites_b().len(), k)
                                && sites.iter().any(|&a| a + 1 == s || s + 1 == a)
                        });
                        prop_assert_eq!(bip.admissible_b(zb), !touches);
                    }
                }
            }
        }
    }
}
