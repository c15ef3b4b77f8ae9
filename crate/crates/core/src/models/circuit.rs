//! Brickwork random circuits.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_6};

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::random::{sample_su4, stream};

/// Two-qubit gate family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GateSet {
    /// Independent Haar-random SU(4) gates.
    Su4,
    /// Fixed fSim gate preceded by random π/2 single-qubit rotations.
    FsimLike,
}

/// Which pairing the first layer uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartPhase {
    /// Pairs (0,1), (2,3), …
    Odd,
    /// Pairs (1,2), (3,4), …
    Even,
}

/// Angles of the fSim gate (swap angle θ, conditional phase φ).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FsimParams {
    pub theta: f64,
    pub phi: f64,
}

impl Default for FsimParams {
    fn default() -> Self {
        FsimParams { theta: FRAC_PI_2, phi: FRAC_PI_6 }
    }
}

impl FsimParams {
    /// Matrix in the basis |00⟩, |01⟩, |10⟩, |11⟩.
    pub fn matrix(&self) -> Matrix4<Complex64> {
        let c = Complex64::new(self.theta.cos(), 0.0);
        let s = Complex64::new(0.0, -self.theta.sin());
        let z = Complex64::new(0.0, 0.0);
        let o = Complex64::new(1.0, 0.0);
        Matrix4::new(
            o,
            z,
            z,
            z, //
            z,
            c,
            s,
            z, //
            z,
            s,
            c,
            z, //
            z,
            z,
            z,
            Complex64::from_polar(1.0, -self.phi),
        )
    }
}

/// Recipe for a random brickwork circuit with open boundaries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitSpec {
    pub n: usize,
    pub gate_set: GateSet,
    pub depth: usize,
    #[serde(default = "CircuitSpec::default_start")]
    pub start: StartPhase,
    pub seed: u64,
    #[serde(default)]
    pub fsim: FsimParams,
}

impl CircuitSpec {
    fn default_start() -> StartPhase {
        StartPhase::Odd
    }

    pub fn new(n: usize, gate_set: GateSet, depth: usize, seed: u64) -> Self {
        CircuitSpec { n, gate_set, depth, start: StartPhase::Odd, seed, fsim: FsimParams::default() }
    }

    /// Qubit pairs acted on by layer `l` (0-based).
    pub fn pairs(&self, l: usize) -> Vec<(usize, usize)> {
        let odd_first = self.start == StartPhase::Odd;
        let offset = if (l % 2 == 0) == odd_first { 0 } else { 1 };
        (offset..self.n.saturating_sub(1)).step_by(2).map(|i| (i, i + 1)).collect()
    }

    /// Draws every gate from the seeded stream.
    pub fn build(&self) -> Result<Circuit> {
        if self.n < 2 {
            return Err(Error::InvalidInput("circuits need at least two qubits".into()));
        }
        let mut rng = stream(self.seed, 0);
        let fsim = self.fsim.matrix();
        let layers = (0..self.depth)
            .map(|l| {
                let rotations = match self.gate_set {
                    GateSet::Su4 => Vec::new(),
                    GateSet::FsimLike => (0..self.n).map(|q| (q, half_pi_rotation(rng.random_range(0..3)))).collect(),
                };
                let gates = self
                    .pairs(l)
                    .into_iter()
                    .map(|(i, j)| TwoQubitGate {
                        i,
                        j,
                        u: match self.gate_set {
                            GateSet::Su4 => {
                                let m = sample_su4(&mut rng);
                                Matrix4::from_fn(|r, c| m[(r, c)])
                            }
                            GateSet::FsimLike => fsim,
                        },
                    })
                    .collect();
                Layer { rotations, gates }
            })
            .collect();
        Ok(Circuit { spec: self.clone(), layers })
    }
}

/// π/2 rotation about x (0), y (1) or (x+y)/√2 (2).
pub fn half_pi_rotation(axis: usize) -> Matrix2<Complex64> {
    let (nx, ny) = match axis {
        0 => (1.0, 0.0),
        1 => (0.0, 1.0),
        _ => (FRAC_1_SQRT_2, FRAC_1_SQRT_2),
    };
    let c = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let s = FRAC_1_SQRT_2;
    // cos(π/4) I − i sin(π/4)(nx X + ny Y)
    let off01 = Complex64::new(0.0, -s) * Complex64::new(nx, -ny);
    let off10 = Complex64::new(0.0, -s) * Complex64::new(nx, ny);
    Matrix2::new(c, off01, off10, c)
}

/// A two-qubit unitary on sites `(i, j)`; row/column index is `2·b_i + b_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoQubitGate {
    pub i: usize,
    pub j: usize,
    pub u: Matrix4<Complex64>,
}

/// Single-qubit rotations (applied first) followed by disjoint two-qubit gates.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub rotations: Vec<(usize, Matrix2<Complex64>)>,
    pub gates: Vec<TwoQubitGate>,
}

/// A materialized circuit.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    pub spec: CircuitSpec,
    pub layers: Vec<Layer>,
}

impl Circuit {
    pub fn n_qubits(&self) -> usize {
        self.spec.n
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// Largest deviation from unitarity over all stored gates.
    pub fn unitarity_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for l in &self.layers {
            for g in &l.gates {
                worst = worst.max((g.u.adjoint() * g.u - Matrix4::identity()).camax());
            }
            for (_, r) in &l.rotations {
                worst = worst.max((r.adjoint() * r - Matrix2::identity()).camax());
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_brickwork_pairs() {
        let c = CircuitSpec::new(4, GateSet::Su4, 2, 1).build().unwrap();
        let p: Vec<Vec<(usize, usize)>> =
            c.layers.iter().map(|l| l.gates.iter().map(|g| (g.i, g.j)).collect()).collect();
        assert_eq!(p, vec![vec![(0, 1), (2, 3)], vec![(1, 2)]]);
        let mut even = CircuitSpec::new(5, GateSet::Su4, 1, 1);
        even.start = StartPhase::Even;
        assert_eq!(even.pairs(0), vec![(1, 2), (3, 4)]);
    }

    #[test]
    fn test_depth_zero_and_determinism() {
        assert!(CircuitSpec::new(4, GateSet::Su4, 0, 1).build().unwrap().layers.is_empty());
        let a = CircuitSpec::new(6, GateSet::FsimLike, 5, 9).build().unwrap();
        let b = CircuitSpec::new(6, GateSet::FsimLike, 5, 9).build().unwrap();
        assert_eq!(a, b);
        let c = CircuitSpec::new(6, GateSet::Su4, 5, 9).build().unwrap();
        let d = CircuitSpec::new(6, GateSet::Su4, 5, 10).build().unwrap();
        assert_ne!(c, d);
    }

    #[test]
    fn test_gates_unitary() {
        for gs in [GateSet::Su4, GateSet::FsimLike] {
            let c = CircuitSpec::new(7, gs, 6, 3).build().unwrap();
            assert!(c.unitarity_error() < 1e-12);
        }
        assert_eq!(CircuitSpec::new(6, GateSet::FsimLike, 1, 3).build().unwrap().layers[0].rotations.len(), 6);
    }

    #[test]
    fn test_half_pi_rotation_squares_to_pauli() {
        // R(π/2)² = R(π) = −i n·σ
        let x = half_pi_rotation(0);
        let xx = x * x;
        assert!((xx[(0, 1)] - Complex64::new(0.0, -1.0)).norm() < 1e-15);
        let y = half_pi_rotation(1);
        let yy = y * y;
        // −iY = [[0,−1],[1,0]]
        assert!((yy[(0, 1)] - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
        assert!((yy[(1, 0)] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }
}
