//! Two-qubit logical gates extracted from the spin propagators.

use nalgebra::Matrix4;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::basis::{logical_to_flat, LOGICAL_DIM};
use crate::linalg::wrap_phase;
use crate::Operator;

pub type Gate4 = Matrix4<C64>;

/// A 4×4 block over `{|00⟩, |01⟩, |10⟩, |11⟩}` (qubits Q, Q') with the control
/// spin down and the orbital in `|g⟩`, plus the population lost from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogicalGate {
    pub matrix: Gate4,
    /// `1 − ¼ Σ_ij |U_ij|²`: mean population of the four logical inputs that
    /// ends outside the logical block.
    pub leakage: f64,
}

impl LogicalGate {
    /// Wraps a matrix and computes its leakage.
    pub fn from_matrix(matrix: Gate4) -> Self {
        let kept: f64 = matrix.iter().map(|z| z.norm_sqr()).sum();
        Self { matrix, leakage: (1.0 - kept / LOGICAL_DIM as f64).max(0.0) }
    }

    /// Restricts an 8×8 spin propagator or a 16×16 full propagator to the
    /// logical block.
    pub fn extract(u: &Operator) -> Self {
        assert!(u.nrows() == 8 || u.nrows() == 16, "propagator must be 8x8 or 16x16");
        let m = Gate4::from_fn(|r, c| u[(logical_to_flat(r), logical_to_flat(c))]);
        Self::from_matrix(m)
    }

    pub fn identity() -> Self {
        Self::from_matrix(Gate4::identity())
    }

    pub fn diagonal(phases: [f64; 4]) -> Self {
        let mut m = Gate4::zeros();
        for (k, &ph) in phases.iter().enumerate() {
            m[(k, k)] = C64::from_polar(1.0, ph);
        }
        Self::from_matrix(m)
    }

    pub fn cphase() -> Self {
        Self::diagonal([0.0, 0.0, 0.0, std::f64::consts::PI])
    }

    pub fn swap() -> Self {
        let mut m = Gate4::zeros();
        for (r, c) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
            m[(r, c)] = C64::new(1.0, 0.0);
        }
        Self::from_matrix(m)
    }

    /// `max |U†U − 1|`.
    pub fn unitarity_defect(&self) -> f64 {
        let d = self.matrix.adjoint() * self.matrix - Gate4::identity();
        d.iter().fold(0.0, |a, z| a.max(z.norm()))
    }

    /// Largest entry outside the corner-phases plus central-block pattern.
    pub fn block_residual(&self) -> f64 {
        let m = &self.matrix;
        let mut worst: f64 = 0.0;
        for r in 0..4 {
            for c in 0..4 {
                let allowed = r == c || matches!((r, c), (1, 2) | (2, 1));
                if !allowed {
                    worst = worst.max(m[(r, c)].norm());
                }
            }
        }
        worst
    }

    /// `|U_01,10| + |U_10,01|`, the population-transfer part of the central block.
    pub fn offdiag_norm(&self) -> f64 {
        self.matrix[(1, 2)].norm() + self.matrix[(2, 1)].norm()
    }

    /// Diagonal phases `φ_00, φ_01, φ_10, φ_11` in `(−π, π]`.
    pub fn diagonal_phases(&self) -> [f64; 4] {
        std::array::from_fn(|k| wrap_phase(self.matrix[(k, k)].arg()))
    }

    pub fn max_distance(&self, other: &Self) -> f64 {
        (self.matrix - other.matrix).iter().fold(0.0, |a, z| a.max(z.norm()))
    }

    /// Entrywise distance after aligning the global phase of `self` to `other`.
    pub fn distance_up_to_phase(&self, other: &Self) -> f64 {
        let overlap = (self.matrix.adjoint() * other.matrix).trace();
        let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { C64::new(1.0, 0.0) };
        (self.matrix * phase - other.matrix).iter().fold(0.0, |a, z| a.max(z.norm()))
    }

    /// Unitary polar factor `W V†` of the SVD `U = W Σ V†`, the unitary
    /// closest to the block in Frobenius norm. Leakage is carried over.
    pub fn nearest_unitary(&self) -> Self {
        let svd = self.matrix.svd(true, true);
        let (w, v_t) = (svd.u.expect("svd u"), svd.v_t.expect("svd v_t"));
        Self { matrix: w * v_t, leakage: self.leakage }
    }

    /// Same gate with every entry multiplied by `e^{iγ}`.
    pub fn with_global_phase(&self, gamma: f64) -> Self {
        Self { matrix: self.matrix * C64::from_polar(1.0, gamma), leakage: self.leakage }
    }
}
