//! Dense complex linear algebra helpers on [`Operator`].

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::Operator;

/// Eigen-decomposition of a Hermitian matrix: ascending real eigenvalues and
/// the matching orthonormal eigenvectors as columns.
pub fn eigh(h: &Operator) -> (Vec<f64>, Operator) {
    let n = h.nrows();
    // symmetrize so tiny anti-Hermitian rounding noise cannot leak in
    let herm = (h + h.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// `exp(−i·H·t)` for Hermitian `H`.
pub fn expm_hermitian(h: &Operator, t: f64) -> Operator {
    let (vals, vecs) = eigh(h);
    let phases = DVector::from_iterator(vals.len(), vals.iter().map(|&e| C64::from_polar(1.0, -e * t)));
    let scaled = DMatrix::from_fn(vecs.nrows(), vecs.ncols(), |r, c| vecs[(r, c)] * phases[c]);
    scaled * vecs.adjoint()
}

pub fn commutator(a: &Operator, b: &Operator) -> Operator {
    a * b - b * a
}

pub fn max_abs(m: &Operator) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// `max |U†U − 1|`.
pub fn unitarity_defect(u: &Operator) -> f64 {
    let n = u.ncols();
    max_abs(&(u.adjoint() * u - Operator::identity(n, n)))
}

pub fn hermiticity_defect(m: &Operator) -> f64 {
    max_abs(&(m - m.adjoint()))
}

pub fn trace(m: &Operator) -> C64 {
    m.diagonal().iter().sum()
}

pub fn kron(a: &Operator, b: &Operator) -> Operator {
    a.kronecker(b)
}

/// Entrywise max distance between `a` and `b` after removing the best global
/// phase, `min_γ max|e^{iγ}a − b|` (approximated by aligning `tr(a†b)`).
pub fn distance_up_to_phase(a: &Operator, b: &Operator) -> f64 {
    let overlap = trace(&(a.adjoint() * b));
    let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { C64::new(1.0, 0.0) };
    max_abs(&(a * phase - b))
}

/// Wrap an angle into `(−π, π]`.
pub fn wrap_phase(x: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut y = x.rem_euclid(TAU);
    if y > PI {
        y -= TAU;
    }
    y
}
