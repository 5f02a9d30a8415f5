//! Density matrices, partial traces, purity and Haar-random product inputs.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{eigh, hermiticity_defect, trace};
use crate::Operator;

pub type QuantumState = DVector<C64>;

/// Validation tolerance for trace, Hermiticity and positivity.
pub const DENSITY_TOL: f64 = 1e-10;

/// Subsystems of the full sixteen-dimensional space, in tensor order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    Orbital,
    Q,
    C,
    QPrime,
}

impl Subsystem {
    /// Position in the tensor product `orbital ⊗ Q ⊗ C ⊗ Q'`.
    pub fn position(self) -> usize {
        match self {
            Subsystem::Orbital => 0,
            Subsystem::Q => 1,
            Subsystem::C => 2,
            Subsystem::QPrime => 3,
        }
    }
}

/// Subsystem dimensions of the full space.
pub const FULL_DIMS: [usize; 4] = [2, 2, 2, 2];

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(Operator);

impl DensityMatrix {
    /// Checks Hermiticity, unit trace and positivity to [`DENSITY_TOL`].
    pub fn new(m: Operator) -> Result<Self> {
        Self::with_tolerance(m, DENSITY_TOL)
    }

    pub fn with_tolerance(m: Operator, tol: f64) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::InvalidDensityMatrix(format!("{}x{} is not square", m.nrows(), m.ncols())));
        }
        let herm = hermiticity_defect(&m);
        if herm > tol {
            return Err(Error::InvalidDensityMatrix(format!("not Hermitian (defect {herm:.3e})")));
        }
        let tr = trace(&m);
        if (tr - C64::new(1.0, 0.0)).norm() > tol {
            return Err(Error::InvalidDensityMatrix(format!("trace {tr} differs from 1")));
        }
        let (vals, _) = eigh(&m);
        if vals[0] < -tol {
            return Err(Error::InvalidDensityMatrix(format!("negative eigenvalue {:.3e}", vals[0])));
        }
        Ok(Self(m))
    }

    /// Wraps without validation. Intended for integrator outputs that are
    /// checked separately.
    pub fn new_unchecked(m: Operator) -> Self {
        Self(m)
    }

    pub fn from_pure(psi: &QuantumState) -> Self {
        let norm = psi.norm();
        let v = psi / C64::new(norm, 0.0);
        Self(&v * v.adjoint())
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(Operator::identity(dim, dim) / C64::new(dim as f64, 0.0))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &Operator {
        &self.0
    }

    pub fn into_matrix(self) -> Operator {
        self.0
    }

    pub fn purity(&self) -> f64 {
        purity(&self.0)
    }

    pub fn trace(&self) -> f64 {
        trace(&self.0).re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        eigh(&self.0).0[0]
    }
}

/// `tr(ρ²)`; for Hermitian ρ this is the squared Frobenius norm.
pub fn purity(rho: &Operator) -> f64 {
    rho.iter().map(|z| z.norm_sqr()).sum()
}

/// Traces out every subsystem not listed in `keep`.
///
/// `dims` gives the subsystem dimensions in tensor order (first factor is the
/// most significant digit of the flat index). `keep` lists subsystem
/// positions; the result keeps them in ascending position order.
pub fn partial_trace(rho: &Operator, dims: &[usize], keep: &[usize]) -> Result<Operator> {
    let total: usize = dims.iter().product();
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::InvalidSubsystem("subsystem dimensions must be positive".into()));
    }
    if rho.nrows() != total || rho.ncols() != total {
        return Err(Error::InvalidSubsystem(format!(
            "matrix is {}x{} but subsystem dims multiply to {total}",
            rho.nrows(),
            rho.ncols()
        )));
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    if kept.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidSubsystem("duplicate subsystem in keep list".into()));
    }
    if let Some(&bad) = kept.iter().find(|&&k| k >= dims.len()) {
        return Err(Error::InvalidSubsystem(format!("subsystem {bad} out of range 0..{}", dims.len())));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|i| !kept.contains(i)).collect();
    let keep_dim: usize = kept.iter().map(|&k| dims[k]).product();
    let trace_dim: usize = traced.iter().map(|&k| dims[k]).product();

    // strides of each subsystem in the flat index
    let mut strides = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    let compose = |subs: &[usize], mut idx: usize| -> usize {
        let mut flat = 0;
        for &s in subs.iter().rev() {
            flat += (idx % dims[s]) * strides[s];
            idx /= dims[s];
        }
        flat
    };

    let mut out = DMatrix::zeros(keep_dim, keep_dim);
    for a in 0..keep_dim {
        let fa = compose(&kept, a);
        for b in 0..keep_dim {
            let fb = compose(&kept, b);
            let mut acc = C64::new(0.0, 0.0);
            for t in 0..trace_dim {
                let ft = compose(&traced, t);
                acc += rho[(fa + ft, fb + ft)];
            }
            out[(a, b)] = acc;
        }
    }
    Ok(out)
}

/// Partial trace of a full-space density matrix onto named subsystems.
pub fn reduce(rho: &DensityMatrix, keep: &[Subsystem]) -> Result<DensityMatrix> {
    let idx: Vec<usize> = keep.iter().map(|s| s.position()).collect();
    partial_trace(rho.matrix(), &FULL_DIMS, &idx).map(DensityMatrix)
}

/// A single-qubit pure state drawn from the Haar measure (uniform on the
/// Bloch sphere), as a normalized complex Gaussian vector.
pub fn haar_qubit<R: Rng + ?Sized>(rng: &mut R) -> [C64; 2] {
    loop {
        let v: [C64; 2] = std::array::from_fn(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
        let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
        if n > 1e-300 {
            return [v[0] / n, v[1] / n];
        }
    }
}

/// Two independent Haar-random qubit states.
pub fn haar_product_pair<R: Rng + ?Sized>(rng: &mut R) -> ([C64; 2], [C64; 2]) {
    let a = haar_qubit(rng);
    let b = haar_qubit(rng);
    (a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn random_density(dim: usize, rank: usize, seed: u64) -> Operator {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(dim, rank, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
        let m = &a * a.adjoint();
        let tr = trace(&m);
        m / tr
    }

    #[test]
    fn product_state_reduces_to_factor() {
        let ra = random_density(2, 2, 1);
        let rb = random_density(8, 3, 2);
        let rho = ra.kronecker(&rb);
        let red = partial_trace(&rho, &[2, 2, 2, 2], &[0]).unwrap();
        assert!((red - &ra).iter().fold(0.0f64, |a, z| a.max(z.norm())) < 1e-14);
        let red_b = partial_trace(&rho, &[2, 2, 2, 2], &[1, 2, 3]).unwrap();
        assert!((red_b - &rb).iter().fold(0.0f64, |a, z| a.max(z.norm())) < 1e-14);
    }

    #[test]
    fn bell_state_is_maximally_mixed() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let psi = DVector::from_vec(vec![c(s), c(0.0), c(0.0), c(s)]);
        let rho = DensityMatrix::from_pure(&psi);
        let red = partial_trace(rho.matrix(), &[2, 2], &[0]).unwrap();
        let half = Operator::identity(2, 2) * c(0.5);
        assert!((red - half).iter().fold(0.0f64, |a, z| a.max(z.norm())) < 1e-15);
    }

    #[test]
    fn middle_subsystem_and_order() {
        // |0>|1>|0> on three qubits; keeping {2, 1} returns them in position order
        let mut psi = DVector::zeros(8);
        psi[2] = c(1.0);
        let rho = DensityMatrix::from_pure(&psi);
        let red = partial_trace(rho.matrix(), &[2, 2, 2], &[2, 1]).unwrap();
        // kept order (1, 2): |1>|0> -> index 2
        assert_eq!(red[(2, 2)], c(1.0));
        assert!((trace(&red) - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn rejects_bad_subsystems() {
        let rho = Operator::identity(4, 4) * c(0.25);
        assert!(matches!(partial_trace(&rho, &[2, 2], &[2]), Err(Error::InvalidSubsystem(_))));
        assert!(matches!(partial_trace(&rho, &[2, 2], &[0, 0]), Err(Error::InvalidSubsystem(_))));
        assert!(matches!(partial_trace(&rho, &[2, 3], &[0]), Err(Error::InvalidSubsystem(_))));
    }

    #[test]
    fn purity_examples() {
        let mut psi = DVector::zeros(16);
        psi[3] = C64::new(0.6, 0.0);
        psi[9] = C64::new(0.0, 0.8);
        assert!((DensityMatrix::from_pure(&psi).purity() - 1.0).abs() < 1e-15);
        assert!((DensityMatrix::maximally_mixed(16).purity() - 1.0 / 16.0).abs() < 1e-15);
        let mut m = Operator::zeros(16, 16);
        m[(2, 2)] = c(0.5);
        m[(7, 7)] = c(0.5);
        assert!((purity(&m) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn density_validation() {
        assert!(DensityMatrix::new(random_density(16, 4, 7)).is_ok());
        let mut bad = Operator::identity(2, 2) * c(0.5);
        bad[(0, 1)] = c(0.3);
        assert!(DensityMatrix::new(bad).is_err());
        let neg = Operator::from_diagonal(&DVector::from_vec(vec![c(1.5), c(-0.5)]));
        assert!(DensityMatrix::new(neg).is_err());
    }

    #[test]
    fn haar_pair_normalized_and_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 100_000;
        let (mut m1, mut m2) = (0.0, 0.0);
        for _ in 0..n {
            let (a, b) = haar_product_pair(&mut rng);
            assert!((a[0].norm_sqr() + a[1].norm_sqr() - 1.0).abs() < 1e-12);
            assert!((b[0].norm_sqr() + b[1].norm_sqr() - 1.0).abs() < 1e-12);
            // <σz> with |0> = down (-1), |1> = up (+1)
            let z = a[1].norm_sqr() - a[0].norm_sqr();
            m1 += z;
            m2 += z * z;
        }
        m1 /= n as f64;
        m2 /= n as f64;
        // uniform sphere: E[z] = 0, E[z^2] = 1/3
        assert!(m1.abs() < 0.01, "mean {m1}");
        assert!((m2 - 1.0 / 3.0).abs() < 0.01, "second moment {m2}");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn partial_trace_linear_and_trace_preserving(seed_a in 0u64..1000, seed_b in 1000u64..2000, w in 0.0f64..1.0, keep in 0usize..4) {
                let a = random_density(16, 3, seed_a);
                let b = random_density(16, 5, seed_b);
                let mix = &a * c(w) + &b * c(1.0 - w);
                let pa = partial_trace(&a, &FULL_DIMS, &[keep]).unwrap();
                let pb = partial_trace(&b, &FULL_DIMS, &[keep]).unwrap();
                let pm = partial_trace(&mix, &FULL_DIMS, &[keep]).unwrap();
                prop_assert!((pm - (pa * c(w) + pb * c(1.0 - w))).iter().fold(0.0f64, |a, z| a.max(z.norm())) < 1e-14);
                let red = reduce(&DensityMatrix(a.clone()), &[Subsystem::Q, Subsystem::QPrime]).unwrap();
                prop_assert!((red.trace() - 1.0).abs() < 1e-13);
                prop_assert!(red.min_eigenvalue() > -1e-13);
                prop_assert!(hermiticity_defect(red.matrix()) < 1e-14);
            }
        }
    }
}
