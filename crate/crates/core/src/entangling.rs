//! Average entangling power of two-qubit gates.
//!
//! `e(U)` is the linear entropy `1 − tr ρ₁²` of `U|ψ₁⟩⊗|ψ₂⟩`, averaged over
//! Haar-random product inputs. Its maximum for two qubits is 2/9.

use nalgebra::DVector;
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::haar_product_pair;
use crate::error::{Error, Result};
use crate::gate::LogicalGate;

/// Default Monte Carlo sample count.
pub const DEFAULT_SAMPLES: usize = 100_000;
/// Gates leaking more than this are rejected by the estimators.
pub const MAX_LEAKAGE: f64 = 1e-6;
/// Leakage accepted by [`entangling_power_projected`].
pub const MAX_PROJECTED_LEAKAGE: f64 = 1e-3;
/// Unitarity and block-pattern tolerance for the closed form.
pub const CLOSED_FORM_TOL: f64 = 1e-8;
/// Fixed shard count, so results do not depend on the thread pool size.
const SHARDS: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntanglingPowerEstimate {
    pub value: f64,
    /// Standard error of the mean; zero for the closed form.
    pub stderr: f64,
    pub samples: usize,
}

/// Linear entropy of subsystem A for a pure state on `dims.0 × dims.1`
/// (A is the most significant factor of the flat index).
pub fn linear_entropy(psi: &DVector<C64>, dims: (usize, usize)) -> f64 {
    let (da, db) = dims;
    assert_eq!(psi.len(), da * db, "state length does not match bipartition");
    let norm2 = psi.norm_squared();
    let mut purity = 0.0;
    for a in 0..da {
        for a2 in 0..da {
            let mut rho = C64::new(0.0, 0.0);
            for b in 0..db {
                rho += psi[a * db + b] * psi[a2 * db + b].conj();
            }
            purity += rho.norm_sqr();
        }
    }
    1.0 - purity / (norm2 * norm2)
}

fn product_output_entropy(u: &LogicalGate, a: &[C64; 2], b: &[C64; 2]) -> f64 {
    let input = [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]];
    let m = &u.matrix;
    let out: [C64; 4] = std::array::from_fn(|r| (0..4).map(|c| m[(r, c)] * input[c]).sum());
    // two-qubit linear entropy via the 2x2 reduced matrix
    let r00 = out[0].norm_sqr() + out[1].norm_sqr();
    let r11 = out[2].norm_sqr() + out[3].norm_sqr();
    let r01 = out[0] * out[2].conj() + out[1] * out[3].conj();
    let norm = r00 + r11;
    1.0 - (r00 * r00 + r11 * r11 + 2.0 * r01.norm_sqr()) / (norm * norm)
}

/// Monte Carlo estimate over `samples` Haar product inputs. Shard `k` draws
/// from ChaCha8 stream `k` of `seed`, so the estimate is reproducible.
pub fn entangling_power_mc(u: &LogicalGate, samples: usize, seed: u64) -> Result<EntanglingPowerEstimate> {
    if u.leakage > MAX_LEAKAGE {
        return Err(Error::LeakyGate { leakage: u.leakage });
    }
    if samples < 2 {
        return Err(Error::InvalidParameter("need at least two samples".into()));
    }
    let per = samples as u64 / SHARDS;
    let extra = samples as u64 % SHARDS;
    let (sum, sum_sq) = (0..SHARDS)
        .into_par_iter()
        .map(|shard| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(shard);
            let count = per + u64::from(shard < extra);
            let mut acc = (0.0, 0.0);
            for _ in 0..count {
                let (a, b) = haar_product_pair(&mut rng);
                let e = product_output_entropy(u, &a, &b);
                acc.0 += e;
                acc.1 += e * e;
            }
            acc
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((0.0, 0.0), |x, y| (x.0 + y.0, x.1 + y.1));
    let n = samples as f64;
    let mean = sum / n;
    let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(EntanglingPowerEstimate { value: mean, stderr: (var / n).sqrt(), samples })
}

/// Closed form for gates with corner phases `e^{iθ_Z}`, `e^{iθ_A'}` and a
/// central block `[[Δ1, Δ2], [Δ2', Δ3]]`:
///
/// ```text
/// e = (8 − 2|Δ1|² − |Δ1|⁴ − 2|Δ2|² − |Δ2|⁴ − 2|Δ2'|² − |Δ2'|⁴ − 2|Δ3|² − |Δ3|⁴
///      − 2 Re[e^{i(θ_Z+θ_A')} conj(Δ2 Δ2')] − 2 Re[e^{i(θ_Z+θ_A')} conj(Δ1 Δ3)]) / 18
/// ```
///
/// The conjugates make the expression invariant under a global phase of U.
pub fn entangling_power_closed(u: &LogicalGate) -> Result<f64> {
    let residual = u.block_residual();
    if residual > CLOSED_FORM_TOL {
        return Err(Error::NotBlockStructured(residual));
    }
    let defect = u.unitarity_defect();
    if defect > CLOSED_FORM_TOL {
        return Err(Error::NotUnitary(defect));
    }
    let m = &u.matrix;
    let corner = m[(0, 0)] * m[(3, 3)];
    let (d1, d2, d2p, d3) = (m[(1, 1)], m[(1, 2)], m[(2, 1)], m[(2, 2)]);
    let quad = |z: C64| {
        let s = z.norm_sqr();
        2.0 * s + s * s
    };
    let value = 8.0
        - quad(d1)
        - quad(d2)
        - quad(d2p)
        - quad(d3)
        - 2.0 * (corner * (d2 * d2p).conj()).re
        - 2.0 * (corner * (d1 * d3).conj()).re;
    Ok(value / 18.0)
}

/// Closed form applied to the nearest unitary of a slightly leaky gate.
/// Gates leaking more than [`MAX_PROJECTED_LEAKAGE`] are rejected.
pub fn entangling_power_projected(u: &LogicalGate) -> Result<f64> {
    if u.leakage > MAX_PROJECTED_LEAKAGE {
        return Err(Error::LeakyGate { leakage: u.leakage });
    }
    entangling_power_closed(&u.nearest_unitary())
}
