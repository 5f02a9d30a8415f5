//! Rotating-frame model Hamiltonian and its block decomposition.
//!
//! ```text
//! H = −(E_Q σz^Q + E_C σz^C + E_Q' σz^Q') + (Ω/2)(|e⟩⟨g| + |g⟩⟨e|)
//!     + |e⟩⟨e| ⊗ [ J1 (σ^Q·σ^C − α σz^Q σz^C) + J2 (σ^Q'·σ^C − α σz^Q' σz^C) + Δ ]
//! ```
//!
//! The Zeeman term carries a minus sign relative to the σz eigenvalue
//! convention (`|0⟩` = down = −1). With that sign, the Σz = −1 block in the
//! basis `{|010⟩, |100⟩, |001⟩}` is `E_C [[R, J1', J2'], [J1', 1, 0], [J2', 0, 1]]`
//! and the subspace phases of the dynamic gate come out as
//! `θ_Z = −E_C (R+2) t_rev`, `θ_E = −E_C t_rev`. The exchange couples the
//! spins only while the control is in `|e⟩`; in `|g⟩` it is exactly zero.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::basis::{excited_projector, optical_coupling, pauli_on_spins, Axis, Site, SPIN_DIM};
use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::Operator;

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Zeeman part on the spin space, `−Σ_j E_j σz^j`.
pub fn zeeman_spins(p: &SystemParams) -> Operator {
    let e = [(Site::Q, p.e_q), (Site::C, p.e_c), (Site::QPrime, p.e_qp)];
    DMatrix::from_fn(SPIN_DIM, SPIN_DIM, |r, c| {
        if r != c {
            return re(0.0);
        }
        let energy: f64 = e
            .iter()
            .map(|&(site, ej)| {
                let up = match site {
                    Site::Q => r & 4 != 0,
                    Site::C => r & 2 != 0,
                    Site::QPrime => r & 1 != 0,
                };
                if up {
                    -ej
                } else {
                    ej
                }
            })
            .sum();
        re(energy)
    })
}

/// Exchange between the control and both qubits, on the spin space.
pub fn exchange_spins(p: &SystemParams) -> Operator {
    let pair = |qubit: Site, j: f64| -> Operator {
        let xx = pauli_on_spins(qubit, Axis::X) * pauli_on_spins(Site::C, Axis::X);
        let yy = pauli_on_spins(qubit, Axis::Y) * pauli_on_spins(Site::C, Axis::Y);
        let zz = pauli_on_spins(qubit, Axis::Z) * pauli_on_spins(Site::C, Axis::Z);
        (xx + yy + zz * re(1.0 - p.alpha)) * re(j)
    };
    pair(Site::Q, p.j1) + pair(Site::QPrime, p.j2)
}

/// Restricted Hamiltonian `⟨e|H|e⟩` without the detuning offset (8×8).
pub fn build_excited(p: &SystemParams) -> Operator {
    zeeman_spins(p) + exchange_spins(p)
}

/// Parts of the full Hamiltonian that are split by the Rabi frequency:
/// `H(Ω) = static + Ω · drive`.
#[derive(Debug, Clone)]
pub struct SplitHamiltonian {
    pub static_part: Operator,
    pub drive: Operator,
}

impl SplitHamiltonian {
    pub fn new(p: &SystemParams) -> Self {
        let orbital_id = Operator::identity(2, 2);
        let mut excited = DMatrix::zeros(2, 2);
        excited[(1, 1)] = re(1.0);
        let zeeman = orbital_id.kronecker(&zeeman_spins(p));
        let coupled = excited.kronecker(&exchange_spins(p));
        let detuning = excited_projector() * re(p.delta);
        Self { static_part: zeeman + coupled + detuning, drive: optical_coupling() * re(0.5) }
    }

    pub fn at(&self, omega: f64) -> Operator {
        &self.static_part + &self.drive * re(omega)
    }
}

/// Full rotating-frame Hamiltonian (16×16) at Rabi frequency `omega`.
pub fn build_full(p: &SystemParams, omega: f64) -> Operator {
    SplitHamiltonian::new(p).at(omega)
}

/// Spin-space indices of the Σz = −1 block, in the order `|010⟩, |100⟩, |001⟩`.
pub const H1_BASIS: [usize; 3] = [0b010, 0b100, 0b001];
/// Spin-space indices of the Σz = +1 block, in the order `|101⟩, |011⟩, |110⟩`.
pub const H2_BASIS: [usize; 3] = [0b101, 0b011, 0b110];
pub const H0_STATE: usize = 0b000;
pub const H3_STATE: usize = 0b111;

/// `H_e = H_0 ⊕ H_1 ⊕ H_2 ⊕ H_3` over the Σz sectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBlocks {
    pub h0: f64,
    pub h1: Operator,
    pub h2: Operator,
    pub h3: f64,
}

impl SubspaceBlocks {
    /// Inverse of the block decomposition: the 8×8 restricted Hamiltonian.
    pub fn reassemble(&self) -> Operator {
        let mut m = DMatrix::zeros(SPIN_DIM, SPIN_DIM);
        m[(H0_STATE, H0_STATE)] = re(self.h0);
        m[(H3_STATE, H3_STATE)] = re(self.h3);
        for (block, basis) in [(&self.h1, H1_BASIS), (&self.h2, H2_BASIS)] {
            for (a, &ia) in basis.iter().enumerate() {
                for (b, &ib) in basis.iter().enumerate() {
                    m[(ia, ib)] = block[(a, b)];
                }
            }
        }
        m
    }
}

/// Closed-form Σz blocks for degenerate qubits (`E_Q = E_Q'`).
///
/// At α = 1 these are `E_C [[R, J1', J2'], [J1', 1, 0], [J2', 0, 1]]` and
/// `E_C [[−R, J1', J2'], [J1', −1, 0], [J2', 0, −1]]`; for α < 1 the Ising
/// remainder `(1−α) J σz σz` adds to the diagonals.
pub fn subspace_blocks(p: &SystemParams) -> Result<SubspaceBlocks> {
    if p.e_q != p.e_qp {
        return Err(Error::UnequalQubitEnergies { e_q: p.e_q, e_qp: p.e_qp });
    }
    let red = p.reduced()?;
    let ec = p.e_c;
    let ising = 1.0 - p.alpha;
    let (j1, j2) = (p.j1, p.j2);
    let block = |diag: [f64; 3]| -> Operator {
        let m = [[diag[0], red.j1p, red.j2p], [red.j1p, diag[1], 0.0], [red.j2p, 0.0, diag[2]]];
        DMatrix::from_fn(3, 3, |r, c| re(ec * m[r][c]))
    };
    let mut h1 = block([red.r, 1.0, 1.0]);
    let mut h2 = block([-red.r, -1.0, -1.0]);
    // Ising corrections, ordered as the block bases
    let h1_ising = [-j1 - j2, -j1 + j2, j1 - j2];
    let h2_ising = [-j1 - j2, -j1 + j2, j1 - j2];
    for k in 0..3 {
        h1[(k, k)] += re(ising * h1_ising[k]);
        h2[(k, k)] += re(ising * h2_ising[k]);
    }
    Ok(SubspaceBlocks {
        h0: ec * (red.r + 2.0) + ising * (j1 + j2),
        h1,
        h2,
        h3: -ec * (red.r + 2.0) + ising * (j1 + j2),
    })
}

/// The Σz = −1 block expressed in the `{|A⟩, |T⟩, |E⟩}` basis.
#[derive(Debug, Clone)]
pub struct AteFrame {
    /// 3×3 Hamiltonian, block diagonal `2×2 ⊕ 1×1`.
    pub hamiltonian: Operator,
    /// Columns `|A⟩, |T⟩, |E⟩` in the block basis `{|010⟩, |100⟩, |001⟩}`.
    pub vectors: Operator,
}

/// Rotates the Σz = −1 block to `|A⟩ = |010⟩`,
/// `|T⟩ = (J1'|100⟩ + J2'|001⟩)/N` and `|E⟩ = (J2'|100⟩ − J1'|001⟩)/N`,
/// `N = √(J1'² + J2'²)`. `|E⟩` is annihilated by the exchange and is an exact
/// eigenvector with eigenvalue `E_C` (α = 1).
pub fn rotate_h1_to_ate(p: &SystemParams) -> Result<AteFrame> {
    let blocks = subspace_blocks(p)?;
    let red = p.reduced()?;
    let n = red.coupling_norm();
    if n == 0.0 {
        return Err(Error::UndefinedRotation);
    }
    let (a, b) = (red.j1p / n, red.j2p / n);
    let v = [[1.0, 0.0, 0.0], [0.0, a, b], [0.0, b, -a]];
    let vectors = DMatrix::from_fn(3, 3, |r, c| re(v[r][c]));
    let hamiltonian = vectors.adjoint() * &blocks.h1 * &vectors;
    Ok(AteFrame { hamiltonian, vectors })
}
