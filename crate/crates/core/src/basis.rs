//! Basis conventions for the control orbital and the three spins.
//!
//! The full Hilbert space is `orbital ⊗ Q ⊗ C ⊗ Q'`, sixteen states in all.
//! A basis state is addressed by its flat index
//!
//! ```text
//! index = 8·orbital + 4·Q + 2·C + Q'
//! ```
//!
//! with `orbital ∈ {g = 0, e = 1}` and each spin `0` (down, σz = −1) or
//! `1` (up, σz = +1). The excited-restricted space drops the orbital bit and
//! uses `4·Q + 2·C + Q'`.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::Operator;

pub const FULL_DIM: usize = 16;
pub const SPIN_DIM: usize = 8;
pub const LOGICAL_DIM: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Orbital {
    Ground,
    Excited,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Site {
    Q,
    C,
    QPrime,
}

impl Site {
    pub const ALL: [Site; 3] = [Site::Q, Site::C, Site::QPrime];

    /// Bit position of this spin inside the three-spin index `4Q + 2C + Q'`.
    fn shift(self) -> usize {
        match self {
            Site::Q => 2,
            Site::C => 1,
            Site::QPrime => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// One of the sixteen product basis states `|QCQ'⟩ ⊗ |orbital⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BasisIndex {
    pub orbital: Orbital,
    pub q: bool,
    pub c: bool,
    pub qp: bool,
}

impl BasisIndex {
    pub fn new(orbital: Orbital, q: bool, c: bool, qp: bool) -> Self {
        Self { orbital, q, c, qp }
    }

    /// Ground-orbital state with the given spins.
    pub fn ground(q: bool, c: bool, qp: bool) -> Self {
        Self::new(Orbital::Ground, q, c, qp)
    }

    pub fn excited(q: bool, c: bool, qp: bool) -> Self {
        Self::new(Orbital::Excited, q, c, qp)
    }

    pub fn flat(self) -> usize {
        let o = match self.orbital {
            Orbital::Ground => 0,
            Orbital::Excited => 1,
        };
        8 * o + self.spin_index()
    }

    /// Index into the eight-dimensional spin space.
    pub fn spin_index(self) -> usize {
        4 * self.q as usize + 2 * self.c as usize + self.qp as usize
    }

    /// Inverse of [`BasisIndex::flat`]; `None` outside `0..16`.
    pub fn from_flat(index: usize) -> Option<Self> {
        if index >= FULL_DIM {
            return None;
        }
        let orbital = if index & 8 == 0 { Orbital::Ground } else { Orbital::Excited };
        Some(Self::new(orbital, index & 4 != 0, index & 2 != 0, index & 1 != 0))
    }

    pub fn spin(self, site: Site) -> bool {
        match site {
            Site::Q => self.q,
            Site::C => self.c,
            Site::QPrime => self.qp,
        }
    }

    /// Total spin projection Σz = σz^Q + σz^C + σz^Q'.
    pub fn sigma_z_total(self) -> i32 {
        Site::ALL.iter().map(|&s| if self.spin(s) { 1 } else { -1 }).sum()
    }
}

impl fmt::Display for BasisIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let o = match self.orbital {
            Orbital::Ground => 'g',
            Orbital::Excited => 'e',
        };
        write!(f, "|{}{}{}>{}", self.q as u8, self.c as u8, self.qp as u8, o)
    }
}

/// Flat index (in a space of `dim` 8 or 16) of the logical qubit state
/// `|Q Q'⟩`, `logical = 2Q + Q'`, with the control spin down and, for the
/// full space, the orbital in `|g⟩`.
pub fn logical_to_flat(logical: usize) -> usize {
    debug_assert!(logical < LOGICAL_DIM);
    4 * (logical >> 1) + (logical & 1)
}

/// Flat indices of the four logical states, in `|00⟩, |01⟩, |10⟩, |11⟩` order.
pub const LOGICAL_INDICES: [usize; 4] = [0, 1, 4, 5];

fn pauli_2x2(axis: Axis) -> [[C64; 2]; 2] {
    let z = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    // rows/cols ordered (down, up)
    match axis {
        Axis::X => [[z, one], [one, z]],
        Axis::Y => [[z, i], [-i, z]],
        Axis::Z => [[-one, z], [z, one]],
    }
}

/// σ_axis on one spin, identity on the other spins and the orbital.
pub fn pauli_on(site: Site, axis: Axis) -> Operator {
    pauli_embedded(site, axis, FULL_DIM)
}

/// σ_axis on one spin of the eight-dimensional spin space.
pub fn pauli_on_spins(site: Site, axis: Axis) -> Operator {
    pauli_embedded(site, axis, SPIN_DIM)
}

fn pauli_embedded(site: Site, axis: Axis, dim: usize) -> Operator {
    let s = pauli_2x2(axis);
    let shift = site.shift();
    let mask = 1usize << shift;
    DMatrix::from_fn(dim, dim, |r, c| {
        if (r & !mask) != (c & !mask) {
            return C64::new(0.0, 0.0);
        }
        s[(r >> shift) & 1][(c >> shift) & 1]
    })
}

/// Σz = σz^Q + σz^C + σz^Q' on the spin space of dimension `dim` (8 or 16).
pub fn total_sigma_z(dim: usize) -> Operator {
    DMatrix::from_fn(dim, dim, |r, c| {
        if r != c {
            return C64::new(0.0, 0.0);
        }
        let spins = r & 7;
        let up = spins.count_ones() as f64;
        C64::new(2.0 * up - 3.0, 0.0)
    })
}

/// Projector onto the excited orbital, `|e⟩⟨e| ⊗ 1`.
pub fn excited_projector() -> Operator {
    DMatrix::from_fn(
        FULL_DIM,
        FULL_DIM,
        |r, c| {
            if r == c && r >= SPIN_DIM {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        },
    )
}

/// Optical coupling `|e⟩⟨g| + |g⟩⟨e|` (spin identity).
pub fn optical_coupling() -> Operator {
    DMatrix::from_fn(FULL_DIM, FULL_DIM, |r, c| if r ^ c == SPIN_DIM { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
}

/// Full-space indices grouped by the number of up spins. The model never
/// couples different groups, so each one is an invariant subspace.
pub fn spin_sectors() -> [Vec<usize>; 4] {
    std::array::from_fn(|ups| {
        let spins = (0..SPIN_DIM).filter(|s| s.count_ones() as usize == ups);
        spins.clone().chain(spins.map(|s| s + SPIN_DIM)).collect()
    })
}

/// The sector containing flat index `index`.
pub fn sector_of(index: usize) -> Vec<usize> {
    spin_sectors()[(index % SPIN_DIM).count_ones() as usize].clone()
}
