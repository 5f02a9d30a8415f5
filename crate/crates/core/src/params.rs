use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Static model parameters. Energies and rates are angular frequencies in
/// ps⁻¹ with ħ = 1 (1 ps⁻¹ ≈ 0.658 meV).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Zeeman energy of qubit Q.
    pub e_q: f64,
    /// Zeeman energy of the control spin C.
    pub e_c: f64,
    /// Zeeman energy of qubit Q'.
    pub e_qp: f64,
    /// Q–C exchange in the excited orbital.
    pub j1: f64,
    /// Q'–C exchange in the excited orbital.
    pub j2: f64,
    /// Anisotropy: 0 is isotropic Heisenberg, 1 is XY.
    pub alpha: f64,
    /// Laser detuning from the optical transition.
    pub delta: f64,
}

/// Couplings in units of `E_C / 2`, as used by the analytic gate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedParams {
    /// `R = 2 E_Q / E_C − 1`
    pub r: f64,
    /// `J1' = 2 J1 / E_C`
    pub j1p: f64,
    /// `J2' = 2 J2 / E_C`
    pub j2p: f64,
}

impl SystemParams {
    pub fn new(e_q: f64, e_c: f64, e_qp: f64, j1: f64, j2: f64, alpha: f64, delta: f64) -> Self {
        Self { e_q, e_c, e_qp, j1, j2, alpha, delta }
    }

    /// Degenerate qubits with XY coupling and zero detuning, parametrized by
    /// the ratio `R`: `E_Q = E_Q' = (R + 1) E_C / 2`.
    pub fn from_ratio(e_c: f64, r: f64, j1: f64, j2: f64) -> Self {
        let e_q = 0.5 * (r + 1.0) * e_c;
        Self::new(e_q, e_c, e_q, j1, j2, 1.0, 0.0)
    }

    /// Same physical system parametrized by reduced couplings `J' = 2J/E_C`.
    pub fn from_reduced(e_c: f64, r: f64, j1p: f64, j2p: f64) -> Self {
        Self::from_ratio(e_c, r, 0.5 * j1p * e_c, 0.5 * j2p * e_c)
    }

    pub fn with_delta(self, delta: f64) -> Self {
        Self { delta, ..self }
    }

    pub fn with_couplings(self, j1: f64, j2: f64) -> Self {
        Self { j1, j2, ..self }
    }

    pub fn reduced(&self) -> Result<ReducedParams> {
        if self.e_c == 0.0 || !self.e_c.is_finite() {
            return Err(Error::InvalidParameter(format!("E_C must be finite and nonzero, got {}", self.e_c)));
        }
        Ok(ReducedParams {
            r: 2.0 * self.e_q / self.e_c - 1.0,
            j1p: 2.0 * self.j1 / self.e_c,
            j2p: 2.0 * self.j2 / self.e_c,
        })
    }

    pub fn is_xy(&self) -> bool {
        (self.alpha - 1.0).abs() < 1e-12
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [self.e_q, self.e_c, self.e_qp, self.j1, self.j2, self.alpha, self.delta];
        if fields.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("non-finite system parameter".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter(format!("alpha = {} outside [0, 1]", self.alpha)));
        }
        Ok(())
    }
}

impl ReducedParams {
    /// `√((R−1)² + 4J1'² + 4J2'²)`, the oscillation frequency of the
    /// `{A, T}` pair in units of `E_C`.
    pub fn rabi_root(&self) -> f64 {
        ((self.r - 1.0).powi(2) + 4.0 * self.j1p * self.j1p + 4.0 * self.j2p * self.j2p).sqrt()
    }

    pub fn coupling_norm(&self) -> f64 {
        self.j1p.hypot(self.j2p)
    }
}
