//! Laser pulse profiles and the adiabaticity metric.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PulseShape {
    Rectangular,
    Gaussian,
}

/// Default half-width of a Gaussian integration window, in units of τ.
pub const GAUSSIAN_HALF_WINDOW: f64 = 5.0;

/// Time-dependent Rabi frequency at constant detuning.
///
/// The detuning here replaces [`SystemParams::delta`](crate::SystemParams)
/// while the pulse is applied. Outside `window` the Rabi frequency is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseProfile {
    pub shape: PulseShape,
    /// Peak Rabi frequency (ps⁻¹).
    pub omega0: f64,
    /// Gaussian width τ (ps); for rectangular pulses, the duration.
    pub tau: f64,
    /// Constant detuning Δ (ps⁻¹).
    pub delta: f64,
    /// Integration window `[t_start, t_end]` (ps).
    pub window: (f64, f64),
}

impl PulseProfile {
    /// `Ω(t) = Ω0 exp[−(t/τ)²]` on the window `±5τ`, where the envelope is
    /// below `2e-11·Ω0`.
    pub fn gaussian(omega0: f64, tau: f64, delta: f64) -> Self {
        let half = GAUSSIAN_HALF_WINDOW * tau;
        Self { shape: PulseShape::Gaussian, omega0, tau, delta, window: (-half, half) }
    }

    /// Constant `Ω0` for `duration` starting at t = 0.
    pub fn rectangular(omega0: f64, duration: f64, delta: f64) -> Self {
        Self { shape: PulseShape::Rectangular, omega0, tau: duration, delta, window: (0.0, duration) }
    }

    /// Same profile rescaled to a new width, with the window scaled alike.
    pub fn with_tau(&self, tau: f64) -> Self {
        let scale = tau / self.tau;
        Self { tau, window: (self.window.0 * scale, self.window.1 * scale), ..*self }
    }

    pub fn with_delta(&self, delta: f64) -> Self {
        Self { delta, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b) = self.window;
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("pulse width must be positive, got {}", self.tau)));
        }
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(Error::InvalidParameter(format!("empty pulse window [{a}, {b}]")));
        }
        if !self.omega0.is_finite() || !self.delta.is_finite() {
            return Err(Error::InvalidParameter("non-finite pulse parameter".into()));
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.window.1 - self.window.0
    }

    fn inside(&self, t: f64) -> bool {
        t >= self.window.0 && t <= self.window.1
    }

    pub fn omega(&self, t: f64) -> f64 {
        if !self.inside(t) {
            return 0.0;
        }
        match self.shape {
            PulseShape::Rectangular => self.omega0,
            PulseShape::Gaussian => self.omega0 * (-(t / self.tau).powi(2)).exp(),
        }
    }

    /// dΩ/dt (zero for the flat top of a rectangular pulse).
    pub fn omega_dot(&self, t: f64) -> f64 {
        if !self.inside(t) {
            return 0.0;
        }
        match self.shape {
            PulseShape::Rectangular => 0.0,
            PulseShape::Gaussian => -2.0 * t / (self.tau * self.tau) * self.omega(t),
        }
    }
}

/// Landau–Zener adiabaticity ratio `(Ω̇Δ − ΩΔ̇) / (2 [Δ² + Ω²]^{3/2})` at time `t`.
/// Following is adiabatic while its magnitude stays ≪ 1.
pub fn adiabaticity_metric(pulse: &PulseProfile, t: f64) -> f64 {
    let omega = pulse.omega(t);
    let omega_dot = pulse.omega_dot(t);
    // constant detuning: Δ̇ = 0
    let num = omega_dot * pulse.delta;
    let den = 2.0 * (pulse.delta.powi(2) + omega.powi(2)).powf(1.5);
    if den == 0.0 {
        return if num == 0.0 { 0.0 } else { f64::INFINITY };
    }
    num / den
}

/// Largest `|metric|` over `samples` evenly spaced points of the window.
pub fn max_adiabaticity(pulse: &PulseProfile, samples: usize) -> f64 {
    let (a, b) = pulse.window;
    let n = samples.max(2);
    (0..n)
        .map(|k| a + (b - a) * k as f64 / (n - 1) as f64)
        .map(|t| adiabaticity_metric(pulse, t).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_window_edges_are_negligible() {
        let p = PulseProfile::gaussian(0.3, 500.0, 0.5);
        assert!(p.omega(p.window.0) < 2e-11 * p.omega0);
        assert_eq!(p.omega(p.window.1 + 1.0), 0.0);
        assert_eq!(p.omega(0.0), 0.3);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let p = PulseProfile::gaussian(0.3, 50.0, 0.5);
        for t in [-80.0, -20.0, 3.0, 41.0] {
            let h = 1e-5;
            let fd = (p.omega(t + h) - p.omega(t - h)) / (2.0 * h);
            assert!((fd - p.omega_dot(t)).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_drive_is_adiabatic() {
        let p = PulseProfile::rectangular(0.3, 100.0, 0.5);
        assert_eq!(max_adiabaticity(&p, 1001), 0.0);
    }

    #[test]
    fn metric_scales_inverse_with_width() {
        let a = max_adiabaticity(&PulseProfile::gaussian(0.3, 500.0, 0.5), 200_001);
        let b = max_adiabaticity(&PulseProfile::gaussian(0.3, 1000.0, 0.5), 200_001);
        assert!((a / b - 2.0).abs() < 1e-4, "{a} {b}");
    }

    #[test]
    fn metric_peak_reference_value() {
        // maximum of |metric| located by root-finding in 30-digit arithmetic
        let p = PulseProfile::gaussian(0.3, 500.0, 0.5);
        assert!((adiabaticity_metric(&p, -410.175_313_198_021_36).abs() - 8.781_949_663_570_349e-4).abs() < 1e-17);
        assert!((max_adiabaticity(&p, 400_001) - 8.781_949_663_570_349e-4).abs() < 1e-12);
    }
}
