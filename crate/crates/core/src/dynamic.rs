//! Pulsed ("dynamic") gate: a π pulse moves the control into `|e⟩`, the
//! spins evolve under the XY exchange for one revival time, and a second π
//! pulse returns the control to `|g⟩`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gate::{Gate4, LogicalGate};
use crate::hamiltonian::{build_excited, build_full};
use crate::integrate::{propagator, PiecewiseConstant, DEFAULT_TOL};
use crate::linalg::expm_hermitian;
use crate::params::{ReducedParams, SystemParams};
use crate::Operator;

/// Phases accumulated at the `n`-th revival.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicPhases {
    pub theta_t: f64,
    pub theta_e: f64,
    pub theta_aprime: f64,
    pub theta_z: f64,
    pub n: u32,
}

fn analytic_reduced(p: &SystemParams, n: u32) -> Result<ReducedParams> {
    p.validate()?;
    if !p.is_xy() {
        return Err(Error::RequiresXyCoupling(p.alpha));
    }
    if p.e_q != p.e_qp {
        return Err(Error::UnequalQubitEnergies { e_q: p.e_q, e_qp: p.e_qp });
    }
    if p.e_c.is_nan() || p.e_c <= 0.0 {
        return Err(Error::InvalidParameter(format!("E_C must be positive, got {}", p.e_c)));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("revival index n must be at least 1".into()));
    }
    let red = p.reduced()?;
    if red.rabi_root() == 0.0 {
        return Err(Error::NoOscillation);
    }
    Ok(red)
}

/// `t_rev = 2nπ / (E_C √((R−1)² + 4J1'² + 4J2'²))`, in ps.
pub fn revival_time(p: &SystemParams, n: u32) -> Result<f64> {
    let red = analytic_reduced(p, n)?;
    Ok(2.0 * n as f64 * PI / (p.e_c * red.rabi_root()))
}

pub fn dynamic_phases(p: &SystemParams, n: u32) -> Result<DynamicPhases> {
    let red = analytic_reduced(p, n)?;
    let root = red.rabi_root();
    let pn = PI * n as f64;
    Ok(DynamicPhases {
        theta_t: pn * (1.0 - (red.r + 1.0) / root),
        theta_e: -2.0 * pn / root,
        theta_aprime: pn * (1.0 + (red.r + 1.0) / root),
        theta_z: -2.0 * (red.r + 2.0) * pn / root,
        n,
    })
}

/// Central-block entries `(Δ1, Δ2, Δ3)` of the dynamic gate.
pub fn central_block(p: &SystemParams, phases: &DynamicPhases) -> Result<(C64, C64, C64)> {
    let red = p.reduced()?;
    let et = C64::from_polar(1.0, phases.theta_t);
    let ee = C64::from_polar(1.0, phases.theta_e);
    let (a2, b2) = (red.j1p * red.j1p, red.j2p * red.j2p);
    let norm = a2 + b2;
    if norm == 0.0 {
        // uncoupled qubits only pick up their Zeeman phase
        return Ok((ee, C64::new(0.0, 0.0), ee));
    }
    let d1 = (ee * a2 + et * b2) / norm;
    let d2 = (et - ee) * (red.j1p * red.j2p / norm);
    let d3 = (et * a2 + ee * b2) / norm;
    Ok((d1, d2, d3))
}

/// Analytic logical gate at the `n`-th revival:
///
/// ```text
/// U' = [[e^{iθ_Z}, 0, 0, 0], [0, Δ1, Δ2, 0], [0, Δ2, Δ3, 0], [0, 0, 0, e^{iθ_A'}]]
/// ```
pub fn dynamic_unitary(p: &SystemParams, n: u32) -> Result<LogicalGate> {
    let phases = dynamic_phases(p, n)?;
    let (d1, d2, d3) = central_block(p, &phases)?;
    let mut m = Gate4::zeros();
    m[(0, 0)] = C64::from_polar(1.0, phases.theta_z);
    m[(1, 1)] = d1;
    m[(1, 2)] = d2;
    m[(2, 1)] = d2;
    m[(2, 2)] = d3;
    m[(3, 3)] = C64::from_polar(1.0, phases.theta_aprime);
    Ok(LogicalGate { matrix: m, leakage: 0.0 })
}

/// `exp(−i H_e t)` on the spin space, by dense diagonalization.
pub fn propagate_excited(p: &SystemParams, t: f64) -> Operator {
    expm_hermitian(&build_excited(p), t)
}

/// Gate read off the numeric spin propagator at the revival time.
pub fn numeric_dynamic_gate(p: &SystemParams, n: u32) -> Result<LogicalGate> {
    let t = revival_time(p, n)?;
    Ok(LogicalGate::extract(&propagate_excited(p, t)))
}

/// π pulse, free evolution for `t_rev`, π pulse, at zero detuning.
pub fn pulsed_schedule(p: &SystemParams, omega0: f64, n: u32) -> Result<PiecewiseConstant> {
    if !(omega0 > 0.0 && omega0.is_finite()) {
        return Err(Error::InvalidParameter(format!("Omega0 must be positive, got {omega0}")));
    }
    let resonant = p.with_delta(0.0);
    let t_rev = revival_time(&resonant, n)?;
    let t_pulse = PI / omega0;
    let driven = build_full(&resonant, omega0);
    let free = build_full(&resonant, 0.0);
    Ok(PiecewiseConstant::new(vec![(t_pulse, driven.clone()), (t_rev, free), (t_pulse, driven)]))
}

/// Full sixteen-state simulation of the pulsed gate with finite π pulses of
/// duration `π/Ω0`. The detuning is held at zero. The returned block carries
/// the global phase −1 of the two π pulses and the Zeeman phases picked up
/// during them; leakage is reported, not treated as an error.
pub fn simulate_pulsed_gate(p: &SystemParams, omega0: f64, n: u32) -> Result<LogicalGate> {
    let schedule = pulsed_schedule(p, omega0, n)?;
    Ok(LogicalGate::extract(&propagator(&schedule, DEFAULT_TOL)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{rotate_h1_to_ate, H1_BASIS};
    use crate::linalg::{max_abs, unitarity_defect};

    fn reference() -> SystemParams {
        SystemParams::from_ratio(0.1, 1.0, 0.05, 0.05)
    }

    #[test]
    fn revival_time_reference_value() {
        // 2π / (0.1 √8)
        let t = revival_time(&reference(), 1).unwrap();
        assert!((t - 22.214_414_690_791_83).abs() < 1e-10, "{t}");
        assert!((revival_time(&reference(), 2).unwrap() - 2.0 * t).abs() < 1e-12);
        let doubled = SystemParams::from_ratio(0.2, 1.0, 0.1, 0.1);
        assert!((revival_time(&doubled, 1).unwrap() - 0.5 * t).abs() < 1e-12);
    }

    #[test]
    fn revival_time_errors() {
        let none = SystemParams::from_ratio(0.1, 1.0, 0.0, 0.0);
        assert_eq!(revival_time(&none, 1), Err(Error::NoOscillation));
        let heis = SystemParams { alpha: 0.0, ..reference() };
        assert!(matches!(revival_time(&heis, 1), Err(Error::RequiresXyCoupling(_))));
        let uneq = SystemParams { e_qp: 0.2, ..reference() };
        assert!(matches!(revival_time(&uneq, 1), Err(Error::UnequalQubitEnergies { .. })));
        assert!(revival_time(&reference(), 0).is_err());
    }

    #[test]
    fn reference_phases() {
        let ph = dynamic_phases(&reference(), 1).unwrap();
        let s8 = 8f64.sqrt();
        assert!((ph.theta_t - PI * (1.0 - 2.0 / s8)).abs() < 1e-14);
        assert!((ph.theta_t - 0.920_151_184_510_610_3).abs() < 1e-9);
        assert!((ph.theta_e + 2.221_441_469_079_183).abs() < 1e-9);
        assert!((ph.theta_aprime - 5.363_034_122_668_976).abs() < 1e-9);
        assert!((ph.theta_z + 6.664_324_407_237_548).abs() < 1e-9);
        assert!((ph.theta_t + ph.theta_aprime - 2.0 * PI).abs() < 1e-14);
        let ph2 = dynamic_phases(&reference(), 2).unwrap();
        assert!((ph2.theta_e - 2.0 * ph.theta_e).abs() < 1e-14);
    }

    #[test]
    fn phases_match_propagator_eigenphases() {
        let p = SystemParams::from_reduced(0.1, 1.3, 0.6, 1.4);
        let ph = dynamic_phases(&p, 1).unwrap();
        let u = propagate_excited(&p, revival_time(&p, 1).unwrap());
        let frame = rotate_h1_to_ate(&p).unwrap();
        let embed = |col: usize| {
            let mut v = nalgebra::DVector::zeros(8);
            for (k, &idx) in H1_BASIS.iter().enumerate() {
                v[idx] = frame.vectors[(k, col)];
            }
            v
        };
        let (t, e) = (embed(1), embed(2));
        let ut = &u * &t;
        let ue = &u * &e;
        assert!((ut - &t * C64::from_polar(1.0, ph.theta_t)).norm() < 1e-12);
        assert!((ue - &e * C64::from_polar(1.0, ph.theta_e)).norm() < 1e-12);
        assert!((u[(0, 0)] - C64::from_polar(1.0, ph.theta_z)).norm() < 1e-12);
        assert!((u[(5, 5)] - C64::from_polar(1.0, ph.theta_aprime)).norm() < 1e-12);
    }

    #[test]
    fn analytic_gate_matches_numeric() {
        for (r, a, b) in [(1.0, 1.0, 1.0), (1.2, 0.3, 1.7), (0.4, 2.0, 0.1), (2.5, 1.1, 0.9)] {
            let p = SystemParams::from_reduced(0.1, r, a, b);
            for n in 1..=3 {
                let g = dynamic_unitary(&p, n).unwrap();
                let numeric = numeric_dynamic_gate(&p, n).unwrap();
                assert!(g.max_distance(&numeric) < 1e-10, "R={r} n={n}: {}", g.max_distance(&numeric));
                assert!(g.unitarity_defect() < 1e-12);
                assert!(numeric.leakage < 1e-12);
            }
        }
    }

    #[test]
    fn symmetric_couplings_give_equal_diagonal() {
        let p = SystemParams::from_reduced(0.1, 1.4, 0.8, 0.8);
        let ph = dynamic_phases(&p, 1).unwrap();
        let (d1, _, d3) = central_block(&p, &ph).unwrap();
        let avg = (C64::from_polar(1.0, ph.theta_e) + C64::from_polar(1.0, ph.theta_t)) / 2.0;
        assert!((d1 - avg).norm() < 1e-15 && (d3 - avg).norm() < 1e-15);
    }

    #[test]
    fn single_coupling_gate_is_diagonal() {
        let p = SystemParams::from_reduced(0.1, 1.0, 1.3, 0.0);
        let g = dynamic_unitary(&p, 1).unwrap();
        let ph = dynamic_phases(&p, 1).unwrap();
        assert_eq!(g.offdiag_norm(), 0.0);
        assert!((g.matrix[(1, 1)] - C64::from_polar(1.0, ph.theta_e)).norm() < 1e-15);
    }

    #[test]
    fn excited_propagator_properties() {
        let p = SystemParams::new(0.12, 0.1, 0.12, 0.03, 0.06, 1.0, 0.0);
        assert!(max_abs(&(propagate_excited(&p, 0.0) - Operator::identity(8, 8))) < 1e-14);
        let u = propagate_excited(&p, 3.7) * propagate_excited(&p, 1.9);
        assert!(max_abs(&(u - propagate_excited(&p, 5.6))) < 1e-10);
        assert!(unitarity_defect(&propagate_excited(&p, 41.0)) < 1e-12);
    }

    #[test]
    fn pulsed_gate_uncoupled_is_diagonal() {
        let p = SystemParams::from_ratio(0.1, 1.2, 0.0, 0.0);
        let g = simulate_pulsed_gate(&p, 5.0, 1).unwrap();
        assert!(g.leakage < 1e-10, "{}", g.leakage);
        assert!(g.block_residual() < 1e-12 && g.offdiag_norm() < 1e-12);
    }

    #[test]
    fn pulsed_gate_converges_to_analytic() {
        let p = SystemParams::from_ratio(0.1, 1.2, 0.05, 0.05);
        let target = dynamic_unitary(&p, 1).unwrap();
        let mut last = f64::INFINITY;
        for omega0 in [5.0, 50.0, 500.0, 5e4, 5e6] {
            let g = simulate_pulsed_gate(&p, omega0, 1).unwrap();
            let d = g.distance_up_to_phase(&target);
            assert!(d < last, "Omega0 = {omega0}: {d} >= {last}");
            last = d;
        }
        assert!(last < 1e-6, "{last}");
    }

    #[test]
    fn pulsed_leakage_grows_with_coupling() {
        let mut prev = 0.0;
        for j in [0.02, 0.05, 0.1] {
            let p = SystemParams::from_ratio(0.1, 1.2, j, j);
            let g = simulate_pulsed_gate(&p, 5.0, 1).unwrap();
            assert!(g.leakage > prev, "J = {j}: {} <= {prev}", g.leakage);
            prev = g.leakage;
        }
    }
}
