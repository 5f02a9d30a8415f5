//! Spontaneous decay of the control's excited orbital.
//!
//! ```text
//! dρ/dt = −i[H, ρ] + Γ0 (σ⁻ ρ σ⁺ − ½ {σ⁺σ⁻, ρ}),   σ⁻ = |g⟩⟨e| ⊗ 1
//! ```

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adiabatic::PulseSchedule;
use crate::basis::{logical_to_flat, spin_sectors, FULL_DIM, LOGICAL_DIM, SPIN_DIM};
use crate::density::{purity, DensityMatrix};
use crate::dynamic::pulsed_schedule;
use crate::error::{Error, Result};
use crate::integrate::{dopri5_with, ErrorControl, Schedule};
use crate::linalg::trace;
use crate::params::SystemParams;
use crate::pulse::PulseProfile;
use crate::Operator;

/// Radiative (or non-radiative) decay `|e⟩ → |g⟩` that leaves the spins alone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayModel {
    /// Decay rate Γ0 in ns⁻¹.
    pub gamma0_per_ns: f64,
}

impl DecayModel {
    pub fn new(gamma0_per_ns: f64) -> Result<Self> {
        if !(gamma0_per_ns >= 0.0 && gamma0_per_ns.is_finite()) {
            return Err(Error::InvalidParameter(format!("decay rate must be non-negative, got {gamma0_per_ns}")));
        }
        Ok(Self { gamma0_per_ns })
    }

    /// Rate in ps⁻¹.
    pub fn rate(&self) -> f64 {
        self.gamma0_per_ns * 1e-3
    }
}

/// The master equation for the block `ρ[rows, cols]`, where `rows` and
/// `cols` are each closed under the dynamics and under `σ⁻`.
struct Generator {
    rows: Side,
    cols: Side,
}

struct Side {
    indices: Vec<usize>,
    excited: Vec<bool>,
    /// `(e, g)` positions with `σ⁻|e⟩ = |g⟩`.
    lowering: Vec<(usize, usize)>,
}

impl Side {
    fn new(indices: &[usize]) -> Self {
        let excited = indices.iter().map(|&i| i >= SPIN_DIM).collect();
        let lowering = indices
            .iter()
            .enumerate()
            .filter(|(_, &i)| i >= SPIN_DIM)
            .map(|(e, &i)| (e, indices.iter().position(|&j| j == i - SPIN_DIM).expect("subset closed under decay")))
            .collect();
        Self { indices: indices.to_vec(), excited, lowering }
    }

    fn restrict(&self, h: &Operator) -> Operator {
        h.select_rows(&self.indices).select_columns(&self.indices)
    }
}

impl Generator {
    fn on(rows: &[usize], cols: &[usize]) -> Self {
        Self { rows: Side::new(rows), cols: Side::new(cols) }
    }

    /// `h` is the full Hamiltonian.
    fn rhs(&self, rho: &Operator, h: &Operator, gamma: f64) -> Operator {
        let (hr, hc) = (self.rows.restrict(h), self.cols.restrict(h));
        self.rhs_restricted(rho, &hr, &hc, gamma)
    }

    fn rhs_restricted(&self, rho: &Operator, hr: &Operator, hc: &Operator, gamma: f64) -> Operator {
        let mut out = (hr * rho - rho * hc) * C64::new(0.0, -1.0);
        if gamma == 0.0 {
            return out;
        }
        for r in 0..rho.nrows() {
            for c in 0..rho.ncols() {
                let count = self.rows.excited[r] as u8 + self.cols.excited[c] as u8;
                if count > 0 {
                    out[(r, c)] -= rho[(r, c)] * (0.5 * gamma * f64::from(count));
                }
            }
        }
        for &(er, gr) in &self.rows.lowering {
            for &(ec, gc) in &self.cols.lowering {
                out[(gr, gc)] += rho[(er, ec)] * gamma;
            }
        }
        out
    }
}

/// Right-hand side of the master equation for a 16×16 `rho`.
pub fn lindblad_rhs(rho: &Operator, h: &Operator, decay: &DecayModel) -> Operator {
    let all: Vec<usize> = (0..FULL_DIM).collect();
    Generator::on(&all, &all).rhs(rho, h, decay.rate())
}

fn evolve_block(
    block: &Operator,
    schedule: &dyn Schedule,
    gamma: f64,
    tol: f64,
    (rows, cols): (&[usize], &[usize]),
) -> Result<Operator> {
    let generator = Generator::on(rows, cols);
    let segments = schedule.segments();
    let (Some(first), Some(last)) = (segments.first(), segments.last()) else {
        return Ok(block.clone());
    };
    let horizon = last.end - first.start;
    if horizon <= 0.0 {
        return Ok(block.clone());
    }
    let control = ErrorControl::Accumulated { horizon };
    let mut rho = block.clone();
    for seg in segments {
        rho = if seg.constant {
            let h = schedule.hamiltonian(0.5 * (seg.start + seg.end));
            let (hr, hc) = (generator.rows.restrict(&h), generator.cols.restrict(&h));
            dopri5_with(|_, r| generator.rhs_restricted(r, &hr, &hc, gamma), seg.start, seg.end, &rho, tol, control)?
        } else {
            dopri5_with(
                |t, r| generator.rhs(r, &schedule.hamiltonian(t), gamma),
                seg.start,
                seg.end,
                &rho,
                tol,
                control,
            )?
        };
    }
    Ok(rho)
}

/// Integrates the master equation through `schedule`. The Hamiltonian and the
/// decay both conserve the number of up spins, so every block of `ρ` between
/// two spin sectors evolves on its own; only the nonzero blocks are
/// integrated. `tol` bounds the Frobenius norm of the error in the final state.
pub fn evolve_master(
    rho0: &DensityMatrix,
    schedule: &dyn Schedule,
    decay: &DecayModel,
    tol: f64,
) -> Result<DensityMatrix> {
    if rho0.dim() != FULL_DIM {
        return Err(Error::InvalidDensityMatrix(format!("expected a {FULL_DIM}x{FULL_DIM} state, got {}", rho0.dim())));
    }
    let sectors = spin_sectors();
    let m = rho0.matrix();
    let block_of = |a: usize, b: usize| m.select_rows(&sectors[a]).select_columns(&sectors[b]);
    let pairs: Vec<(usize, usize)> = (0..4)
        .flat_map(|a| (a..4).map(move |b| (a, b)))
        .filter(|&(a, b)| block_of(a, b).iter().any(|x| *x != C64::new(0.0, 0.0)))
        .collect();
    // off-diagonal blocks count twice, through their mirror image
    let weight: usize = pairs.iter().map(|&(a, b)| if a == b { 1 } else { 2 }).sum();
    let share = tol / (weight.max(1) as f64).sqrt();
    let gamma = decay.rate();
    let mut rho = Operator::zeros(FULL_DIM, FULL_DIM);
    for (a, b) in pairs {
        let mut out = evolve_block(&block_of(a, b), schedule, gamma, share, (&sectors[a], &sectors[b]))?;
        if a == b {
            // remove the rounding-level anti-Hermitian part
            out = (&out + out.adjoint()) * C64::new(0.5, 0.0);
        }
        for (i, &ia) in sectors[a].iter().enumerate() {
            for (j, &jb) in sectors[b].iter().enumerate() {
                rho[(ia, jb)] = out[(i, j)];
                rho[(jb, ia)] = out[(i, j)].conj();
            }
        }
    }
    Ok(DensityMatrix::new_unchecked(rho))
}

/// Evolves the basis state `|index⟩⟨index|`, which never leaves its spin sector.
pub fn evolve_basis_state(
    index: usize,
    schedule: &dyn Schedule,
    decay: &DecayModel,
    tol: f64,
) -> Result<DensityMatrix> {
    if index >= FULL_DIM {
        return Err(Error::InvalidParameter(format!("basis index {index} out of range")));
    }
    let mut rho0 = Operator::zeros(FULL_DIM, FULL_DIM);
    rho0[(index, index)] = C64::new(1.0, 0.0);
    evolve_master(&DensityMatrix::new_unchecked(rho0), schedule, decay, tol)
}

/// Final purity and the population left in the logical sector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiguresOfMerit {
    pub purity: f64,
    pub population_computational: f64,
}

impl FiguresOfMerit {
    pub fn of(rho: &Operator) -> Self {
        let population_computational = (0..LOGICAL_DIM).map(|l| rho[(logical_to_flat(l), logical_to_flat(l))].re).sum();
        Self { purity: purity(rho) / trace(rho).re.powi(2), population_computational }
    }

    fn mean(items: &[Self]) -> Self {
        let n = items.len() as f64;
        Self {
            purity: items.iter().map(|f| f.purity).sum::<f64>() / n,
            population_computational: items.iter().map(|f| f.population_computational).sum::<f64>() / n,
        }
    }
}

/// Which gate to run under decay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GateSpec {
    /// π pulse, wait `t_rev`, π pulse, with rectangular pulses of Rabi frequency `omega0`.
    Dynamic {
        params: SystemParams,
        omega0: f64,
        n: u32,
    },
    Adiabatic {
        params: SystemParams,
        pulse: PulseProfile,
    },
}

impl GateSpec {
    pub fn schedule(&self) -> Result<Box<dyn Schedule>> {
        Ok(match self {
            GateSpec::Dynamic { params, omega0, n } => Box::new(pulsed_schedule(params, *omega0, *n)?),
            GateSpec::Adiabatic { params, pulse } => Box::new(PulseSchedule::new(params, pulse)?),
        })
    }
}

/// Figures of merit at one decay rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoherenceRow {
    pub gamma0_per_ns: f64,
    /// One entry per logical input `|00⟩, |01⟩, |10⟩, |11⟩`.
    pub per_input: [FiguresOfMerit; 4],
    /// Uniform average over the four inputs.
    pub average: FiguresOfMerit,
}

/// Runs the gate on each computational-basis input for every decay rate.
pub fn decoherence_study(gate: &GateSpec, gamma0_per_ns: &[f64], tol: f64) -> Result<Vec<DecoherenceRow>> {
    let schedule = gate.schedule()?;
    let models = gamma0_per_ns.iter().map(|&g| DecayModel::new(g)).collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize)> = (0..models.len()).flat_map(|m| (0..LOGICAL_DIM).map(move |l| (m, l))).collect();
    let results = jobs
        .par_iter()
        .map(|&(m, l)| {
            let out = evolve_basis_state(logical_to_flat(l), schedule.as_ref(), &models[m], tol)?;
            Ok(FiguresOfMerit::of(out.matrix()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(models
        .iter()
        .enumerate()
        .map(|(m, model)| {
            let per_input: [FiguresOfMerit; 4] = std::array::from_fn(|l| results[m * LOGICAL_DIM + l]);
            DecoherenceRow { gamma0_per_ns: model.gamma0_per_ns, per_input, average: FiguresOfMerit::mean(&per_input) }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::QuantumState;
    use crate::integrate::{propagator, PiecewiseConstant};
    use crate::linalg::{hermiticity_defect, max_abs};
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state(seed: u64) -> Operator {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a =
            DMatrix::from_fn(FULL_DIM, FULL_DIM, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let rho = &a * a.adjoint();
        let tr = trace(&rho);
        rho / tr
    }

    #[test]
    fn decay_rate_units() {
        assert_eq!(DecayModel::new(2.0).unwrap().rate(), 2e-3);
        assert!(DecayModel::new(-1.0).is_err());
    }

    #[test]
    fn ground_sector_does_not_decay() {
        let mut rho = Operator::zeros(FULL_DIM, FULL_DIM);
        rho[(3, 3)] = C64::new(0.5, 0.0);
        rho[(1, 1)] = C64::new(0.5, 0.0);
        rho[(1, 3)] = C64::new(0.2, 0.3);
        rho[(3, 1)] = C64::new(0.2, -0.3);
        let zero = Operator::zeros(FULL_DIM, FULL_DIM);
        assert_eq!(max_abs(&lindblad_rhs(&rho, &zero, &DecayModel::new(3.0).unwrap())), 0.0);
    }

    #[test]
    fn excited_population_decays_at_gamma() {
        let mut rho = Operator::zeros(FULL_DIM, FULL_DIM);
        rho[(8 + 5, 8 + 5)] = C64::new(1.0, 0.0);
        let decay = DecayModel::new(1.5).unwrap();
        let d = lindblad_rhs(&rho, &Operator::zeros(FULL_DIM, FULL_DIM), &decay);
        assert!((d[(13, 13)].re + decay.rate()).abs() < 1e-18);
        assert!((d[(5, 5)].re - decay.rate()).abs() < 1e-18);
    }

    #[test]
    fn rhs_is_traceless_and_hermitian() {
        let p = SystemParams::new(0.15, 0.1, 0.12, 0.05, 0.03, 0.7, 0.4);
        let h = crate::hamiltonian::build_full(&p, 0.3);
        for seed in 0..5 {
            let d = lindblad_rhs(&random_state(seed), &h, &DecayModel::new(2.0).unwrap());
            assert!(trace(&d).norm() < 1e-12);
            assert!(hermiticity_defect(&d) < 1e-14);
        }
    }

    #[test]
    fn closed_system_matches_unitary_propagation() {
        let p = SystemParams::new(0.15, 0.1, 0.12, 0.05, 0.03, 1.0, 0.2);
        let schedule = PiecewiseConstant::new(vec![
            (3.0, crate::hamiltonian::build_full(&p, 0.8)),
            (20.0, crate::hamiltonian::build_full(&p, 0.0)),
            (3.0, crate::hamiltonian::build_full(&p, 0.8)),
        ]);
        let u = propagator(&schedule, 1e-12).unwrap();
        let rho0 = random_state(9);
        let expected = &u * &rho0 * u.adjoint();
        let out = evolve_master(&DensityMatrix::new_unchecked(rho0), &schedule, &DecayModel::new(0.0).unwrap(), 1e-11)
            .unwrap();
        assert!(max_abs(&(out.matrix() - expected)) < 1e-8);
    }

    // Optical Bloch equations for one driven, damped two-level system,
    // integrated with classical RK4 on the three independent entries.
    fn bloch_excited_population(omega: f64, delta: f64, gamma: f64, t: f64) -> f64 {
        let deriv = |s: [C64; 3]| {
            let [gg, ee, eg] = s;
            let i = C64::new(0.0, 1.0);
            let half = omega / 2.0;
            let ge = eg.conj();
            let d_ee = -gamma * ee - i * half * (ge - eg);
            let d_gg = gamma * ee + i * half * (ge - eg);
            let d_eg = -i * delta * eg - 0.5 * gamma * eg - i * half * (gg - ee);
            [d_gg, d_ee, d_eg]
        };
        let add = |a: [C64; 3], b: [C64; 3], h: f64| std::array::from_fn(|k| a[k] + b[k] * h);
        let n = 200_000;
        let h = t / n as f64;
        let mut s = [C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)];
        for _ in 0..n {
            let k1 = deriv(s);
            let k2 = deriv(add(s, k1, h / 2.0));
            let k3 = deriv(add(s, k2, h / 2.0));
            let k4 = deriv(add(s, k3, h));
            s = std::array::from_fn(|k| s[k] + (k1[k] + k2[k] * 2.0 + k3[k] * 2.0 + k4[k]) * (h / 6.0));
        }
        s[1].re
    }

    #[test]
    fn damped_rabi_matches_two_level_oracle() {
        let p = SystemParams::new(0.15, 0.1, 0.12, 0.0, 0.0, 1.0, 0.05);
        let (omega, duration) = (0.2, 40.0);
        let decay = DecayModel::new(50.0).unwrap();
        let schedule = PiecewiseConstant::new(vec![(duration, crate::hamiltonian::build_full(&p, omega))]);
        let mut rho0 = Operator::zeros(FULL_DIM, FULL_DIM);
        rho0[(0, 0)] = C64::new(1.0, 0.0);
        let out = evolve_master(&DensityMatrix::new_unchecked(rho0), &schedule, &decay, 1e-11).unwrap();
        let expected = bloch_excited_population(omega, p.delta, decay.rate(), duration);
        assert!((out.matrix()[(8, 8)].re - expected).abs() < 1e-6, "{} vs {expected}", out.matrix()[(8, 8)].re);
    }

    #[test]
    fn pure_decay_purity_follows_populations() {
        // σ⁻ keeps the spin state, so the state is a mixture of |e⟩|s⟩ and
        // |g⟩|s⟩ with purity p² + (1 − p)², p = exp(−Γt)
        let zero = Operator::zeros(FULL_DIM, FULL_DIM);
        let mut psi = Operator::zeros(FULL_DIM, 1);
        psi[(8 + 2, 0)] = C64::new(0.6, 0.0);
        psi[(8 + 6, 0)] = C64::new(0.0, 0.8);
        let mut rho = &psi * psi.adjoint();
        let decay = DecayModel::new(100.0).unwrap();
        let mut last = 1.0;
        for k in 1..=10 {
            let schedule = PiecewiseConstant::new(vec![(2.0, zero.clone())]);
            rho = evolve_master(&DensityMatrix::new_unchecked(rho), &schedule, &decay, 1e-10).unwrap().into_matrix();
            let p = (-decay.rate() * 2.0 * k as f64).exp();
            let now = purity(&rho);
            assert!((now - (p * p + (1.0 - p) * (1.0 - p))).abs() < 1e-9);
            assert!((trace(&rho).re - 1.0).abs() < 1e-9);
            // purity falls while the excited state holds the majority
            if p > 0.5 {
                assert!(now < last);
            }
            last = now;
        }
    }

    #[test]
    fn closed_system_study_has_unit_purity() {
        let p = SystemParams::from_ratio(0.1, 1.2, 0.05, 0.05);
        let gate = GateSpec::Dynamic { params: p, omega0: 5.0, n: 1 };
        let rows = decoherence_study(&gate, &[0.0], 1e-10).unwrap();
        let u = crate::dynamic::simulate_pulsed_gate(&p, 5.0, 1).unwrap();
        for (l, fom) in rows[0].per_input.iter().enumerate() {
            assert!((fom.purity - 1.0).abs() < 1e-8);
            let kept: f64 = (0..4).map(|r| u.matrix[(r, l)].norm_sqr()).sum();
            assert!((fom.population_computational - kept).abs() < 1e-8);
        }
    }

    #[test]
    fn block_evolution_matches_full_space() {
        let p = SystemParams::new(0.15, 0.1, 0.12, 0.05, 0.03, 1.0, 0.2);
        let (h_on, h_off) = (crate::hamiltonian::build_full(&p, 0.8), crate::hamiltonian::build_full(&p, 0.0));
        let schedule = PiecewiseConstant::new(vec![(3.0, h_on.clone()), (20.0, h_off.clone())]);
        let decay = DecayModel::new(80.0).unwrap();
        // coherences between all four spin sectors
        let psi = QuantumState::from_fn(FULL_DIM, |k, _| C64::new(1.0 / (1.0 + k as f64), 0.1 * k as f64 - 0.4));
        let psi = &psi / C64::new(psi.norm(), 0.0);
        let rho0 = DensityMatrix::from_pure(&psi);
        let blocks = evolve_master(&rho0, &schedule, &decay, 1e-11).unwrap();
        let mut full = rho0.matrix().clone();
        for (h, t0, t1) in [(&h_on, 0.0, 3.0), (&h_off, 3.0, 23.0)] {
            full = crate::integrate::dopri5(|_, r| lindblad_rhs(r, h, &decay), t0, t1, &full, 1e-13).unwrap();
        }
        assert!(max_abs(&(blocks.matrix() - &full)) < 1e-9);
        for index in [0, 1, 4, 5] {
            let mut basis = Operator::zeros(FULL_DIM, FULL_DIM);
            basis[(index, index)] = C64::new(1.0, 0.0);
            let embedded = evolve_basis_state(index, &schedule, &decay, 1e-11).unwrap();
            let mut direct = basis;
            for (h, t0, t1) in [(&h_on, 0.0, 3.0), (&h_off, 3.0, 23.0)] {
                direct = crate::integrate::dopri5(|_, r| lindblad_rhs(r, h, &decay), t0, t1, &direct, 1e-13).unwrap();
            }
            assert!(max_abs(&(embedded.matrix() - &direct)) < 1e-9);
        }
    }
}
