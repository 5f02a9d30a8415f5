//! Adaptive time integrators.
//!
//! Pure-state propagation uses a sixth-order Magnus expansion with three
//! Gauss–Legendre nodes. Each step is the exact exponential of a Hermitian
//! effective Hamiltonian, so the propagator stays unitary to rounding.
//! The step size is controlled by step doubling.
//!
//! The Lindblad equation is integrated with the Dormand–Prince 5(4) pair.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{commutator, expm_hermitian};
use crate::Operator;

/// Default relative tolerance of the integrators.
pub const DEFAULT_TOL: f64 = 1e-10;

/// A smooth piece of a schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    /// The Hamiltonian does not change inside the segment.
    pub constant: bool,
}

/// A time-dependent Hamiltonian over a finite window.
pub trait Schedule: Sync {
    fn hamiltonian(&self, t: f64) -> Operator;

    /// Consecutive pieces covering the window; the Hamiltonian is smooth
    /// inside each one.
    fn segments(&self) -> Vec<Segment>;

    fn window(&self) -> (f64, f64) {
        let s = self.segments();
        (s.first().map_or(0.0, |x| x.start), s.last().map_or(0.0, |x| x.end))
    }
}

/// Constant Hamiltonians applied one after another, starting at `t = 0`.
#[derive(Debug, Clone)]
pub struct PiecewiseConstant {
    pieces: Vec<(f64, Operator)>,
}

impl PiecewiseConstant {
    pub fn new(pieces: Vec<(f64, Operator)>) -> Self {
        Self { pieces }
    }

    pub fn pieces(&self) -> &[(f64, Operator)] {
        &self.pieces
    }
}

impl Schedule for PiecewiseConstant {
    fn hamiltonian(&self, t: f64) -> Operator {
        let mut start = 0.0;
        for (dur, h) in &self.pieces {
            if t < start + dur {
                return h.clone();
            }
            start += dur;
        }
        self.pieces.last().expect("empty schedule").1.clone()
    }

    fn segments(&self) -> Vec<Segment> {
        let mut start = 0.0;
        self.pieces
            .iter()
            .map(|(dur, _)| {
                let seg = Segment { start, end: start + dur, constant: true };
                start += dur;
                seg
            })
            .collect()
    }
}

/// Result of a pure-state propagation.
#[derive(Debug, Clone)]
pub struct Propagation {
    /// State (or column block of states) at the end of the window.
    pub state: Operator,
    /// States at the requested sample times, in order.
    pub samples: Vec<Operator>,
    pub steps: usize,
}

/// Sixth-order Magnus exponent over `[t, t + h]` from three Gauss–Legendre
/// nodes, returned as a Hermitian `K` with step propagator `exp(−iK)`.
fn magnus_exponent(schedule: &dyn Schedule, t: f64, h: f64) -> Operator {
    let c = 15f64.sqrt() / 10.0;
    let minus_i = C64::new(0.0, -1.0);
    let a1 = schedule.hamiltonian(t + (0.5 - c) * h) * minus_i;
    let a2 = schedule.hamiltonian(t + 0.5 * h) * minus_i;
    let a3 = schedule.hamiltonian(t + (0.5 + c) * h) * minus_i;
    let re = |x: f64| C64::new(x, 0.0);
    let alpha1 = &a2 * re(h);
    let alpha2 = (&a3 - &a1) * re(15f64.sqrt() * h / 3.0);
    let alpha3 = (&a3 - &a2 * re(2.0) + &a1) * re(10.0 * h / 3.0);
    let c1 = commutator(&alpha1, &alpha2);
    let c2 = commutator(&alpha1, &(&alpha3 * re(2.0) + &c1)) * re(-1.0 / 60.0);
    let left = &alpha1 * re(-20.0) - &alpha3 + &c1;
    let omega = &alpha1 + &alpha3 * re(1.0 / 12.0) + commutator(&left, &(&alpha2 + &c2)) * re(1.0 / 240.0);
    omega * C64::new(0.0, 1.0)
}

fn magnus_step(schedule: &dyn Schedule, t: f64, h: f64) -> Operator {
    expm_hermitian(&magnus_exponent(schedule, t, h), 1.0)
}

fn max_entry(m: &Operator) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

/// Evolves `initial` (one state per column, or the identity for the full
/// propagator) through the schedule with `d/dt ψ = −i H(t) ψ`.
///
/// The per-step error budget is `tol · h / 4T` for window length `T`, so the
/// accumulated error stays below `tol`. `sample_times` must be sorted and lie
/// inside the window.
pub fn propagate(schedule: &dyn Schedule, initial: &Operator, tol: f64, sample_times: &[f64]) -> Result<Propagation> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let segments = schedule.segments();
    let (t0, t1) = schedule.window();
    let total = (t1 - t0).max(f64::MIN_POSITIVE);
    let mut state = initial.clone();
    let mut samples = Vec::with_capacity(sample_times.len());
    let mut next_sample = 0;
    let mut steps = 0;
    // samples before the window see the initial state
    while next_sample < sample_times.len() && sample_times[next_sample] <= t0 {
        samples.push(state.clone());
        next_sample += 1;
    }

    let mut h = total / 100.0;
    for seg in segments {
        let mut t = seg.start;
        while t < seg.end {
            let stop = match sample_times.get(next_sample) {
                Some(&ts) if ts < seg.end => ts,
                _ => seg.end,
            };
            if seg.constant {
                let hm = schedule.hamiltonian(0.5 * (t + stop));
                state = expm_hermitian(&hm, stop - t) * state;
                steps += 1;
                t = stop;
            } else {
                while t < stop {
                    let step = h.min(stop - t);
                    let full = magnus_step(schedule, t, step);
                    let half = 0.5 * step;
                    let two = magnus_step(schedule, t + half, half) * magnus_step(schedule, t, half);
                    let err = max_entry(&(&two - &full)) / 63.0;
                    let budget = (0.25 * tol * step / total).max(64.0 * f64::EPSILON);
                    if err <= budget {
                        state = two * state;
                        t += step;
                        steps += 1;
                    }
                    let factor = if err == 0.0 { 4.0 } else { (0.9 * (budget / err).powf(1.0 / 7.0)).clamp(0.2, 4.0) };
                    // keep the trial step when it was clipped by a stop point
                    h = if step < h && err <= budget { h.max(step * factor) } else { step * factor };
                    if h < 1e-12 * total {
                        return Err(Error::Integration { t, reason: "step size underflow".into() });
                    }
                }
            }
            if t >= stop && next_sample < sample_times.len() && sample_times[next_sample] <= t {
                while next_sample < sample_times.len() && sample_times[next_sample] <= t {
                    samples.push(state.clone());
                    next_sample += 1;
                }
            }
        }
    }
    while samples.len() < sample_times.len() {
        samples.push(state.clone());
    }
    Ok(Propagation { state, samples, steps })
}

/// Time-ordered propagator of the schedule over its whole window.
pub fn propagator(schedule: &dyn Schedule, tol: f64) -> Result<Operator> {
    let n = schedule.hamiltonian(schedule.window().0).nrows();
    Ok(propagate(schedule, &Operator::identity(n, n), tol, &[])?.state)
}

/// A schedule seen on the invariant subspace spanned by the basis vectors
/// `indices`.
pub struct Restricted<'a> {
    inner: &'a dyn Schedule,
    indices: Vec<usize>,
}

impl<'a> Restricted<'a> {
    pub fn new(inner: &'a dyn Schedule, indices: Vec<usize>) -> Self {
        Self { inner, indices }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }
}

impl Schedule for Restricted<'_> {
    fn hamiltonian(&self, t: f64) -> Operator {
        self.inner.hamiltonian(t).select_rows(&self.indices).select_columns(&self.indices)
    }

    fn segments(&self) -> Vec<Segment> {
        self.inner.segments()
    }
}

/// Propagator of a schedule whose Hamiltonian is block diagonal over
/// `blocks` (a partition of the basis). Each block is integrated separately.
pub fn block_propagator(schedule: &dyn Schedule, blocks: &[Vec<usize>], tol: f64) -> Result<Operator> {
    let n = schedule.hamiltonian(schedule.window().0).nrows();
    let mut u = Operator::zeros(n, n);
    for block in blocks {
        let sub = Restricted::new(schedule, block.clone());
        let m = block.len();
        let ub = propagate(&sub, &Operator::identity(m, m), tol, &[])?.state;
        for (a, &ia) in block.iter().enumerate() {
            for (b, &ib) in block.iter().enumerate() {
                u[(ia, ib)] = ub[(a, b)];
            }
        }
    }
    Ok(u)
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn lin(terms: &[(f64, &Operator)], base: &Operator, h: f64) -> Operator {
    let mut out = base.clone();
    for &(w, k) in terms {
        if w != 0.0 {
            out.zip_apply(k, |o, x| *o += x * (w * h));
        }
    }
    out
}

/// How [`dopri5_with`] accepts a step from its embedded error estimate.
/// Entries are scaled by `tol · (1 + |y|)` in both cases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ErrorControl {
    /// RMS of the scaled local error at most 1 on every step.
    Local,
    /// Frobenius norm of the scaled local error at most `h / horizon`, so the
    /// steps of a run lasting `horizon` add up to at most `tol`.
    Accumulated { horizon: f64 },
}

/// Dormand–Prince 5(4) integration of `dy/dt = f(t, y)` from `t0` to `t1`
/// with relative and absolute tolerance `tol` (RMS error norm).
pub fn dopri5<F>(f: F, t0: f64, t1: f64, y0: &Operator, tol: f64) -> Result<Operator>
where
    F: Fn(f64, &Operator) -> Operator,
{
    dopri5_with(f, t0, t1, y0, tol, ErrorControl::Local)
}

pub fn dopri5_with<F>(f: F, t0: f64, t1: f64, y0: &Operator, tol: f64, control: ErrorControl) -> Result<Operator>
where
    F: Fn(f64, &Operator) -> Operator,
{
    if let ErrorControl::Accumulated { horizon } = control {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!("error horizon must be positive, got {horizon}")));
        }
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let span = t1 - t0;
    if span <= 0.0 {
        return Ok(y0.clone());
    }
    let mut t = t0;
    let mut y = y0.clone();
    let mut k1 = f(t, &y);
    let scale0 = max_entry(&y).max(1e-12);
    let d1 = max_entry(&k1);
    let mut h = if d1 > 0.0 { (0.01 * scale0 / d1).min(span) } else { span.min(1.0) };
    let count = (y.nrows() * y.ncols()) as f64;
    loop {
        let step = h.min(t1 - t);
        let k2 = f(t + C2 * step, &lin(&[(A21, &k1)], &y, step));
        let k3 = f(t + C3 * step, &lin(&[(A31, &k1), (A32, &k2)], &y, step));
        let k4 = f(t + C4 * step, &lin(&[(A41, &k1), (A42, &k2), (A43, &k3)], &y, step));
        let k5 = f(t + C5 * step, &lin(&[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], &y, step));
        let k6 = f(t + step, &lin(&[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], &y, step));
        let y_new = lin(&[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)], &y, step);
        let k7 = f(t + step, &y_new);
        let err_vec = lin(
            &[(E1, &k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)],
            &DMatrix::zeros(y.nrows(), y.ncols()),
            step,
        );
        let mut sum = 0.0;
        for ((e, a), b) in err_vec.iter().zip(y.iter()).zip(y_new.iter()) {
            let sc = tol + tol * a.norm().max(b.norm());
            sum += (e.norm() / sc).powi(2);
        }
        let (err, order) = match control {
            ErrorControl::Local => ((sum / count).sqrt(), 5.0),
            ErrorControl::Accumulated { horizon } => (sum.sqrt() * horizon / step, 4.0),
        };
        if !err.is_finite() {
            return Err(Error::Integration { t, reason: "non-finite error estimate".into() });
        }
        if err <= 1.0 {
            t += step;
            y = y_new;
            k1 = k7;
            if t1 - t <= 1e-14 * span {
                return Ok(y);
            }
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-1.0 / order)).clamp(0.2, 5.0) };
        h = step * if err <= 1.0 { factor } else { factor.min(1.0) };
        if h < 1e-13 * span {
            return Err(Error::Integration { t, reason: "step size underflow".into() });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs, unitarity_defect};

    /// Two-level system driven by a Gaussian; `H = (Ω(t)/2) σx + (Δ/2) σz`.
    struct Driven2 {
        omega0: f64,
        tau: f64,
        delta: f64,
    }

    impl Schedule for Driven2 {
        fn hamiltonian(&self, t: f64) -> Operator {
            let om = self.omega0 * (-(t / self.tau).powi(2)).exp();
            DMatrix::from_row_slice(
                2,
                2,
                &[
                    C64::new(0.5 * self.delta, 0.0),
                    C64::new(0.5 * om, 0.0),
                    C64::new(0.5 * om, 0.0),
                    C64::new(-0.5 * self.delta, 0.0),
                ],
            )
        }
        fn segments(&self) -> Vec<Segment> {
            vec![Segment { start: -4.0 * self.tau, end: 4.0 * self.tau, constant: false }]
        }
    }

    #[test]
    fn magnus_agrees_with_dopri() {
        let s = Driven2 { omega0: 1.3, tau: 3.0, delta: 0.4 };
        let u = propagator(&s, 1e-11).unwrap();
        assert!(unitarity_defect(&u) < 1e-11);
        let rhs = |t: f64, y: &Operator| s.hamiltonian(t) * y * C64::new(0.0, -1.0);
        let v = dopri5(rhs, -12.0, 12.0, &Operator::identity(2, 2), 1e-12).unwrap();
        assert!(max_abs(&(u - v)) < 1e-9);
    }

    #[test]
    fn magnus_self_convergence() {
        let s = Driven2 { omega0: 1.3, tau: 3.0, delta: 0.4 };
        let a = propagator(&s, 1e-6).unwrap();
        let b = propagator(&s, 1e-8).unwrap();
        let c = propagator(&s, 1e-12).unwrap();
        assert!(max_abs(&(&a - &c)) < 1e-6);
        assert!(max_abs(&(&b - &c)) < 1e-8);
    }

    #[test]
    fn samples_are_recorded_in_order() {
        let s = Driven2 { omega0: 1.0, tau: 2.0, delta: 0.0 };
        let psi0 = DMatrix::from_column_slice(2, 1, &[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        let times = [-8.0, -1.0, 0.0, 2.5, 8.0];
        let p = propagate(&s, &psi0, 1e-10, &times).unwrap();
        assert_eq!(p.samples.len(), times.len());
        assert_eq!(p.samples[0], psi0);
        assert!(max_abs(&(&p.samples[4] - &p.state)) < 1e-15);
        // resonant pulse area from the window start: (√π/2) τ Ω0 erf(4);
        // populations follow sin² of half the area so far
        let area_to_zero = 0.5 * std::f64::consts::PI.sqrt() * 2.0 * 0.999_999_984_582_742_1;
        let pop = p.samples[2][(1, 0)].norm_sqr();
        assert!((pop - (0.5 * area_to_zero).sin().powi(2)).abs() < 1e-8, "{pop}");
    }

    #[test]
    fn dopri_exponential_decay() {
        let y0 = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        let y = dopri5(|_, y| y * C64::new(-0.3, 2.0), 0.0, 5.0, &y0, 1e-12).unwrap();
        let exact = (C64::new(-0.3, 2.0) * 5.0).exp();
        assert!((y[(0, 0)] - exact).norm() < 1e-10);
    }

    #[test]
    fn accumulated_control_bounds_the_final_error() {
        // 16 uncoupled oscillators over ~300 periods
        let rates: Vec<C64> = (0..16).map(|k| C64::new(0.0, -(1.0 + 0.1 * k as f64))).collect();
        let y0 = DMatrix::from_element(16, 1, C64::new(0.25, 0.0));
        let rhs = |_: f64, y: &Operator| DMatrix::from_fn(16, 1, |k, _| rates[k] * y[(k, 0)]);
        let tol = 1e-8;
        let y = dopri5_with(rhs, 0.0, 1000.0, &y0, tol, ErrorControl::Accumulated { horizon: 1000.0 }).unwrap();
        let err = (0..16).map(|k| (y[(k, 0)] - 0.25 * (rates[k] * 1000.0).exp()).norm_sqr()).sum::<f64>().sqrt();
        assert!(err < tol, "{err}");
    }

    #[test]
    fn piecewise_constant_is_exact() {
        let h1 = DMatrix::from_row_slice(
            2,
            2,
            &[C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        );
        let h2 = DMatrix::from_row_slice(
            2,
            2,
            &[C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(-1.0, 0.0)],
        );
        let s = PiecewiseConstant::new(vec![(0.7, h1.clone()), (1.1, h2.clone())]);
        let u = propagator(&s, 1e-10).unwrap();
        let expected = expm_hermitian(&h2, 1.1) * expm_hermitian(&h1, 0.7);
        assert!(max_abs(&(u - expected)) < 1e-14);
    }

    #[test]
    fn block_propagation_matches_full() {
        // two uncoupled 2x2 blocks interleaved in a 4x4 Hamiltonian
        struct Interleaved(Driven2);
        impl Schedule for Interleaved {
            fn hamiltonian(&self, t: f64) -> Operator {
                let h = self.0.hamiltonian(t);
                let mut m = Operator::zeros(4, 4);
                for (a, &ia) in [0usize, 2].iter().enumerate() {
                    for (b, &ib) in [0usize, 2].iter().enumerate() {
                        m[(ia, ib)] = h[(a, b)];
                        m[(ia + 1, ib + 1)] = h[(a, b)] * C64::new(2.0, 0.0);
                    }
                }
                m
            }
            fn segments(&self) -> Vec<Segment> {
                self.0.segments()
            }
        }
        let s = Interleaved(Driven2 { omega0: 1.3, tau: 3.0, delta: 0.4 });
        let full = propagator(&s, 1e-12).unwrap();
        let blocks = block_propagator(&s, &[vec![0, 2], vec![1, 3]], 1e-12).unwrap();
        assert!(max_abs(&(full - blocks)) < 1e-10);
    }
}
