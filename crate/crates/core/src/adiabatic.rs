//! Adiabatic gate driven by a slow laser pulse.
//!
//! The Rabi frequency follows a [`PulseProfile`] while the detuning is held
//! constant. If the pulse is slow the logical states follow their dressed
//! eigenstates and return to the computational basis at the end, having
//! picked up phases (and, for degenerate qubits, some population transfer).

use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{sector_of, spin_sectors, BasisIndex, FULL_DIM};
use crate::entangling::entangling_power_projected;
use crate::error::{Error, Result};
use crate::gate::LogicalGate;
use crate::hamiltonian::SplitHamiltonian;
use crate::integrate::{block_propagator, propagate, Restricted, Schedule, Segment};
use crate::linalg::{eigh, wrap_phase};
use crate::params::SystemParams;
use crate::pulse::{PulseProfile, PulseShape};
use crate::Operator;

/// Leakage above which a gate (and its entangling power) is ill-defined.
pub const LEAKAGE_THRESHOLD: f64 = 1e-3;
/// Off-diagonal norm above which a phase report is flagged non-diagonal.
pub const OFFDIAG_THRESHOLD: f64 = 0.1;

/// `H(t) = H(Ω(t))` with the pulse detuning in place of `params.delta`.
#[derive(Debug, Clone)]
pub struct PulseSchedule {
    split: SplitHamiltonian,
    pulse: PulseProfile,
}

impl PulseSchedule {
    pub fn new(p: &SystemParams, pulse: &PulseProfile) -> Result<Self> {
        p.validate()?;
        pulse.validate()?;
        Ok(Self { split: SplitHamiltonian::new(&p.with_delta(pulse.delta)), pulse: *pulse })
    }

    pub fn pulse(&self) -> &PulseProfile {
        &self.pulse
    }
}

impl Schedule for PulseSchedule {
    fn hamiltonian(&self, t: f64) -> Operator {
        self.split.at(self.pulse.omega(t))
    }

    fn segments(&self) -> Vec<Segment> {
        let (start, end) = self.pulse.window;
        vec![Segment { start, end, constant: self.pulse.shape == PulseShape::Rectangular }]
    }
}

/// Time-ordered propagator over the pulse window (16×16).
pub fn propagate_pulse(p: &SystemParams, pulse: &PulseProfile, tol: f64) -> Result<Operator> {
    block_propagator(&PulseSchedule::new(p, pulse)?, &spin_sectors(), tol)
}

/// Logical block of a full propagator, with the control spin down and the
/// orbital in `|g⟩`.
pub fn extract_logical_gate(u: &Operator) -> LogicalGate {
    LogicalGate::extract(u)
}

pub fn adiabatic_gate(p: &SystemParams, pulse: &PulseProfile, tol: f64) -> Result<LogicalGate> {
    Ok(extract_logical_gate(&propagate_pulse(p, pulse, tol)?))
}

/// Diagonal phases of a gate and its conditional phase
/// `φ = φ00 − φ01 − φ10 + φ11`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CphaseReport {
    /// Conditional phase in `(−π, π]`.
    pub phi: f64,
    pub offdiag_norm: f64,
    pub phases: [f64; 4],
    /// Off-diagonal norm is at most [`OFFDIAG_THRESHOLD`].
    pub diagonal: bool,
}

pub fn cphase_report(gate: &LogicalGate) -> Result<CphaseReport> {
    if gate.leakage > LEAKAGE_THRESHOLD {
        return Err(Error::LeakyGate { leakage: gate.leakage });
    }
    let phases = gate.diagonal_phases();
    let phi = wrap_phase(phases[0] - phases[1] - phases[2] + phases[3]);
    let offdiag_norm = gate.offdiag_norm();
    Ok(CphaseReport { phi, offdiag_norm, phases, diagonal: offdiag_norm <= OFFDIAG_THRESHOLD })
}

/// Result of a pulse-width search for `φ = π`.
#[derive(Debug, Clone, PartialEq)]
pub struct CphaseTau {
    pub tau: f64,
    pub report: CphaseReport,
    pub gate: LogicalGate,
    /// `(τ, unwrapped φ)` over the coarse scan; invalid points are skipped.
    pub trace: Vec<(f64, f64)>,
}

fn phase_at(p: &SystemParams, template: &PulseProfile, tau: f64, tol: f64) -> Result<(LogicalGate, CphaseReport)> {
    let gate = adiabatic_gate(p, &template.with_tau(tau), tol)?;
    let report = cphase_report(&gate)?;
    Ok((gate, report))
}

/// Scans `steps` pulse widths over `range`, unwraps `φ(τ)` along the scan and
/// bisects the first bracket in which it crosses an odd multiple of π.
/// The search stops once `φ` is within `phase_tol` of π.
pub fn find_cphase_tau(
    p: &SystemParams,
    template: &PulseProfile,
    range: (f64, f64),
    steps: usize,
    tol: f64,
    phase_tol: f64,
) -> Result<CphaseTau> {
    let (lo, hi) = range;
    if !(lo > 0.0 && hi > lo && steps >= 2) {
        return Err(Error::InvalidParameter(format!("bad tau scan [{lo}, {hi}] with {steps} points")));
    }
    let taus: Vec<f64> = (0..steps).map(|k| lo + (hi - lo) * k as f64 / (steps - 1) as f64).collect();
    let scan: Vec<Option<CphaseReport>> =
        taus.par_iter().map(|&tau| phase_at(p, template, tau, tol).ok().map(|(_, r)| r)).collect();

    let mut trace: Vec<(f64, f64)> = Vec::new();
    for (&tau, report) in taus.iter().zip(&scan) {
        if let Some(r) = report {
            let unwrapped = match trace.last() {
                Some(&(_, prev)) => prev + wrap_phase(r.phi - prev),
                None => r.phi,
            };
            trace.push((tau, unwrapped));
        }
    }

    // odd multiples of π sit at integer values of (φ − π) / 2π
    let level = |phi: f64| ((phi - PI) / TAU).floor();
    for pair in trace.windows(2) {
        let ((mut ta, mut pa), (tb, pb)) = (pair[0], pair[1]);
        if level(pa) == level(pb) {
            continue;
        }
        let target = PI + TAU * level(pa).max(level(pb));
        let mut tb = tb;
        let mut best: Option<(f64, LogicalGate, CphaseReport, f64)> = None;
        for _ in 0..60 {
            let tm = 0.5 * (ta + tb);
            let (gate, report) = phase_at(p, template, tm, tol)?;
            let pm = pa + wrap_phase(report.phi - pa);
            let miss = wrap_phase(pm - target).abs();
            if best.as_ref().is_none_or(|b| miss < b.3) {
                best = Some((tm, gate, report, miss));
            }
            if miss < phase_tol || tb - ta < 1e-9 * tm {
                break;
            }
            if (pm - target).signum() == (pa - target).signum() {
                ta = tm;
                pa = pm;
            } else {
                tb = tm;
            }
        }
        let (tau, gate, report, _) = best.expect("bisection ran at least once");
        return Ok(CphaseTau { tau, report, gate, trace });
    }
    Err(Error::NoCrossing { min: lo, max: hi, trace })
}

/// A pair of eigencurves whose continuation could not be told apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ambiguity {
    pub index: usize,
    pub curves: (usize, usize),
}

/// Instantaneous eigenvalues followed continuously along a detuning grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenCurves {
    pub omega: f64,
    pub detunings: Vec<f64>,
    /// Bare state each curve tends to at the largest `|Δ|/Ω` of the grid.
    pub labels: Vec<BasisIndex>,
    /// `energies[curve][k]` at `detunings[k]`.
    pub energies: Vec<Vec<f64>>,
    pub ambiguous: Vec<Ambiguity>,
}

fn clusters(values: &[f64]) -> Vec<std::ops::Range<usize>> {
    let scale = 1.0 + values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut out = Vec::new();
    let mut start = 0;
    for k in 1..=values.len() {
        if k == values.len() || values[k] - values[k - 1] > 1e-9 * scale {
            out.push(start..k);
            start = k;
        }
    }
    out
}

/// Orthonormal vectors in the span of `basis` closest to `targets`
/// (orthogonal Procrustes).
fn align(basis: &Operator, targets: &Operator) -> Operator {
    let m = basis.adjoint() * targets;
    let svd = m.svd(true, true);
    let (u, v_t) = (svd.u.expect("requested u"), svd.v_t.expect("requested v_t"));
    basis * u * v_t
}

struct Tracker {
    vectors: Operator,
}

struct TrackStep {
    energies: Vec<f64>,
    ambiguous: Vec<(usize, usize)>,
}

impl Tracker {
    /// Eigenvectors of `h0`, with degenerate clusters aligned to the bare basis.
    fn start(h0: &Operator) -> (Self, Vec<f64>) {
        let n = h0.nrows();
        let (vals, vecs) = eigh(h0);
        let mut tracked = Operator::zeros(n, n);
        let mut taken = vec![false; n];
        for range in clusters(&vals) {
            let block = vecs.columns(range.start, range.len()).into_owned();
            // bare states with the largest weight in this cluster
            let mut weights: Vec<(usize, f64)> =
                (0..n).filter(|&i| !taken[i]).map(|i| (i, block.row(i).norm_squared())).collect();
            weights.sort_by(|a, b| b.1.total_cmp(&a.1));
            let chosen: Vec<usize> = weights.iter().take(range.len()).map(|w| w.0).collect();
            let targets =
                DMatrix::from_fn(
                    n,
                    chosen.len(),
                    |r, c| {
                        if r == chosen[c] {
                            C64::new(1.0, 0.0)
                        } else {
                            C64::new(0.0, 0.0)
                        }
                    },
                );
            let aligned = align(&block, &targets);
            for (c, &i) in chosen.iter().enumerate() {
                taken[i] = true;
                tracked.set_column(i, &aligned.column(c));
            }
        }
        let energies = Self::energies(h0, &tracked, &vals);
        (Self { vectors: tracked }, energies)
    }

    /// Exact eigenvalues handed out to the curves in the order of their
    /// Rayleigh quotients.
    fn energies(h: &Operator, vectors: &Operator, values: &[f64]) -> Vec<f64> {
        let quotients: Vec<f64> = (0..vectors.ncols())
            .map(|c| {
                let v = vectors.column(c);
                (v.adjoint() * h * v)[(0, 0)].re
            })
            .collect();
        let mut order: Vec<usize> = (0..quotients.len()).collect();
        order.sort_by(|&a, &b| quotients[a].total_cmp(&quotients[b]));
        let mut out = vec![0.0; quotients.len()];
        for (rank, &c) in order.iter().enumerate() {
            out[c] = values[rank];
        }
        out
    }

    /// Moves to `h` by maximum-overlap matching of the tracked vectors.
    fn step(&mut self, h: &Operator) -> TrackStep {
        let n = h.nrows();
        let (vals, vecs) = eigh(h);
        let groups = clusters(&vals);
        let blocks: Vec<Operator> = groups.iter().map(|r| vecs.columns(r.start, r.len()).into_owned()).collect();
        // weight[curve][cluster]
        let weights: Vec<Vec<f64>> = (0..n)
            .map(|c| {
                let prev = self.vectors.column(c);
                blocks.iter().map(|b| (b.adjoint() * prev).norm_squared()).collect()
            })
            .collect();
        let mut pairs: Vec<(usize, usize, f64)> =
            (0..n).flat_map(|c| (0..blocks.len()).map(move |g| (c, g))).map(|(c, g)| (c, g, weights[c][g])).collect();
        pairs.sort_by(|a, b| b.2.total_cmp(&a.2));
        let mut capacity: Vec<usize> = groups.iter().map(|r| r.len()).collect();
        let mut assigned: Vec<Option<usize>> = vec![None; n];
        for (c, g, _) in pairs {
            if assigned[c].is_none() && capacity[g] > 0 {
                assigned[c] = Some(g);
                capacity[g] -= 1;
            }
        }
        let mut next = Operator::zeros(n, n);
        for (g, block) in blocks.iter().enumerate() {
            let members: Vec<usize> = (0..n).filter(|&c| assigned[c] == Some(g)).collect();
            let targets = DMatrix::from_fn(n, members.len(), |r, k| self.vectors[(r, members[k])]);
            let aligned = align(block, &targets);
            for (k, &c) in members.iter().enumerate() {
                next.set_column(c, &aligned.column(k));
            }
        }
        let mut ambiguous = Vec::new();
        for c in 0..n {
            let g = assigned[c].expect("every curve is assigned");
            let best = weights[c][g];
            let rival = (0..blocks.len()).filter(|&o| o != g).max_by(|&a, &b| weights[c][a].total_cmp(&weights[c][b]));
            if let Some(o) = rival {
                if weights[c][o] > 0.5 * best {
                    if let Some(other) = (0..n).find(|&d| d != c && assigned[d] == Some(o)) {
                        ambiguous.push((c.min(other), c.max(other)));
                    }
                }
            }
        }
        ambiguous.sort_unstable();
        ambiguous.dedup();
        self.vectors = next;
        TrackStep { energies: Self::energies(h, &self.vectors, &vals), ambiguous }
    }
}

/// Eigenvalues of `build_full(p, Ω)` over a grid of detunings, sorted into
/// continuous curves by maximum eigenvector overlap between neighbours. The
/// continuation starts at the grid point with the largest `|Δ|`, where each
/// curve is labelled by its dominant bare state.
pub fn eigenspectrum(p: &SystemParams, omega: f64, detunings: &[f64]) -> Result<EigenCurves> {
    p.validate()?;
    if detunings.is_empty() {
        return Err(Error::InvalidParameter("empty detuning grid".into()));
    }
    let h_at = |delta: f64| SplitHamiltonian::new(&p.with_delta(delta)).at(omega);
    let reference = (0..detunings.len()).max_by(|&a, &b| detunings[a].abs().total_cmp(&detunings[b].abs())).unwrap();
    let n = FULL_DIM;
    let mut energies = vec![vec![0.0; detunings.len()]; n];
    let mut ambiguous = Vec::new();

    let (tracker, start) = Tracker::start(&h_at(detunings[reference]));
    for c in 0..n {
        energies[c][reference] = start[c];
    }
    let labels = (0..n).map(|i| BasisIndex::from_flat(i).expect("index in range")).collect();
    let start_vectors = tracker.vectors.clone();
    let forward: Vec<usize> = (reference + 1..detunings.len()).collect();
    let backward: Vec<usize> = (0..reference).rev().collect();
    for path in [forward, backward] {
        let mut tracker = Tracker { vectors: start_vectors.clone() };
        for k in path {
            let step = tracker.step(&h_at(detunings[k]));
            for (curve, &e) in energies.iter_mut().zip(&step.energies) {
                curve[k] = e;
            }
            ambiguous.extend(step.ambiguous.into_iter().map(|curves| Ambiguity { index: k, curves }));
        }
    }
    ambiguous.sort_by_key(|a| (a.index, a.curves));
    Ok(EigenCurves { omega, detunings: detunings.to_vec(), labels, energies, ambiguous })
}

/// Energies of the dressed states that connect to the bare states `states`
/// as the Rabi frequency is raised from zero to `omega` at detuning `delta`.
pub fn dressed_energies(p: &SystemParams, delta: f64, omega: f64, states: &[BasisIndex], steps: usize) -> Vec<f64> {
    let split = SplitHamiltonian::new(&p.with_delta(delta));
    let (mut tracker, mut energies) = Tracker::start(&split.at(0.0));
    for k in 1..=steps.max(1) {
        let w = omega * k as f64 / steps.max(1) as f64;
        energies = tracker.step(&split.at(w)).energies;
    }
    states.iter().map(|s| energies[s.flat()]).collect()
}

/// Ground-state populations of `|100⟩` and `|001⟩` during a pulse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterferenceTrace {
    pub times: Vec<f64>,
    pub pop_100: Vec<f64>,
    pub pop_001: Vec<f64>,
    /// Population outside the two states.
    pub elsewhere: Vec<f64>,
}

pub fn interference_bare_states() -> (BasisIndex, BasisIndex) {
    (BasisIndex::ground(true, false, false), BasisIndex::ground(false, false, true))
}

/// Evolves `α|100⟩|g⟩ + β|001⟩|g⟩` through the pulse and samples the two
/// populations at `samples` evenly spaced times covering the window.
pub fn interference_trace(
    p: &SystemParams,
    pulse: &PulseProfile,
    amplitudes: (C64, C64),
    samples: usize,
    tol: f64,
) -> Result<InterferenceTrace> {
    let (alpha, beta) = amplitudes;
    let norm = alpha.norm_sqr() + beta.norm_sqr();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!("|alpha|^2 + |beta|^2 = {norm}, expected 1")));
    }
    let samples = samples.max(2);
    let schedule = PulseSchedule::new(p, pulse)?;
    let (a, b) = pulse.window;
    let times: Vec<f64> = (0..samples).map(|k| a + (b - a) * k as f64 / (samples - 1) as f64).collect();
    let (s100, s001) = interference_bare_states();
    let sector = Restricted::new(&schedule, sector_of(s100.flat()));
    let position = |flat: usize| sector.indices().iter().position(|&i| i == flat).expect("state in sector");
    let (i100, i001) = (position(s100.flat()), position(s001.flat()));
    let mut initial = Operator::zeros(sector.indices().len(), 1);
    initial[(i100, 0)] = alpha;
    initial[(i001, 0)] = beta;
    let run = propagate(&sector, &initial, tol, &times)?;
    let mut trace = InterferenceTrace { times, pop_100: Vec::new(), pop_001: Vec::new(), elsewhere: Vec::new() };
    for state in &run.samples {
        let p100 = state[(i100, 0)].norm_sqr();
        let p001 = state[(i001, 0)].norm_sqr();
        let total: f64 = state.iter().map(|z| z.norm_sqr()).sum();
        trace.pop_100.push(p100);
        trace.pop_001.push(p001);
        trace.elsewhere.push(total - p100 - p001);
    }
    Ok(trace)
}

/// Oscillation period of `values(times)` near `center`, from the spacing of
/// the local maxima and minima closest to it. `None` if fewer than two
/// extrema of a kind are found.
pub fn local_period(times: &[f64], values: &[f64], center: f64) -> Option<f64> {
    let mut maxima = Vec::new();
    let mut minima = Vec::new();
    for k in 1..values.len().saturating_sub(1) {
        let (l, m, r) = (values[k - 1], values[k], values[k + 1]);
        // parabolic refinement of the extremum position
        let curvature = l - 2.0 * m + r;
        if curvature == 0.0 {
            continue;
        }
        let dt = times[k + 1] - times[k];
        let t = times[k] + 0.5 * dt * (l - r) / curvature;
        if m > l && m >= r {
            maxima.push(t);
        } else if m < l && m <= r {
            minima.push(t);
        }
    }
    let spacing = |ext: &[f64]| -> Option<f64> {
        ext.windows(2)
            .min_by(|a, b| (0.5 * (a[0] + a[1]) - center).abs().total_cmp(&(0.5 * (b[0] + b[1]) - center).abs()))
            .map(|w| w[1] - w[0])
    };
    match (spacing(&maxima), spacing(&minima)) {
        (Some(a), Some(b)) => Some(0.5 * (a + b)),
        (a, b) => a.or(b),
    }
}

/// Picks the detuning for a pulse of fixed `Ω0` and `τ` that maximizes the
/// entangling power. Among grid points whose projected `e(U)` is within
/// `slack` of the best one, the largest detuning (the most adiabatic choice)
/// wins. Returns `(Δ, e(U))`.
pub fn max_entangling_detuning(
    p: &SystemParams,
    template: &PulseProfile,
    detunings: &[f64],
    tol: f64,
    slack: f64,
) -> Result<(f64, f64)> {
    let values: Vec<Option<f64>> = detunings
        .par_iter()
        .map(|&delta| {
            let gate = adiabatic_gate(p, &template.with_delta(delta), tol).ok()?;
            entangling_power_projected(&gate).ok()
        })
        .collect();
    let best = values.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
    if !best.is_finite() {
        return Err(Error::InvalidParameter("no detuning in the grid gives a valid gate".into()));
    }
    detunings
        .iter()
        .zip(&values)
        .filter_map(|(&d, e)| e.filter(|&e| e >= best - slack).map(|e| (d, e)))
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .ok_or_else(|| Error::InvalidParameter("empty detuning grid".into()))
}
