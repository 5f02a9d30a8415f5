//! One function per simulation mode. Each evaluates its grid in parallel and
//! returns tables ordered by grid index.

use std::panic::{catch_unwind, AssertUnwindSafe};

use medgate::adiabatic::{adiabatic_gate, dressed_energies, interference_bare_states, local_period};
use medgate::linalg::wrap_phase;
use medgate::open_system::decoherence_study;
use medgate::{
    dynamic_unitary, eigenspectrum, entangling_power_closed, entangling_power_mc, find_cphase_tau, interference_trace,
    max_entangling_detuning, revival_time, simulate_pulsed_gate, GateSpec, LogicalGate, PulseProfile, SystemParams,
};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::config::{Estimator, Mode, RunConfig};
use crate::output::{Cell, Table};

/// Tables plus bookkeeping of failed grid points.
#[derive(Debug, Clone, Default)]
pub struct ModeOutput {
    pub tables: Vec<Table>,
    pub points: usize,
    pub failed: usize,
    /// `point <index>: <error>` for the first failures, in grid order.
    pub notes: Vec<String>,
}

const MAX_NOTES: usize = 20;

impl ModeOutput {
    fn record<T>(&mut self, index: usize, outcome: &Result<T, String>) {
        self.points += 1;
        if let Err(e) = outcome {
            self.failed += 1;
            if self.notes.len() < MAX_NOTES {
                self.notes.push(format!("point {index}: {e}"));
            }
        }
    }
}

/// Runs `f`, turning library errors and panics into a message.
fn guarded<T>(f: impl FnOnce() -> medgate::Result<T>) -> Result<T, String> {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(v)) => Ok(v),
        Ok(Err(e)) => Err(e.to_string()),
        Err(payload) => Err(match payload.downcast_ref::<&str>() {
            Some(s) => format!("panic: {s}"),
            None => match payload.downcast_ref::<String>() {
                Some(s) => format!("panic: {s}"),
                None => "panic".into(),
            },
        }),
    }
}

pub fn run_mode(cfg: &RunConfig) -> ModeOutput {
    match cfg.mode {
        Mode::DynamicMap => dynamic_map(cfg),
        Mode::AdiabaticMap => adiabatic_map(cfg),
        Mode::Spectrum => spectrum(cfg),
        Mode::CphaseScan => cphase_scan(cfg),
        Mode::Decoherence => decoherence(cfg),
        Mode::Interference => interference(cfg),
    }
}

/// Per-point Monte Carlo seed.
pub fn point_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index as u64 + 1))
}

/// System parameters at ratio `r` and couplings `(j1, j2)` (absolute, ps⁻¹).
pub fn params_at(cfg: &RunConfig, r: f64, j1: f64, j2: f64) -> SystemParams {
    let (e_q, e_qp) = match cfg.e_q {
        Some(e_q) => (e_q, cfg.e_qp.unwrap_or(e_q)),
        None => {
            let e_q = 0.5 * (r + 1.0) * cfg.e_c;
            (e_q, cfg.e_qp.unwrap_or(e_q))
        }
    };
    SystemParams::new(e_q, cfg.e_c, e_qp, j1, j2, cfg.alpha, 0.0)
}

fn ratio_of(cfg: &RunConfig, r: f64) -> f64 {
    cfg.e_q.map_or(r, |e_q| 2.0 * e_q / cfg.e_c - 1.0)
}

fn ratios(cfg: &RunConfig) -> Vec<f64> {
    if cfg.e_q.is_some() {
        vec![ratio_of(cfg, 0.0)]
    } else {
        cfg.r.clone()
    }
}

fn absolute(cfg: &RunConfig, j: f64) -> f64 {
    if cfg.reduced_couplings {
        0.5 * j * cfg.e_c
    } else {
        j
    }
}

pub fn pulse_of(cfg: &RunConfig, delta: f64, tau: f64) -> PulseProfile {
    if cfg.rectangular {
        PulseProfile::rectangular(cfg.omega0, tau, delta)
    } else {
        PulseProfile::gaussian(cfg.omega0, tau, delta)
    }
}

fn coupling_grid(cfg: &RunConfig) -> Vec<(f64, f64, f64)> {
    let (j1s, j2s) = (cfg.j1.points(), cfg.j2.points());
    let mut grid = Vec::new();
    for r in ratios(cfg) {
        for &a in &j1s {
            for &b in &j2s {
                grid.push((r, a, b));
            }
        }
    }
    grid
}

fn entangling_power(cfg: &RunConfig, gate: &LogicalGate, index: usize) -> medgate::Result<(f64, f64)> {
    match cfg.estimator {
        Estimator::Closed => Ok((entangling_power_closed(gate)?, 0.0)),
        Estimator::Mc => {
            let est = entangling_power_mc(gate, cfg.samples, point_seed(cfg.seed, index))?;
            Ok((est.value, est.stderr))
        }
    }
}

/// Entangling power of the nearest unitary of a gate, `NaN` if it leaks more
/// than the configured threshold.
fn projected_power(cfg: &RunConfig, gate: &LogicalGate, index: usize) -> medgate::Result<(f64, f64)> {
    if gate.leakage > cfg.leakage_threshold {
        return Ok((f64::NAN, f64::NAN));
    }
    entangling_power(cfg, &LogicalGate::from_matrix(gate.nearest_unitary().matrix), index)
}

fn conditional_phase(gate: &LogicalGate) -> f64 {
    let ph = gate.diagonal_phases();
    wrap_phase(ph[0] - ph[1] - ph[2] + ph[3])
}

fn dynamic_map(cfg: &RunConfig) -> ModeOutput {
    let grid = coupling_grid(cfg);
    let results: Vec<_> = grid
        .par_iter()
        .enumerate()
        .map(|(index, &(r, a, b))| {
            guarded(|| {
                let p = params_at(cfg, r, absolute(cfg, a), absolute(cfg, b));
                let t_rev = revival_time(&p, cfg.n)?;
                let gate = dynamic_unitary(&p, cfg.n)?;
                let (e, stderr) = entangling_power(cfg, &gate, index)?;
                Ok((t_rev, e, stderr, gate.leakage))
            })
        })
        .collect();
    let mut out = ModeOutput::default();
    let mut table = Table::new(
        cfg.mode.name(),
        vec![
            "index",
            "r",
            "j1",
            "j2",
            "j1_reduced",
            "j2_reduced",
            "n",
            "t_rev",
            "e_u",
            "e_u_stderr",
            "leakage",
            "valid",
        ],
    );
    for (index, (&(r, a, b), res)) in grid.iter().zip(&results).enumerate() {
        out.record(index, res);
        let (j1, j2) = (absolute(cfg, a), absolute(cfg, b));
        let scale = 2.0 / cfg.e_c;
        let mut row: Vec<Cell> =
            vec![index.into(), r.into(), j1.into(), j2.into(), (j1 * scale).into(), (j2 * scale).into()];
        row.push(cfg.n.into());
        match res {
            Ok((t, e, s, l)) => row.extend([(*t).into(), (*e).into(), (*s).into(), (*l).into(), true.into()]),
            Err(_) => row.extend([f64::NAN.into(), f64::NAN.into(), f64::NAN.into(), f64::NAN.into(), false.into()]),
        }
        table.push(row);
    }
    out.tables.push(table);
    out
}

fn adiabatic_map(cfg: &RunConfig) -> ModeOutput {
    let grid = coupling_grid(cfg);
    let pulse = pulse_of(cfg, cfg.delta, cfg.tau);
    let results: Vec<_> = grid
        .par_iter()
        .enumerate()
        .map(|(index, &(r, a, b))| {
            guarded(|| {
                let p = params_at(cfg, r, absolute(cfg, a), absolute(cfg, b));
                let gate = adiabatic_gate(&p, &pulse, cfg.tol)?;
                let (e, stderr) = projected_power(cfg, &gate, index)?;
                Ok((gate.leakage, gate.offdiag_norm(), conditional_phase(&gate), e, stderr))
            })
        })
        .collect();
    let mut out = ModeOutput::default();
    let mut table = Table::new(
        cfg.mode.name(),
        vec!["index", "r", "j1", "j2", "e_u", "e_u_stderr", "leakage", "offdiag", "phi", "valid"],
    );
    for (index, (&(r, a, b), res)) in grid.iter().zip(&results).enumerate() {
        out.record(index, res);
        let mut row: Vec<Cell> = vec![index.into(), r.into(), absolute(cfg, a).into(), absolute(cfg, b).into()];
        match res {
            Ok((leak, off, phi, e, s)) => {
                let valid = *leak <= cfg.leakage_threshold && e.is_finite();
                row.extend([(*e).into(), (*s).into(), (*leak).into(), (*off).into(), (*phi).into(), valid.into()]);
            }
            Err(_) => row.extend([
                f64::NAN.into(),
                f64::NAN.into(),
                f64::NAN.into(),
                f64::NAN.into(),
                f64::NAN.into(),
                false.into(),
            ]),
        }
        table.push(row);
    }
    out.tables.push(table);
    out
}

fn single_params(cfg: &RunConfig, j1: f64, j2: f64) -> SystemParams {
    params_at(cfg, cfg.r[0], j1, j2)
}

fn fixed_couplings(cfg: &RunConfig) -> (f64, f64) {
    (absolute(cfg, cfg.j1.min), absolute(cfg, cfg.j2.min))
}

fn spectrum(cfg: &RunConfig) -> ModeOutput {
    let (j1, j2) = fixed_couplings(cfg);
    let p = single_params(cfg, j1, j2);
    let detunings = cfg.detunings.points();
    let result = guarded(|| eigenspectrum(&p, cfg.omega0, &detunings));
    let mut out = ModeOutput::default();
    let mut table =
        Table::new(cfg.mode.name(), vec!["index", "delta", "curve", "label", "energy", "ambiguous", "valid"]);
    match &result {
        Ok(curves) => {
            for (k, &delta) in detunings.iter().enumerate() {
                out.record::<()>(k, &Ok(()));
                for c in 0..curves.energies.len() {
                    let ambiguous =
                        curves.ambiguous.iter().any(|a| a.index == k && (a.curves.0 == c || a.curves.1 == c));
                    table.push(vec![
                        k.into(),
                        delta.into(),
                        c.into(),
                        curves.labels[c].to_string().into(),
                        curves.energies[c][k].into(),
                        ambiguous.into(),
                        true.into(),
                    ]);
                }
            }
        }
        Err(e) => {
            for (k, &delta) in detunings.iter().enumerate() {
                out.record::<()>(k, &Err(e.clone()));
                table.push(vec![
                    k.into(),
                    delta.into(),
                    Cell::Text(String::new()),
                    "".into(),
                    f64::NAN.into(),
                    false.into(),
                    false.into(),
                ]);
            }
        }
    }
    out.tables.push(table);
    out
}

fn cphase_scan(cfg: &RunConfig) -> ModeOutput {
    let (j1, j2) = fixed_couplings(cfg);
    let p = single_params(cfg, j1, j2);
    let taus = cfg.taus.points();
    let results: Vec<_> = taus
        .par_iter()
        .enumerate()
        .map(|(index, &tau)| {
            guarded(|| {
                let gate = adiabatic_gate(&p, &pulse_of(cfg, cfg.delta, tau), cfg.tol)?;
                let (e, _) = projected_power(cfg, &gate, index)?;
                Ok((conditional_phase(&gate), gate.offdiag_norm(), gate.leakage, e))
            })
        })
        .collect();
    let mut out = ModeOutput::default();
    let mut table =
        Table::new(cfg.mode.name(), vec!["index", "tau", "phi", "phi_unwrapped", "offdiag", "leakage", "e_u", "valid"]);
    let mut previous: Option<f64> = None;
    for (index, (&tau, res)) in taus.iter().zip(&results).enumerate() {
        out.record(index, res);
        let mut row: Vec<Cell> = vec![index.into(), tau.into()];
        match res {
            Ok((phi, off, leak, e)) => {
                let valid = *leak <= cfg.leakage_threshold;
                let unwrapped = match (valid, previous) {
                    (false, _) => f64::NAN,
                    (true, Some(prev)) => prev + wrap_phase(phi - prev),
                    (true, None) => *phi,
                };
                if valid {
                    previous = Some(unwrapped);
                }
                row.extend([(*phi).into(), unwrapped.into(), (*off).into(), (*leak).into(), (*e).into(), valid.into()]);
            }
            Err(_) => row.extend([
                f64::NAN.into(),
                f64::NAN.into(),
                f64::NAN.into(),
                f64::NAN.into(),
                f64::NAN.into(),
                false.into(),
            ]),
        }
        table.push(row);
    }
    out.tables.push(table);

    let template = pulse_of(cfg, cfg.delta, cfg.tau);
    let found = guarded(|| {
        let hit = find_cphase_tau(&p, &template, (cfg.taus.min, cfg.taus.max), cfg.taus.count, cfg.tol, cfg.phase_tol)?;
        let e = medgate::entangling_power_projected(&hit.gate)?;
        Ok((hit.tau, hit.report.phi, hit.report.offdiag_norm, hit.gate.leakage, e))
    });
    let mut result = Table::new(
        format!("{}-result", cfg.mode.name()),
        vec!["tau", "phi", "phi_error", "offdiag", "leakage", "e_u", "found", "message"],
    );
    match found {
        Ok((tau, phi, off, leak, e)) => {
            let miss = (phi.abs() - std::f64::consts::PI).abs();
            result.push(vec![
                tau.into(),
                phi.into(),
                miss.into(),
                off.into(),
                leak.into(),
                e.into(),
                true.into(),
                "".into(),
            ]);
        }
        Err(msg) => {
            let nan = || Cell::Float(f64::NAN);
            result.push(vec![nan(), nan(), nan(), nan(), nan(), nan(), false.into(), msg.into()]);
        }
    }
    out.tables.push(result);
    out
}

/// Closed-system entangling power of the nearest unitary and the leakage of
/// the gate itself.
fn gate_power(gate: &LogicalGate) -> (f64, f64) {
    let e = entangling_power_closed(&LogicalGate::from_matrix(gate.nearest_unitary().matrix)).unwrap_or(f64::NAN);
    (e, gate.leakage)
}

const INPUT_LABELS: [&str; 4] = ["00", "01", "10", "11"];

fn decoherence(cfg: &RunConfig) -> ModeOutput {
    #[derive(Clone, Copy)]
    enum Kind {
        Dynamic,
        Adiabatic,
    }
    let jobs: Vec<(Kind, f64)> = cfg.j_list.iter().flat_map(|&j| [(Kind::Dynamic, j), (Kind::Adiabatic, j)]).collect();
    let results: Vec<_> = jobs
        .par_iter()
        .map(|&(kind, j)| {
            guarded(|| {
                let ja = absolute(cfg, j);
                let p = single_params(cfg, ja, ja);
                let (spec, delta, omega0, e) = match kind {
                    Kind::Dynamic => {
                        let gate = simulate_pulsed_gate(&p, cfg.dynamic_omega0, cfg.n)?;
                        let spec = GateSpec::Dynamic { params: p, omega0: cfg.dynamic_omega0, n: cfg.n };
                        (spec, f64::NAN, cfg.dynamic_omega0, gate_power(&gate))
                    }
                    Kind::Adiabatic => {
                        let template = pulse_of(cfg, cfg.delta, cfg.tau);
                        let delta = if cfg.opt_delta.count > 1 {
                            max_entangling_detuning(&p, &template, &cfg.opt_delta.points(), cfg.tol, cfg.opt_slack)?.0
                        } else {
                            cfg.delta
                        };
                        let pulse = template.with_delta(delta);
                        let power = gate_power(&adiabatic_gate(&p, &pulse, cfg.tol)?);
                        (GateSpec::Adiabatic { params: p, pulse }, delta, cfg.omega0, power)
                    }
                };
                let rows = decoherence_study(&spec, &cfg.gamma0, cfg.tol)?;
                Ok((delta, omega0, e.0, e.1, rows))
            })
        })
        .collect();
    let mut out = ModeOutput::default();
    let mut table = Table::new(
        cfg.mode.name(),
        vec![
            "gate",
            "j",
            "delta",
            "omega0",
            "e_u",
            "leakage",
            "gamma0_per_ns",
            "input",
            "purity",
            "population",
            "valid",
        ],
    );
    for (index, (&(kind, j), res)) in jobs.iter().zip(&results).enumerate() {
        out.record(index, res);
        let name = match kind {
            Kind::Dynamic => "dynamic",
            Kind::Adiabatic => "adiabatic",
        };
        let ja = absolute(cfg, j);
        match res {
            Ok((delta, omega0, e, leak, rows)) => {
                for row in rows {
                    let metrics = row.per_input.iter().zip(INPUT_LABELS).chain(std::iter::once((&row.average, "mean")));
                    for (fom, label) in metrics {
                        table.push(vec![
                            name.into(),
                            ja.into(),
                            (*delta).into(),
                            (*omega0).into(),
                            (*e).into(),
                            (*leak).into(),
                            row.gamma0_per_ns.into(),
                            label.into(),
                            fom.purity.into(),
                            fom.population_computational.into(),
                            true.into(),
                        ]);
                    }
                }
            }
            Err(_) => {
                for &g in &cfg.gamma0 {
                    for label in INPUT_LABELS.iter().chain(&["mean"]) {
                        let nan = || Cell::Float(f64::NAN);
                        table.push(vec![
                            name.into(),
                            ja.into(),
                            nan(),
                            nan(),
                            nan(),
                            nan(),
                            g.into(),
                            (*label).into(),
                            nan(),
                            nan(),
                            false.into(),
                        ]);
                    }
                }
            }
        }
    }
    out.tables.push(table);
    out
}

fn interference(cfg: &RunConfig) -> ModeOutput {
    let (j1, j2) = fixed_couplings(cfg);
    let p = single_params(cfg, j1, j2);
    let pulse = pulse_of(cfg, cfg.delta, cfg.tau);
    let (a, b) = cfg.amplitudes;
    let result =
        guarded(|| interference_trace(&p, &pulse, (C64::new(a, 0.0), C64::new(b, 0.0)), cfg.time_samples, cfg.tol));
    let mut out = ModeOutput::default();
    let mut table = Table::new(cfg.mode.name(), vec!["index", "t", "pop_100", "pop_001", "elsewhere", "valid"]);
    let mut summary = Table::new(
        format!("{}-summary", cfg.mode.name()),
        vec![
            "gap",
            "expected_period",
            "measured_period",
            "period_error",
            "final_dev_100",
            "final_dev_001",
            "final_elsewhere",
            "valid",
        ],
    );
    let states = interference_bare_states();
    let energies = dressed_energies(&p, cfg.delta, cfg.omega0, &[states.0, states.1], 400);
    let gap = (energies[0] - energies[1]).abs();
    let expected = std::f64::consts::TAU / gap;
    match &result {
        Ok(trace) => {
            for k in 0..trace.times.len() {
                out.record::<()>(k, &Ok(()));
                table.push(vec![
                    k.into(),
                    trace.times[k].into(),
                    trace.pop_100[k].into(),
                    trace.pop_001[k].into(),
                    trace.elsewhere[k].into(),
                    true.into(),
                ]);
            }
            let last = trace.times.len() - 1;
            let measured = local_period(&trace.times, &trace.pop_100, 0.0).unwrap_or(f64::NAN);
            summary.push(vec![
                gap.into(),
                expected.into(),
                measured.into(),
                ((measured - expected) / expected).abs().into(),
                (trace.pop_100[last] - a * a).into(),
                (trace.pop_001[last] - b * b).into(),
                trace.elsewhere[last].into(),
                measured.is_finite().into(),
            ]);
        }
        Err(e) => {
            out.record::<()>(0, &Err(e.clone()));
            let nan = || Cell::Float(f64::NAN);
            summary.push(vec![gap.into(), expected.into(), nan(), nan(), nan(), nan(), nan(), false.into()]);
        }
    }
    out.tables.push(table);
    out.tables.push(summary);
    out
}
