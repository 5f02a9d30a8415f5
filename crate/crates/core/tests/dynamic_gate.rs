use medgate::basis::logical_to_flat;
use medgate::gate::Gate4;
use medgate::{
    dynamic_unitary, entangling_power_closed, propagate_excited, revival_time, LogicalGate, SystemParams, C64,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Degenerate XY systems with `R − 1` and both couplings bounded away from 0.
fn random_params(rng: &mut ChaCha8Rng) -> SystemParams {
    let e_c = rng.random_range(0.05..0.5);
    let r = if rng.random_bool(0.5) { rng.random_range(0.2..0.9) } else { rng.random_range(1.1..3.0) };
    let j1p = rng.random_range(0.1..2.0);
    let j2p = rng.random_range(0.1..2.0);
    SystemParams::from_reduced(e_c, r, j1p, j2p)
}

fn logical_block(u: &medgate::Operator) -> LogicalGate {
    LogicalGate::from_matrix(Gate4::from_fn(|r, c| u[(logical_to_flat(r) % 8, logical_to_flat(c) % 8)]))
}

#[test]
fn analytic_gate_matches_excited_propagator() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let p = random_params(&mut rng);
        let n = rng.random_range(1..4);
        let t = revival_time(&p, n).unwrap();
        let oracle = logical_block(&propagate_excited(&p, t));
        let analytic = dynamic_unitary(&p, n).unwrap();
        assert!(analytic.max_distance(&oracle) < 1e-8, "{p:?} n={n}: {}", analytic.max_distance(&oracle));
    }
}

#[test]
fn control_returns_at_revival() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..50 {
        let p = random_params(&mut rng);
        let u = propagate_excited(&p, revival_time(&p, 1).unwrap());
        let red = p.reduced().unwrap();
        let norm = (red.j1p * red.j1p + red.j2p * red.j2p).sqrt();
        // |T⟩ in {|010⟩,|100⟩,|001⟩}
        let t_state = [(0b100, red.j1p / norm), (0b001, red.j2p / norm)];
        let amp: C64 = t_state.iter().map(|&(i, w)| u[(0b010, i)] * w).sum();
        assert!(amp.norm_sqr() < 1e-10);
        for a in [0b010, 0b101] {
            assert!(1.0 - u[(a, a)].norm_sqr() < 1e-10, "{p:?} state {a:03b}");
        }
    }
}

#[test]
fn entangling_power_pattern_at_unit_ratio() {
    let grid: Vec<f64> = (0..=10).map(|k| 0.2 * k as f64).collect();
    let mut best: f64 = 0.0;
    for &a in &grid {
        for &b in &grid {
            if a == 0.0 && b == 0.0 {
                continue;
            }
            let p = SystemParams::from_reduced(0.1, 1.0, a, b);
            let e1 = entangling_power_closed(&dynamic_unitary(&p, 1).unwrap()).unwrap();
            let e2 = entangling_power_closed(&dynamic_unitary(&p, 2).unwrap()).unwrap();
            assert!(e2.abs() < 1e-10, "n=2 at ({a}, {b}): {e2}");
            if a == 0.0 || b == 0.0 {
                assert!(e1.abs() < 1e-10);
            }
            if a == b {
                best = best.max(e1);
            }
            assert!(e1 <= 2.0 / 9.0 + 1e-12);
        }
    }
    assert!((best - 2.0 / 9.0).abs() < 1e-3);
}
