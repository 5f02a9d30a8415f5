use medgate::gate::Gate4;
use medgate::{entangling_power_closed, entangling_power_mc, LogicalGate, C64};
use proptest::prelude::*;

fn block_gate(corners: (f64, f64), theta: f64, phases: (f64, f64, f64)) -> LogicalGate {
    let (a, b, g) = phases;
    let mut m = Gate4::zeros();
    m[(0, 0)] = C64::from_polar(1.0, corners.0);
    m[(3, 3)] = C64::from_polar(1.0, corners.1);
    let (c, s) = (theta.cos(), theta.sin());
    m[(1, 1)] = C64::from_polar(c, g + a);
    m[(1, 2)] = C64::from_polar(s, g + b);
    m[(2, 1)] = -C64::from_polar(s, g - b);
    m[(2, 2)] = C64::from_polar(c, g - a);
    LogicalGate::from_matrix(m)
}

fn local_z(gate: &LogicalGate, x: f64, y: f64) -> LogicalGate {
    // (Rz(x) ⊗ Rz(y)) U (Rz(y) ⊗ Rz(x))
    let rz = |q: f64, qp: f64| {
        Gate4::from_diagonal(&nalgebra::Vector4::from_fn(|k, _| {
            let (bq, bqp) = ((k >> 1) as f64, (k & 1) as f64);
            C64::from_polar(1.0, q * (bq - 0.5) + qp * (bqp - 0.5))
        }))
    };
    LogicalGate::from_matrix(rz(x, y) * gate.matrix * rz(y, x))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closed_form_bounds_and_symmetries(
        c0 in -3.2f64..3.2, c1 in -3.2f64..3.2, theta in 0.0f64..1.58,
        a in -3.2f64..3.2, b in -3.2f64..3.2, g in -3.2f64..3.2,
        x in -3.2f64..3.2, y in -3.2f64..3.2,
    ) {
        let gate = block_gate((c0, c1), theta, (a, b, g));
        let e = entangling_power_closed(&gate).unwrap();
        prop_assert!((-1e-14..=2.0 / 9.0 + 1e-14).contains(&e));
        let moved = local_z(&gate, x, y);
        prop_assert!((entangling_power_closed(&moved).unwrap() - e).abs() < 1e-13);
    }
}

#[test]
fn closed_form_agrees_with_monte_carlo() {
    for (k, theta) in [0.0, 0.4, 0.9, 1.3].into_iter().enumerate() {
        let gate = block_gate((0.3 * k as f64, -1.1), theta, (0.7, -0.2 * k as f64, 1.9));
        let closed = entangling_power_closed(&gate).unwrap();
        let mc = entangling_power_mc(&gate, 40_000, 100 + k as u64).unwrap();
        assert!((mc.value - closed).abs() < 4.0 * mc.stderr.max(1e-15), "{closed} vs {mc:?}");
    }
}
