use jointrom::contact::{
    contact_nodal_forces, tangential_increment, ContactParams, ContactPatch, ContactState, Regime,
};
use nalgebra::{DVector, Vector2};
use proptest::prelude::*;

const MU: f64 = 0.3;
const G_SL: f64 = 1e-4;
const P_N: f64 = 1.2;

fn patch(n: usize, p0: f64) -> ContactPatch {
    let xy: Vec<[f64; 2]> = (0..n).map(|i| [i as f64, 0.0]).collect();
    ContactPatch::new(
        &ContactParams {
            mean_pressure: p0,
            ..Default::default()
        },
        &xy,
        &vec![1.0; n],
    )
    .unwrap()
}

fn gaps(t: &[(f64, f64, f64)]) -> DVector<f64> {
    DVector::from_iterator(3 * t.len(), t.iter().flat_map(|&(x, y, z)| [x, y, z]))
}

#[test]
fn monotonic_ramp_saturates_at_stick_distance() {
    let p = patch(1, P_N);
    let mut s = ContactState::new(&p);
    let steps = 2000;
    for k in 1..=steps {
        let g = 2.0 * G_SL * k as f64 / steps as f64;
        s.commit(&p, &gaps(&[(g, 0.0, 0.0)]));
        let expected = (p.k_t[0] * g).min(MU * P_N);
        assert!((s.nodes[0].p_t[0] - expected).abs() < 1e-12 * MU * P_N, "g = {g}");
        if g > G_SL * (1.0 + 1e-9) {
            assert_eq!(s.nodes[0].regime, Regime::Slip);
        }
    }
}

fn cycle_work(amplitude: f64, steps: usize) -> f64 {
    let p = patch(1, P_N);
    let mut s = ContactState::new(&p);
    let mut last = 0.0;
    for cycle in 0..3 {
        let before = s.work();
        for k in 1..=steps {
            let tau = 2.0 * std::f64::consts::PI * k as f64 / steps as f64;
            s.commit(&p, &gaps(&[(amplitude * tau.sin(), 0.0, 0.0)]));
        }
        if cycle == 2 {
            last = s.work() - before;
        }
    }
    last
}

#[test]
fn steady_cycle_dissipation_matches_jenkins() {
    for factor in [1.5, 3.0, 10.0] {
        let amp = factor * G_SL;
        let exact = 4.0 * MU * P_N * (amp - G_SL);
        let w = cycle_work(amp, 200);
        assert!((w - exact).abs() < 5e-3 * exact, "ĝ = {factor} g_sl: {w} vs {exact}");
    }
    assert_eq!(cycle_work(0.9 * G_SL, 200), 0.0);
}

#[test]
fn reference_gap_gives_zero_force() {
    let p = patch(3, P_N);
    let s = ContactState::new(&p);
    let f = contact_nodal_forces(&p, &s, &DVector::zeros(9)).unwrap();
    assert_eq!(f.force, DVector::zeros(9));
}

#[test]
fn tied_contact_bypasses_laws() {
    let mut params = ContactParams::default();
    params.tied = true;
    let p = ContactPatch::new(&params, &[[0.0, 0.0]], &[2.0]).unwrap();
    let s = ContactState::new(&p);
    let f = contact_nodal_forces(&p, &s, &gaps(&[(1.0, 1.0, -1.0)])).unwrap();
    assert_eq!(f.force.norm(), 0.0);
}

#[test]
fn gross_slip_force_sums_to_friction_limit() {
    let n = 5;
    let p = patch(n, P_N);
    let s = ContactState::new(&p);
    let g = gaps(&vec![(5.0 * G_SL, 0.0, 0.0); n]);
    let f = contact_nodal_forces(&p, &s, &g).unwrap();
    let total: f64 = (0..n).map(|i| f.force[3 * i]).sum();
    assert!((total - MU * P_N * n as f64).abs() < 1e-12);
    assert!(f.regimes.iter().all(|&r| r == Regime::Slip));
}

#[test]
fn separation_unloads_preload() {
    let p = patch(1, 0.8);
    let s = ContactState::new(&p);
    let f = contact_nodal_forces(&p, &s, &gaps(&[(1e-6, 0.0, -1e-4)])).unwrap();
    assert_eq!(f.regimes[0], Regime::Separated);
    assert!((f.force[2] + 0.8).abs() < 1e-15);
    assert_eq!(f.force[0], 0.0);
}

#[test]
fn tangent_matches_finite_differences() {
    let p = patch(3, P_N);
    let mut s = ContactState::new(&p);
    s.commit(&p, &gaps(&[(3e-5, -1e-5, 1e-5), (0.0, 0.0, 0.0), (2e-5, 0.0, -2e-5)]));
    // node 0 sticks, node 1 slips, node 2 separates
    let g = gaps(&[(5e-5, -2e-5, 2e-5), (2e-4, 1e-4, 1e-5), (2e-5, 1e-5, -3e-4)]);
    let f = contact_nodal_forces(&p, &s, &g).unwrap();
    assert_eq!(f.regimes, vec![Regime::Stick, Regime::Slip, Regime::Separated]);
    let h = 1e-9;
    for j in 0..9 {
        let mut gp = g.clone();
        let mut gm = g.clone();
        gp[j] += h;
        gm[j] -= h;
        let fp = contact_nodal_forces(&p, &s, &gp).unwrap().force;
        let fm = contact_nodal_forces(&p, &s, &gm).unwrap().force;
        let col = (fp - fm) / (2.0 * h);
        for i in 0..9 {
            let exact = if i / 3 == j / 3 { f.tangent[i / 3][(i % 3, j % 3)] } else { 0.0 };
            assert!((col[i] - exact).abs() <= 1e-6 * (1.0 + exact.abs()), "({i},{j}): {} vs {exact}", col[i]);
        }
    }
}

#[test]
fn vanishing_increment_on_cone_keeps_direction() {
    let dir = Vector2::new(0.0, 1.0);
    let u = tangential_increment(Vector2::new(0.0, 0.4), Vector2::zeros(), 1.0, 3000.0, MU, dir);
    assert_eq!(u.regime, Regime::Slip);
    assert!((u.p_t - dir * MU).norm() < 1e-15);
}

proptest! {
    #[test]
    fn traction_stays_in_cone(path in prop::collection::vec((-3.0..3.0f64, -3.0..3.0f64, -1.5..1.0f64), 1..60)) {
        let p = patch(1, P_N);
        let mut s = ContactState::new(&p);
        let mut work = 0.0;
        for (x, y, z) in path {
            s.commit(&p, &gaps(&[(x * G_SL, y * G_SL, z * 1e-4)]));
            prop_assert!(s.cone_violation(&p) <= 0.0);
            prop_assert!(s.work() >= work);
            work = s.work();
            if s.nodes[0].regime == Regime::Separated {
                prop_assert_eq!(s.nodes[0].p_t, Vector2::zeros());
            }
        }
    }

    #[test]
    fn subdividing_a_straight_path_leaves_traction_unchanged(
        pts in prop::collection::vec(-4.0..4.0f64, 1..12),
    ) {
        let p = patch(1, P_N);
        let run = |sub: usize| {
            let mut s = ContactState::new(&p);
            let mut prev = 0.0;
            for &x in &pts {
                for k in 1..=sub {
                    let g = prev + (x - prev) * k as f64 / sub as f64;
                    s.commit(&p, &gaps(&[(g * G_SL, 0.0, 0.0)]));
                }
                prev = x;
            }
            s.nodes[0].p_t[0]
        };
        let (a, b) = (run(4), run(8));
        prop_assert!((a - b).abs() <= 1e-6 * MU * P_N);
    }
}
