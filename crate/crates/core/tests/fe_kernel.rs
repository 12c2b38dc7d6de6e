use jointrom::fe::{
    buckling_analysis, linear_buckling, solve_nonlinear_static, Benchmark, BenchmarkParams, Constraints,
    FullOrderModel, Material, Mesh, NewtonOptions,
};
use jointrom::linalg::{solve_eigen, SysMatrix};
use nalgebra::{DMatrix, DVector, Vector3};
use proptest::prelude::*;

fn lin(n: usize, a: f64, b: f64) -> Vec<f64> {
    (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
}

fn strip(nx: usize, ny: usize, nz: usize, l: f64, w: f64, t: f64) -> Mesh {
    Mesh::grid(&lin(nx, 0.0, l), &lin(ny, 0.0, w), &lin(nz, 0.0, t)).unwrap()
}

fn cantilever(mesh: Mesh) -> FullOrderModel {
    let mut c = Constraints::default();
    c.fix_nodes(&mesh.select_nodes(|x| x[0] == 0.0), &[0, 1, 2]);
    FullOrderModel::new(mesh, Material::steel(), c).unwrap()
}

fn pseudo_random(n: usize, seed: u64) -> DVector<f64> {
    let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    DVector::from_fn(n, |_, _| {
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    })
}

fn fd_tangent(model: &FullOrderModel, q: &DVector<f64>, h: f64) -> DMatrix<f64> {
    let n = q.len();
    let mut k = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut qp = q.clone();
        let mut qm = q.clone();
        qp[j] += h;
        qm[j] -= h;
        let col = (model.internal_force(&qp).unwrap() - model.internal_force(&qm).unwrap()) / (2.0 * h);
        k.set_column(j, &col);
    }
    k
}

#[test]
fn two_element_tangent_matches_finite_differences() {
    let mut mesh = strip(2, 1, 1, 4.0, 2.0, 1.0);
    mesh.nodes[4] += Vector3::new(0.2, -0.1, 0.05);
    let model = FullOrderModel::new(mesh, Material::steel(), Constraints::default()).unwrap();
    let q = pseudo_random(model.n_dofs(), 7) * 0.05;
    let (_, kt) = model.internal_force_and_tangent(&q).unwrap();
    let fd = fd_tangent(&model, &q, 1e-6);
    let rel = (kt.to_dense() - &fd).norm() / fd.norm();
    assert!(rel < 1e-6, "relative error {rel}");
}

#[test]
fn reference_state_is_force_free_with_linear_tangent() {
    let model = cantilever(strip(3, 1, 1, 6.0, 2.0, 1.0));
    let q = DVector::zeros(model.n_dofs());
    let (f, kt) = model.internal_force_and_tangent(&q).unwrap();
    assert_eq!(f.amax(), 0.0);
    assert!((kt.to_dense() - model.stiffness().to_dense()).amax() < 1e-9 * model.stiffness().max_abs());
}

#[test]
fn rigid_translation_leaves_forces_unchanged() {
    let model = FullOrderModel::new(strip(2, 2, 1, 4.0, 4.0, 1.0), Material::steel(), Constraints::default()).unwrap();
    let q = pseudo_random(model.n_dofs(), 3) * 0.1;
    let shift = DVector::from_fn(model.n_dofs(), |i, _| [0.3, -0.7, 1.1][i % 3]);
    let f0 = model.internal_force(&q).unwrap();
    let f1 = model.internal_force(&(&q + shift)).unwrap();
    assert!((f1 - &f0).amax() < 1e-9 * f0.amax());
}

#[test]
fn infinitesimal_rotation_force_grows_quadratically() {
    let model = FullOrderModel::new(strip(2, 1, 1, 4.0, 2.0, 1.0), Material::steel(), Constraints::default()).unwrap();
    let axis = Vector3::new(0.3, -0.5, 0.8).normalize();
    let force = |theta: f64| {
        let u: Vec<Vector3<f64>> = model.mesh().nodes.iter().map(|x| (axis * theta).cross(x)).collect();
        model.internal_force(&model.gather(&u)).unwrap().norm()
    };
    let ratio = force(2e-4) / force(1e-4);
    assert!((ratio - 4.0).abs() < 1e-2, "growth ratio {ratio}");
}

#[test]
fn internal_force_is_exactly_cubic_along_lines() {
    let model = cantilever(strip(3, 1, 1, 6.0, 2.0, 1.0));
    let d = pseudo_random(model.n_dofs(), 11) * 0.2;
    let h = 0.5;
    let f: Vec<DVector<f64>> = (0..5)
        .map(|k| model.internal_force(&(&d * (k as f64 * h))).unwrap())
        .collect();
    let fourth = &f[4] - &f[3] * 4.0 + &f[2] * 6.0 - &f[1] * 4.0 + &f[0];
    let scale = f.iter().map(|v| v.amax()).fold(0.0, f64::max);
    assert!(fourth.amax() < 1e-10 * scale, "{}", fourth.amax() / scale);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]
    #[test]
    fn tangent_consistent_for_large_states(seed in 0u64..1_000_000, amp in 0.05f64..1.0) {
        let t = 1.0;
        let model = cantilever(strip(3, 1, 1, 12.0, 4.0, t));
        let q = pseudo_random(model.n_dofs(), seed) * (amp * t);
        let ev = model.internal_force_and_tangent(&q);
        prop_assume!(ev.is_ok());
        let (_, kt) = ev.unwrap();
        let fd = fd_tangent(&model, &q, 1e-5);
        let rel = (kt.to_dense() - &fd).norm() / fd.norm();
        prop_assert!(rel < 1e-5, "relative error {}", rel);
    }
}

#[test]
fn inverted_state_reports_element() {
    let model = FullOrderModel::new(strip(1, 1, 1, 1.0, 1.0, 1.0), Material::steel(), Constraints::default()).unwrap();
    let u: Vec<Vector3<f64>> = model.mesh().nodes.iter().map(|x| Vector3::new(0.0, 0.0, -2.0 * x[2])).collect();
    match model.internal_force(&model.gather(&u)) {
        Err(jointrom::Error::ElementInversion { element, .. }) => assert_eq!(element, 0),
        other => panic!("expected inversion, got {other:?}"),
    }
}

#[test]
fn single_brick_matrices() {
    let model = FullOrderModel::new(strip(1, 1, 1, 1.0, 1.0, 1.0), Material::steel(), Constraints::default()).unwrap();
    let k = model.stiffness().to_dense();
    assert_eq!(k.shape(), (24, 24));
    assert_eq!(model.mass().to_dense().shape(), (24, 24));
    for d in 0..3 {
        let t = DVector::from_fn(24, |i, _| f64::from(i % 3 == d));
        assert!((&k * t).amax() < 1e-10 * k.amax());
    }
    let modes = solve_eigen(
        &SysMatrix::Band(model.stiffness().clone()),
        &SysMatrix::Band(model.mass().clone()),
        7,
    )
    .unwrap();
    let w = modes.omegas();
    for wi in &w[..6] {
        assert!(*wi < 1e-5 * w[6], "rigid mode {wi} vs {}", w[6]);
    }
}

#[test]
fn zero_load_gives_zero_displacement() {
    let model = cantilever(strip(4, 1, 1, 8.0, 2.0, 1.0));
    let f = DVector::zeros(model.n_dofs());
    let sol = solve_nonlinear_static(&model, &f, 3, &NewtonOptions::default()).unwrap();
    assert_eq!(sol.q.amax(), 0.0);
}

fn tip_load(model: &FullOrderModel, l: f64, total: f64) -> DVector<f64> {
    let tip = model.mesh().select_nodes(|x| (x[0] - l).abs() < 1e-12);
    let per = total / tip.len() as f64;
    let forces: Vec<_> = tip.iter().map(|&n| (n, Vector3::new(0.0, 0.0, per))).collect();
    model.load_vector(&forces)
}

#[test]
fn small_tip_load_matches_linear_solution() {
    let (l, t) = (20.0, 1.0);
    let model = cantilever(strip(10, 1, 1, l, 2.0, t));
    let unit = tip_load(&model, l, 1.0);
    let q_unit = model.stiffness().lu().unwrap().solve(&unit);
    let f = unit * (0.005 * t / q_unit.amax());
    let q_lin = model.stiffness().lu().unwrap().solve(&f);
    let sol = solve_nonlinear_static(&model, &f, 1, &NewtonOptions::default()).unwrap();
    let rel = (&sol.q - &q_lin).amax() / q_lin.amax();
    assert!(rel < 1e-2, "relative difference {rel}");
}

#[test]
fn clamped_strip_hardens_under_membrane_action() {
    let (l, t) = (40.0, 1.0);
    let mesh = strip(16, 1, 1, l, 2.0, t);
    let mut c = Constraints::default();
    c.fix_nodes(&mesh.select_nodes(|x| x[0] == 0.0 || x[0] == l), &[0, 1, 2]);
    let model = FullOrderModel::new(mesh, Material::steel(), c).unwrap();
    let mid = model.mesh().select_nodes(|x| (x[0] - 0.5 * l).abs() < 1e-12);
    let forces: Vec<_> = mid.iter().map(|&n| (n, Vector3::new(0.0, 0.0, 1.0))).collect();
    let unit = model.load_vector(&forces);
    let q_unit = model.stiffness().lu().unwrap().solve(&unit);
    let f = &unit * (t / q_unit.amax());
    let coarse = solve_nonlinear_static(&model, &f, 4, &NewtonOptions::default()).unwrap();
    let fine = solve_nonlinear_static(&model, &f, 16, &NewtonOptions::default()).unwrap();
    assert!((&coarse.q - &fine.q).amax() < 1e-8 * fine.q.amax());
    let w_nl = fine.q.amax();
    assert!(w_nl < 0.95 * t, "nonlinear deflection {w_nl} vs linear {t}");
    for step in &fine.trace {
        assert!(step.residual <= 1e-8 * f.norm().max(1.0));
    }
}

fn euler_bernoulli_first(l: f64, w: f64, t: f64, mat: &Material) -> f64 {
    let i = w * t.powi(3) / 12.0;
    1.875_104_068_7_f64.powi(2) * (mat.youngs_modulus * i / (mat.mass_density() * w * t * l.powi(4))).sqrt()
}

/// Fully integrated trilinear bricks lock in bending, so the coarse 4×2×1 strip is far
/// from the beam value; the refined strip converges to it.
#[test]
fn cantilever_bending_frequency_converges_to_beam_theory() {
    let (l, w, t) = (40.0, 4.0, 4.0);
    let mat = Material::steel();
    let eb = euler_bernoulli_first(l, w, t, &mat);
    let first = |nx, ny, nz| {
        let m = cantilever(strip(nx, ny, nz, l, w, t));
        let modes = solve_eigen(&SysMatrix::Band(m.stiffness().clone()), &SysMatrix::Band(m.mass().clone()), 1).unwrap();
        modes.omegas()[0]
    };
    let coarse = first(4, 2, 1) / eb;
    let fine = first(32, 2, 2) / eb;
    assert!(coarse > 1.5, "coarse mesh ratio {coarse}");
    assert!((fine - 1.0).abs() < 0.05, "refined mesh ratio {fine}");
}

#[test]
fn plate_strip_bending_frequency_ratio() {
    let (l, w, t) = (40.0, 10.0, 2.0);
    let m = cantilever(strip(40, 2, 2, l, w, t));
    let modes = solve_eigen(&SysMatrix::Band(m.stiffness().clone()), &SysMatrix::Band(m.mass().clone()), 6).unwrap();
    // out-of-plane bending modes: dominant z motion at the tip
    let tip = m.mesh().select_nodes(|x| (x[0] - l).abs() < 1e-12);
    let bending: Vec<f64> = (0..modes.len())
        .filter(|&j| {
            let phi = modes.shape(j);
            let u = m.node_displacement(&phi, tip[0]);
            let twist = m.node_displacement(&phi, *tip.last().unwrap());
            u[2].abs() > 10.0 * u[1].abs() && (u[2] - twist[2]).abs() < 0.1 * u[2].abs()
        })
        .map(|j| modes.omegas()[j])
        .collect();
    let ratio = bending[1] / bending[0];
    let beam = (4.694_091_132_9_f64 / 1.875_104_068_7).powi(2);
    assert!((ratio / beam - 1.0).abs() < 0.05, "ratio {ratio} vs {beam}");
}

#[test]
fn modes_are_mass_orthonormal_and_stiffness_orthogonal() {
    let m = cantilever(strip(20, 2, 1, 40.0, 10.0, 2.0));
    let modes = solve_eigen(&SysMatrix::Band(m.stiffness().clone()), &SysMatrix::Band(m.mass().clone()), 5).unwrap();
    let p = &modes.shapes;
    let gm = p.transpose() * m.mass().mul_dense(p);
    let gk = p.transpose() * m.stiffness().mul_dense(p);
    assert!((gm - DMatrix::identity(5, 5)).amax() < 1e-8);
    for i in 0..5 {
        for j in 0..5 {
            let expect = if i == j { modes.eigenvalues[i] } else { 0.0 };
            assert!((gk[(i, j)] - expect).abs() < 1e-8 * modes.eigenvalues[4]);
        }
    }
    assert!(modes.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
}

fn simply_supported_column(nx: usize, l: f64, w: f64, t: f64) -> (FullOrderModel, DVector<f64>) {
    let mesh = strip(nx, 1, 2, l, w, t);
    let mut c = Constraints::default();
    let mid = |x: &Vector3<f64>| (x[2] - 0.5 * t).abs() < 1e-12;
    let left = mesh.select_nodes(|x| x[0] == 0.0 && mid(x));
    let right = mesh.select_nodes(|x| (x[0] - l).abs() < 1e-12 && mid(x));
    c.fix_nodes(&left, &[0, 2]);
    c.fix_nodes(&right, &[2]);
    c.fix_nodes(&left[..1], &[1]);
    c.fix_nodes(&right[..1], &[1]);
    let model = FullOrderModel::new(mesh, Material::steel(), c).unwrap();
    let end = model.mesh().select_nodes(|x| (x[0] - l).abs() < 1e-12);
    // consistent nodal loads of a unit compressive resultant on a 1×2 face
    let forces: Vec<_> = end
        .iter()
        .map(|&n| {
            let wz = if mid(&model.mesh().nodes[n]) { 0.5 } else { 0.25 };
            (n, Vector3::new(-0.5 * wz, 0.0, 0.0))
        })
        .collect();
    let f = model.load_vector(&forces);
    (model, f)
}

#[test]
fn axial_compression_matches_euler_column() {
    let (l, w, t) = (60.0, 2.0, 2.0);
    let (model, unit) = simply_supported_column(96, l, w, t);
    assert!((unit.sum() + 1.0).abs() < 1e-12);
    let p_ref = 1000.0;
    let f = unit * p_ref;
    let gamma = p_ref * linear_buckling(&model, &f).unwrap().expect("column buckles");
    let mat = Material::steel();
    let euler = std::f64::consts::PI.powi(2) * mat.youngs_modulus * w * t.powi(3) / 12.0 / (l * l);
    assert!((gamma / euler - 1.0).abs() < 0.10, "gamma {gamma} vs Euler {euler}");

    let scaled = p_ref * linear_buckling(&model, &(&f * 4.0)).unwrap().unwrap();
    assert!((scaled * 4.0 / gamma - 1.0).abs() < 1e-9);
    let both = buckling_analysis(&model, &f).unwrap();
    assert!(both.negative_factor().is_none_or(|g| g * p_ref > gamma));
}

#[test]
fn transverse_bending_does_not_buckle() {
    let (l, t) = (40.0, 1.0);
    let model = cantilever(strip(20, 4, 2, l, 10.0, t));
    let unit = tip_load(&model, l, 1.0);
    let q_unit = model.stiffness().lu().unwrap().solve(&unit);
    let f = unit * (t / q_unit.amax());
    assert_eq!(linear_buckling(&model, &f).unwrap(), None);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]
    #[test]
    fn buckling_factor_invariant_under_renumbering(seed in 0u64..10_000) {
        let (model, f) = simply_supported_column(8, 16.0, 4.0, 2.0);
        let f = f * 1000.0;
        let gamma = linear_buckling(&model, &f).unwrap().unwrap();
        let mesh = model.mesh();
        let n = mesh.n_nodes();
        let keys = pseudo_random(n, seed);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.sort_by(|&a, &b| keys[a].total_cmp(&keys[b]));
        let mut new_id = vec![0; n];
        for (k, &old) in perm.iter().enumerate() {
            new_id[old] = k;
        }
        let renum = Mesh {
            nodes: perm.iter().map(|&o| mesh.nodes[o]).collect(),
            elements: mesh.elements.iter().map(|e| e.map(|a| new_id[a])).collect(),
            ..Default::default()
        };
        let c = Constraints {
            fixed: model.constraints().fixed.iter().map(|&(a, d)| (new_id[a], d)).collect(),
            ..Default::default()
        };
        let m2 = FullOrderModel::new(renum, Material::steel(), c).unwrap();
        let u = model.node_displacements(&f);
        let u2: Vec<_> = perm.iter().map(|&o| u[o]).collect();
        let f2 = m2.gather(&u2);
        let g2 = linear_buckling(&m2, &f2).unwrap().unwrap();
        prop_assert!((g2 / gamma - 1.0).abs() < 1e-8);
    }
}

#[test]
fn von_mises_peaks_at_clamped_end() {
    let (l, t) = (20.0, 1.0);
    let model = cantilever(strip(10, 1, 1, l, 2.0, t));
    assert_eq!(model.max_von_mises(&DVector::zeros(model.n_dofs())).unwrap().0, 0.0);
    let f = tip_load(&model, l, 1.0);
    let q = model.stiffness().lu().unwrap().solve(&f);
    let (s, e) = model.max_von_mises(&q).unwrap();
    assert!(s > 0.0);
    let xmin = model.mesh().elements[e].iter().map(|&a| model.mesh().nodes[a][0]).fold(f64::INFINITY, f64::min);
    assert_eq!(xmin, 0.0);
}

#[test]
fn benchmark_geometry_and_units() {
    let b = Benchmark::build(BenchmarkParams::default(), Material::steel()).unwrap();
    assert_eq!(b.params.thickness, 1.5);
    let thin = b.thin_model().unwrap();
    let support = b.support_model(false).unwrap();
    let full = b.full_model(false).unwrap();
    assert_eq!(
        thin.mesh().n_elements() + support.mesh().n_elements(),
        full.mesh().n_elements()
    );
    let uz: Vec<Vector3<f64>> = vec![Vector3::z(); thin.mesh().n_nodes()];
    let tz = thin.gather(&uz);
    let mass = tz.dot(&thin.mass().mul_vec(&tz));
    let expect = thin.volume() * 7829.0e-9 * 1e-3;
    assert!((mass / expect - 1.0).abs() < 1e-12);
    // a rigid z-translation of the gauged thin region is suppressed
    let gauged = b.thin_gauged_model().unwrap();
    assert!(gauged.stiffness().lu().is_ok());
    assert!(thin.stiffness().lu().is_err());
}
