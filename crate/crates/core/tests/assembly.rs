use jointrom::assembly::{assemble_system, CouplingMap, SystemRom};
use jointrom::cms::{compute_component_basis, reduce_component, DofMirror, DofPartition, ModeSelection, RegionKind};
use jointrom::components::{reduce_support, reduce_thin, support_contact, ReductionOptions};
use jointrom::condensation::GeomForceCoefficients;
use jointrom::contact::{contact_nodal_forces, ContactParams, ContactState};
use jointrom::fe::{Benchmark, BenchmarkParams, Constraints, FullOrderModel, Material, Mesh};
use jointrom::interface::{build_interface_basis_with_terms, InterfacePatch, SymmetryFilter};
use jointrom::linalg::{dense_generalized, solve_eigen, SysMatrix};
use jointrom::Error;
use nalgebra::{DMatrix, DVector};

fn bench() -> Benchmark {
    Benchmark::build(BenchmarkParams::default(), Material::steel()).unwrap()
}

fn lcg(seed: u64, n: usize) -> Vec<f64> {
    let mut s = seed;
    (0..n)
        .map(|_| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 52) as f64 - 1.0
        })
        .collect()
}

#[test]
fn coupling_map_has_identity_blocks() {
    let c = CouplingMap::new(4, 2, 3, 2);
    let l = c.matrix();
    assert_eq!((l.nrows(), l.ncols()), (13, 11));
    assert!(l.iter().all(|&v| v == 0.0 || v == 1.0));
    for r in 0..13 {
        assert_eq!(l.row(r).sum(), 1.0);
    }
    // support rows are the identity on [q_b; η_Γ; η⁽¹⁾]
    assert_eq!(l.view((0, 0), (9, 9)).into_owned(), DMatrix::identity(9, 9));
    // thin η_Γ rows hit the shared columns, η⁽²⁾ rows the last block
    assert_eq!(l.view((9, 4), (2, 2)).into_owned(), DMatrix::identity(2, 2));
    assert_eq!(l.view((11, 9), (2, 2)).into_owned(), DMatrix::identity(2, 2));
    let ltl = l.transpose() * &l;
    assert!(ltl.clone().cholesky().is_some());
    assert_eq!(ltl[(4, 4)], 2.0);

    // equal and opposite interface reactions do no virtual work
    let mut c_stack = DVector::zeros(13);
    c_stack[4] = 3.0;
    c_stack[5] = -1.5;
    c_stack[9] = -3.0;
    c_stack[10] = 1.5;
    assert_eq!(l.transpose() * c_stack, DVector::zeros(11));
}

#[test]
fn assembly_matches_explicit_product() {
    let c = CouplingMap::new(3, 2, 2, 3);
    let a1 = DMatrix::from_fn(7, 7, |i, j| (1 + i * 7 + j) as f64);
    let a2 = DMatrix::from_fn(5, 5, |i, j| (100 + i * 5 + j) as f64);
    let mut blk = DMatrix::zeros(12, 12);
    blk.view_mut((0, 0), (7, 7)).copy_from(&a1);
    blk.view_mut((7, 7), (5, 5)).copy_from(&a2);
    let l = c.matrix();
    assert_eq!(c.assemble(&a1, &a2), l.transpose() * blk * &l);
}

#[test]
fn without_shared_columns_the_system_is_block_diagonal() {
    let c = CouplingMap::new(2, 0, 2, 3);
    let a = c.assemble(&DMatrix::from_element(4, 4, 1.0), &DMatrix::from_element(3, 3, 2.0));
    assert_eq!(a.view((0, 4), (4, 3)).into_owned(), DMatrix::zeros(4, 3));
    assert_eq!(a.view((4, 4), (3, 3)).into_owned(), DMatrix::from_element(3, 3, 2.0));
}

/// Component of a bar `[x0, x1]` of two bricks with the interface at `x_if`.
fn bar_component(x0: f64, x_if: f64, clamp: bool, kind: RegionKind) -> jointrom::cms::ReducedComponent {
    let mid = 0.5 * (x0 + x_if);
    let xs = if x0 < x_if { vec![x0, mid, x_if] } else { vec![x_if, mid, x0] };
    let mesh = Mesh::grid(&xs, &[0.0, 2.0], &[0.0, 1.5]).unwrap();
    let mut c = Constraints::default();
    if clamp {
        c.fix_nodes(&mesh.select_nodes(|x| x[0] == x0), &[0, 1, 2]);
    }
    let iface = mesh.select_nodes(|x| x[0] == x_if);
    let model = FullOrderModel::new(mesh, Material::steel(), c).unwrap();
    let m = model.mesh();
    let patch = InterfacePatch::centred(
        iface.clone(),
        iface.iter().map(|&n| m.nodes[n]).collect(),
        iface.iter().map(|&n| [m.nodes[n][1], m.nodes[n][2]]).collect(),
        vec![1.0; iface.len()],
    );
    let basis_if =
        build_interface_basis_with_terms(&patch, 2, &[(0, 0), (0, 1), (1, 0), (1, 1)], SymmetryFilter::None).unwrap();
    let part = DofPartition::new(model.n_dofs(), vec![], DofPartition::interface_eqs(&model, &iface).unwrap()).unwrap();
    let count = part.internal.len();
    let basis = compute_component_basis(
        model.stiffness(),
        model.mass(),
        &part,
        &basis_if,
        ModeSelection { count, band_hz: None },
        None,
    )
    .unwrap();
    reduce_component(kind, model.stiffness(), model.mass(), basis).unwrap()
}

#[test]
fn split_bar_matches_monolithic_bar() {
    let left = bar_component(0.0, 20.0, true, RegionKind::Support);
    let right = bar_component(40.0, 20.0, false, RegionKind::ThinWalled);
    let sys = assemble_system(&left, &right, None, None).unwrap();
    let mesh = Mesh::grid(&[0.0, 10.0, 20.0, 30.0, 40.0], &[0.0, 2.0], &[0.0, 1.5]).unwrap();
    let mut c = Constraints::default();
    c.fix_nodes(&mesh.select_nodes(|x| x[0] == 0.0), &[0, 1, 2]);
    let mono = FullOrderModel::new(mesh, Material::steel(), c).unwrap();
    assert_eq!(sys.dim(), mono.n_dofs());
    let a = dense_generalized(&mono.stiffness().to_dense(), &mono.mass().to_dense()).unwrap();
    let b = dense_generalized(&sys.stiffness, &sys.mass).unwrap();
    for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
        assert!((x - y).abs() < 1e-10 * x, "{x} vs {y}");
    }
    assert!(sys.asymmetry() < 1e-12);
}

#[test]
fn interface_mismatch_is_rejected() {
    let b = bench();
    let s = reduce_support(&b, &ReductionOptions::default()).unwrap();
    let t = reduce_thin(&b, &ReductionOptions { interface_modes: 2, ..Default::default() }).unwrap();
    assert!(matches!(assemble_system(&s.reduced, &t.reduced, None, None), Err(Error::InterfaceMismatch(_))));
}

#[test]
fn tied_benchmark_tracks_full_order_frequencies() {
    let b = bench();
    let fom = b.full_model(true).unwrap();
    let modes = solve_eigen(&SysMatrix::Band(fom.stiffness().clone()), &SysMatrix::Band(fom.mass().clone()), 6).unwrap();
    let mirror = DofMirror::build(&fom).unwrap();
    let symmetric: Vec<f64> = (0..modes.len())
        .filter(|&j| mirror.is_symmetric(&modes.shape(j)))
        .map(|j| modes.eigenvalues[j])
        .collect();
    let opts = ReductionOptions { interface_modes: 5, support_modes: 5, thin_modes: 5, ..Default::default() };
    let s = reduce_support(&b, &opts).unwrap();
    let t = reduce_thin(&b, &opts).unwrap();
    let sys = assemble_system(&s.reduced, &t.reduced, None, None).unwrap();
    assert_eq!(sys.n_gaps(), 0);
    let rom = dense_generalized(&sys.stiffness, &sys.mass).unwrap();
    for (f, r) in symmetric.iter().zip(&rom.eigenvalues).take(2) {
        // Rayleigh–Ritz: reduced eigenvalues bound the full-order ones from above
        assert!(*r >= f * (1.0 - 1e-9));
        assert!((r.sqrt() - f.sqrt()) / f.sqrt() < 0.01);
    }
}

fn contact_system(seed: u64) -> (SystemRom, usize) {
    let b = bench();
    let opts = ReductionOptions::default();
    let s = reduce_support(&b, &opts).unwrap();
    let t = reduce_thin(&b, &opts).unwrap();
    let nt = t.reduced.dim();
    let lateral = t.reduced.basis.interface_columns.iter().position(|c| c.direction == 2).unwrap();
    let active: Vec<usize> = (0..nt).filter(|&k| k != lateral).collect();
    let mut g = GeomForceCoefficients::zeros(nt, active.clone());
    let v = lcg(seed, nt * (g.quadratic.len() + g.cubic.len()));
    for &i in &active {
        for t2 in 0..g.quadratic.len() {
            g.beta2[(i, t2)] = 1e4 * v[i * g.quadratic.len() + t2];
        }
        for t3 in 0..g.cubic.len() {
            g.beta3[(i, t3)] = 1e5 * v[nt * g.quadratic.len() + i * g.cubic.len() + t3];
        }
    }
    let patch = support_contact(&b, &ContactParams::default()).unwrap();
    (assemble_system(&s.reduced, &t.reduced, Some(g), Some(patch)).unwrap(), lateral)
}

#[test]
fn reference_state_is_in_equilibrium_and_support_modes_stay_linear() {
    let (sys, _) = contact_system(1);
    let n = sys.dim();
    let state = sys.contact_state().unwrap();
    let zero = DVector::zeros(n);
    let (r, _) = sys.residual(&zero, &zero, &zero, Some(&state)).unwrap();
    assert_eq!(r, zero);
    let c = &sys.coupling;
    for seed in 0..5 {
        let q = DVector::from_vec(lcg(seed, n)) * 1e-4;
        let h = sys.nonlinear_force(&q, Some(&state)).unwrap();
        for k in c.nb + c.ng..c.nb + c.ng + c.m1 {
            assert_eq!(h.force[k], 0.0);
            assert!(h.jacobian.row(k).iter().all(|&v| v == 0.0));
            assert!(h.jacobian.column(k).iter().all(|&v| v == 0.0));
        }
    }
    assert!(sys.asymmetry() < 1e-12);
    assert!(sys.mass.clone().cholesky().is_some());
}

#[test]
fn tied_linear_system_is_linear() {
    let b = bench();
    let s = reduce_support(&b, &ReductionOptions::default()).unwrap();
    let t = reduce_thin(&b, &ReductionOptions::default()).unwrap();
    let mut params = ContactParams::default();
    params.tied = true;
    let sys = assemble_system(&s.reduced, &t.reduced, None, Some(support_contact(&b, &params).unwrap())).unwrap();
    assert!(sys.contact.is_none());
    let n = sys.dim();
    let q = DVector::from_vec(lcg(9, n));
    let z = DVector::zeros(n);
    let (r1, j1) = sys.residual(&q, &z, &z, None).unwrap();
    let (r2, j2) = sys.residual(&(&q * 2.0), &z, &z, None).unwrap();
    assert!((r2 - &r1 * 2.0).amax() < 1e-12 * r1.amax());
    assert_eq!(j1, j2);
    assert_eq!(j1, sys.stiffness);
}

#[test]
fn jacobian_matches_finite_differences() {
    let (sys, _) = contact_system(2);
    let n = sys.dim();
    let patch = sys.contact.clone().unwrap();
    let mut checked = 0;
    for seed in 0..24u64 {
        let mut state = ContactState::new(&patch);
        let mut q0 = DVector::from_vec(lcg(100 + seed, n)) * 0.05;
        for (k, v) in q0.iter_mut().enumerate().take(sys.n_gaps()) {
            *v = 2e-4 * lcg(200 + seed + k as u64, 1)[0];
        }
        state.commit(&patch, &sys.gaps(&q0));
        let q = &q0 + DVector::from_vec(lcg(300 + seed, n)) * 1e-3;
        let mut q = q;
        for k in 0..sys.n_gaps() {
            q[k] = q0[k] + 1.5e-4 * lcg(400 + seed + k as u64, 1)[0];
        }
        let base = sys.nonlinear_force(&q, Some(&state)).unwrap();
        let regimes = contact_nodal_forces(&patch, &state, &sys.gaps(&q)).unwrap().regimes;
        let (_, jac) = sys.residual(&q, &DVector::zeros(n), &DVector::zeros(n), Some(&state)).unwrap();
        assert_eq!(jac, &sys.stiffness + &base.jacobian);
        let scale = base.jacobian.amax();
        let mut ok = true;
        let mut fd = DMatrix::zeros(n, n);
        for j in 0..n {
            let h = if j < sys.n_gaps() { 1e-9 } else { 1e-6 };
            let (mut qp, mut qm) = (q.clone(), q.clone());
            qp[j] += h;
            qm[j] -= h;
            for qq in [&qp, &qm] {
                ok &= contact_nodal_forces(&patch, &state, &sys.gaps(qq)).unwrap().regimes == regimes;
            }
            let fp = sys.nonlinear_force(&qp, Some(&state)).unwrap().force;
            let fm = sys.nonlinear_force(&qm, Some(&state)).unwrap().force;
            fd.set_column(j, &((fp - fm) / (2.0 * h)));
        }
        if !ok {
            continue;
        }
        checked += 1;
        let err = (&fd - &base.jacobian).amax() / scale;
        assert!(err < 1e-6, "seed {seed}: relative Jacobian error {err}");
    }
    assert!(checked >= 20, "only {checked} states away from regime switches");
}

#[test]
fn rigid_interface_shift_leaves_geometric_force_unchanged() {
    let (sys, lateral) = contact_system(3);
    let n = sys.dim();
    let k = sys.coupling.thin_index(lateral);
    let mut no_contact = sys.clone();
    no_contact.contact = None;
    for seed in 0..5 {
        let q = DVector::from_vec(lcg(500 + seed, n)) * 0.05;
        let mut shifted = q.clone();
        shifted[k] += 0.7;
        let a = no_contact.nonlinear_force(&q, None).unwrap().force;
        let b = no_contact.nonlinear_force(&shifted, None).unwrap().force;
        assert!((a - &b).amax() <= 1e-8 * b.amax().max(1.0));
    }
}
