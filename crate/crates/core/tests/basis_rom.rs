use chronobasis::basisgen::{
    basis_quality_report, generate_basis_with, normalized_snapshots, pool_snapshots, windows_from_selection,
    AnchorMode, BasisGenConfig, ReducedBasis,
};
use chronobasis::discretization::{
    AffineDiffusion, CoefficientField, DataKind, DirichletSides, RectangleMesh, Signal, TimeGrid, TransientProblem,
};
use chronobasis::linalg::{orthonormalize, DenseMatrix};
use chronobasis::rom::{rel_l2h1_error, solve_reduced, ReducedModel};
use chronobasis::selection::{deim_select, TimePointSelection};
use chronobasis::timestepping::FullOrderModel;
use proptest::prelude::*;

/// Two pulsed sources on disjoint quarters of a 12×12 unit square, 60 steps on [0, 3].
fn pulses() -> TransientProblem {
    let mesh = RectangleMesh::unit_square(12, DirichletSides::ALL).unwrap();
    let a = mesh.interpolate(|x, y| if x < 0.5 && y < 0.5 { 1.0 } else { 0.0 });
    let b = mesh.interpolate(|x, y| if x > 0.5 && y > 0.5 { 1.0 } else { 0.0 });
    let kappa = CoefficientField::from_fn(&mesh, |x, y| 1.0 + x * y).unwrap();
    let n = mesh.node_count();
    TransientProblem::new(
        mesh,
        TimeGrid::new(3.0, 60).unwrap(),
        AffineDiffusion::constant(kappa),
        vec![
            (Signal::Bump { center: 0.8, height: 10.0, width: 0.3 }, a),
            (Signal::Bump { center: 2.2, height: 8.0, width: 0.3 }, b),
        ],
        vec![],
        vec![0.0; n],
    )
    .unwrap()
}

fn subspace_distance(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    a.sub(&b.matmul(&b.tr_matmul(a))).frobenius_norm()
}

fn in_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(workers).build().unwrap().install(f)
}

#[test]
fn basis_is_identical_for_any_worker_count() {
    let p = pulses();
    let model = FullOrderModel::new(&p).unwrap();
    let sel = TimePointSelection {
        indices: vec![5, 16, 30, 44, 58],
        parts: vec![],
    };
    let cfg = BasisGenConfig::new(10, 8, 1e-8).with_seed(17);
    let runs: Vec<ReducedBasis> = [1, 3, 8]
        .iter()
        .map(|&w| in_pool(w, || generate_basis_with(&model, &sel, &cfg).unwrap()))
        .collect();
    for r in &runs[1..] {
        assert_eq!(r.vectors.as_slice(), runs[0].vectors.as_slice());
        assert_eq!(r.singular_values, runs[0].singular_values);
    }
}

#[test]
fn duplicate_windows_leave_the_basis_unchanged() {
    let p = pulses();
    let model = FullOrderModel::new(&p).unwrap();
    let cfg = BasisGenConfig::new(10, 8, 1e-8).with_seed(4);
    let w = windows_from_selection(&[30], &cfg, 60).unwrap();
    let one = ReducedBasis::pod(&pool_snapshots(&model, &w, &cfg).unwrap(), cfg.tol).unwrap();
    let two = ReducedBasis::pod(&pool_snapshots(&model, &[w[0], w[0]], &cfg).unwrap(), cfg.tol).unwrap();
    assert_eq!(one.dim(), two.dim());
    assert!(subspace_distance(&one.vectors, &two.vectors) <= 1e-8);
}

#[test]
fn end_point_windows_end_at_the_selected_index() {
    let cfg = BasisGenConfig::new(10, 8, 1e-8);
    for w in windows_from_selection(&[12, 30, 60], &cfg, 60).unwrap() {
        assert_eq!(w.end(), w.selected);
        assert_eq!(w.steps, 10);
    }
    let cfg = cfg.with_anchor(AnchorMode::StartPoint);
    for w in windows_from_selection(&[0, 30], &cfg, 60).unwrap() {
        assert_eq!(w.start, w.selected);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn lower_tolerance_never_shrinks_the_basis(seed in any::<u64>(), a in 10usize..61, b in 10usize..61) {
        let p = pulses();
        let model = FullOrderModel::new(&p).unwrap();
        let sel = TimePointSelection { indices: vec![a, b], parts: vec![] };
        let dims: Vec<usize> = [1e-2, 1e-4, 1e-6, 1e-8, 1e-10]
            .iter()
            .map(|&tol| generate_basis_with(&model, &sel, &BasisGenConfig::new(10, 8, tol).with_seed(seed)).unwrap().dim())
            .collect();
        prop_assert!(dims.windows(2).all(|w| w[0] <= w[1]), "{:?}", dims);
    }

    #[test]
    fn appending_columns_never_increases_projection_error(seed in any::<u64>(), k in 1usize..6) {
        let p = pulses();
        let model = FullOrderModel::new(&p).unwrap();
        let full = model.solve_full().unwrap();
        let mut rng = chronobasis::rng::SplitMix64::new(seed);
        let extra = DenseMatrix::from_col_major(p.dofs(), 8, (0..p.dofs() * 8).map(|_| rng.standard_normal()).collect()).unwrap();
        let q = orthonormalize(&extra, 1e-12);
        let small = ReducedBasis::from_vectors(q.leading_columns(k)).unwrap();
        let big = ReducedBasis::from_vectors(q.leading_columns(k + 2)).unwrap();
        let e1 = basis_quality_report(&small, &full, model.h1()).unwrap();
        let e2 = basis_quality_report(&big, &full, model.h1()).unwrap();
        for (a, b) in e1.iter().zip(&e2) {
            prop_assert!(*b <= *a + 1e-12);
        }
        // random directions capture almost nothing of a nonzero state
        for (e, u) in e1.iter().zip(&full.states) {
            if model.h1().energy_norm(u) > 0.0 {
                prop_assert!(*e > 0.5);
            }
        }
    }
}

#[test]
fn pod_of_the_trajectory_is_galerkin_exact() {
    let p = pulses();
    let model = FullOrderModel::new(&p).unwrap();
    let full = model.solve_full().unwrap();
    let dt = p.grid().dt();

    let pod = ReducedBasis::pod(&full.to_matrix(), 1e-12).unwrap();
    let err = rel_l2h1_error(&full, &solve_reduced(&model, &pod).unwrap(), model.h1(), dt).unwrap();
    assert!(err <= 1e-8, "{err}");

    let normalized = ReducedBasis::pod(&normalized_snapshots(&full, model.h1()).unwrap(), 1e-12).unwrap();
    let q = basis_quality_report(&normalized, &full, model.h1()).unwrap();
    assert!(q.iter().all(|&e| e <= 1e-8));

    let identity = ReducedBasis::from_vectors(DenseMatrix::identity(p.dofs())).unwrap();
    let rom = ReducedModel::new(&model, &identity).unwrap().solve().unwrap();
    assert!(rel_l2h1_error(&full, &rom, model.h1(), dt).unwrap() <= 1e-10);
}

#[test]
fn deim_selection_catches_both_pulses() {
    let p = pulses();
    let model = FullOrderModel::new(&p).unwrap();
    let full = model.solve_full().unwrap();
    let sel = deim_select(&p.data_matrix(DataKind::Rhs), 2).unwrap();
    let times = sel.times(p.grid());
    assert!(times.iter().any(|t| (t - 0.8).abs() <= 0.6) && times.iter().any(|t| (t - 2.2).abs() <= 0.6), "{times:?}");
    let basis = generate_basis_with(&model, &sel, &BasisGenConfig::new(15, 13, 1e-8)).unwrap();
    let err = rel_l2h1_error(&full, &solve_reduced(&model, &basis).unwrap(), model.h1(), p.grid().dt()).unwrap();
    assert!(err <= 1e-2, "{err}");
}

#[test]
fn scaled_trajectory_has_exact_relative_error() {
    let p = pulses();
    let model = FullOrderModel::new(&p).unwrap();
    let full = model.solve_full().unwrap();
    let mut scaled = full.clone();
    for s in &mut scaled.states {
        s.iter_mut().for_each(|v| *v *= 1.0 + 1e-3);
    }
    let e = rel_l2h1_error(&full, &scaled, model.h1(), p.grid().dt()).unwrap();
    assert!((e - 1e-3).abs() <= 1e-12);
}
