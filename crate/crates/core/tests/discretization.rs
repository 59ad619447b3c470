use chronobasis::discretization::{
    assemble_mass, assemble_stiffness, h1_inner_product, AffineDiffusion, CoefficientField, DataKind,
    DirichletSides, RectangleMesh, Signal, TimeGrid, TransientProblem,
};
use chronobasis::linalg::CsrMatrix;
use proptest::prelude::*;

fn min_eigenvalue(a: &CsrMatrix) -> f64 {
    let d = a.to_dense();
    let m = nalgebra::DMatrix::from_column_slice(d.rows(), d.cols(), d.as_slice());
    m.symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

fn sides(code: u8) -> DirichletSides {
    DirichletSides {
        left: code & 1 != 0,
        right: code & 2 != 0,
        bottom: code & 4 != 0,
        top: code & 8 != 0,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn assembled_operators_are_spd(nx in 2usize..7, ny in 2usize..7, code in 1u8..16, seed in any::<u64>()) {
        let mesh = RectangleMesh::new(1.5, 0.7, nx, ny, sides(code)).unwrap();
        prop_assume!(mesh.dof_count() > 0);
        let mut rng = chronobasis::rng::SplitMix64::new(seed);
        let kappa = CoefficientField::from_cells(&mesh, (0..mesh.cell_count()).map(|_| 0.01 + rng.uniform()).collect()).unwrap();
        let m = assemble_mass(&mesh).unwrap();
        let k = assemble_stiffness(&mesh, &kappa);
        let h = h1_inner_product(&mesh).unwrap();
        for a in [m.csr(), &k, h.csr()] {
            prop_assert!(a.asymmetry() <= 1e-12);
        }
        prop_assert!(min_eigenvalue(m.csr()) > 0.0);
        prop_assert!(min_eigenvalue(h.csr()) > 0.0);
        prop_assert!(min_eigenvalue(&k) > 0.0);
        // bit-identical reassembly
        prop_assert_eq!(assemble_stiffness(&mesh, &kappa).triplets(), k.triplets());
    }
}

fn bump_problem(steps: usize) -> TransientProblem {
    let mesh = RectangleMesh::unit_square(6, DirichletSides::ALL).unwrap();
    let kappa = CoefficientField::constant(&mesh, 1.0).unwrap();
    let src = mesh.interpolate(|x, y| x * y);
    TransientProblem::new(
        mesh,
        TimeGrid::new(2.0, steps).unwrap(),
        AffineDiffusion::constant(kappa),
        vec![(Signal::Bump { center: 1.0, height: 2.0, width: 0.3 }, src)],
        vec![],
        vec![0.0; 49],
    )
    .unwrap()
}

#[test]
fn data_matrix_columns_are_pointwise_in_time() {
    let coarse = bump_problem(10);
    let fine = bump_problem(20);
    let (a, b) = (coarse.data_matrix(DataKind::Rhs), fine.data_matrix(DataKind::Rhs));
    assert_eq!(a.time_points(), 11);
    assert_eq!(b.time_points(), 21);
    for j in 0..=10 {
        assert_eq!(a.matrix.col(j), b.matrix.col(2 * j), "column {j}");
        assert_eq!(a.matrix.col(j), coarse.load_at(coarse.grid().time(j)).as_slice());
    }
    let d = coarse.data_matrix(DataKind::Diffusion);
    assert_eq!(d.matrix.rows(), coarse.mesh().cell_count());
    assert!(d.matrix.columns().all(|c| c.iter().all(|&v| v == 1.0)));
}
