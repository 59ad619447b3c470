use chronobasis::linalg::{
    norm2, orthonormalize, spd_solve, truncated_svd, CsrMatrix, DenseMatrix, SparseSpdMatrix, SpdSolver, Truncation,
};
use chronobasis::rng::SplitMix64;
use proptest::prelude::*;

fn gaussian(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    let mut rng = SplitMix64::new(seed);
    DenseMatrix::from_col_major(rows, cols, (0..rows * cols).map(|_| rng.standard_normal()).collect()).unwrap()
}

fn to_na(a: &DenseMatrix) -> nalgebra::DMatrix<f64> {
    nalgebra::DMatrix::from_column_slice(a.rows(), a.cols(), a.as_slice())
}

fn low_rank(rows: usize, cols: usize, rank: usize, seed: u64) -> DenseMatrix {
    gaussian(rows, rank, seed).matmul(&gaussian(rank, cols, seed + 1))
}

#[test]
fn singular_values_match_nalgebra() {
    for (i, &(m, n)) in [(20, 15), (15, 20), (60, 40), (7, 7), (200, 3)].iter().enumerate() {
        let a = gaussian(m, n, 10 + i as u64);
        let ours = truncated_svd(&a, Truncation::RankCap(n.min(m))).unwrap();
        let mut theirs: Vec<f64> = to_na(&a).singular_values().iter().copied().collect();
        theirs.sort_by(|x, y| y.total_cmp(x));
        for (s, t) in ours.singular_values.iter().zip(&theirs) {
            assert!((s - t).abs() <= 1e-10 * theirs[0], "{m}x{n}: {s} vs {t}");
        }
    }
}

#[test]
fn exact_rank_three_is_detected() {
    let a = low_rank(50, 30, 3, 77);
    let svd = truncated_svd(&a, Truncation::RelTol(1e-8)).unwrap();
    assert_eq!(svd.rank(), 3);
}

#[test]
fn factored_and_iterative_solutions_agree_with_dense_lu() {
    let b = gaussian(40, 40, 5);
    let mut a = b.tr_matmul(&b);
    for i in 0..40 {
        a.set(i, i, a.get(i, i) + 0.5);
    }
    let rhs = gaussian(40, 1, 6).col(0).to_vec();
    let reference = to_na(&a).lu().solve(&nalgebra::DVector::from_column_slice(&rhs)).unwrap();
    let spd = SparseSpdMatrix::new(CsrMatrix::from_dense(&a)).unwrap();
    let x1 = spd_solve(&spd, &rhs, 1e-12).unwrap();
    let x2 = SpdSolver::new(spd).unwrap().solve(&rhs).unwrap();
    let scale = reference.norm();
    for i in 0..40 {
        assert!((x1[i] - reference[i]).abs() <= 1e-8 * scale);
        assert!((x2[i] - reference[i]).abs() <= 1e-8 * scale);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn svd_contracts(m in 1usize..30, n in 1usize..30, rank in 1usize..6, seed in any::<u64>(), cap in 1usize..30) {
        let a = if rank < m.min(n) { low_rank(m, n, rank, seed) } else { gaussian(m, n, seed) };
        let svd = truncated_svd(&a, Truncation::RankCap(cap)).unwrap();
        prop_assert!(svd.left.orthonormality_defect() <= 1e-10);
        prop_assert!(svd.right.orthonormality_defect() <= 1e-10);
        // Discarded energy from the full decomposition.
        let full = truncated_svd(&a, Truncation::RankCap(m.min(n))).unwrap();
        let tail: f64 = full.singular_values.iter().skip(svd.rank()).map(|s| s * s).sum();
        let resid = a.sub(&svd.reconstruct()).frobenius_norm().powi(2);
        let total = a.frobenius_norm().powi(2);
        prop_assert!((resid + svd.singular_values.iter().map(|s| s * s).sum::<f64>() - total).abs() <= 1e-8 * total);
        prop_assert!((resid - tail).abs() <= 1e-8 * total);
        prop_assert!(svd.singular_values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn rel_tol_keeps_only_large_values(m in 2usize..25, n in 2usize..25, seed in any::<u64>(), exp in -12i32..0) {
        let tau = 10f64.powi(exp);
        let a = gaussian(m, n, seed);
        let svd = truncated_svd(&a, Truncation::RelTol(tau)).unwrap();
        let s1 = svd.singular_values[0];
        prop_assert!(svd.singular_values.iter().all(|&s| s > tau * s1));
    }

    #[test]
    fn orthonormalize_spans_input(m in 3usize..30, k in 1usize..6, seed in any::<u64>()) {
        prop_assume!(k <= m);
        let v = gaussian(m, k, seed);
        let q = orthonormalize(&v, 1e-12);
        prop_assert_eq!(q.cols(), k);
        prop_assert!(q.orthonormality_defect() <= 1e-12);
        let back = q.matmul(&q.tr_matmul(&v));
        prop_assert!(back.sub(&v).frobenius_norm() <= 1e-10 * v.frobenius_norm());
    }

    #[test]
    fn orthonormalize_drops_dependent_columns(m in 4usize..20, seed in any::<u64>()) {
        let mut v = gaussian(m, 2, seed);
        let c: Vec<f64> = v.col(0).iter().zip(v.col(1)).map(|(a, b)| 2.0 * a - b).collect();
        v.push_column(&c).unwrap();
        prop_assert_eq!(orthonormalize(&v, 1e-10).cols(), 2);
    }

    #[test]
    fn spd_residual_contract(n in 2usize..60, seed in any::<u64>()) {
        let b = gaussian(n, n, seed);
        let mut a = b.tr_matmul(&b);
        for i in 0..n {
            a.set(i, i, a.get(i, i) + 1.0);
        }
        let spd = SparseSpdMatrix::new(CsrMatrix::from_dense(&a)).unwrap();
        let rhs = gaussian(n, 1, seed ^ 1).col(0).to_vec();
        let x = spd_solve(&spd, &rhs, 1e-12).unwrap();
        let r: Vec<f64> = spd.matvec(&x).iter().zip(&rhs).map(|(p, q)| p - q).collect();
        prop_assert!(norm2(&r) <= 1e-12 * norm2(&rhs));
    }
}
