use chronobasis::discretization::{DataKind, DataMatrix};
use chronobasis::linalg::{truncated_svd, DenseMatrix, Truncation};
use chronobasis::rng::SplitMix64;
use chronobasis::selection::{
    deim_interpolation_check, deim_select, draw_indices, leverage_scores, sample_time_points,
};
use proptest::prelude::*;

fn gaussian(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    let mut rng = SplitMix64::new(seed);
    DenseMatrix::from_col_major(rows, cols, (0..rows * cols).map(|_| rng.standard_normal()).collect()).unwrap()
}

fn data(m: DenseMatrix) -> DataMatrix {
    DataMatrix { kind: DataKind::Rhs, matrix: m }
}

fn permute_columns(a: &DenseMatrix, perm: &[usize]) -> DenseMatrix {
    a.select_columns(perm)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn deim_is_permutation_covariant(seed in any::<u64>(), shuffle in any::<u64>()) {
        let a = gaussian(30, 20, seed);
        let mut perm: Vec<usize> = (0..20).collect();
        let mut rng = SplitMix64::new(shuffle);
        for i in (1..20).rev() {
            perm.swap(i, (rng.uniform() * (i + 1) as f64) as usize);
        }
        let base = deim_select(&data(a.clone()), 4).unwrap().indices;
        let moved = deim_select(&data(permute_columns(&a, &perm)), 4).unwrap().indices;
        // column j of the permuted matrix is column perm[j] of the original
        let mapped: Vec<usize> = moved.iter().map(|&j| perm[j]).collect();
        prop_assert_eq!(mapped, base);
    }

    #[test]
    fn leverage_scores_are_a_distribution(rows in 2usize..30, cols in 2usize..40, rank in 1usize..5, seed in any::<u64>()) {
        prop_assume!(rank <= rows.min(cols));
        let a = gaussian(rows, cols, seed);
        let s = leverage_scores(&data(a), rank).unwrap();
        prop_assert!(s.scores.iter().all(|&v| v >= 0.0));
        prop_assert!((s.scores.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn sampling_is_a_pure_function(seed in any::<u64>(), n_rand in 1usize..20) {
        let s = leverage_scores(&data(gaussian(10, 30, 3)), 3).unwrap();
        let a = sample_time_points(&s, n_rand, seed, DataKind::Rhs).unwrap();
        let b = sample_time_points(&s, n_rand, seed, DataKind::Rhs).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.indices.len() <= n_rand);
        prop_assert!(a.indices.windows(2).all(|w| w[0] < w[1]));
    }
}

#[test]
fn zero_columns_get_zero_score() {
    let mut a = gaussian(12, 25, 8);
    for j in [0, 5, 6, 24] {
        a.col_mut(j).iter_mut().for_each(|v| *v = 0.0);
    }
    let s = leverage_scores(&data(a), 4).unwrap();
    for j in [0, 5, 6, 24] {
        assert_eq!(s.scores[j], 0.0);
    }
    let draws = draw_indices(&s.scores, 20_000, 1).unwrap();
    assert!(draws.iter().all(|d| ![0, 5, 6, 24].contains(d)));
}

#[test]
fn orthogonal_equal_norm_columns_have_uniform_scores() {
    // scaled identity columns padded with zero rows
    let n = 8;
    let mut a = DenseMatrix::zeros(12, n);
    for j in 0..n {
        a.set(j, j, 3.0);
    }
    let s = leverage_scores(&data(a), n).unwrap();
    assert!(s.scores.iter().all(|&v| (v - 1.0 / n as f64).abs() <= 1e-14));
}

#[test]
fn deim_on_random_matrices() {
    for trial in 0..50 {
        let a = gaussian(60, 40, 1000 + trial);
        let d = data(a.clone());
        let sel = deim_select(&d, 5).unwrap();
        let mut sorted = sel.indices.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 5);
        assert_eq!(deim_select(&d, 5).unwrap(), sel);
        let res = deim_interpolation_check(&d, &sel.indices).unwrap();
        assert!(res.selected <= 1e-10, "trial {trial}: {}", res.selected);
        let sv = truncated_svd(&a, Truncation::RankCap(40)).unwrap().singular_values;
        let tail = sv[5..].iter().map(|s| s * s).sum::<f64>().sqrt() / a.frobenius_norm();
        assert!(res.full >= tail * (1.0 - 1e-12));
    }
}

#[test]
fn deim_is_exact_on_exact_rank_inputs() {
    for r in 1..=6 {
        let a = gaussian(40, r, r as u64).matmul(&gaussian(r, 30, 100 + r as u64));
        let d = data(a);
        let sel = deim_select(&d, r).unwrap();
        assert!(deim_interpolation_check(&d, &sel.indices).unwrap().full <= 1e-9);
    }
}

/// Binomial 3σ band per bin for the uniform distribution over 40 bins.
#[test]
fn uniform_draw_frequencies() {
    let n = 40;
    let draws = draw_indices(&vec![0.5; n], 100_000, 99).unwrap();
    let mut counts = vec![0usize; n];
    for d in draws {
        counts[d] += 1;
    }
    let p = 1.0 / n as f64;
    let (mean, sd) = (1e5 * p, (1e5 * p * (1.0 - p)).sqrt());
    for (i, &c) in counts.iter().enumerate() {
        assert!((c as f64 - mean).abs() <= 3.0 * sd, "bin {i}: {c}");
    }
}
