//! Time point selection from data matrices whose columns are time points.
//!
//! Both methods start from the leading right singular vectors `V_r` of the data
//! matrix. Leverage scores are the squared row norms of `V_r` divided by `r` and
//! define a sampling distribution over time points. DEIM walks through the columns of
//! `V_r` greedily: each new vector is interpolated on the indices picked so far, and
//! the largest entry of the interpolation residual gives the next index.

use std::fmt::Write as _;

use crate::discretization::{DataKind, DataMatrix, TimeGrid};
use crate::error::{Error, Result};
use crate::linalg::dense::solve_dense;
use crate::linalg::io::fmt_f64;
use crate::linalg::{truncated_svd, DenseMatrix, Svd, Truncation};
use crate::rng::SplitMix64;

/// Relative tolerance defining the default selection rank.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Singular values at or below this fraction of `σ_1` count as zero rank.
pub const RANK_FLOOR: f64 = 1e-12;

/// Pivots of the DEIM interpolation system below this are treated as singular.
pub const DEIM_PIVOT_FLOOR: f64 = 1e-14;

/// Entries within this relative distance of the maximum tie for the argmax; the
/// smallest index wins. Identical data columns produce singular-vector rows that
/// differ only by rounding, so exact comparison would pick an arbitrary member.
pub const ARGMAX_TIE_RTOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct LeverageScores {
    pub rank: usize,
    /// One nonnegative score per time point, summing to one.
    pub scores: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SelectionMethod {
    Deim { rank: usize },
    Leverage { rank: usize, n_rand: usize, seed: u64 },
}

/// Selection produced from one data matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SelectionPart {
    pub source: DataKind,
    pub method: SelectionMethod,
    /// Selected indices of this part, in selection order.
    pub indices: Vec<usize>,
    /// Leverage scores behind a sampled part.
    pub scores: Option<Vec<f64>>,
}

/// Distinct selected time-grid indices with the parts they came from.
#[derive(Clone, Debug, PartialEq)]
pub struct TimePointSelection {
    pub indices: Vec<usize>,
    pub parts: Vec<SelectionPart>,
}

impl TimePointSelection {
    fn single(part: SelectionPart) -> Self {
        TimePointSelection {
            indices: part.indices.clone(),
            parts: vec![part],
        }
    }

    /// Ordered union: indices keep their first-appearance order across parts.
    pub fn union(selections: Vec<TimePointSelection>) -> Self {
        let mut indices: Vec<usize> = Vec::new();
        let mut parts = Vec::new();
        for s in selections {
            for i in s.indices {
                if !indices.contains(&i) {
                    indices.push(i);
                }
            }
            parts.extend(s.parts);
        }
        TimePointSelection { indices, parts }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Selected times on `grid`.
    pub fn times(&self, grid: &TimeGrid) -> Vec<f64> {
        self.indices.iter().map(|&j| grid.time(j)).collect()
    }

    /// One line per index: `timeIndex time value`, where `value` is the leverage score
    /// for sampled parts and the 0-based selection order for DEIM parts.
    pub fn to_text(&self, grid: &TimeGrid) -> String {
        let mut s = String::new();
        for &j in &self.indices {
            let part = self
                .parts
                .iter()
                .find(|p| p.indices.contains(&j))
                .expect("every index belongs to a part");
            let value = match (&part.method, &part.scores) {
                (SelectionMethod::Leverage { .. }, Some(scores)) => scores[j],
                _ => part.indices.iter().position(|&k| k == j).unwrap() as f64,
            };
            writeln!(s, "{} {} {}", j, fmt_f64(grid.time(j)), fmt_f64(value)).unwrap();
        }
        s
    }
}

fn svd_for_rank(data: &DataMatrix, rank: usize) -> Result<Svd> {
    if rank == 0 {
        return Err(Error::invalid("selection rank must be at least 1"));
    }
    let svd = truncated_svd(&data.matrix, Truncation::RankCap(rank))?;
    let s1 = svd.singular_values.first().copied().unwrap_or(0.0);
    if svd.rank() < rank || svd.singular_values[rank - 1] <= RANK_FLOOR * s1 {
        return Err(Error::invalid(format!(
            "rank {rank} exceeds the numerical rank of the {} data matrix",
            data.kind.name()
        )));
    }
    Ok(svd)
}

/// Numerical rank at relative tolerance `tol`.
pub fn numerical_rank(data: &DataMatrix, tol: f64) -> Result<usize> {
    Ok(truncated_svd(&data.matrix, Truncation::RelTol(tol))?.rank())
}

/// Rank-`r` leverage scores of the columns of `data`. Zero columns score exactly zero.
pub fn leverage_scores(data: &DataMatrix, rank: usize) -> Result<LeverageScores> {
    let svd = svd_for_rank(data, rank)?;
    let mut scores = scores_from_right(&svd.right, rank);
    for (s, c) in scores.iter_mut().zip(data.matrix.columns()) {
        if c.iter().all(|&v| v == 0.0) {
            *s = 0.0;
        }
    }
    Ok(LeverageScores { rank, scores })
}

fn scores_from_right(v: &DenseMatrix, rank: usize) -> Vec<f64> {
    let r = rank as f64;
    (0..v.rows())
        .map(|j| (0..rank).map(|k| v.get(j, k).powi(2)).sum::<f64>() / r)
        .collect()
}

/// `n_rand` independent draws from the score distribution, de-duplicated and sorted.
pub fn sample_time_points(scores: &LeverageScores, n_rand: usize, seed: u64, source: DataKind) -> Result<TimePointSelection> {
    if n_rand == 0 {
        return Err(Error::invalid("need at least one draw"));
    }
    let draws = draw_indices(&scores.scores, n_rand, seed)?;
    let mut indices = draws;
    indices.sort_unstable();
    indices.dedup();
    Ok(TimePointSelection::single(SelectionPart {
        source,
        method: SelectionMethod::Leverage {
            rank: scores.rank,
            n_rand,
            seed,
        },
        indices,
        scores: Some(scores.scores.clone()),
    }))
}

/// Raw draws (with repetitions) by inverse-CDF lookup of uniform variates.
pub fn draw_indices(weights: &[f64], count: usize, seed: u64) -> Result<Vec<usize>> {
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::invalid("sampling weights must be finite and nonnegative"));
    }
    let mut cdf = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in weights {
        acc += w;
        cdf.push(acc);
    }
    if !(acc > 0.0) {
        return Err(Error::invalid("sampling weights sum to zero"));
    }
    let last_positive = weights.iter().rposition(|&w| w > 0.0).expect("positive weight exists");
    let mut rng = SplitMix64::new(seed);
    Ok((0..count)
        .map(|_| {
            let u = rng.uniform() * acc;
            cdf.partition_point(|&c| c <= u).min(last_positive)
        })
        .collect())
}

/// Index of the largest `|x_j|`; near-ties go to the smallest index.
fn argmax_abs(x: &[f64]) -> usize {
    let m = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    x.iter()
        .position(|v| v.abs() >= m * (1.0 - ARGMAX_TIE_RTOL))
        .expect("nonempty vector")
}

/// DEIM indices from the leading `r` columns of `v` (rows are time points).
pub fn deim_indices(v: &DenseMatrix, rank: usize) -> Result<Vec<usize>> {
    if rank == 0 || rank > v.cols() {
        return Err(Error::invalid(format!("DEIM rank {rank} not in 1..={}", v.cols())));
    }
    let mut p = vec![argmax_abs(v.col(0))];
    for i in 1..rank {
        let basis = v.leading_columns(i).select_rows(&p);
        let target: Vec<f64> = p.iter().map(|&j| v.get(j, i)).collect();
        let coef = solve_dense(&basis, &target, DEIM_PIVOT_FLOOR)?;
        let mut res = v.col(i).to_vec();
        for (k, c) in coef.iter().enumerate() {
            for (r, vk) in res.iter_mut().zip(v.col(k)) {
                *r -= c * vk;
            }
        }
        let next = argmax_abs(&res);
        if p.contains(&next) {
            return Err(Error::Numerical(format!("DEIM selected index {next} twice")));
        }
        p.push(next);
    }
    Ok(p)
}

/// Deterministic DEIM column selection of `rank` time points, in selection order.
pub fn deim_select(data: &DataMatrix, rank: usize) -> Result<TimePointSelection> {
    let svd = svd_for_rank(data, rank)?;
    let indices = deim_indices(&svd.right, rank)?;
    Ok(TimePointSelection::single(SelectionPart {
        source: data.kind,
        method: SelectionMethod::Deim { rank },
        indices,
        scores: None,
    }))
}

/// Relative residuals of the DEIM interpolatory approximation `A ≈ C X`, where `C`
/// holds the selected columns and `X = (Pᵀ V_r)⁻ᵀ V_rᵀ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InterpolationResidual {
    /// `‖A − CX‖_F / ‖A‖_F`
    pub full: f64,
    /// Same, restricted to the selected columns; zero up to rounding.
    pub selected: f64,
}

pub fn deim_interpolation_check(data: &DataMatrix, indices: &[usize]) -> Result<InterpolationResidual> {
    let r = indices.len();
    let svd = svd_for_rank(data, r)?;
    let a = &data.matrix;
    let v = &svd.right;
    // Solve (Pᵀ V)ᵀ X = Vᵀ column by column.
    let pv_t = v.select_rows(indices).transpose();
    let mut x = DenseMatrix::zeros(r, a.cols());
    for j in 0..a.cols() {
        let col = solve_dense(&pv_t, &v.row(j), DEIM_PIVOT_FLOOR)?;
        x.col_mut(j).copy_from_slice(&col);
    }
    let c = a.select_columns(indices);
    let resid = a.sub(&c.matmul(&x));
    let anorm = a.frobenius_norm();
    let cnorm = c.frobenius_norm();
    let sel = resid.select_columns(indices).frobenius_norm();
    Ok(InterpolationResidual {
        full: if anorm > 0.0 { resid.frobenius_norm() / anorm } else { 0.0 },
        selected: if cnorm > 0.0 { sel / cnorm } else { sel },
    })
}
