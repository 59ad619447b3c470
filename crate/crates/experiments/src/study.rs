//! Realization harness: selection, basis generation and reduced solve per seed, and
//! quantile statistics over many seeds.

use std::fmt::Write as _;

use rayon::prelude::*;

use chronobasis::basisgen::{generate_basis_with, AnchorMode, BasisGenConfig};
use chronobasis::discretization::{DataKind, DataMatrix, TimeGrid, TransientProblem};
use chronobasis::linalg::io::fmt_f64;
use chronobasis::rng::derive_seed;
use chronobasis::rom::ErrorReport;
use chronobasis::selection::{
    deim_select, leverage_scores, numerical_rank, sample_time_points, LeverageScores, TimePointSelection,
    DEFAULT_RANK_TOL,
};
use chronobasis::timestepping::{FullOrderModel, Trajectory};

use crate::config::{Spe10Config, StoveConfig};
use crate::error::{ExperimentError, Result};
use crate::problems::{spe10_problem, stove_problem};

/// Quantile levels in percent; 0 and 100 are the sample minimum and maximum.
pub const QUANTILE_LEVELS: [f64; 9] = [0.0, 5.0, 25.0, 50.0, 75.0, 88.0, 97.0, 99.0, 100.0];

const SAMPLING_STREAM: u64 = 0x7365_6c65_6374;

/// How time points are chosen in each realization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SelectionPlan {
    /// DEIM on every data source; one realization.
    Deim,
    /// `n_rand` leverage-score draws per data source.
    Leverage { n_rand: usize },
}

/// Local window parameters shared by all realizations of a study.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowParams {
    pub n_t: usize,
    pub k: usize,
    pub tol: f64,
    pub anchor: AnchorMode,
    pub include_initial_value: bool,
}

impl Default for WindowParams {
    fn default() -> Self {
        WindowParams {
            n_t: 15,
            k: 13,
            tol: 1e-8,
            anchor: AnchorMode::EndPoint,
            include_initial_value: true,
        }
    }
}

impl WindowParams {
    pub fn config(&self, seed: u64) -> BasisGenConfig {
        BasisGenConfig {
            anchor: self.anchor,
            include_initial_value: self.include_initial_value,
            ..BasisGenConfig::new(self.n_t, self.k, self.tol).with_seed(seed)
        }
    }
}

/// One data matrix used for selection, with its selection rank and leverage scores.
pub struct DataSource {
    pub data: DataMatrix,
    pub rank: usize,
    pub scores: LeverageScores,
}

impl DataSource {
    /// Rank defaults to the numerical rank at the default tolerance.
    pub fn new(data: DataMatrix, rank: Option<usize>) -> Result<Self> {
        let rank = match rank {
            Some(r) => r,
            None => numerical_rank(&data, DEFAULT_RANK_TOL)?,
        };
        let scores = leverage_scores(&data, rank)?;
        Ok(DataSource { data, rank, scores })
    }
}

/// Assembled operators, the full-order reference trajectory and the selection data.
pub struct Prepared<'p> {
    pub model: FullOrderModel<'p>,
    pub full: Trajectory,
    pub sources: Vec<DataSource>,
}

impl<'p> Prepared<'p> {
    pub fn new(problem: &'p TransientProblem, kinds: &[(DataKind, Option<usize>)]) -> Result<Self> {
        let model = FullOrderModel::new(problem)?;
        let full = model.solve_full()?;
        let sources = kinds
            .iter()
            .map(|&(kind, rank)| DataSource::new(problem.data_matrix(kind), rank))
            .collect::<Result<_>>()?;
        Ok(Prepared { model, full, sources })
    }

    pub fn grid(&self) -> &TimeGrid {
        self.model.problem().grid()
    }

    pub fn select(&self, plan: SelectionPlan, seed: u64) -> chronobasis::Result<TimePointSelection> {
        let parts = self
            .sources
            .iter()
            .enumerate()
            .map(|(i, s)| match plan {
                SelectionPlan::Deim => deim_select(&s.data, s.rank),
                SelectionPlan::Leverage { n_rand } => sample_time_points(
                    &s.scores,
                    n_rand,
                    derive_seed(&[seed, SAMPLING_STREAM, i as u64]),
                    s.data.kind,
                ),
            })
            .collect::<chronobasis::Result<Vec<_>>>()?;
        Ok(TimePointSelection::union(parts))
    }

    fn realization_inner(&self, plan: SelectionPlan, params: &WindowParams, seed: u64) -> chronobasis::Result<Realization> {
        let selection = self.select(plan, seed)?;
        let basis = generate_basis_with(&self.model, &selection, &params.config(seed))?;
        let report = ErrorReport::evaluate(&self.model, &basis, &self.full, plan_name(plan, params))?;
        Ok(Realization {
            seed,
            indices: selection.indices,
            basis_dim: report.basis_dim,
            rel_l2h1: report.rel_l2h1,
            rel_l2_over_time: report.rel_l2_over_time,
        })
    }

    pub fn realization(&self, plan: SelectionPlan, params: &WindowParams, seed: u64) -> Result<Realization> {
        self.realization_inner(plan, params, seed)
            .map_err(|source| ExperimentError::Realization { seed, source })
    }

    /// One realization per seed for sampling plans; a single realization with the first
    /// seed (or 0) for DEIM.
    pub fn run(&self, plan: SelectionPlan, params: &WindowParams, seeds: &[u64]) -> Result<QuantileStudy> {
        let seeds: Vec<u64> = match plan {
            SelectionPlan::Deim => vec![seeds.first().copied().unwrap_or(0)],
            SelectionPlan::Leverage { .. } => seeds.to_vec(),
        };
        if seeds.is_empty() {
            return Err(ExperimentError::Config("a sampling study needs at least one seed".into()));
        }
        let realizations = seeds
            .par_iter()
            .map(|&s| self.realization(plan, params, s))
            .collect::<Result<Vec<_>>>()?;
        Ok(QuantileStudy {
            label: plan_name(plan, params),
            realizations,
        })
    }
}

pub fn plan_name(plan: SelectionPlan, params: &WindowParams) -> String {
    let anchor = match params.anchor {
        AnchorMode::EndPoint => "",
        AnchorMode::StartPoint => "-start",
    };
    match plan {
        SelectionPlan::Deim => format!("deim{anchor}"),
        SelectionPlan::Leverage { n_rand } => format!("leverage{n_rand}{anchor}"),
    }
}

/// Selection data of the heat source study: load vectors at their numerical rank.
pub const STOVE_DATA: [(DataKind, Option<usize>); 1] = [(DataKind::Rhs, None)];

/// Selection data of the channel study: loads and diffusion coefficients, each at its
/// numerical rank.
pub const SPE10_DATA: [(DataKind, Option<usize>); 2] = [(DataKind::Rhs, None), (DataKind::Diffusion, None)];

/// Methods compared in the channel study.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Spe10Method {
    DeimEnd,
    DeimStart,
    Leverage { n_rand: usize },
}

impl Spe10Method {
    /// Selection plan and window parameters, with anchors overriding `base`.
    pub fn plan(&self, base: &WindowParams) -> (SelectionPlan, WindowParams) {
        let with = |anchor| WindowParams {
            anchor,
            ..base.clone()
        };
        match *self {
            Spe10Method::DeimEnd => (SelectionPlan::Deim, with(AnchorMode::EndPoint)),
            Spe10Method::DeimStart => (SelectionPlan::Deim, with(AnchorMode::StartPoint)),
            Spe10Method::Leverage { n_rand } => (SelectionPlan::Leverage { n_rand }, with(AnchorMode::EndPoint)),
        }
    }
}

pub fn run_stove(cfg: &StoveConfig, plan: SelectionPlan, params: &WindowParams, seeds: &[u64]) -> Result<QuantileStudy> {
    let problem = stove_problem(cfg)?;
    Prepared::new(&problem, &STOVE_DATA)?.run(plan, params, seeds)
}

/// Quantile study and mean per-time error curve.
pub fn run_spe10(cfg: &Spe10Config, method: Spe10Method, params: &WindowParams, seeds: &[u64]) -> Result<(QuantileStudy, Vec<f64>)> {
    let problem = spe10_problem(cfg)?;
    let (plan, params) = method.plan(params);
    let study = Prepared::new(&problem, &SPE10_DATA)?.run(plan, &params, seeds)?;
    let curve = study.mean_curve();
    Ok((study, curve))
}

/// Runs `f` on a dedicated pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| ExperimentError::Pool(e.to_string()))?;
    Ok(pool.install(f))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Realization {
    pub seed: u64,
    pub indices: Vec<usize>,
    pub basis_dim: usize,
    pub rel_l2h1: f64,
    pub rel_l2_over_time: Vec<f64>,
}

/// Realizations of one method, in seed-list order.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantileStudy {
    pub label: String,
    pub realizations: Vec<Realization>,
}

/// Nearest-rank quantile of an ascending sample: the smallest value with at least
/// `level`% of the sample at or below it.
pub fn nearest_rank(sorted: &[f64], level: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let n = sorted.len();
    let rank = ((level / 100.0) * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

impl QuantileStudy {
    pub fn errors(&self) -> Vec<f64> {
        self.realizations.iter().map(|r| r.rel_l2h1).collect()
    }

    pub fn sorted_errors(&self) -> Vec<f64> {
        let mut e = self.errors();
        e.sort_by(f64::total_cmp);
        e
    }

    pub fn quantile(&self, level: f64) -> f64 {
        nearest_rank(&self.sorted_errors(), level)
    }

    pub fn quantiles(&self) -> Vec<(f64, f64)> {
        let s = self.sorted_errors();
        QUANTILE_LEVELS.iter().map(|&l| (l, nearest_rank(&s, l))).collect()
    }

    pub fn mean(&self) -> f64 {
        self.errors().iter().sum::<f64>() / self.realizations.len() as f64
    }

    /// Fraction of realizations with error at most `bound`.
    pub fn fraction_at_most(&self, bound: f64) -> f64 {
        self.errors().iter().filter(|&&e| e <= bound).count() as f64 / self.realizations.len() as f64
    }

    /// Mean of the per-time relative L² error over all realizations.
    pub fn mean_curve(&self) -> Vec<f64> {
        let n = self.realizations.len() as f64;
        let len = self.realizations[0].rel_l2_over_time.len();
        let mut m = vec![0.0; len];
        for r in &self.realizations {
            for (mi, v) in m.iter_mut().zip(&r.rel_l2_over_time) {
                *mi += v;
            }
        }
        m.iter_mut().for_each(|v| *v /= n);
        m
    }

    /// Header comment plus one row of quantiles.
    pub fn quantile_table(&self) -> String {
        let names: Vec<String> = QUANTILE_LEVELS.iter().map(|&l| level_name(l)).collect();
        let vals: Vec<String> = self.quantiles().iter().map(|&(_, v)| fmt_f64(v)).collect();
        format!("# method realizations {}\n{} {} {}\n", names.join(" "), self.label, self.realizations.len(), vals.join(" "))
    }

    /// One row per realization: seed, error, basis dimension, selected indices.
    pub fn realization_table(&self) -> String {
        let mut s = String::from("# seed relL2H1 basisDim indices\n");
        for r in &self.realizations {
            let idx: Vec<String> = r.indices.iter().map(usize::to_string).collect();
            writeln!(s, "{} {} {} {}", r.seed, fmt_f64(r.rel_l2h1), r.basis_dim, idx.join(",")).unwrap();
        }
        s
    }

    /// One row per grid point with the mean relative L² error.
    pub fn curve_table(&self, grid: &TimeGrid) -> String {
        let mut s = String::from("# timeIndex time meanRelL2\n");
        for (j, v) in self.mean_curve().iter().enumerate() {
            writeln!(s, "{} {} {}", j, fmt_f64(grid.time(j)), fmt_f64(*v)).unwrap();
        }
        s
    }
}

fn level_name(l: f64) -> String {
    if l == 0.0 {
        "min".into()
    } else if l == 100.0 {
        "max".into()
    } else {
        format!("q{l}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn study(errors: &[f64]) -> QuantileStudy {
        QuantileStudy {
            label: "x".into(),
            realizations: errors
                .iter()
                .enumerate()
                .map(|(i, &e)| Realization {
                    seed: i as u64,
                    indices: vec![i],
                    basis_dim: 1,
                    rel_l2h1: e,
                    rel_l2_over_time: vec![e, 2.0 * e],
                })
                .collect(),
        }
    }

    #[test]
    fn nearest_rank_quantiles() {
        let s: Vec<f64> = (1..=20).map(f64::from).collect();
        assert_eq!(nearest_rank(&s, 0.0), 1.0);
        assert_eq!(nearest_rank(&s, 5.0), 1.0);
        assert_eq!(nearest_rank(&s, 25.0), 5.0);
        assert_eq!(nearest_rank(&s, 50.0), 10.0);
        assert_eq!(nearest_rank(&s, 88.0), 18.0);
        assert_eq!(nearest_rank(&s, 100.0), 20.0);
    }

    #[test]
    fn quantiles_are_monotone() {
        let st = study(&[0.3, 0.1, 0.7, 0.2, 0.9, 0.05]);
        let q = st.quantiles();
        assert!(q.windows(2).all(|w| w[0].1 <= w[1].1));
        assert_eq!(q[0].1, 0.05);
        assert_eq!(q[8].1, 0.9);
        assert!((st.fraction_at_most(0.2) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn mean_curve_and_tables() {
        let st = study(&[1.0, 3.0]);
        assert_eq!(st.mean_curve(), vec![2.0, 4.0]);
        let t = st.quantile_table();
        assert!(t.starts_with("# method realizations min q5 q25 q50 q75 q88 q97 q99 max\nx 2 "));
        assert!(st.realization_table().contains("\n1 3.0000000000000000e0 1 1\n"));
    }
}
