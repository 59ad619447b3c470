//! Reduced basis generation from local random-start simulations.
//!
//! Every selected time point defines a short window of implicit Euler steps. Each
//! window starts from a standard Gaussian vector, the trailing states of the local
//! solve are kept as snapshots, and the pooled snapshots are compressed by a truncated
//! SVD. Windows are independent and run on the current rayon pool.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::io::fmt_f64;
use crate::linalg::{truncated_svd, write_matrix, DenseCholesky, DenseMatrix, SparseSpdMatrix, Truncation};
use crate::rng::{derive_seed, SplitMix64};
use crate::selection::TimePointSelection;
use crate::timestepping::{FullOrderModel, Trajectory};
use crate::discretization::TransientProblem;

/// Where a selected time point sits in its window.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnchorMode {
    /// The window ends at the selected point.
    EndPoint,
    /// The window starts at the selected point.
    StartPoint,
}

impl AnchorMode {
    pub fn name(&self) -> &'static str {
        match self {
            AnchorMode::EndPoint => "endPoint",
            AnchorMode::StartPoint => "startPoint",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BasisGenConfig {
    /// Local steps per window.
    pub n_t: usize,
    /// The first `k` states of a full window are discarded.
    pub k: usize,
    /// Relative singular value cutoff.
    pub tol: f64,
    pub anchor: AnchorMode,
    pub seed: u64,
    pub include_initial_value: bool,
    /// Gaussian start vectors per window.
    pub replicates: usize,
}

impl BasisGenConfig {
    pub fn new(n_t: usize, k: usize, tol: f64) -> Self {
        BasisGenConfig {
            n_t,
            k,
            tol,
            anchor: AnchorMode::EndPoint,
            seed: 0,
            include_initial_value: true,
            replicates: 1,
        }
    }

    pub fn with_anchor(mut self, anchor: AnchorMode) -> Self {
        self.anchor = anchor;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 || self.k > self.n_t {
            return Err(Error::invalid(format!("need 1 <= k <= nT, got k = {}, nT = {}", self.k, self.n_t)));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::invalid(format!("tol must lie in (0, 1), got {}", self.tol)));
        }
        if self.replicates == 0 {
            return Err(Error::invalid("need at least one start vector per window"));
        }
        Ok(())
    }
}

impl Default for BasisGenConfig {
    fn default() -> Self {
        BasisGenConfig::new(15, 13, 1e-8)
    }
}

/// Local simulation window `[start, start + steps]` around a selected index.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Window {
    pub selected: usize,
    pub start: usize,
    pub steps: usize,
    /// Fewer than `k` steps; all states are kept.
    pub short: bool,
}

impl Window {
    pub fn end(&self) -> usize {
        self.start + self.steps
    }
}

/// Windows for the selected indices in ascending index order.
pub fn windows_from_selection(indices: &[usize], cfg: &BasisGenConfig, m: usize) -> Result<Vec<Window>> {
    cfg.validate()?;
    let mut sorted = indices.to_vec();
    sorted.sort_unstable();
    sorted
        .into_iter()
        .map(|p| {
            if p > m {
                return Err(Error::invalid(format!("selected index {p} beyond grid end {m}")));
            }
            let (start, steps) = match cfg.anchor {
                AnchorMode::EndPoint => (p.saturating_sub(cfg.n_t), cfg.n_t.min(p)),
                AnchorMode::StartPoint => (p, cfg.n_t.min(m - p)),
            };
            Ok(Window {
                selected: p,
                start,
                steps,
                short: steps < cfg.k,
            })
        })
        .collect()
}

/// Seed of replicate `r` of the window at selected index `p`.
pub fn window_seed(cfg_seed: u64, p: usize, r: usize) -> u64 {
    derive_seed(&[cfg_seed, p as u64, r as u64])
}

/// Standard Gaussian nodal vector restricted to the unknowns.
pub fn gaussian_start(problem: &TransientProblem, seed: u64) -> Vec<f64> {
    let mut rng = SplitMix64::new(seed);
    let nodal: Vec<f64> = (0..problem.mesh().node_count()).map(|_| rng.standard_normal()).collect();
    problem.mesh().restrict(&nodal)
}

fn h1_normalized(h1: &SparseSpdMatrix, mut u: Vec<f64>) -> Option<Vec<f64>> {
    let n = h1.energy_norm(&u);
    (n > 0.0 && n.is_finite()).then(|| {
        u.iter_mut().for_each(|v| *v /= n);
        u
    })
}

/// Nonzero states of a trajectory scaled to unit H¹ norm, as matrix columns.
pub fn normalized_snapshots(traj: &Trajectory, h1: &SparseSpdMatrix) -> Result<DenseMatrix> {
    let cols: Vec<Vec<f64>> = traj.states.iter().filter_map(|u| h1_normalized(h1, u.clone())).collect();
    if cols.is_empty() {
        return Err(Error::Generation("trajectory has no nonzero state".into()));
    }
    DenseMatrix::from_columns(h1.dim(), &cols)
}

/// Unit-H¹ snapshots of one window, replicates in order.
pub fn window_snapshots(model: &FullOrderModel<'_>, w: &Window, cfg: &BasisGenConfig) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::new();
    for r in 0..cfg.replicates {
        let u0 = gaussian_start(model.problem(), window_seed(cfg.seed, w.selected, r));
        let traj = model.solve_local(w.start, w.steps, &u0)?;
        let first = if w.short { 0 } else { cfg.k };
        out.extend(traj.states.into_iter().skip(first).filter_map(|s| h1_normalized(model.h1(), s)));
    }
    Ok(out)
}

/// Pooled snapshot matrix of all windows, in window order, followed by the normalized
/// initial value when requested and nonzero.
pub fn pool_snapshots(model: &FullOrderModel<'_>, windows: &[Window], cfg: &BasisGenConfig) -> Result<DenseMatrix> {
    cfg.validate()?;
    let per_window: Vec<Vec<Vec<f64>>> = windows
        .par_iter()
        .map(|w| window_snapshots(model, w, cfg))
        .collect::<Result<_>>()?;
    let mut columns: Vec<Vec<f64>> = per_window.into_iter().flatten().collect();
    if cfg.include_initial_value {
        if let Some(u0) = h1_normalized(model.h1(), model.problem().initial_value().to_vec()) {
            columns.push(u0);
        }
    }
    if columns.is_empty() {
        return Err(Error::Generation("snapshot pool is empty".into()));
    }
    DenseMatrix::from_columns(model.problem().dofs(), &columns)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BasisProvenance {
    pub selection: TimePointSelection,
    pub config: BasisGenConfig,
    pub windows: Vec<Window>,
    pub snapshots: usize,
}

/// Column-orthonormal spatial basis on the unknowns.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedBasis {
    pub vectors: DenseMatrix,
    /// Kept singular values of the compressed matrix.
    pub singular_values: Vec<f64>,
    pub provenance: Option<BasisProvenance>,
}

/// Accepted deviation of `ΦᵀΦ` from the identity.
pub const ORTHONORMALITY_TOL: f64 = 1e-10;

impl ReducedBasis {
    /// Wraps given orthonormal columns.
    pub fn from_vectors(vectors: DenseMatrix) -> Result<Self> {
        if vectors.cols() == 0 {
            return Err(Error::invalid("basis needs at least one vector"));
        }
        let defect = vectors.orthonormality_defect();
        if !(defect <= ORTHONORMALITY_TOL) {
            return Err(Error::invalid(format!("basis columns are not orthonormal (defect {defect:.3e})")));
        }
        Ok(ReducedBasis {
            vectors,
            singular_values: Vec::new(),
            provenance: None,
        })
    }

    /// Left singular vectors of `snapshots` above `tol·σ₁`.
    pub fn pod(snapshots: &DenseMatrix, tol: f64) -> Result<Self> {
        let svd = truncated_svd(snapshots, Truncation::RelTol(tol))?;
        if svd.rank() == 0 {
            return Err(Error::Generation("snapshot matrix is zero".into()));
        }
        Ok(ReducedBasis {
            vectors: svd.left,
            singular_values: svd.singular_values,
            provenance: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.vectors.cols()
    }

    /// Writes the vectors in the matrix text format and a metadata file next to them
    /// (`<path>.meta`); returns the metadata path.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<PathBuf> {
        let path = path.as_ref();
        write_matrix(path, &self.vectors)?;
        let mut meta = path.as_os_str().to_owned();
        meta.push(".meta");
        let meta = PathBuf::from(meta);
        std::fs::write(&meta, self.metadata()).map_err(|e| Error::io(&meta, e))?;
        Ok(meta)
    }

    /// `key value…` lines describing how the basis was built.
    pub fn metadata(&self) -> String {
        let mut s = String::new();
        writeln!(s, "dim {}", self.dim()).unwrap();
        if let Some(p) = &self.provenance {
            let c = &p.config;
            writeln!(s, "nT {}", c.n_t).unwrap();
            writeln!(s, "k {}", c.k).unwrap();
            writeln!(s, "tol {}", fmt_f64(c.tol)).unwrap();
            writeln!(s, "anchor {}", c.anchor.name()).unwrap();
            writeln!(s, "seed {}", c.seed).unwrap();
            writeln!(s, "includeInitialValue {}", c.include_initial_value).unwrap();
            writeln!(s, "replicates {}", c.replicates).unwrap();
            let idx: Vec<String> = p.selection.indices.iter().map(usize::to_string).collect();
            writeln!(s, "selection {}", idx.join(" ")).unwrap();
            let win: Vec<String> = p.windows.iter().map(|w| format!("{}:{}", w.start, w.steps)).collect();
            writeln!(s, "windows {}", win.join(" ")).unwrap();
            writeln!(s, "snapshots {}", p.snapshots).unwrap();
        }
        let sv: Vec<String> = self.singular_values.iter().map(|v| fmt_f64(*v)).collect();
        writeln!(s, "singularValues {}", sv.join(" ")).unwrap();
        s
    }
}

/// Basis from local random-start simulations around the selected time points.
pub fn generate_basis(problem: &TransientProblem, sel: &TimePointSelection, cfg: &BasisGenConfig) -> Result<ReducedBasis> {
    generate_basis_with(&FullOrderModel::new(problem)?, sel, cfg)
}

/// As [`generate_basis`], reusing assembled operators.
pub fn generate_basis_with(model: &FullOrderModel<'_>, sel: &TimePointSelection, cfg: &BasisGenConfig) -> Result<ReducedBasis> {
    let windows = windows_from_selection(&sel.indices, cfg, model.problem().grid().steps())?;
    let pool = pool_snapshots(model, &windows, cfg)?;
    let snapshots = pool.cols();
    let mut basis = ReducedBasis::pod(&pool, cfg.tol)?;
    basis.provenance = Some(BasisProvenance {
        selection: sel.clone(),
        config: cfg.clone(),
        windows,
        snapshots,
    });
    Ok(basis)
}

/// Relative H¹ error of the H¹-orthogonal projection of each state onto the basis.
/// States with zero norm report the absolute error.
pub fn basis_quality_report(basis: &ReducedBasis, traj: &Trajectory, h1: &SparseSpdMatrix) -> Result<Vec<f64>> {
    let phi = &basis.vectors;
    if phi.rows() != h1.dim() {
        return Err(Error::invalid(format!("basis has {} rows, inner product has dimension {}", phi.rows(), h1.dim())));
    }
    let h_phi = DenseMatrix::from_columns(phi.rows(), &phi.columns().map(|c| h1.matvec(c)).collect::<Vec<_>>())?;
    let gram = DenseCholesky::factor(&phi.tr_matmul(&h_phi))?;
    traj.states
        .iter()
        .map(|u| {
            if u.len() != phi.rows() {
                return Err(Error::invalid("state length does not match the basis"));
            }
            let c = gram.solve(&h_phi.tr_matvec(u));
            let proj = phi.matvec(&c);
            let r: Vec<f64> = u.iter().zip(&proj).map(|(a, b)| a - b).collect();
            let err = h1.energy_norm(&r);
            let norm = h1.energy_norm(u);
            Ok(if norm > 0.0 { err / norm } else { err })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{AffineDiffusion, CoefficientField, DirichletSides, RectangleMesh, Signal, TimeGrid};

    fn cfg(n_t: usize, k: usize) -> BasisGenConfig {
        BasisGenConfig::new(n_t, k, 1e-8)
    }

    fn problem() -> TransientProblem {
        let mesh = RectangleMesh::unit_square(8, DirichletSides::ALL).unwrap();
        let kappa = CoefficientField::constant(&mesh, 1.0).unwrap();
        let nodes = mesh.node_count();
        TransientProblem::new(
            mesh,
            TimeGrid::new(1.0, 40).unwrap(),
            AffineDiffusion::constant(kappa),
            vec![(Signal::Constant(1.0), vec![1.0; nodes])],
            vec![],
            vec![0.0; nodes],
        )
        .unwrap()
    }

    #[test]
    fn window_arithmetic() {
        let w = windows_from_selection(&[50, 7, 0], &cfg(15, 13), 200).unwrap();
        assert_eq!((w[0].start, w[0].steps, w[0].short), (0, 0, true));
        assert_eq!((w[1].start, w[1].steps, w[1].short), (0, 7, true));
        assert_eq!((w[2].start, w[2].steps, w[2].short), (35, 15, false));
        assert_eq!(w[2].end(), 50);
        let s = windows_from_selection(&[160, 195, 200], &cfg(15, 13).with_anchor(AnchorMode::StartPoint), 200).unwrap();
        assert_eq!((s[0].start, s[0].steps), (160, 15));
        assert_eq!((s[1].start, s[1].steps, s[1].short), (195, 5, true));
        assert_eq!((s[2].start, s[2].steps), (200, 0));
    }

    #[test]
    fn invalid_config_rejected() {
        assert!(cfg(5, 6).validate().is_err());
        assert!(cfg(5, 0).validate().is_err());
        assert!(BasisGenConfig::new(5, 3, 1.0).validate().is_err());
    }

    #[test]
    fn snapshot_counts() {
        let p = problem();
        let model = FullOrderModel::new(&p).unwrap();
        let c = cfg(15, 13);
        let w = windows_from_selection(&[20], &c, 40).unwrap();
        assert_eq!(window_snapshots(&model, &w[0], &c).unwrap().len(), 3);
        let c1 = cfg(6, 6);
        let w = windows_from_selection(&[20, 3, 0], &c1, 40).unwrap();
        let counts: Vec<usize> = w.iter().map(|w| window_snapshots(&model, w, &c1).unwrap().len()).collect();
        assert_eq!(counts, vec![1, 4, 1]);
    }

    #[test]
    fn snapshots_have_unit_h1_norm() {
        let p = problem();
        let model = FullOrderModel::new(&p).unwrap();
        let c = cfg(5, 2);
        let w = windows_from_selection(&[10], &c, 40).unwrap();
        for s in window_snapshots(&model, &w[0], &c).unwrap() {
            assert!((model.h1().energy_norm(&s) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn basis_is_orthonormal_and_reproducible() {
        let p = problem();
        let sel = TimePointSelection { indices: vec![10, 30], parts: vec![] };
        let c = cfg(5, 3).with_seed(4);
        let a = generate_basis(&p, &sel, &c).unwrap();
        let b = generate_basis(&p, &sel, &c).unwrap();
        assert_eq!(a, b);
        assert!(a.vectors.orthonormality_defect() < 1e-10);
        assert!(a.dim() >= 1 && a.dim() <= 6);
        assert_eq!(a.provenance.as_ref().unwrap().snapshots, 6);
    }

    #[test]
    fn empty_pool_is_an_error() {
        let p = problem();
        let model = FullOrderModel::new(&p).unwrap();
        let mut c = cfg(5, 3);
        c.include_initial_value = false;
        assert!(matches!(pool_snapshots(&model, &[], &c), Err(Error::Generation(_))));
    }

    #[test]
    fn quality_of_containing_basis_is_zero() {
        let p = problem();
        let model = FullOrderModel::new(&p).unwrap();
        let traj = model.solve_full().unwrap();
        let u = traj.states[12].clone();
        let n = crate::linalg::norm2(&u);
        let phi = DenseMatrix::from_columns(u.len(), &[u.iter().map(|v| v / n).collect::<Vec<_>>()]).unwrap();
        let basis = ReducedBasis::from_vectors(phi).unwrap();
        let q = basis_quality_report(&basis, &traj, model.h1()).unwrap();
        assert!(q[12] < 1e-13);
        assert_eq!(q[0], 0.0);
        assert!(q[1] > 0.0);
    }

    #[test]
    fn metadata_echoes_config() {
        let p = problem();
        let sel = TimePointSelection { indices: vec![10], parts: vec![] };
        let b = generate_basis(&p, &sel, &cfg(4, 4)).unwrap();
        let m = b.metadata();
        assert!(m.contains("nT 4\n") && m.contains("windows 6:4\n") && m.contains("anchor endPoint\n"));
    }
}
