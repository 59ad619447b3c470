use std::fmt;
use std::sync::Arc;

use super::assembly::{assemble_mass_full, boundary_load_full, BoundaryFlux, CoefficientField};
use super::mesh::RectangleMesh;
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Uniform time grid `t_j = j·Δ_T`, `j = 0..=M`, with `Δ_T = T/M`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    end_time: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(end_time: f64, steps: usize) -> Result<Self> {
        if !(end_time > 0.0 && end_time.is_finite()) {
            return Err(Error::invalid(format!("end time must be positive, got {end_time}")));
        }
        if steps == 0 {
            return Err(Error::invalid("time grid needs at least one step"));
        }
        Ok(TimeGrid { end_time, steps })
    }

    pub fn end_time(&self) -> f64 {
        self.end_time
    }

    /// `M`
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.end_time / self.steps as f64
    }

    pub fn time(&self, j: usize) -> f64 {
        j as f64 * self.dt()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.steps).map(|j| self.time(j))
    }
}

/// Scalar time signal multiplying one spatial term of a data function.
#[derive(Clone)]
pub enum Signal {
    Constant(f64),
    /// `h·exp(−(t−c)²/w²)` on `|t − c| ≤ 2w`, zero elsewhere.
    Bump { center: f64, height: f64, width: f64 },
    /// `(start, end, value)`: value on the half-open `[start, end)`, zero outside all pieces.
    Piecewise(Vec<(f64, f64, f64)>),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Signal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Signal::Constant(c) => write!(f, "Constant({c})"),
            Signal::Bump { center, height, width } => {
                write!(f, "Bump {{ center: {center}, height: {height}, width: {width} }}")
            }
            Signal::Piecewise(p) => write!(f, "Piecewise({p:?})"),
            Signal::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl Signal {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Signal::Constant(c) => *c,
            Signal::Bump { center, height, width } => {
                if (t - center).abs() <= 2.0 * width {
                    height * (-((t - center) / width).powi(2)).exp()
                } else {
                    0.0
                }
            }
            Signal::Piecewise(pieces) => pieces
                .iter()
                .find(|(a, b, _)| t >= *a && t < *b)
                .map_or(0.0, |p| p.2),
            Signal::Custom(f) => f(t),
        }
    }

    /// Smallest interval outside of which the signal vanishes, when known.
    pub fn support(&self) -> Option<(f64, f64)> {
        match self {
            Signal::Bump { center, width, .. } => Some((center - 2.0 * width, center + 2.0 * width)),
            Signal::Piecewise(p) => {
                let nz = p.iter().filter(|x| x.2 != 0.0);
                let a = nz.clone().map(|x| x.0).fold(f64::INFINITY, f64::min);
                let b = nz.map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
                (a <= b).then_some((a, b))
            }
            Signal::Constant(_) | Signal::Custom(_) => None,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Signal::Constant(c) if !c.is_finite() => Err(Error::invalid("constant signal is not finite")),
            Signal::Bump { width, .. } if !(*width > 0.0) => Err(Error::invalid("bump width must be positive")),
            Signal::Piecewise(p) if p.iter().any(|(a, b, v)| !(a < b) || !v.is_finite()) => {
                Err(Error::invalid("piecewise signal needs start < end and finite values"))
            }
            _ => Ok(()),
        }
    }
}

/// Cell-wise diffusion `κ(t) = max(Σ_q θ_q(t)·κ_q, floor)`.
#[derive(Clone, Debug)]
pub struct AffineDiffusion {
    pub terms: Vec<(Signal, CoefficientField)>,
    pub floor: f64,
}

impl AffineDiffusion {
    pub fn constant(field: CoefficientField) -> Self {
        AffineDiffusion {
            terms: vec![(Signal::Constant(1.0), field)],
            floor: 0.0,
        }
    }

    /// `θ_q(t)` for every term.
    pub fn coefficients(&self, t: f64) -> Vec<f64> {
        self.terms.iter().map(|(s, _)| s.eval(t)).collect()
    }

    pub fn field_at(&self, t: f64) -> CoefficientField {
        let theta = self.coefficients(t);
        let n = self.terms[0].1.values().len();
        let mut v = vec![0.0; n];
        for ((_, field), &th) in self.terms.iter().zip(&theta) {
            if th != 0.0 {
                for (vi, fi) in v.iter_mut().zip(field.values()) {
                    *vi += th * fi;
                }
            }
        }
        v.iter_mut().for_each(|x| *x = x.max(self.floor));
        CoefficientField::from_raw(v)
    }
}

/// Which data function a [`DataMatrix`] samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DataKind {
    /// Load vectors `F_j` (unknowns only).
    Rhs,
    /// Cell values of the diffusion coefficient.
    Diffusion,
}

impl DataKind {
    pub fn name(&self) -> &'static str {
        match self {
            DataKind::Rhs => "rhs",
            DataKind::Diffusion => "diffusion",
        }
    }
}

/// `N × (M+1)` matrix whose column `j` is a data vector at `t_j`.
#[derive(Clone, Debug)]
pub struct DataMatrix {
    pub kind: DataKind,
    pub matrix: DenseMatrix,
}

impl DataMatrix {
    pub fn time_points(&self) -> usize {
        self.matrix.cols()
    }
}

/// Discretized `∂_t u + A(t) u = f(t)` on a rectangle with homogeneous Dirichlet
/// conditions on the mesh's Dirichlet sides and Neumann inflow on marked segments.
#[derive(Clone, Debug)]
pub struct TransientProblem {
    mesh: RectangleMesh,
    grid: TimeGrid,
    diffusion: AffineDiffusion,
    sources: Vec<(Signal, Vec<f64>)>,
    inflows: Vec<(Signal, BoundaryFlux)>,
    /// Per-term load vectors on the unknowns, sources first then inflows.
    load_terms: Vec<Vec<f64>>,
    initial: Vec<f64>,
}

impl TransientProblem {
    /// * `sources`: time signal times a nodal source vector (all nodes).
    /// * `inflows`: time signal times a boundary flux.
    /// * `initial`: nodal `u₀` (all nodes); must vanish on Dirichlet nodes.
    pub fn new(
        mesh: RectangleMesh,
        grid: TimeGrid,
        diffusion: AffineDiffusion,
        sources: Vec<(Signal, Vec<f64>)>,
        inflows: Vec<(Signal, BoundaryFlux)>,
        initial: Vec<f64>,
    ) -> Result<Self> {
        if !mesh.dirichlet_sides().any() {
            return Err(Error::invalid("problems without Dirichlet boundary are not supported"));
        }
        if diffusion.terms.is_empty() {
            return Err(Error::invalid("diffusion needs at least one term"));
        }
        if !(diffusion.floor >= 0.0 && diffusion.floor.is_finite()) {
            return Err(Error::invalid("diffusion floor must be finite and nonnegative"));
        }
        for (s, field) in &diffusion.terms {
            s.validate()?;
            if field.values().len() != mesh.cell_count() {
                return Err(Error::invalid("diffusion field does not match the mesh"));
            }
        }
        for (s, v) in &sources {
            s.validate()?;
            if v.len() != mesh.node_count() || v.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid("source vector must be finite with one value per node"));
            }
        }
        for (s, f) in &inflows {
            s.validate()?;
            if !f.density.is_finite() {
                return Err(Error::invalid("inflow density must be finite"));
            }
        }
        if initial.len() != mesh.node_count() || initial.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("initial value must be finite with one value per node"));
        }
        if let Some(n) = (0..mesh.node_count()).find(|&n| mesh.is_dirichlet(n) && initial[n] != 0.0) {
            return Err(Error::invalid(format!("initial value is nonzero on Dirichlet node {n}")));
        }
        // every data function must be evaluable on the grid
        for t in grid.times() {
            let bad = diffusion.terms.iter().map(|(s, _)| s.eval(t))
                .chain(sources.iter().map(|(s, _)| s.eval(t)))
                .chain(inflows.iter().map(|(s, _)| s.eval(t)))
                .any(|v| !v.is_finite());
            if bad {
                return Err(Error::invalid(format!("a data signal is not finite at t = {t}")));
            }
        }

        let mass_full = assemble_mass_full(&mesh);
        let mut load_terms: Vec<Vec<f64>> = sources
            .iter()
            .map(|(_, s)| mesh.restrict(&mass_full.matvec(s)))
            .collect();
        load_terms.extend(
            inflows
                .iter()
                .map(|(_, f)| mesh.restrict(&boundary_load_full(&mesh, &f.segment, f.density))),
        );
        let initial = mesh.restrict(&initial);
        Ok(TransientProblem {
            mesh,
            grid,
            diffusion,
            sources,
            inflows,
            load_terms,
            initial,
        })
    }

    pub fn mesh(&self) -> &RectangleMesh {
        &self.mesh
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn diffusion(&self) -> &AffineDiffusion {
        &self.diffusion
    }

    pub fn sources(&self) -> &[(Signal, Vec<f64>)] {
        &self.sources
    }

    pub fn inflows(&self) -> &[(Signal, BoundaryFlux)] {
        &self.inflows
    }

    /// Number of unknowns `N`.
    pub fn dofs(&self) -> usize {
        self.mesh.dof_count()
    }

    /// `u₀` on the unknowns.
    pub fn initial_value(&self) -> &[f64] {
        &self.initial
    }

    /// Signal values of every load term at `t`, sources first then inflows.
    pub fn load_coefficients(&self, t: f64) -> Vec<f64> {
        self.sources
            .iter()
            .map(|(s, _)| s.eval(t))
            .chain(self.inflows.iter().map(|(s, _)| s.eval(t)))
            .collect()
    }

    /// Per-term load vectors on the unknowns, ordered like [`Self::load_coefficients`].
    pub fn load_terms(&self) -> &[Vec<f64>] {
        &self.load_terms
    }

    /// `F(t)` on the unknowns.
    pub fn load_at(&self, t: f64) -> Vec<f64> {
        let mut f = vec![0.0; self.dofs()];
        for (th, term) in self.load_coefficients(t).into_iter().zip(&self.load_terms) {
            if th != 0.0 {
                for (fi, v) in f.iter_mut().zip(term) {
                    *fi += th * v;
                }
            }
        }
        f
    }

    pub fn diffusion_at(&self, t: f64) -> CoefficientField {
        self.diffusion.field_at(t)
    }

    /// Key identifying the diffusion field at `t`: equal keys mean bitwise equal fields.
    pub fn diffusion_key(&self, t: f64) -> Vec<u64> {
        self.diffusion.coefficients(t).iter().map(|v| v.to_bits()).collect()
    }

    /// Data matrix with one column per grid point.
    pub fn data_matrix(&self, kind: DataKind) -> DataMatrix {
        let columns: Vec<Vec<f64>> = self
            .grid
            .times()
            .map(|t| match kind {
                DataKind::Rhs => self.load_at(t),
                DataKind::Diffusion => self.diffusion_at(t).into_values(),
            })
            .collect();
        let rows = match kind {
            DataKind::Rhs => self.dofs(),
            DataKind::Diffusion => self.mesh.cell_count(),
        };
        DataMatrix {
            kind,
            matrix: DenseMatrix::from_columns(rows, &columns).expect("columns have equal length"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::mesh::DirichletSides;
    use crate::linalg::{truncated_svd, Truncation};

    fn unit_problem(sources: Vec<(Signal, Vec<f64>)>) -> TransientProblem {
        let mesh = RectangleMesh::unit_square(6, DirichletSides::ALL).unwrap();
        let kappa = CoefficientField::constant(&mesh, 1.0).unwrap();
        let n = mesh.node_count();
        TransientProblem::new(mesh, TimeGrid::new(1.0, 10).unwrap(), AffineDiffusion::constant(kappa), sources, vec![], vec![0.0; n])
            .unwrap()
    }

    #[test]
    fn grid_arithmetic() {
        let g = TimeGrid::new(10.0, 200).unwrap();
        assert_eq!(g.dt(), 0.05);
        assert_eq!(g.times().count(), 201);
        assert!(TimeGrid::new(0.0, 3).is_err());
        assert!(TimeGrid::new(1.0, 0).is_err());
    }

    #[test]
    fn signals() {
        let b = Signal::Bump { center: 5.0, height: 20.0, width: 1.5 };
        assert_eq!(b.eval(5.0), 20.0);
        assert_eq!(b.eval(8.01), 0.0);
        assert!(b.eval(7.99) > 0.0);
        let p = Signal::Piecewise(vec![(1.0, 5.5, 1.0), (8.0, 9.0, 5.0)]);
        assert_eq!(p.eval(1.0), 1.0);
        assert_eq!(p.eval(5.5), 0.0);
        assert_eq!(p.eval(8.5), 5.0);
        assert_eq!(p.support(), Some((1.0, 9.0)));
    }

    #[test]
    fn time_constant_data_has_rank_one() {
        let p = unit_problem(vec![(Signal::Constant(2.0), vec![1.0; 49])]);
        let d = p.data_matrix(DataKind::Rhs);
        assert_eq!(d.time_points(), 11);
        let first = d.matrix.col(0).to_vec();
        assert!(d.matrix.columns().all(|c| c == first.as_slice()));
        let svd = truncated_svd(&d.matrix, Truncation::RelTol(1e-10)).unwrap();
        assert_eq!(svd.rank(), 1);
    }

    #[test]
    fn construction_checks() {
        let mesh = RectangleMesh::unit_square(4, DirichletSides::NONE).unwrap();
        let kappa = CoefficientField::constant(&mesh, 1.0).unwrap();
        let n = mesh.node_count();
        let grid = TimeGrid::new(1.0, 4).unwrap();
        assert!(TransientProblem::new(mesh, grid, AffineDiffusion::constant(kappa.clone()), vec![], vec![], vec![0.0; n]).is_err());
        let mesh = RectangleMesh::unit_square(4, DirichletSides::ALL).unwrap();
        let mut u0 = vec![0.0; n];
        u0[0] = 1.0;
        assert!(TransientProblem::new(mesh, grid, AffineDiffusion::constant(kappa), vec![], vec![], u0).is_err());
    }
}
