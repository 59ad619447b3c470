//! Galerkin reduced model on a [`ReducedBasis`] and space-time error measures.

use std::fmt::Write as _;
use std::path::Path;

use crate::basisgen::ReducedBasis;
use crate::discretization::TimeGrid;
use crate::error::{Error, Result};
use crate::linalg::io::fmt_f64;
use crate::linalg::{DenseCholesky, DenseMatrix, SparseSpdMatrix};
use crate::timestepping::{FullOrderModel, Trajectory};

/// States with an L² norm at or below this fraction of the largest norm report the
/// absolute instead of the relative error.
pub const L2_DEGENERATE_RTOL: f64 = 1e-14;

fn project_columns(phi: &DenseMatrix, apply: impl Fn(&[f64]) -> Vec<f64>) -> DenseMatrix {
    let cols: Vec<Vec<f64>> = phi.columns().map(apply).collect();
    phi.tr_matmul(&DenseMatrix::from_columns(phi.rows(), &cols).expect("equal lengths"))
}

/// Reduced operators `ΦᵀMΦ`, `Φᵀ(M + Δ_T A)Φ` per operator slot and `ΦᵀF_q` per load
/// term, factored once and reusable for any number of solves.
pub struct ReducedModel<'m, 'p> {
    model: &'m FullOrderModel<'p>,
    phi: DenseMatrix,
    mass: DenseMatrix,
    mass_factor: DenseCholesky,
    systems: Vec<DenseCholesky>,
    loads: Vec<Vec<f64>>,
}

impl<'m, 'p> ReducedModel<'m, 'p> {
    pub fn new(model: &'m FullOrderModel<'p>, basis: &ReducedBasis) -> Result<Self> {
        let phi = basis.vectors.clone();
        if phi.cols() == 0 {
            return Err(Error::invalid("basis is empty"));
        }
        if phi.rows() != model.problem().dofs() {
            return Err(Error::invalid(format!(
                "basis has {} rows, problem has {} unknowns",
                phi.rows(),
                model.problem().dofs()
            )));
        }
        let mass = project_columns(&phi, |c| model.mass().matvec(c));
        let mass_factor = DenseCholesky::factor(&mass)?;
        let systems = (0..model.distinct_operators())
            .map(|s| DenseCholesky::factor(&project_columns(&phi, |c| model.system_matrix(s).matvec(c))))
            .collect::<Result<_>>()?;
        let loads = model.problem().load_terms().iter().map(|f| phi.tr_matvec(f)).collect();
        Ok(ReducedModel {
            model,
            phi,
            mass,
            mass_factor,
            systems,
            loads,
        })
    }

    pub fn dim(&self) -> usize {
        self.phi.cols()
    }

    /// Reduced coefficients `a_0, …, a_M`.
    pub fn solve_coefficients(&self) -> Result<Vec<Vec<f64>>> {
        let problem = self.model.problem();
        let grid = problem.grid();
        let dt = grid.dt();
        let u0m = self.model.mass().matvec(problem.initial_value());
        let mut a = vec![self.mass_factor.solve(&self.phi.tr_matvec(&u0m))];
        for n in 1..=grid.steps() {
            let mut rhs = self.mass.matvec(a.last().expect("nonempty"));
            for (th, f) in problem.load_coefficients(grid.time(n)).into_iter().zip(&self.loads) {
                if th != 0.0 {
                    for (r, v) in rhs.iter_mut().zip(f) {
                        *r += dt * th * v;
                    }
                }
            }
            let next = self.systems[self.model.operator_index(n)].solve(&rhs);
            if next.iter().any(|v| !v.is_finite()) {
                return Err(Error::StepFailed {
                    step: n,
                    source: Box::new(Error::Numerical("reduced state is not finite".into())),
                });
            }
            a.push(next);
        }
        Ok(a)
    }

    /// Lifted trajectory `Φa_0, …, Φa_M`.
    pub fn solve(&self) -> Result<Trajectory> {
        Ok(Trajectory {
            start_index: 0,
            states: self.solve_coefficients()?.iter().map(|a| self.phi.matvec(a)).collect(),
        })
    }
}

/// Reduced trajectory for one basis.
pub fn solve_reduced(model: &FullOrderModel<'_>, basis: &ReducedBasis) -> Result<Trajectory> {
    ReducedModel::new(model, basis)?.solve()
}

fn check_aligned(full: &Trajectory, reduced: &Trajectory) -> Result<()> {
    if full.start_index != reduced.start_index || full.len() != reduced.len() {
        return Err(Error::invalid("trajectories are not aligned on the same grid points"));
    }
    if full.states.iter().zip(&reduced.states).any(|(a, b)| a.len() != b.len()) {
        return Err(Error::invalid("trajectory state lengths differ"));
    }
    Ok(())
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `sqrt(Σ_{n≥1} Δ_T‖u_n − ũ_n‖²_{H¹}) / sqrt(Σ_{n≥1} Δ_T‖u_n‖²_{H¹})`; the first
/// state is excluded.
pub fn rel_l2h1_error(full: &Trajectory, reduced: &Trajectory, h1: &SparseSpdMatrix, dt: f64) -> Result<f64> {
    check_aligned(full, reduced)?;
    let (mut num, mut den) = (0.0, 0.0);
    for (u, v) in full.states.iter().zip(&reduced.states).skip(1) {
        num += dt * h1.quadratic_form(&diff(u, v));
        den += dt * h1.quadratic_form(u);
    }
    if !(den > 0.0) {
        return Err(Error::UndefinedMetric("full solution has zero L2(H1) norm".into()));
    }
    Ok((num.max(0.0) / den).sqrt())
}

/// Per-state `‖u_n − ũ_n‖_{L²} / ‖u_n‖_{L²}`, absolute for degenerate `u_n`.
pub fn rel_l2_over_time(full: &Trajectory, reduced: &Trajectory, mass: &SparseSpdMatrix) -> Result<Vec<f64>> {
    check_aligned(full, reduced)?;
    let norms: Vec<f64> = full.states.iter().map(|u| mass.energy_norm(u)).collect();
    let max = norms.iter().copied().fold(0.0, f64::max);
    Ok(full
        .states
        .iter()
        .zip(&reduced.states)
        .zip(&norms)
        .map(|((u, v), &n)| {
            let e = mass.energy_norm(&diff(u, v));
            if n > L2_DEGENERATE_RTOL * max {
                e / n
            } else {
                e
            }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorReport {
    pub rel_l2h1: f64,
    /// One entry per grid point.
    pub rel_l2_over_time: Vec<f64>,
    pub basis_dim: usize,
    pub method: String,
}

impl ErrorReport {
    /// Reduced solve on `basis` compared with a precomputed full trajectory.
    pub fn evaluate(model: &FullOrderModel<'_>, basis: &ReducedBasis, full: &Trajectory, method: impl Into<String>) -> Result<Self> {
        let reduced = solve_reduced(model, basis)?;
        let dt = model.problem().grid().dt();
        Ok(ErrorReport {
            rel_l2h1: rel_l2h1_error(full, &reduced, model.h1(), dt)?,
            rel_l2_over_time: rel_l2_over_time(full, &reduced, model.mass())?,
            basis_dim: basis.dim(),
            method: method.into(),
        })
    }

    /// `timeIndex time relL2` rows and a trailing summary comment.
    pub fn to_text(&self, grid: &TimeGrid) -> String {
        let mut s = String::from("# timeIndex time relL2\n");
        for (j, e) in self.rel_l2_over_time.iter().enumerate() {
            writeln!(s, "{} {} {}", j, fmt_f64(grid.time(j)), fmt_f64(*e)).unwrap();
        }
        writeln!(
            s,
            "# relL2H1 {} basisDim {} method {}",
            fmt_f64(self.rel_l2h1),
            self.basis_dim,
            self.method
        )
        .unwrap();
        s
    }

    pub fn write(&self, path: impl AsRef<Path>, grid: &TimeGrid) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text(grid)).map_err(|e| Error::io(path, e))
    }
}
