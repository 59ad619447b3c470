//! Implicit Euler time stepping `(M + Δ_T A_n) u_n = Δ_T F_n + M u_{n−1}`.

use std::collections::HashMap;
use std::path::Path;

use crate::discretization::{assemble_mass, assemble_stiffness, h1_inner_product, TransientProblem};
use crate::error::{Error, Result};
use crate::linalg::io::{matrix_from_str, matrix_to_string};
use crate::linalg::{spd_solve, CsrMatrix, DenseMatrix, SparseSpdMatrix, SpdSolver, DEFAULT_REL_TOL};

/// States `u_s, …, u_e` on consecutive grid points starting at `start_index = s`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub start_index: usize,
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn end_index(&self) -> usize {
        self.start_index + self.states.len() - 1
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// State at global grid index `n`.
    pub fn at(&self, n: usize) -> Option<&[f64]> {
        n.checked_sub(self.start_index)
            .and_then(|k| self.states.get(k))
            .map(Vec::as_slice)
    }

    /// Columns are states.
    pub fn to_matrix(&self) -> DenseMatrix {
        let rows = self.states.first().map_or(0, Vec::len);
        DenseMatrix::from_columns(rows, &self.states).expect("states have equal length")
    }

    /// Header line `startIndex Δ_T`, then the states as matrix columns.
    pub fn to_text(&self, dt: f64) -> String {
        format!("{} {:.16e}\n{}", self.start_index, dt, matrix_to_string(&self.to_matrix()))
    }

    pub fn from_text(text: &str) -> Result<(Self, f64)> {
        let (header, rest) = text
            .split_once('\n')
            .ok_or_else(|| Error::parse("trajectory", "missing header"))?;
        let mut it = header.split_whitespace();
        let start_index = it
            .next()
            .and_then(|t| t.parse::<usize>().ok())
            .ok_or_else(|| Error::parse("trajectory header", "bad start index"))?;
        let dt = it
            .next()
            .and_then(|t| t.parse::<f64>().ok())
            .ok_or_else(|| Error::parse("trajectory header", "bad time step"))?;
        let m = matrix_from_str(rest)?;
        let states = m.columns().map(<[f64]>::to_vec).collect();
        Ok((Trajectory { start_index, states }, dt))
    }

    pub fn write(&self, path: impl AsRef<Path>, dt: f64) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text(dt)).map_err(|e| Error::io(path, e))
    }
}

/// One implicit Euler step with explicitly given matrices.
pub fn step_implicit_euler(
    mass: &SparseSpdMatrix,
    stiffness: &CsrMatrix,
    load: &[f64],
    u_prev: &[f64],
    dt: f64,
    solver_tol: f64,
) -> Result<Vec<f64>> {
    if !(dt > 0.0) {
        return Err(Error::invalid(format!("time step must be positive, got {dt}")));
    }
    if stiffness.dim() != mass.dim() || load.len() != mass.dim() || u_prev.len() != mass.dim() {
        return Err(Error::invalid("step dimensions do not match"));
    }
    let system = mass.add_scaled(dt, stiffness)?;
    let rhs = step_rhs(mass, load, u_prev, dt);
    spd_solve(&system, &rhs, solver_tol)
}

fn step_rhs(mass: &SparseSpdMatrix, load: &[f64], u_prev: &[f64], dt: f64) -> Vec<f64> {
    let mut rhs = mass.matvec(u_prev);
    for (r, f) in rhs.iter_mut().zip(load) {
        *r += dt * f;
    }
    rhs
}

struct StepOperator {
    stiffness: CsrMatrix,
    system: SpdSolver,
}

/// Assembled operators of a [`TransientProblem`].
///
/// Stiffness and factored step matrices are built once per distinct diffusion field
/// on the grid at construction and are read-only afterwards, so one model can serve
/// any number of concurrent local solves.
pub struct FullOrderModel<'p> {
    problem: &'p TransientProblem,
    mass: SparseSpdMatrix,
    h1: SparseSpdMatrix,
    operators: Vec<StepOperator>,
    /// Grid index → operator index.
    operator_of: Vec<usize>,
}

impl<'p> FullOrderModel<'p> {
    pub fn new(problem: &'p TransientProblem) -> Result<Self> {
        let mesh = problem.mesh();
        let grid = problem.grid();
        let dt = grid.dt();
        let mass = assemble_mass(mesh)?;
        let h1 = h1_inner_product(mesh)?;
        let mut by_key: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut operators = Vec::new();
        let mut operator_of = Vec::with_capacity(grid.steps() + 1);
        for (j, t) in grid.times().enumerate() {
            let key = problem.diffusion_key(t);
            let idx = match by_key.get(&key) {
                Some(&i) => i,
                None => {
                    let stiffness = assemble_stiffness(mesh, &problem.diffusion_at(t));
                    let system = SpdSolver::with_tolerance(mass.add_scaled(dt, &stiffness)?, DEFAULT_REL_TOL)
                        .map_err(|e| Error::StepFailed { step: j, source: Box::new(e) })?;
                    operators.push(StepOperator { stiffness, system });
                    by_key.insert(key, operators.len() - 1);
                    operators.len() - 1
                }
            };
            operator_of.push(idx);
        }
        Ok(FullOrderModel {
            problem,
            mass,
            h1,
            operators,
            operator_of,
        })
    }

    pub fn problem(&self) -> &'p TransientProblem {
        self.problem
    }

    pub fn mass(&self) -> &SparseSpdMatrix {
        &self.mass
    }

    /// `M + K₁`
    pub fn h1(&self) -> &SparseSpdMatrix {
        &self.h1
    }

    /// Number of distinct stiffness matrices on the grid.
    pub fn distinct_operators(&self) -> usize {
        self.operators.len()
    }

    /// Operator slot used at grid index `n`.
    pub fn operator_index(&self, n: usize) -> usize {
        self.operator_of[n]
    }

    pub fn stiffness(&self, slot: usize) -> &CsrMatrix {
        &self.operators[slot].stiffness
    }

    /// `M + Δ_T A` for an operator slot.
    pub fn system_matrix(&self, slot: usize) -> &SparseSpdMatrix {
        self.operators[slot].system.matrix()
    }

    /// Advances `u_{n−1}` to `u_n` with data at `t_n`.
    pub fn step(&self, n: usize, u_prev: &[f64]) -> Result<Vec<f64>> {
        let grid = self.problem.grid();
        if n == 0 || n > grid.steps() {
            return Err(Error::invalid(format!("step target {n} outside 1..={}", grid.steps())));
        }
        let dt = grid.dt();
        let rhs = step_rhs(&self.mass, &self.problem.load_at(grid.time(n)), u_prev, dt);
        self.operators[self.operator_of[n]]
            .system
            .solve(&rhs)
            .map_err(|e| Error::StepFailed { step: n, source: Box::new(e) })
    }

    pub fn solve_full(&self) -> Result<Trajectory> {
        self.solve_local(0, self.problem.grid().steps(), self.problem.initial_value())
    }

    /// `steps` implicit Euler steps from `u_start` at grid index `start_index`.
    pub fn solve_local(&self, start_index: usize, steps: usize, u_start: &[f64]) -> Result<Trajectory> {
        let m = self.problem.grid().steps();
        if start_index + steps > m {
            return Err(Error::invalid(format!(
                "window [{start_index}, {}] exceeds the grid end {m}",
                start_index + steps
            )));
        }
        if u_start.len() != self.problem.dofs() {
            return Err(Error::invalid(format!(
                "start vector has length {}, problem has {} unknowns",
                u_start.len(),
                self.problem.dofs()
            )));
        }
        let mut states = Vec::with_capacity(steps + 1);
        states.push(u_start.to_vec());
        for n in start_index + 1..=start_index + steps {
            let next = self.step(n, states.last().expect("nonempty"))?;
            states.push(next);
        }
        Ok(Trajectory { start_index, states })
    }
}

/// Full trajectory `u_0, …, u_M`.
pub fn solve_full(problem: &TransientProblem) -> Result<Trajectory> {
    FullOrderModel::new(problem)?.solve_full()
}

/// Local trajectory over `steps` steps from `u_start` at `start_index`.
pub fn solve_local(problem: &TransientProblem, start_index: usize, steps: usize, u_start: &[f64]) -> Result<Trajectory> {
    FullOrderModel::new(problem)?.solve_local(start_index, steps, u_start)
}
