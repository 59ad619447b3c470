//! Convergence study for `u = e^{−t} sin(πx) sin(πy)` on the unit square with `κ ≡ 1`
//! and source `(2π² − 1)u`.

use std::f64::consts::PI;
use std::sync::Arc;

use chronobasis::discretization::{
    assemble_mass, AffineDiffusion, CoefficientField, DirichletSides, RectangleMesh, Signal, TimeGrid,
    TransientProblem,
};
use chronobasis::timestepping::solve_full;

use crate::error::Result;

fn shape(x: f64, y: f64) -> f64 {
    (PI * x).sin() * (PI * y).sin()
}

pub fn exact(t: f64, x: f64, y: f64) -> f64 {
    (-t).exp() * shape(x, y)
}

pub fn problem(cells: usize, end_time: f64, steps: usize) -> Result<TransientProblem> {
    let mesh = RectangleMesh::unit_square(cells, DirichletSides::ALL)?;
    let kappa = CoefficientField::constant(&mesh, 1.0)?;
    let src = mesh.interpolate(|x, y| (2.0 * PI * PI - 1.0) * shape(x, y));
    let mut u0 = mesh.interpolate(shape);
    for (i, v) in u0.iter_mut().enumerate() {
        if mesh.is_dirichlet(i) {
            *v = 0.0;
        }
    }
    Ok(TransientProblem::new(
        mesh,
        TimeGrid::new(end_time, steps)?,
        AffineDiffusion::constant(kappa),
        vec![(Signal::Custom(Arc::new(|t: f64| (-t).exp())), src)],
        vec![],
        u0,
    )?)
}

/// Seven-point degree-5 rule on the reference triangle: (λ₁, λ₂, weight), weights
/// summing to one.
const TRI_RULE: [(f64, f64, f64); 7] = [
    (1.0 / 3.0, 1.0 / 3.0, 0.225),
    (0.059_715_871_789_770, 0.470_142_064_105_115, 0.132_394_152_788_506),
    (0.470_142_064_105_115, 0.059_715_871_789_770, 0.132_394_152_788_506),
    (0.470_142_064_105_115, 0.470_142_064_105_115, 0.132_394_152_788_506),
    (0.797_426_985_353_087, 0.101_286_507_323_456, 0.125_939_180_544_827),
    (0.101_286_507_323_456, 0.797_426_985_353_087, 0.125_939_180_544_827),
    (0.101_286_507_323_456, 0.101_286_507_323_456, 0.125_939_180_544_827),
];

/// `‖u_h − u(t)‖_{L²}` for a nodal P1 field `u_h`, by quadrature on every triangle.
pub fn l2_error(mesh: &RectangleMesh, nodal: &[f64], t: f64) -> f64 {
    let mut sum = 0.0;
    for (_, v) in mesh.triangles() {
        let p = v.map(|n| mesh.node_coords(n));
        let area = 0.5 * ((p[1].0 - p[0].0) * (p[2].1 - p[0].1) - (p[2].0 - p[0].0) * (p[1].1 - p[0].1)).abs();
        for &(l1, l2, w) in &TRI_RULE {
            let l0 = 1.0 - l1 - l2;
            let x = l0 * p[0].0 + l1 * p[1].0 + l2 * p[2].0;
            let y = l0 * p[0].1 + l1 * p[1].1 + l2 * p[2].1;
            let uh = l0 * nodal[v[0]] + l1 * nodal[v[1]] + l2 * nodal[v[2]];
            sum += w * area * (uh - exact(t, x, y)).powi(2);
        }
    }
    sum.sqrt()
}

fn final_state(cells: usize, end_time: f64, steps: usize) -> Result<(TransientProblem, Vec<f64>)> {
    let p = problem(cells, end_time, steps)?;
    let traj = solve_full(&p)?;
    let last = traj.states.last().expect("nonempty").clone();
    Ok((p, last))
}

/// Observed orders `log₂(e_i / e_{i+1})` of a sequence of errors under halving.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// Differences `‖u_{Δ} − u_{Δ/2}‖_{L²}` at the final time for successive halvings of
/// `Δ`, starting from `steps`, on a fixed mesh. The spatial error cancels.
pub fn temporal_differences(cells: usize, end_time: f64, steps: usize, halvings: usize) -> Result<Vec<f64>> {
    let runs: Vec<Vec<f64>> = (0..=halvings + 1)
        .map(|i| final_state(cells, end_time, steps << i).map(|(_, u)| u))
        .collect::<Result<_>>()?;
    let mesh = RectangleMesh::unit_square(cells, DirichletSides::ALL)?;
    let mass = assemble_mass(&mesh)?;
    Ok(runs
        .windows(2)
        .map(|w| {
            let d: Vec<f64> = w[0].iter().zip(&w[1]).map(|(a, b)| a - b).collect();
            mass.energy_norm(&d)
        })
        .collect())
}

/// L² errors at the final time on meshes `cells·2^i`, with the time discretization
/// error removed to second order by Richardson extrapolation (`2u_{Δ/2} − u_Δ`).
pub fn spatial_errors(cells: usize, end_time: f64, steps: usize, halvings: usize) -> Result<Vec<f64>> {
    (0..=halvings)
        .map(|i| {
            let n = cells << i;
            let (p, coarse) = final_state(n, end_time, steps)?;
            let (_, fine) = final_state(n, end_time, 2 * steps)?;
            let ext: Vec<f64> = fine.iter().zip(&coarse).map(|(f, c)| 2.0 * f - c).collect();
            Ok(l2_error(p.mesh(), &p.mesh().extend(&ext), end_time))
        })
        .collect()
}
