//! P1 finite element assembly on [`RectangleMesh`].
//!
//! The `*_full` variants act on all nodes; the plain variants eliminate Dirichlet nodes.

use super::mesh::{BoundarySegment, RectangleMesh};
use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, SparseSpdMatrix};

/// Diffusion coefficient, constant on each rectangle cell (both of its triangles).
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientField {
    values: Vec<f64>,
}

impl CoefficientField {
    pub fn from_cells(mesh: &RectangleMesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.cell_count() {
            return Err(Error::invalid(format!(
                "coefficient has {} cell values, mesh has {} cells",
                values.len(),
                mesh.cell_count()
            )));
        }
        if let Some((c, v)) = values.iter().enumerate().find(|(_, v)| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::invalid(format!("coefficient value {v} in cell {c} is negative or not finite")));
        }
        Ok(CoefficientField { values })
    }

    pub fn constant(mesh: &RectangleMesh, c: f64) -> Result<Self> {
        Self::from_cells(mesh, vec![c; mesh.cell_count()])
    }

    /// Samples `f` at cell centroids.
    pub fn from_fn(mesh: &RectangleMesh, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = (0..mesh.cell_count())
            .map(|c| {
                let (x, y) = mesh.cell_centroid(c);
                f(x, y)
            })
            .collect();
        Self::from_cells(mesh, values)
    }

    /// For values already known to be finite and nonnegative.
    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| *v >= 0.0 && v.is_finite()));
        CoefficientField { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

struct Element {
    area: f64,
    /// Barycentric gradients.
    grads: [(f64, f64); 3],
}

fn element(mesh: &RectangleMesh, v: [usize; 3]) -> Element {
    let p = v.map(|n| mesh.node_coords(n));
    let det = (p[1].0 - p[0].0) * (p[2].1 - p[0].1) - (p[2].0 - p[0].0) * (p[1].1 - p[0].1);
    let area = 0.5 * det;
    let grad = |a: usize, b: usize| ((p[a].1 - p[b].1) / det, (p[b].0 - p[a].0) / det);
    Element {
        area,
        grads: [grad(1, 2), grad(2, 0), grad(0, 1)],
    }
}

/// Consistent mass matrix on all nodes.
pub fn assemble_mass_full(mesh: &RectangleMesh) -> CsrMatrix {
    let mut t = Vec::with_capacity(18 * mesh.cell_count());
    for (_, v) in mesh.triangles() {
        let e = element(mesh, v);
        for a in 0..3 {
            for b in 0..3 {
                let w = if a == b { e.area / 6.0 } else { e.area / 12.0 };
                t.push((v[a], v[b], w));
            }
        }
    }
    CsrMatrix::from_triplets(mesh.node_count(), t)
}

/// Stiffness matrix `∫ κ ∇φ_a·∇φ_b` on all nodes.
pub fn assemble_stiffness_full(mesh: &RectangleMesh, kappa: &CoefficientField) -> CsrMatrix {
    let mut t = Vec::with_capacity(18 * mesh.cell_count());
    let k = kappa.values();
    for (cell, v) in mesh.triangles() {
        let e = element(mesh, v);
        let c = k[cell] * e.area;
        for a in 0..3 {
            for b in 0..3 {
                let g = e.grads[a].0 * e.grads[b].0 + e.grads[a].1 * e.grads[b].1;
                t.push((v[a], v[b], c * g));
            }
        }
    }
    CsrMatrix::from_triplets(mesh.node_count(), t)
}

fn restrict_spd(mesh: &RectangleMesh, full: &CsrMatrix) -> Result<SparseSpdMatrix> {
    SparseSpdMatrix::new(full.restrict(mesh.free_nodes()))
}

/// Mass matrix with Dirichlet rows and columns eliminated.
pub fn assemble_mass(mesh: &RectangleMesh) -> Result<SparseSpdMatrix> {
    restrict_spd(mesh, &assemble_mass_full(mesh))
}

/// Stiffness matrix with Dirichlet rows and columns eliminated.
///
/// Only symmetric positive semidefinite in general (a cell-wise zero coefficient can
/// decouple nodes), so it is returned as plain CSR rather than [`SparseSpdMatrix`].
pub fn assemble_stiffness(mesh: &RectangleMesh, kappa: &CoefficientField) -> CsrMatrix {
    assemble_stiffness_full(mesh, kappa).restrict(mesh.free_nodes())
}

/// `M + K₁`, the matrix of the discrete H¹ inner product on the unknowns.
pub fn h1_inner_product(mesh: &RectangleMesh) -> Result<SparseSpdMatrix> {
    let one = CoefficientField::constant(mesh, 1.0)?;
    let full = assemble_mass_full(mesh).add_scaled(1.0, &assemble_stiffness_full(mesh, &one));
    restrict_spd(mesh, &full)
}

/// Boundary load `∫_seg g φ_a ds` on all nodes for a constant flux density `g`.
pub fn boundary_load_full(mesh: &RectangleMesh, seg: &BoundarySegment, density: f64) -> Vec<f64> {
    let mut f = vec![0.0; mesh.node_count()];
    for (a, b) in mesh.segment_edges(seg) {
        let (pa, pb) = (mesh.node_coords(a), mesh.node_coords(b));
        let len = ((pb.0 - pa.0).powi(2) + (pb.1 - pa.1).powi(2)).sqrt();
        f[a] += 0.5 * density * len;
        f[b] += 0.5 * density * len;
    }
    f
}

/// Neumann flux on one boundary segment with constant density.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryFlux {
    pub segment: BoundarySegment,
    pub density: f64,
}

/// `F = M·source + Σ boundary flux loads` on all nodes.
pub fn assemble_load_full(mesh: &RectangleMesh, mass_full: &CsrMatrix, source: &[f64], fluxes: &[BoundaryFlux]) -> Vec<f64> {
    let mut f = mass_full.matvec(source);
    for flux in fluxes {
        for (fi, bi) in f.iter_mut().zip(boundary_load_full(mesh, &flux.segment, flux.density)) {
            *fi += bi;
        }
    }
    f
}

/// Load vector restricted to the unknowns.
pub fn assemble_load(mesh: &RectangleMesh, source: &[f64], fluxes: &[BoundaryFlux]) -> Vec<f64> {
    mesh.restrict(&assemble_load_full(mesh, &assemble_mass_full(mesh), source, fluxes))
}
