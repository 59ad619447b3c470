//! Preconditioned conjugate gradients for sparse SPD systems.
//!
//! [`spd_solve`] is the one-shot entry point with a Jacobi preconditioner.
//! [`SpdSolver`] is for matrices that get solved against many right-hand sides: it
//! factors a bandwidth-reduced copy of the matrix once and uses the factor as the CG
//! preconditioner, so each solve takes one or two iterations while keeping the
//! residual contract of plain CG.

use std::collections::VecDeque;

use super::dense::{axpy, dot, norm2};
use super::sparse::SparseSpdMatrix;
use crate::error::{Error, Result};

/// Default relative residual for every full-order solve.
pub const DEFAULT_REL_TOL: f64 = 1e-12;

/// Maximum CG iterations as a multiple of the dimension.
pub const ITERATION_CAP_FACTOR: usize = 10;

/// Solves `A x = b` with `‖Ax − b‖₂ ≤ rel_tol·‖b‖₂` using Jacobi-preconditioned CG.
///
/// When that bound lies below what double precision can resolve, the solve is also
/// accepted once `‖Ax − b‖₂ ≤ ε·‖|A||x| + |b|‖₂`, i.e. at the rounding level of the
/// residual itself.
pub fn spd_solve(a: &SparseSpdMatrix, b: &[f64], rel_tol: f64) -> Result<Vec<f64>> {
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|d| 1.0 / d).collect();
    pcg(a, b, None, rel_tol, |r, z| {
        for ((zi, ri), di) in z.iter_mut().zip(r).zip(&inv_diag) {
            *zi = ri * di;
        }
    })
    .map(|(x, _)| x)
}

fn check_tol(rel_tol: f64) -> Result<()> {
    if rel_tol > 0.0 && rel_tol < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("relative tolerance {rel_tol} not in (0,1)")))
    }
}

/// Returns the solution and the iteration count.
fn pcg<P>(
    a: &SparseSpdMatrix,
    b: &[f64],
    guess: Option<&[f64]>,
    rel_tol: f64,
    mut precond: P,
) -> Result<(Vec<f64>, usize)>
where
    P: FnMut(&[f64], &mut [f64]),
{
    check_tol(rel_tol)?;
    let n = a.dim();
    if b.len() != n {
        return Err(Error::invalid(format!(
            "right-hand side has length {}, matrix dimension is {n}",
            b.len()
        )));
    }
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok((vec![0.0; n], 0));
    }
    let target = rel_tol * bnorm;
    let cap = ITERATION_CAP_FACTOR * n.max(1);

    let mut x = guess.map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; n]);
    let (mut r, mut floor) = true_residual(a, b, &x);
    let mut z = vec![0.0; n];
    let mut ap = vec![0.0; n];
    let mut it = 0;
    // Outer loop restarts from the true residual when the recursive one drifts.
    loop {
        if norm2(&r) <= target.max(floor) {
            return Ok((x, it));
        }
        precond(&r, &mut z);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        loop {
            if it >= cap {
                let achieved = norm2(&true_residual(a, b, &x).0) / bnorm;
                return Err(Error::Convergence {
                    iterations: it,
                    achieved,
                    requested: rel_tol,
                });
            }
            it += 1;
            a.csr().matvec_into(&p, &mut ap);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                return Err(Error::Numerical(format!(
                    "CG breakdown: pᵀAp = {pap:.3e}; matrix is not positive definite"
                )));
            }
            let alpha = rz / pap;
            axpy(alpha, &p, &mut x);
            axpy(-alpha, &ap, &mut r);
            if norm2(&r) <= target {
                break;
            }
            precond(&r, &mut z);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for (pi, zi) in p.iter_mut().zip(&z) {
                *pi = zi + beta * *pi;
            }
        }
        (r, floor) = true_residual(a, b, &x);
    }
}

/// `b − Ax` and its rounding floor `ε·‖|A||x| + |b|‖₂`.
fn true_residual(a: &SparseSpdMatrix, b: &[f64], x: &[f64]) -> (Vec<f64>, f64) {
    let mut floor2 = 0.0;
    let r = b
        .iter()
        .enumerate()
        .map(|(i, bi)| {
            let (mut ax, mut abs) = (0.0, bi.abs());
            for (j, v) in a.row(i) {
                ax += v * x[j];
                abs += (v * x[j]).abs();
            }
            floor2 += abs * abs;
            bi - ax
        })
        .collect();
    (r, f64::EPSILON * f64::sqrt(floor2))
}

/// Reusable solver for one SPD matrix.
#[derive(Clone, Debug)]
pub struct SpdSolver {
    matrix: SparseSpdMatrix,
    factor: BandedCholesky,
    rel_tol: f64,
}

impl SpdSolver {
    pub fn new(matrix: SparseSpdMatrix) -> Result<Self> {
        Self::with_tolerance(matrix, DEFAULT_REL_TOL)
    }

    pub fn with_tolerance(matrix: SparseSpdMatrix, rel_tol: f64) -> Result<Self> {
        check_tol(rel_tol)?;
        let factor = BandedCholesky::factor(&matrix)?;
        Ok(SpdSolver {
            matrix,
            factor,
            rel_tol,
        })
    }

    pub fn matrix(&self) -> &SparseSpdMatrix {
        &self.matrix
    }

    pub fn rel_tol(&self) -> f64 {
        self.rel_tol
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.solve_counted(b).map(|(x, _)| x)
    }

    /// Solution plus the number of CG iterations used.
    pub fn solve_counted(&self, b: &[f64]) -> Result<(Vec<f64>, usize)> {
        pcg(&self.matrix, b, None, self.rel_tol, |r, z| {
            self.factor.solve_into(r, z)
        })
    }
}

/// Cholesky factor of `P A Pᵀ` in band storage, where `P` is a reverse Cuthill–McKee
/// permutation (or the identity when that has the smaller band).
#[derive(Clone, Debug)]
struct BandedCholesky {
    n: usize,
    band: usize,
    /// `perm[new] = old`
    perm: Vec<usize>,
    /// Row `i` holds `L[i, i-band..=i]`.
    l: Vec<f64>,
}

impl BandedCholesky {
    fn factor(a: &SparseSpdMatrix) -> Result<Self> {
        let n = a.dim();
        let rcm = reverse_cuthill_mckee(a);
        let mut inv = vec![0usize; n];
        for (new, &old) in rcm.iter().enumerate() {
            inv[old] = new;
        }
        let band_of = |p: &dyn Fn(usize) -> usize| {
            (0..n)
                .flat_map(|i| a.row(i).map(move |(j, _)| (i, j)))
                .map(|(i, j)| p(i).abs_diff(p(j)))
                .max()
                .unwrap_or(0)
        };
        let rcm_band = band_of(&|i| inv[i]);
        let nat_band = band_of(&|i| i);
        let (perm, inv, band) = if rcm_band < nat_band {
            (rcm, inv, rcm_band)
        } else {
            ((0..n).collect(), (0..n).collect::<Vec<_>>(), nat_band)
        };

        let w = band + 1;
        let mut l = vec![0.0; n * w];
        for i in 0..n {
            for (j, v) in a.row(i) {
                let (pi, pj) = (inv[i], inv[j]);
                if pj <= pi {
                    l[pi * w + (pj + band - pi)] = v;
                }
            }
        }
        for i in 0..n {
            let i0 = i.saturating_sub(band);
            for j in i0..=i {
                let j0 = j.saturating_sub(band).max(i0);
                let mut s = l[i * w + (j + band - i)];
                for k in j0..j {
                    s -= l[i * w + (k + band - i)] * l[j * w + (k + band - j)];
                }
                if j < i {
                    s /= l[j * w + band];
                    l[i * w + (j + band - i)] = s;
                } else {
                    if !(s > 0.0) {
                        return Err(Error::Numerical(format!(
                            "Cholesky pivot {i} is {s:.3e}; matrix is not positive definite"
                        )));
                    }
                    l[i * w + band] = s.sqrt();
                }
            }
        }
        Ok(BandedCholesky { n, band, perm, l })
    }

    fn solve_into(&self, r: &[f64], z: &mut [f64]) {
        let (n, band, w) = (self.n, self.band, self.band + 1);
        let mut y: Vec<f64> = self.perm.iter().map(|&old| r[old]).collect();
        for i in 0..n {
            let i0 = i.saturating_sub(band);
            let row = &self.l[i * w..(i + 1) * w];
            let mut s = y[i];
            for k in i0..i {
                s -= row[k + band - i] * y[k];
            }
            y[i] = s / row[band];
        }
        for i in (0..n).rev() {
            y[i] /= self.l[i * w + band];
            let yi = y[i];
            let i0 = i.saturating_sub(band);
            let row = &self.l[i * w..(i + 1) * w];
            for k in i0..i {
                y[k] -= row[k + band - i] * yi;
            }
        }
        for (new, &old) in self.perm.iter().enumerate() {
            z[old] = y[new];
        }
    }
}

/// Reverse Cuthill–McKee ordering of the matrix graph, `result[new] = old`.
fn reverse_cuthill_mckee(a: &SparseSpdMatrix) -> Vec<usize> {
    let n = a.dim();
    let degree: Vec<usize> = (0..n).map(|i| a.row(i).filter(|&(j, _)| j != i).count()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);

    let bfs_levels = |start: usize| -> (Vec<usize>, usize) {
        let mut dist = vec![usize::MAX; n];
        let mut q = VecDeque::from([start]);
        dist[start] = 0;
        let mut last = vec![start];
        let mut depth = 0;
        while let Some(u) = q.pop_front() {
            for (v, _) in a.row(u) {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    if dist[v] > depth {
                        depth = dist[v];
                        last.clear();
                    }
                    if dist[v] == depth {
                        last.push(v);
                    }
                    q.push_back(v);
                }
            }
        }
        let far = *last.iter().min_by_key(|&&v| (degree[v], v)).unwrap_or(&start);
        (vec![far], depth)
    };

    while order.len() < n {
        let seed = (0..n)
            .filter(|&i| !visited[i])
            .min_by_key(|&i| (degree[i], i))
            .expect("unvisited node exists");
        // pseudo-peripheral start node
        let mut start = seed;
        let (mut cand, mut depth) = bfs_levels(start);
        for _ in 0..4 {
            let (next, d) = bfs_levels(cand[0]);
            if d <= depth {
                break;
            }
            start = cand[0];
            depth = d;
            cand = next;
        }
        let mut q = VecDeque::from([start]);
        visited[start] = true;
        while let Some(u) = q.pop_front() {
            order.push(u);
            let mut nbrs: Vec<usize> = a.row(u).map(|(j, _)| j).filter(|&j| !visited[j]).collect();
            nbrs.sort_by_key(|&j| (degree[j], j));
            for j in nbrs {
                visited[j] = true;
                q.push_back(j);
            }
        }
    }
    order.reverse();
    order
}
