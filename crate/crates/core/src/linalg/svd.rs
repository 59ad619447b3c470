//! Thin singular value decomposition.
//!
//! The matrix is first reduced to a square upper-triangular factor with Householder
//! QR, and the triangular factor is diagonalized with one-sided (Hestenes) Jacobi
//! rotations. Jacobi converges to full relative accuracy in the singular vectors'
//! orthogonality, which is what DEIM and the leverage scores consume.

use log::warn;

use super::dense::{dot, DenseMatrix};
use crate::error::{Error, Result};

/// How many singular triplets to keep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Truncation {
    /// Keep at most `r` triplets (clamped to the smaller dimension).
    RankCap(usize),
    /// Keep every triplet with `σ_i > τ·σ_1`.
    RelTol(f64),
}

/// Thin SVD `A ≈ U Σ Vᵀ` with singular values sorted nonincreasing.
#[derive(Clone, Debug)]
pub struct Svd {
    pub left: DenseMatrix,
    pub singular_values: Vec<f64>,
    pub right: DenseMatrix,
}

impl Svd {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    /// `U Σ Vᵀ`
    pub fn reconstruct(&self) -> DenseMatrix {
        let mut us = self.left.clone();
        for (j, &s) in self.singular_values.iter().enumerate() {
            us.col_mut(j).iter_mut().for_each(|v| *v *= s);
        }
        us.matmul(&self.right.transpose())
    }
}

const JACOBI_TOL: f64 = 1e-15;
const MAX_SWEEPS: usize = 80;

/// Truncated thin SVD of `a`.
pub fn truncated_svd(a: &DenseMatrix, mode: Truncation) -> Result<Svd> {
    if !a.is_finite() {
        return Err(Error::invalid("SVD input contains non-finite entries"));
    }
    match mode {
        Truncation::RankCap(0) => return Err(Error::invalid("rank cap must be at least 1")),
        Truncation::RelTol(tau) if !(tau > 0.0 && tau < 1.0) => {
            return Err(Error::invalid(format!("relative tolerance {tau} not in (0,1)")))
        }
        _ => {}
    }
    let full = if a.rows() >= a.cols() {
        thin_svd_tall(a)
    } else {
        let t = thin_svd_tall(&a.transpose());
        Svd {
            left: t.right,
            singular_values: t.singular_values,
            right: t.left,
        }
    };
    let mut full = full;
    fix_signs(&mut full);

    let keep = match mode {
        Truncation::RankCap(r) => {
            let min_dim = a.rows().min(a.cols());
            if r > min_dim {
                warn!("requested rank {r} exceeds min dimension {min_dim}; clamping");
            }
            full.singular_values
                .iter()
                .take(r.min(min_dim))
                .take_while(|&&s| s > 0.0)
                .count()
        }
        Truncation::RelTol(tau) => {
            let s1 = full.singular_values.first().copied().unwrap_or(0.0);
            full.singular_values
                .iter()
                .take_while(|&&s| s > 0.0 && s > tau * s1)
                .count()
        }
    };
    Ok(Svd {
        left: full.left.leading_columns(keep),
        singular_values: full.singular_values[..keep].to_vec(),
        right: full.right.leading_columns(keep),
    })
}

/// Householder reflectors `H_k = I − τ_k v_k v_kᵀ`, with `v_k` stored below the diagonal.
struct HouseholderQr {
    rows: usize,
    cols: usize,
    vs: Vec<Vec<f64>>,
    taus: Vec<f64>,
    r: DenseMatrix,
}

impl HouseholderQr {
    fn new(a: &DenseMatrix) -> Self {
        let (m, n) = (a.rows(), a.cols());
        let mut w = a.clone();
        let mut vs = Vec::with_capacity(n);
        let mut taus = Vec::with_capacity(n);
        for k in 0..n {
            let x = &w.col(k)[k..];
            // The reflector is invariant under scaling of v, so work with x/max|x| to
            // keep tiny trailing columns from underflowing vᵀv.
            let scale = x.iter().fold(0.0_f64, |m, e| m.max(e.abs()));
            let mut v: Vec<f64> = if scale > 0.0 { x.iter().map(|e| e / scale).collect() } else { x.to_vec() };
            let tau;
            if scale == 0.0 {
                tau = 0.0;
            } else {
                let alpha = v.iter().map(|e| e * e).sum::<f64>().sqrt();
                let beta = if v[0] >= 0.0 { -alpha } else { alpha };
                v[0] -= beta;
                let vnorm2: f64 = v.iter().map(|e| e * e).sum();
                tau = if vnorm2 > 0.0 { 2.0 / vnorm2 } else { 0.0 };
            }
            if tau != 0.0 {
                for j in k..n {
                    let col = &mut w.col_mut(j)[k..];
                    let s = tau * dot(&v, col);
                    for (c, vi) in col.iter_mut().zip(&v) {
                        *c -= s * vi;
                    }
                }
            }
            vs.push(v);
            taus.push(tau);
        }
        let mut r = DenseMatrix::zeros(n, n);
        for j in 0..n {
            for i in 0..=j.min(m - 1) {
                r.set(i, j, w.get(i, j));
            }
        }
        HouseholderQr {
            rows: m,
            cols: n,
            vs,
            taus,
            r,
        }
    }

    /// `Q [x; 0]` for an `n`-vector `x`.
    fn apply_q(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.rows];
        y[..self.cols].copy_from_slice(x);
        for k in (0..self.cols).rev() {
            let tau = self.taus[k];
            if tau == 0.0 {
                continue;
            }
            let v = &self.vs[k];
            let seg = &mut y[k..];
            let s = tau * dot(v, seg);
            for (c, vi) in seg.iter_mut().zip(v) {
                *c -= s * vi;
            }
        }
        y
    }
}

fn thin_svd_tall(a: &DenseMatrix) -> Svd {
    let n = a.cols();
    let qr = HouseholderQr::new(a);
    let (mut w, mut v) = (qr.r.clone(), DenseMatrix::identity(n));
    let floor = n as f64 * f64::EPSILON * w.frobenius_norm();
    jacobi_sweeps(&mut w, &mut v, floor);

    // Columns at rounding level carry no information; report them as exact zeros.
    let norms: Vec<f64> = w
        .columns()
        .map(|c| dot(c, c).sqrt())
        .map(|s| if s <= floor { 0.0 } else { s })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));

    let mut left = DenseMatrix::zeros(a.rows(), n);
    let mut right = DenseMatrix::zeros(n, n);
    let mut sv = Vec::with_capacity(n);
    for (k, &j) in order.iter().enumerate() {
        let s = norms[j];
        sv.push(s);
        right.col_mut(k).copy_from_slice(v.col(j));
        if s > 0.0 {
            let ur: Vec<f64> = w.col(j).iter().map(|x| x / s).collect();
            left.col_mut(k).copy_from_slice(&qr.apply_q(&ur));
        }
    }
    Svd {
        left,
        singular_values: sv,
        right,
    }
}

/// Columns with norm at most `floor` are left alone; rotating them against each
/// other only shuffles rounding errors and never converges.
fn jacobi_sweeps(w: &mut DenseMatrix, v: &mut DenseMatrix, floor: f64) {
    let n = w.cols();
    let floor2 = floor * floor;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(w.col(p), w.col(p));
                let beta = dot(w.col(q), w.col(q));
                let gamma = dot(w.col(p), w.col(q));
                if gamma == 0.0 || alpha.min(beta) <= floor2 || gamma.abs() <= JACOBI_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_columns(w, p, q, c, s);
                rotate_columns(v, p, q, c, s);
            }
        }
        if !rotated {
            return;
        }
    }
    warn!("one-sided Jacobi reached {MAX_SWEEPS} sweeps without full convergence");
}

#[inline]
fn rotate_columns(m: &mut DenseMatrix, p: usize, q: usize, c: f64, s: f64) {
    let (cp, cq) = m.two_cols_mut(p, q);
    for (a, b) in cp.iter_mut().zip(cq.iter_mut()) {
        let (x, y) = (*a, *b);
        *a = c * x - s * y;
        *b = s * x + c * y;
    }
}

/// Makes the first numerically nonzero entry of every left vector nonnegative,
/// flipping the matching right vector with it.
fn fix_signs(svd: &mut Svd) {
    for j in 0..svd.left.cols() {
        let col = svd.left.col(j);
        let cmax = col.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        if cmax == 0.0 {
            continue;
        }
        let first = col
            .iter()
            .copied()
            .find(|x| x.abs() > 1e-10 * cmax)
            .unwrap_or(0.0);
        if first < 0.0 {
            svd.left.col_mut(j).iter_mut().for_each(|x| *x = -*x);
            svd.right.col_mut(j).iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Column-orthonormal basis for the numerical range of `v`.
///
/// Uses modified Gram-Schmidt with one reorthogonalization pass. A column is dropped
/// when its residual after projection has norm at most `tol` times the largest input
/// column norm.
pub fn orthonormalize(v: &DenseMatrix, tol: f64) -> DenseMatrix {
    let scale = v.columns().map(|c| dot(c, c).sqrt()).fold(0.0_f64, f64::max);
    let mut q = DenseMatrix::zeros(v.rows(), 0);
    if scale == 0.0 {
        return q;
    }
    for c in v.columns() {
        let mut r = c.to_vec();
        for _ in 0..2 {
            for k in 0..q.cols() {
                let qk = q.col(k);
                let s = dot(qk, &r);
                for (ri, qi) in r.iter_mut().zip(qk) {
                    *ri -= s * qi;
                }
            }
        }
        let nr = dot(&r, &r).sqrt();
        if nr > tol * scale {
            r.iter_mut().for_each(|x| *x /= nr);
            q.push_column(&r).expect("column length matches");
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_rank_cap() {
        let a = DenseMatrix::from_diagonal(&[3.0, 2.0, 1.0]);
        let s = truncated_svd(&a, Truncation::RankCap(2)).unwrap();
        assert_eq!(s.rank(), 2);
        assert!((s.singular_values[0] - 3.0).abs() < 1e-14);
        assert!((s.singular_values[1] - 2.0).abs() < 1e-14);
        for k in 0..2 {
            assert!((s.left.get(k, k).abs() - 1.0).abs() < 1e-14);
            assert!((s.right.get(k, k).abs() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn tiny_trailing_columns_stay_finite() {
        let mut a = DenseMatrix::zeros(50, 3);
        for i in 0..50 {
            a.set(i, 0, 1.0 + i as f64);
            a.set(i, 1, 1e-160 * ((i * 7 % 11) as f64 - 5.0));
        }
        a.set(3, 2, 1e-200);
        let s = truncated_svd(&a, Truncation::RelTol(1e-10)).unwrap();
        assert_eq!(s.rank(), 1);
        assert!(s.left.is_finite() && s.right.is_finite());
    }

    #[test]
    fn exact_rank_three_is_detected() {
        let (m, n) = (12, 9);
        let mut a = DenseMatrix::zeros(m, n);
        for k in 0..3 {
            for i in 0..m {
                for j in 0..n {
                    let u = ((i + 1) as f64 * (k + 1) as f64).sin();
                    let v = ((j + 2) as f64 * (k as f64 + 0.5)).cos();
                    a.set(i, j, a.get(i, j) + u * v);
                }
            }
        }
        let s = truncated_svd(&a, Truncation::RelTol(1e-8)).unwrap();
        assert_eq!(s.rank(), 3);
    }

    #[test]
    fn zero_matrix_gives_empty_result() {
        let s = truncated_svd(&DenseMatrix::zeros(4, 3), Truncation::RelTol(1e-8)).unwrap();
        assert_eq!(s.rank(), 0);
        assert_eq!(s.left.rows(), 4);
    }

    #[test]
    fn non_finite_rejected() {
        let mut a = DenseMatrix::identity(2);
        a.set(0, 1, f64::NAN);
        assert!(truncated_svd(&a, Truncation::RankCap(1)).is_err());
    }

    #[test]
    fn oversized_rank_cap_is_clamped() {
        let a = DenseMatrix::from_row_major(2, 3, &[1., 2., 3., 4., 5., 7.]).unwrap();
        let s = truncated_svd(&a, Truncation::RankCap(10)).unwrap();
        assert_eq!(s.rank(), 2);
        assert!(s.reconstruct().sub(&a).frobenius_norm() < 1e-13);
    }

    #[test]
    fn signs_are_canonical() {
        let a = DenseMatrix::from_row_major(3, 2, &[-1., 0., 0., -2., 0., 0.]).unwrap();
        let s = truncated_svd(&a, Truncation::RankCap(2)).unwrap();
        for j in 0..2 {
            let first = s.left.col(j).iter().find(|x| x.abs() > 1e-12).unwrap();
            assert!(*first > 0.0);
        }
        assert!(s.reconstruct().sub(&a).frobenius_norm() < 1e-14);
    }

    #[test]
    fn orthonormalize_identity_and_duplicates() {
        let q = orthonormalize(&DenseMatrix::identity(3), 1e-12);
        assert_eq!(q, DenseMatrix::identity(3));
        let v = DenseMatrix::from_columns(3, &[vec![0.6, 0.8, 0.0], vec![0.6, 0.8, 0.0]]).unwrap();
        assert_eq!(orthonormalize(&v, 1e-12).cols(), 1);
        assert_eq!(orthonormalize(&DenseMatrix::zeros(3, 2), 1e-12).cols(), 0);
    }
}
