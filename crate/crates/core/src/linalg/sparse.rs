use super::dense::DenseMatrix;
use crate::error::{Error, Result};

/// Compressed sparse row matrix with sorted column indices and no stored zeros.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Sums duplicate `(row, col, value)` triplets and drops exact zeros.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        let mut it = triplets.into_iter().peekable();
        while let Some((i, j, mut v)) = it.next() {
            assert!(i < n && j < n, "triplet ({i},{j}) outside {n}x{n}");
            while let Some(&(i2, j2, v2)) = it.peek() {
                if i2 == i && j2 == j {
                    v += v2;
                    it.next();
                } else {
                    break;
                }
            }
            if v != 0.0 {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, (0..n).map(|i| (i, i, 1.0)).collect())
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        Self::from_triplets(d.len(), d.iter().enumerate().map(|(i, &v)| (i, i, v)).collect())
    }

    pub fn from_dense(a: &DenseMatrix) -> Self {
        assert_eq!(a.rows(), a.cols());
        let mut t = Vec::new();
        for i in 0..a.rows() {
            for j in 0..a.cols() {
                t.push((i, j, a.get(i, j)));
            }
        }
        Self::from_triplets(a.rows(), t)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col_idx[a..b].iter().copied().zip(self.values[a..b].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        match self.col_idx[a..b].binary_search(&j) {
            Ok(k) => self.values[a + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
            let mut s = 0.0;
            for k in a..b {
                s += self.values[k] * x[self.col_idx[k]];
            }
            y[i] = s;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    /// `xᵀ A x`
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        (0..self.n)
            .map(|i| x[i] * self.row(i).map(|(j, v)| v * x[j]).sum::<f64>())
            .sum()
    }

    /// `self + s·other`
    pub fn add_scaled(&self, s: f64, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.n, other.n);
        let mut t = self.triplets();
        t.extend(other.triplets().into_iter().map(|(i, j, v)| (i, j, s * v)));
        CsrMatrix::from_triplets(self.n, t)
    }

    pub fn scaled(&self, s: f64) -> CsrMatrix {
        CsrMatrix::from_triplets(self.n, self.triplets().into_iter().map(|(i, j, v)| (i, j, s * v)).collect())
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut t = Vec::with_capacity(self.nnz());
        for i in 0..self.n {
            t.extend(self.row(i).map(|(j, v)| (i, j, v)));
        }
        t
    }

    /// Keeps the rows and columns listed in `keep` (in that order).
    pub fn restrict(&self, keep: &[usize]) -> CsrMatrix {
        let mut map = vec![usize::MAX; self.n];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let mut t = Vec::new();
        for (new_i, &old_i) in keep.iter().enumerate() {
            for (j, v) in self.row(old_i) {
                if map[j] != usize::MAX {
                    t.push((new_i, map[j], v));
                }
            }
        }
        CsrMatrix::from_triplets(keep.len(), t)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.n, self.n);
        for (i, j, v) in self.triplets() {
            d.set(i, j, v);
        }
        d
    }

    /// Largest `|a_ij − a_ji|` relative to the largest entry.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0_f64;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst / scale
    }

    /// Half bandwidth `max |i − j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.n)
            .flat_map(|i| self.row(i).map(move |(j, _)| i.abs_diff(j)))
            .max()
            .unwrap_or(0)
    }
}

/// Sparse symmetric positive definite matrix.
///
/// Construction checks symmetry (1e-12 relative) and a strictly positive diagonal.
/// Positive definiteness itself is not verifiable cheaply; the solvers report failure
/// if it does not hold.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSpdMatrix(CsrMatrix);

impl SparseSpdMatrix {
    pub fn new(a: CsrMatrix) -> Result<Self> {
        let asym = a.asymmetry();
        if asym > 1e-12 {
            return Err(Error::invalid(format!(
                "matrix is not symmetric (relative asymmetry {asym:.3e})"
            )));
        }
        if let Some(i) = (0..a.dim()).find(|&i| !(a.get(i, i) > 0.0)) {
            return Err(Error::invalid(format!(
                "diagonal entry {i} is not strictly positive ({})",
                a.get(i, i)
            )));
        }
        if a.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("matrix has non-finite entries"));
        }
        Ok(SparseSpdMatrix(a))
    }

    pub fn csr(&self) -> &CsrMatrix {
        &self.0
    }

    pub fn into_csr(self) -> CsrMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        self.0.matvec(x)
    }

    /// `xᵀ A x`
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.0.quadratic_form(x)
    }

    /// Norm induced by the matrix, `sqrt(xᵀ A x)`.
    pub fn energy_norm(&self, x: &[f64]) -> f64 {
        self.quadratic_form(x).max(0.0).sqrt()
    }

    /// `self + s·other`, which stays SPD for `s ≥ 0` when `other` is symmetric positive semidefinite.
    pub fn add_scaled(&self, s: f64, other: &CsrMatrix) -> Result<Self> {
        SparseSpdMatrix::new(self.0.add_scaled(s, other))
    }
}

impl std::ops::Deref for SparseSpdMatrix {
    type Target = CsrMatrix;
    fn deref(&self) -> &CsrMatrix {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_are_summed_and_zeros_dropped() {
        let a = CsrMatrix::from_triplets(2, vec![(0, 0, 1.0), (0, 0, 2.0), (0, 1, 1.0), (0, 1, -1.0), (1, 1, 4.0)]);
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.get(0, 0), 3.0);
        assert_eq!(a.get(0, 1), 0.0);
        assert_eq!(a.matvec(&[1.0, 2.0]), vec![3.0, 8.0]);
    }

    #[test]
    fn spd_checks() {
        let asym = CsrMatrix::from_triplets(2, vec![(0, 0, 1.0), (0, 1, 0.5), (1, 1, 1.0)]);
        assert!(SparseSpdMatrix::new(asym).is_err());
        let neg = CsrMatrix::from_diagonal(&[1.0, -1.0]);
        assert!(SparseSpdMatrix::new(neg).is_err());
        assert!(SparseSpdMatrix::new(CsrMatrix::identity(3)).is_ok());
    }

    #[test]
    fn restrict_and_bandwidth() {
        let a = CsrMatrix::from_triplets(3, vec![(0, 0, 1.0), (0, 2, 5.0), (2, 0, 5.0), (1, 1, 2.0), (2, 2, 3.0)]);
        assert_eq!(a.bandwidth(), 2);
        let r = a.restrict(&[0, 2]);
        assert_eq!(r.to_dense().row(0), vec![1.0, 5.0]);
        assert_eq!(r.bandwidth(), 1);
    }
}
