use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Relative tolerance for accepting a matrix as symmetric.
pub const SYMMETRY_TOL: f64 = 1e-10;

const EIGEN_EPS: f64 = 1e-15;
const EIGEN_MAX_ITERS: usize = 10_000;

/// Leading eigenvalues (descending) with eigenvectors stored as columns.
#[derive(Clone, Debug)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl EigenPairs {
    pub fn vector(&self, i: usize) -> Vec<f64> {
        self.vectors.column(i)
    }
}

fn check_symmetric(m: &Matrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::shape(
            "symmetric matrix",
            "square",
            format!("{}x{}", m.rows(), m.cols()),
        ));
    }
    let tol = SYMMETRY_TOL * m.max_abs();
    if let Some((row, col, gap)) = m.asymmetry() {
        if gap > tol {
            return Err(Error::NotSymmetric { row, col, gap, tol });
        }
    }
    Ok(())
}

fn to_nalgebra(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

/// The `k` largest eigenpairs of a symmetric matrix.
///
/// Eigenvalues come back in descending order; each eigenvector is oriented so
/// that its largest-magnitude component (first one on ties) is positive.
pub fn top_eigenpairs(m: &Matrix, k: usize) -> Result<EigenPairs> {
    check_symmetric(m)?;
    let n = m.rows();
    if k == 0 || k > n {
        return Err(Error::invalid("k", format!("need 1 <= k <= {n}, got {k}")));
    }
    let eig = SymmetricEigen::try_new(to_nalgebra(m), EIGEN_EPS, EIGEN_MAX_ITERS).ok_or(Error::EigenFailure)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let mut vectors = Matrix::zeros(n, k);
    let mut values = Vec::with_capacity(k);
    for (c, &src) in order.iter().take(k).enumerate() {
        values.push(eig.eigenvalues[src]);
        let col = eig.eigenvectors.column(src);
        let mut pivot = 0;
        for i in 1..n {
            if col[i].abs() > col[pivot].abs() {
                pivot = i;
            }
        }
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            vectors[(i, c)] = sign * col[i];
        }
    }
    Ok(EigenPairs { values, vectors })
}

/// All eigenvalues of a symmetric matrix, descending.
pub fn eigenvalues(m: &Matrix) -> Result<Vec<f64>> {
    check_symmetric(m)?;
    let mut vals: Vec<f64> = SymmetricEigen::try_new(to_nalgebra(m), EIGEN_EPS, EIGEN_MAX_ITERS)
        .ok_or(Error::EigenFailure)?
        .eigenvalues
        .iter()
        .copied()
        .collect();
    vals.sort_by(|a, b| b.total_cmp(a));
    Ok(vals)
}

/// Largest singular value, from the Gram matrix on the smaller side.
pub fn spectral_norm(m: &Matrix) -> f64 {
    let gram = if m.rows() <= m.cols() { m.outer_gram() } else { m.gram() };
    let top = SymmetricEigen::try_new(to_nalgebra(&gram), EIGEN_EPS, EIGEN_MAX_ITERS)
        .map(|e| e.eigenvalues.iter().fold(0.0f64, |a, &v| a.max(v)))
        .unwrap_or(f64::NAN);
    top.max(0.0).sqrt()
}

/// Principal subspace of a set of observations (columns).
#[derive(Clone, Debug)]
pub struct Pca {
    /// Orthonormal `m x d` basis.
    pub basis: Matrix,
    /// Per-feature mean that was removed (zeros when uncentered).
    pub mean: Vec<f64>,
    /// Eigenvalues of the (centered) covariance, descending; length `m`.
    pub spectrum: Vec<f64>,
}

impl Pca {
    /// Fit on `x` (features x observations) keeping `d` components.
    ///
    /// `center` removes the per-feature mean before forming the covariance
    /// `(1/n) Xc Xcᵀ`.
    pub fn fit(x: &Matrix, d: usize, center: bool) -> Result<Pca> {
        let (m, n) = x.shape();
        if d == 0 || d > m.min(n) {
            return Err(Error::invalid("d", format!("need 1 <= d <= min({m}, {n}), got {d}")));
        }
        let mean: Vec<f64> = if center {
            (0..m).map(|i| x.row(i).iter().sum::<f64>() / n as f64).collect()
        } else {
            vec![0.0; m]
        };
        let centered = Matrix::from_raw(
            m,
            n,
            (0..m)
                .flat_map(|i| {
                    let mu = mean[i];
                    x.row(i).iter().map(move |v| v - mu)
                })
                .collect(),
        );
        let mut cov = centered.outer_gram().scale(1.0 / n as f64);
        // exact symmetry for the eigen solver
        for i in 0..m {
            for j in (i + 1)..m {
                let avg = 0.5 * (cov[(i, j)] + cov[(j, i)]);
                cov[(i, j)] = avg;
                cov[(j, i)] = avg;
            }
        }
        let all = top_eigenpairs(&cov, m)?;
        let cols: Vec<usize> = (0..d).collect();
        Ok(Pca {
            basis: all.vectors.select_columns(&cols)?,
            mean,
            spectrum: all.values,
        })
    }

    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    /// Coordinates `Bᵀ x` of each column (no mean removal, so linear structure is kept).
    pub fn project(&self, x: &Matrix) -> Result<Matrix> {
        self.basis.t_matmul(x)
    }

    /// Coordinates `Bᵀ (x - mean)`.
    pub fn project_centered(&self, x: &Matrix) -> Result<Matrix> {
        if x.rows() != self.mean.len() {
            return Err(Error::shape("project_centered", self.mean.len(), x.rows()));
        }
        let shifted = Matrix::from_raw(
            x.rows(),
            x.cols(),
            (0..x.rows())
                .flat_map(|i| {
                    let mu = self.mean[i];
                    x.row(i).iter().map(move |v| v - mu)
                })
                .collect(),
        );
        self.basis.t_matmul(&shifted)
    }
}

/// Orthonormal `m x d` basis of the top-`d` principal directions (columns centered).
pub fn pca_basis(x: &Matrix, d: usize) -> Result<Matrix> {
    Ok(Pca::fit(x, d, true)?.basis)
}

/// Orthonormal basis of the column space of `x`, using a relative eigenvalue cutoff on `x xᵀ`.
pub fn column_space(x: &Matrix, rel_tol: f64) -> Result<Matrix> {
    let g = x.outer_gram();
    let all = top_eigenpairs(&g, g.rows())?;
    let top = all.values[0].max(0.0);
    let rank = all.values.iter().take_while(|&&v| v > rel_tol * top && v > 0.0).count();
    if rank == 0 {
        return Err(Error::RankDeficient { index: 0, min_eig: top });
    }
    let cols: Vec<usize> = (0..rank).collect();
    all.vectors.select_columns(&cols)
}

/// Orthonormal basis with the same column span, `B (BᵀB)^{-1/2}`.
///
/// Fails when the smallest Gram eigenvalue falls below `1e-10` times the largest.
pub fn orthonormalize(b: &Matrix) -> Result<Matrix> {
    let g = b.gram();
    let d = g.rows();
    let eig = top_eigenpairs(&g, d)?;
    let max = eig.values[0];
    let min = eig.values[d - 1];
    if min.is_nan() || max.is_nan() || min <= 1e-10 * max {
        return Err(Error::RankDeficient { index: 0, min_eig: min });
    }
    let v = &eig.vectors;
    let inv_sqrt = Matrix::from_fn(d, d, |i, j| {
        (0..d).map(|k| v[(i, k)] * v[(j, k)] / eig.values[k].sqrt()).sum()
    })?;
    b.matmul(&inv_sqrt)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_diagonal() {
        let e = top_eigenpairs(&Matrix::identity(3), 2).unwrap();
        assert_eq!(e.values.len(), 2);
        assert!(e.values.iter().all(|v| (v - 1.0).abs() < 1e-14));

        let d = Matrix::diag(&[3.0, 2.0, 1.0]).unwrap();
        let e = top_eigenpairs(&d, 1).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-14);
        let v = e.vector(0);
        assert!((v[0] - 1.0).abs() < 1e-14 && v[1].abs() < 1e-14 && v[2].abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_input() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.1, 1.0]]).unwrap();
        assert!(matches!(top_eigenpairs(&m, 1), Err(Error::NotSymmetric { .. })));
        assert!(top_eigenpairs(&Matrix::identity(2), 0).is_err());
        assert!(top_eigenpairs(&Matrix::identity(2), 3).is_err());
        assert!(top_eigenpairs(&Matrix::zeros(2, 3), 1).is_err());
    }

    #[test]
    fn sign_convention() {
        let m = Matrix::from_rows(&[vec![2.0, -1.0], vec![-1.0, 2.0]]).unwrap();
        let e = top_eigenpairs(&m, 2).unwrap();
        for c in 0..2 {
            let v = e.vector(c);
            let pivot = if v[0].abs() >= v[1].abs() { v[0] } else { v[1] };
            assert!(pivot > 0.0);
        }
    }

    #[test]
    fn spectral_norm_examples() {
        assert!((spectral_norm(&Matrix::identity(4)) - 1.0).abs() < 1e-14);
        assert!((spectral_norm(&Matrix::diag(&[2.0, -5.0]).unwrap()) - 5.0).abs() < 1e-13);
        let wide = Matrix::from_rows(&[vec![3.0, 0.0, 0.0]]).unwrap();
        assert!((spectral_norm(&wide) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn pca_of_a_line() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let ts = [-2.0, -1.0, 0.5, 1.0, 3.0];
        let x = Matrix::from_fn(2, ts.len(), |_, j| ts[j] * s).unwrap();
        let b = pca_basis(&x, 1).unwrap();
        assert!((b[(0, 0)].abs() - s).abs() < 1e-12);
        assert!((b[(1, 0)] - b[(0, 0)]).abs() < 1e-12);
        assert!(Pca::fit(&x, 3, true).is_err());
        assert!(Pca::fit(&x, 0, true).is_err());
    }

    #[test]
    fn column_space_rank() {
        let x = Matrix::from_rows(&[vec![1.0, 2.0, 0.0], vec![0.0, 0.0, 0.0], vec![1.0, 2.0, 1.0]]).unwrap();
        let q = column_space(&x, 1e-12).unwrap();
        assert_eq!(q.cols(), 2);
    }
}
