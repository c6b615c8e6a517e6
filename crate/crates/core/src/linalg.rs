//! Small helpers around `nalgebra` dense matrices.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Row-major nested vectors, the JSON layout used for every stored matrix.
pub fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn from_rows(rows: &[Vec<f64>], cols_if_empty: usize) -> Result<DMatrix<f64>> {
    let cols = rows.first().map_or(cols_if_empty, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::DimensionMismatch("ragged matrix rows".into()));
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

/// `M^{-1/2}` of a symmetric positive-definite matrix via its eigendecomposition.
///
/// Fails when the smallest eigenvalue is not clearly positive relative to the largest.
pub fn inv_sqrt_spd(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    let eig = m.clone().symmetric_eigen();
    let max = eig.eigenvalues.amax();
    let min = eig.eigenvalues.min();
    if !(min > max * 1e-13) || !min.is_finite() {
        return Err(Error::Numerical(format!(
            "{what} is not positive definite (eigenvalues in [{min:e}, {max:e}]); increase reg"
        )));
    }
    let scale = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|l| 1.0 / l.sqrt()),
    );
    let q = &eig.eigenvectors;
    Ok(q * DMatrix::from_diagonal(&scale) * q.transpose())
}

/// Thin SVD `M = U·diag(s)·Vᵀ` with singular values in descending order.
pub fn thin_svd(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>, DMatrix<f64>)> {
    let a = faer::Mat::<f64>::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)]);
    let svd = a
        .thin_svd()
        .map_err(|e| Error::Numerical(format!("SVD did not converge: {e:?}")))?;
    let (u, v) = (svd.U(), svd.V());
    let s = svd.S().column_vector();
    let r = s.nrows();
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
    let u = DMatrix::from_fn(m.nrows(), r, |i, j| u[(i, order[j])]);
    let v = DMatrix::from_fn(m.ncols(), r, |i, j| v[(i, order[j])]);
    Ok((u, order.iter().map(|&j| s[j]).collect(), v))
}

pub fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    (m - m.transpose()).amax()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inv_sqrt_squares_to_inverse() {
        let m = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let w = inv_sqrt_spd(&m, "m").unwrap();
        let id = &w * &m * &w;
        assert!((id - DMatrix::identity(3, 3)).amax() < 1e-12);
    }

    #[test]
    fn inv_sqrt_rejects_singular() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(inv_sqrt_spd(&m, "m"), Err(Error::Numerical(_))));
    }

    #[test]
    fn rows_round_trip() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let rows = to_rows(&m);
        assert_eq!(rows[1], vec![4.0, 5.0, 6.0]);
        assert_eq!(from_rows(&rows, 0).unwrap(), m);
        assert!(from_rows(&[vec![1.0], vec![1.0, 2.0]], 0).is_err());
    }
}
