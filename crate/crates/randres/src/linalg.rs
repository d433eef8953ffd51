//! Small dense linear algebra: Cholesky factorization and SPD solves.
//!
//! Kept in-crate to avoid a LAPACK system dependency; the systems solved here
//! are Gram matrices of at most a few thousand rows, well within reach of a
//! straightforward blocked-free factorization.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{RandresError, Result};

/// Cholesky factor L (lower triangular) of a symmetric positive-definite
/// matrix, a = L L^T. Fails when a pivot drops below `1e-14 * max_diag`.
pub fn cholesky(a: ArrayView2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(RandresError::DimMismatch(format!(
            "cholesky needs a square matrix, got {}x{}",
            n,
            a.ncols()
        )));
    }
    let max_diag = (0..n).map(|i| a[[i, i]].abs()).fold(0.0f64, f64::max);
    let floor = 1e-14 * max_diag.max(1e-300);
    let mut l = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let mut d = a[[j, j]];
        for k in 0..j {
            d -= l[[j, k]] * l[[j, k]];
        }
        if d <= floor {
            return Err(RandresError::LinearSolve(format!(
                "matrix not positive definite at pivot {j} (value {d:.3e})"
            )));
        }
        let ljj = d.sqrt();
        l[[j, j]] = ljj;
        for i in (j + 1)..n {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / ljj;
        }
    }
    Ok(l)
}

/// Solve L L^T x = b given the Cholesky factor L.
pub fn cholesky_solve(l: ArrayView2<f64>, b: ArrayView1<f64>) -> Array1<f64> {
    let n = l.nrows();
    assert_eq!(b.len(), n, "cholesky_solve rhs length");
    let mut y = b.to_owned();
    // forward substitution L y = b
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= l[[i, k]] * y[k];
        }
        y[i] = s / l[[i, i]];
    }
    // back substitution L^T x = y
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[[k, i]] * y[k];
        }
        y[i] = s / l[[i, i]];
    }
    y
}

/// Solve the SPD system a X = B column by column. Returns X with the shape
/// of B, and the worst relative residual over columns.
pub fn spd_solve(a: ArrayView2<f64>, b: ArrayView2<f64>) -> Result<(Array2<f64>, f64)> {
    let n = a.nrows();
    if b.nrows() != n {
        return Err(RandresError::DimMismatch(format!(
            "spd_solve: matrix is {}x{} but rhs has {} rows",
            n,
            a.ncols(),
            b.nrows()
        )));
    }
    let l = cholesky(a)?;
    let mut x = Array2::<f64>::zeros(b.raw_dim());
    let mut worst = 0.0f64;
    for (j, col) in b.columns().into_iter().enumerate() {
        let xj = cholesky_solve(l.view(), col);
        let r = &a.dot(&xj) - &col;
        let rel = norm2(r.view()) / norm2(col).max(1e-300);
        worst = worst.max(rel);
        x.column_mut(j).assign(&xj);
    }
    Ok((x, worst))
}

pub fn norm2(v: ArrayView1<f64>) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::RngStream;
    use ndarray::Array2;

    fn random_spd(n: usize, stream: &mut RngStream) -> Array2<f64> {
        let b = Array2::from_shape_fn((n, n), |_| stream.standard_normal());
        let mut a = b.t().dot(&b);
        for i in 0..n {
            a[[i, i]] += 0.5;
        }
        a
    }

    #[test]
    fn factor_reconstructs() {
        let mut stream = RngStream::new(11, 0);
        let a = random_spd(12, &mut stream);
        let l = cholesky(a.view()).unwrap();
        let diff = &l.dot(&l.t()) - &a;
        let worst = diff.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(worst < 1e-10, "reconstruction error {worst}");
    }

    #[test]
    fn solve_accuracy() {
        let mut stream = RngStream::new(12, 0);
        let a = random_spd(30, &mut stream);
        let b = Array2::from_shape_fn((30, 3), |_| stream.standard_normal());
        let (x, rel) = spd_solve(a.view(), b.view()).unwrap();
        assert!(rel < 1e-10, "relative residual {rel}");
        let diff = &a.dot(&x) - &b;
        assert!(diff.iter().all(|d| d.abs() < 1e-8));
    }

    #[test]
    fn rejects_indefinite() {
        let a = ndarray::array![[1.0, 2.0], [2.0, 1.0]]; // eigenvalues 3, -1
        assert!(cholesky(a.view()).is_err());
    }

    #[test]
    fn rejects_non_square() {
        let a = Array2::<f64>::zeros((2, 3));
        assert!(cholesky(a.view()).is_err());
    }
}
