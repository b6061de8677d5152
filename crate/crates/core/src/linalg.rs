//! Dense Cholesky helpers for the small symmetric systems in the additive model.

use nalgebra::{DMatrix, DVector};

/// Lower Cholesky factor of a symmetric positive definite matrix.
///
/// On failure returns the index of the first pivot that was not positive,
/// which identifies the column responsible for the rank deficiency.
pub fn cholesky(a: &DMatrix<f64>) -> Result<DMatrix<f64>, usize> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "cholesky needs a square matrix");
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        // judged against the column's own diagonal so that heavily penalized
        // columns elsewhere do not mask or fake a deficiency here
        if !(d > 1e-12 * a[(j, j)]) {
            return Err(j);
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// Solves `L Lᵀ x = b`.
pub fn cholesky_solve(l: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = l.nrows();
    let mut z = b.clone();
    for i in 0..n {
        let mut s = z[i];
        for k in 0..i {
            s -= l[(i, k)] * z[k];
        }
        z[i] = s / l[(i, i)];
    }
    for i in (0..n).rev() {
        let mut s = z[i];
        for k in i + 1..n {
            s -= l[(k, i)] * z[k];
        }
        z[i] = s / l[(i, i)];
    }
    z
}

/// `(L Lᵀ)⁻¹ M`, column by column.
pub fn cholesky_solve_matrix(l: &DMatrix<f64>, m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for j in 0..m.ncols() {
        let col = cholesky_solve(l, &m.column(j).into_owned());
        out.set_column(j, &col);
    }
    out
}
