use nalgebra::{DMatrix, DVector};

/// Solves `a x = b` by LU with partial pivoting; `None` if singular.
pub(crate) fn solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let m = DMatrix::from_fn(n, n, |i, j| a[i][j]);
    let rhs = DVector::from_column_slice(b);
    m.lu().solve(&rhs).map(|x| x.iter().copied().collect())
}

pub(crate) fn determinant(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    DMatrix::from_fn(n, n, |i, j| a[i][j]).determinant()
}
