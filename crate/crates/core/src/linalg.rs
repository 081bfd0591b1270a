//! Dense symmetric eigensolver.
//!
//! Dirac-Fock blocks span eigenvalues from `-2c²` to well above `10⁶`
//! hartree; the solver has to keep absolute accuracy near `ε · ‖A‖` on the
//! small bound-state eigenvalues, so it goes through faer (built without its
//! thread pool, which keeps results bit-reproducible).

use faer::{Mat, Side};
use nalgebra::{DMatrix, DVector};

/// Eigenvalues ascending with matching orthonormal eigenvectors as columns.
/// Only the lower triangle of `a` is read.
pub fn symmetric_eigen(a: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "square matrix required");
    if n == 0 {
        return (DVector::zeros(0), DMatrix::zeros(0, 0));
    }
    let m = Mat::from_fn(n, n, |i, j| a[(i, j)]);
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .expect("symmetric eigendecomposition of a finite matrix");
    let s = evd.S().column_vector();
    let u = evd.U();
    (DVector::from_fn(n, |i, _| s[i]), DMatrix::from_fn(n, n, |i, j| u[(i, j)]))
}
