//! Dense Hermitian eigensolvers.

use ndarray::{Array2, ShapeBuilder};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;

use crate::error::Result;

/// Eigenvalues in ascending order and eigenvectors as columns.
///
/// The input is copied to column-major order first: for row-major complex input the
/// LAPACK binding returns the eigenvectors of the transpose.
pub(crate) fn eigh_complex(m: &Array2<Complex64>) -> Result<(Vec<f64>, Array2<Complex64>)> {
    let mut f = Array2::zeros(m.dim().f());
    f.assign(m);
    let (e, v) = f.eigh(UPLO::Lower)?;
    Ok((e.to_vec(), v))
}

pub(crate) fn eigh_real(m: &Array2<f64>) -> Result<(Vec<f64>, Array2<f64>)> {
    let mut f = Array2::zeros(m.dim().f());
    f.assign(m);
    let (e, v) = f.eigh(UPLO::Lower)?;
    Ok((e.to_vec(), v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_eigenvectors_satisfy_the_eigen_equation() {
        let i = Complex64::new(0.0, 1.0);
        let z = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let m = ndarray::arr2(&[[one, -i, z], [i, z, one * 0.5 - i], [z, one * 0.5 + i, -one]]);
        let (e, v) = eigh_complex(&m).unwrap();
        for k in 0..3 {
            let r = &m.dot(&v.column(k)) - &v.column(k).mapv(|x| x * e[k]);
            assert!(r.iter().map(|x| x.norm()).sum::<f64>() < 1e-13);
        }
    }
}
