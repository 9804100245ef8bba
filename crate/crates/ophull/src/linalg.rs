//! Small dense linear-algebra helpers shared by the fitting routines.
//!
//! Everything here routes through the *smaller* Gram matrix so that no
//! intermediate of size m×n is ever formed: the spectral subproblems of
//! an m×p stack cost min(m, p)³ plus one rectangular multiply.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Eigen-decomposition of a symmetric matrix with eigenvalues sorted descending.
pub(crate) fn sym_eig_desc(mat: DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = mat.nrows();
    let eig = nalgebra::SymmetricEigen::new(mat);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("eigenvalues of a finite symmetric matrix are finite")
    });
    let values = DVector::from_fn(n, |i, _| eig.eigenvalues[order[i]]);
    let mut vectors = DMatrix::zeros(n, n);
    for (new, &old) in order.iter().enumerate() {
        vectors.set_column(new, &eig.eigenvectors.column(old));
    }
    (values, vectors)
}

/// Force exact symmetry on a matrix that is symmetric up to rounding.
pub(crate) fn symmetrized(mut g: DMatrix<f64>) -> DMatrix<f64> {
    let n = g.nrows();
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (g[(i, j)] + g[(j, i)]);
            g[(i, j)] = avg;
            g[(j, i)] = avg;
        }
    }
    g
}

/// Symmetric PSD square root via eigen-decomposition.
///
/// Negative rounding noise in the spectrum is clamped to zero, so this stays
/// defined for singular inputs where a Cholesky factor would not exist.
pub(crate) fn sqrt_psd(mat: DMatrix<f64>) -> DMatrix<f64> {
    let eig = nalgebra::SymmetricEigen::new(mat);
    let scaled = {
        let mut v = eig.eigenvectors.clone();
        for (j, lam) in eig.eigenvalues.iter().enumerate() {
            let s = lam.max(0.0).sqrt();
            v.column_mut(j).scale_mut(s);
        }
        v
    };
    // V diag(sqrt(lam)) V^T
    scaled * eig.eigenvectors.transpose()
}

/// Orthonormal basis of the top-`r` left singular subspace of `stack` (m×p),
/// columns ordered by descending singular value.
///
/// Only the structural bound r ≤ min(m, p) can fail. Directions beyond the
/// numerical rank of the stack carry no mass, so they are completed with an
/// arbitrary orthonormal extension — the m×m route inherits this from the
/// eigen-decomposition, the p×p route from a QR pass — and the objective is
/// unaffected either way.
pub(crate) fn top_left_span(stack: &DMatrix<f64>, r: usize) -> Result<DMatrix<f64>> {
    let (m, p) = stack.shape();
    debug_assert!(r <= m, "caller enforces the structural bound r <= m");
    if r == 0 {
        return Ok(DMatrix::zeros(m, 0));
    }
    if m <= p {
        let gram = symmetrized(stack * stack.transpose());
        let (_, vectors) = sym_eig_desc(gram);
        Ok(vectors.columns(0, r).into_owned())
    } else {
        if r > p {
            return Err(Error::RankDeficient {
                requested: r,
                attainable: p,
            });
        }
        let gram = symmetrized(stack.tr_mul(stack));
        let (values, vectors) = sym_eig_desc(gram);
        let lam_max = values[0].max(0.0);
        if lam_max == 0.0 {
            // zero stack: any orthonormal family qualifies
            return Ok(DMatrix::identity(m, r));
        }
        // flooring keeps u finite through numerically absent directions
        let floor = lam_max * f64::EPSILON * f64::EPSILON;
        let mut scaled = vectors.columns(0, r).into_owned();
        for j in 0..r {
            scaled.column_mut(j).scale_mut(1.0 / values[j].max(floor).sqrt());
        }
        let u = stack * scaled;
        // QR restores exact orthonormality without disturbing the leading spans
        Ok(u.qr().q())
    }
}
