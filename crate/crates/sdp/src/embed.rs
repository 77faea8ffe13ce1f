use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::problem::SdpError;

const HERMITIAN_TOL: f64 = 1e-12;

/// Real symmetric embedding `[[Re H, -Im H], [Im H, Re H]]` of a Hermitian matrix.
pub fn embed_hermitian(h: &DMatrix<Complex64>) -> Result<DMatrix<f64>, SdpError> {
    let n = h.nrows();
    if h.ncols() != n {
        return Err(SdpError::Dimension(format!("{}x{} is not square", n, h.ncols())));
    }
    let scale = h.iter().fold(1.0_f64, |m, z| m.max(z.norm()));
    for i in 0..n {
        for j in i..n {
            if (h[(i, j)] - h[(j, i)].conj()).norm() > HERMITIAN_TOL * scale {
                return Err(SdpError::NotSymmetric(format!(
                    "entry ({i},{j}) breaks Hermitian symmetry"
                )));
            }
        }
    }
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = h[(i, j)];
            out[(i, j)] = z.re;
            out[(i + n, j + n)] = z.re;
            out[(i, j + n)] = -z.im;
            out[(i + n, j)] = z.im;
        }
    }
    Ok(out)
}

/// Inverse of [`embed_hermitian`]. A general real symmetric `2n x 2n` input is
/// first averaged onto the embedding subspace, so this is the orthogonal
/// projection followed by the inverse map.
pub fn extract_hermitian(x: &DMatrix<f64>) -> DMatrix<Complex64> {
    let n = x.nrows() / 2;
    DMatrix::from_fn(n, n, |i, j| {
        let re = 0.5 * (x[(i, j)] + x[(i + n, j + n)]);
        let im = 0.5 * (x[(i + n, j)] - x[(i, j + n)]);
        Complex64::new(re, im)
    })
}
