//! JSON encodings shared by the public data types.
//!
//! Complex numbers are written as two-element arrays `[re, im]`; matrices as
//! row-major nested arrays of such pairs.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Encodes a complex number as `[re, im]`.
pub fn pair(c: Complex64) -> [f64; 2] {
    [c.re, c.im]
}

/// Decodes `[re, im]`.
pub fn unpair(p: [f64; 2]) -> Complex64 {
    Complex64::new(p[0], p[1])
}

/// Encodes a list of complex numbers.
pub fn pairs(cs: &[Complex64]) -> Vec<[f64; 2]> {
    cs.iter().copied().map(pair).collect()
}

/// Decodes a list of complex numbers.
pub fn unpairs(ps: &[[f64; 2]]) -> Vec<Complex64> {
    ps.iter().copied().map(unpair).collect()
}

/// Encodes a matrix row-major.
pub fn matrix(m: &DMatrix<Complex64>) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| pair(m[(i, j)])).collect())
        .collect()
}

/// Decodes a square `p × p` matrix, checking its shape.
pub fn unmatrix(rows: &[Vec<[f64; 2]>], p: usize) -> Result<DMatrix<Complex64>> {
    if rows.len() != p || rows.iter().any(|r| r.len() != p) {
        return Err(Error::SizeMismatch {
            expected: p,
            found: rows.len(),
        });
    }
    Ok(DMatrix::from_fn(p, p, |i, j| unpair(rows[i][j])))
}
