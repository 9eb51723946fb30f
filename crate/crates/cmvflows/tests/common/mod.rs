//! Strategies shared by the property tests.

#![allow(dead_code)]

use cmvflows::cmv::VerblunskyVector;
use cmvflows::laurent::{CMat, LaurentMatrix};
use num_complex::Complex64;
use proptest::prelude::*;

/// A complex number with modulus at most `r_max`.
pub fn disk_point(r_max: f64) -> impl Strategy<Value = Complex64> {
    (0.0..r_max, 0.0..std::f64::consts::TAU).prop_map(|(r, t)| Complex64::from_polar(r, t))
}

/// A complex number with modulus in `[r_min, r_max]`.
pub fn annulus_point(r_min: f64, r_max: f64) -> impl Strategy<Value = Complex64> {
    (r_min..r_max, 0.0..std::f64::consts::TAU).prop_map(|(r, t)| Complex64::from_polar(r, t))
}

/// Verblunsky vector of period `p` with every `|α_j| ≤ r_max`.
pub fn verblunsky_p(p: usize, r_max: f64) -> impl Strategy<Value = VerblunskyVector> {
    prop::collection::vec(disk_point(r_max), p).prop_map(|a| VerblunskyVector::new(a).unwrap())
}

/// Verblunsky vector with `p ∈ {2, 4, 6, 8}` and every `|α_j| ≤ 0.6`.
pub fn verblunsky() -> impl Strategy<Value = VerblunskyVector> {
    prop::sample::select(vec![2usize, 4, 6, 8]).prop_flat_map(|p| verblunsky_p(p, 0.6))
}

/// Verblunsky vector with every `0.2 ≤ |α_j| ≤ 0.6`.
pub fn generic_verblunsky(p: usize) -> impl Strategy<Value = VerblunskyVector> {
    prop::collection::vec(annulus_point(0.2, 0.6), p).prop_map(|a| VerblunskyVector::new(a).unwrap())
}

/// `p × p` matrix with entries in the unit box.
pub fn matrix(p: usize) -> impl Strategy<Value = CMat> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), p * p)
        .prop_map(move |e| CMat::from_iterator(p, p, e.into_iter().map(|(a, b)| Complex64::new(a, b))))
}

/// Laurent matrix of size `p` with powers in `−2..=2`.
pub fn laurent(p: usize) -> impl Strategy<Value = LaurentMatrix> {
    prop::collection::vec(matrix(p), 5)
        .prop_map(move |ms| LaurentMatrix::from_coeffs(p, ms.into_iter().enumerate().map(|(k, m)| (k as i32 - 2, m))).unwrap())
}

/// Sample points on the unit circle.
pub fn circle(m: usize) -> Vec<Complex64> {
    (0..m)
        .map(|s| Complex64::from_polar(1.0, std::f64::consts::TAU * s as f64 / m as f64))
        .collect()
}
