//! Verblunsky data, theta blocks and Floquet CMV loops.
//!
//! For a period-`p` sequence of Verblunsky coefficients `α_0, …, α_{p-1}` in
//! the open unit disk (with `ρ_j = √(1 − |α_j|²)`), the Floquet CMV loop is
//! `E(h) = g^e · g^o(h)` where
//!
//! * `g^e = diag(θ_0, θ_2, …, θ_{p-2})` with `θ(a) = [[ā, ρ], [ρ, −a]]`;
//! * `g^o(h)` carries `θ_1, θ_3, …, θ_{p-3}` on the interior 2×2 diagonal
//!   blocks at rows `(1,2), (3,4), …`, and the wrapped block of `θ_{p-1}`:
//!   `−α_{p-1}` at `(0,0)`, `ᾱ_{p-1}` at `(p-1,p-1)`, `ρ_{p-1}h` at
//!   `(0,p-1)` and `ρ_{p-1}h⁻¹` at `(p-1,0)`.
//!
//! `E(h)` is unitary on `|h| = 1` and has `h`-support `{−1, 0, 1}`.

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::json;
use crate::laurent::{CMat, LaurentMatrix};
use crate::scalar::{Scalar, SmallMat};

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Period-`p` Verblunsky coefficients, `p` even, all strictly inside the unit disk.
#[derive(Clone, Debug, PartialEq)]
pub struct VerblunskyVector {
    alpha: Vec<Complex64>,
}

impl VerblunskyVector {
    /// Validates and wraps the coefficients.
    pub fn new(alpha: Vec<Complex64>) -> Result<Self> {
        let p = alpha.len();
        if p == 0 || p % 2 != 0 {
            return Err(Error::Domain(format!(
                "the period must be a positive even integer, got {p}"
            )));
        }
        if let Some((j, a)) = alpha
            .iter()
            .enumerate()
            .find(|(_, a)| !(a.norm() < 1.0) || !a.re.is_finite() || !a.im.is_finite())
        {
            return Err(Error::Domain(format!(
                "alpha_{j} = {a} is not strictly inside the unit disk"
            )));
        }
        Ok(VerblunskyVector { alpha })
    }

    /// All coefficients zero.
    pub fn zeros(p: usize) -> Result<Self> {
        Self::new(vec![Complex64::new(0.0, 0.0); p])
    }

    /// Period `p`.
    pub fn p(&self) -> usize {
        self.alpha.len()
    }

    /// Coefficients `α_0, …, α_{p-1}`.
    pub fn as_slice(&self) -> &[Complex64] {
        &self.alpha
    }

    /// `α_j` with periodic indexing, so `α_{-1} = α_{p-1}`.
    pub fn alpha(&self, j: i64) -> Complex64 {
        self.alpha[j.rem_euclid(self.p() as i64) as usize]
    }

    /// `ρ_j = √(1 − |α_j|²)` with periodic indexing.
    pub fn rho(&self, j: i64) -> f64 {
        (1.0 - self.alpha(j).norm_sqr()).sqrt()
    }

    /// `P = Π_j ρ_j`.
    pub fn rho_product(&self) -> f64 {
        (0..self.p() as i64).map(|j| self.rho(j)).product()
    }

    /// Product `ρ_a ρ_{a+1} ⋯ ρ_b`; empty (equal to 1) when `b < a`.
    pub fn rho_range(&self, a: i64, b: i64) -> f64 {
        (a..=b).map(|j| self.rho(j)).product()
    }

    /// Largest `|α_j|`.
    pub fn max_modulus(&self) -> f64 {
        self.alpha.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    /// Largest `|α_j − β_j|`.
    pub fn distance(&self, other: &Self) -> f64 {
        self.alpha
            .iter()
            .zip(&other.alpha)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Multiplies every coefficient by `c` (for example a phase).
    pub fn scaled(&self, c: Complex64) -> Result<Self> {
        Self::new(self.alpha.iter().map(|a| a * c).collect())
    }
}

#[derive(Serialize, Deserialize)]
struct VerblunskyJson {
    p: usize,
    alpha: Vec<[f64; 2]>,
}

impl Serialize for VerblunskyVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        VerblunskyJson {
            p: self.p(),
            alpha: json::pairs(&self.alpha),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for VerblunskyVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = VerblunskyJson::deserialize(d)?;
        if raw.alpha.len() != raw.p {
            return Err(D::Error::custom(format!(
                "p = {} but {} coefficients supplied",
                raw.p,
                raw.alpha.len()
            )));
        }
        VerblunskyVector::new(json::unpairs(&raw.alpha)).map_err(D::Error::custom)
    }
}

/// The theta block `[[ā, ρ], [ρ, −a]]`, unitary with determinant −1.
pub fn theta_block(a: Complex64) -> Result<CMat> {
    if !(a.norm() < 1.0) {
        return Err(Error::Domain(format!("|a| = {} is not below 1", a.norm())));
    }
    let rho = Complex64::new((1.0 - a.norm_sqr()).sqrt(), 0.0);
    Ok(CMat::from_row_slice(2, 2, &[a.conj(), rho, rho, -a]))
}

/// The factorization `E(h) = g^e · g^o(h)` of a Floquet CMV loop.
#[derive(Clone, Debug)]
pub struct FloquetCMV {
    /// Verblunsky data the loop was built from.
    pub alpha: VerblunskyVector,
    /// Constant even factor `g^e`.
    pub ge: CMat,
    /// Odd factor `g^o(h)` with support `{−1, 0, 1}`.
    pub go: LaurentMatrix,
    /// The product `E(h) = g^e g^o(h)`.
    pub assembled: LaurentMatrix,
}

/// `ρ = √(1 − a ā)` for a generic scalar.
fn rho_of<S: Scalar>(a: S) -> S {
    (S::one() - a * a.conj()).sqrt()
}

/// Even factor `g^e` over a generic scalar.
pub fn even_factor<S: Scalar>(alpha: &[S]) -> SmallMat<S> {
    let p = alpha.len();
    let mut g = SmallMat::zeros(p);
    for k in (0..p).step_by(2) {
        let a = alpha[k];
        let r = rho_of(a);
        g[(k, k)] = a.conj();
        g[(k, k + 1)] = r;
        g[(k + 1, k)] = r;
        g[(k + 1, k + 1)] = -a;
    }
    g
}

/// Coefficients of `g^o(h)` at `h^{-1}`, `h^0`, `h^1` over a generic scalar.
pub fn odd_factor<S: Scalar>(alpha: &[S]) -> [SmallMat<S>; 3] {
    let p = alpha.len();
    let mut lo = SmallMat::zeros(p);
    let mut mid = SmallMat::zeros(p);
    let mut hi = SmallMat::zeros(p);
    for k in (1..p.saturating_sub(1)).step_by(2) {
        let a = alpha[k];
        let r = rho_of(a);
        mid[(k, k)] = a.conj();
        mid[(k, k + 1)] = r;
        mid[(k + 1, k)] = r;
        mid[(k + 1, k + 1)] = -a;
    }
    let a = alpha[p - 1];
    let r = rho_of(a);
    mid[(0, 0)] = -a;
    mid[(p - 1, p - 1)] = a.conj();
    hi[(0, p - 1)] = r;
    lo[(p - 1, 0)] = r;
    [lo, mid, hi]
}

/// Coefficients of `E(h)` at `h^{-1}`, `h^0`, `h^1` over a generic scalar.
pub fn floquet_coefficients<S: Scalar>(alpha: &[S]) -> [SmallMat<S>; 3] {
    let ge = even_factor(alpha);
    let [lo, mid, hi] = odd_factor(alpha);
    [ge.matmul(&lo), ge.matmul(&mid), ge.matmul(&hi)]
}

/// `E(h)` at a given `h` over a generic scalar.
pub fn floquet_eval<S: Scalar>(coeffs: &[SmallMat<S>; 3], h: Complex64) -> SmallMat<S> {
    coeffs[0]
        .scaled(h.inv())
        .add(&coeffs[1])
        .add(&coeffs[2].scaled(h))
}

pub(crate) fn to_cmat(m: &SmallMat<Complex64>) -> CMat {
    CMat::from_row_slice(m.n(), m.n(), &m.values())
}

/// Builds `g^e`, `g^o(h)` and `E(h)` from Verblunsky data.
pub fn build_factors(v: &VerblunskyVector) -> FloquetCMV {
    let p = v.p();
    let ge = to_cmat(&even_factor(v.as_slice()));
    let [lo, mid, hi] = odd_factor(v.as_slice());
    let go = LaurentMatrix::from_coeffs(
        p,
        [(-1, to_cmat(&lo)), (0, to_cmat(&mid)), (1, to_cmat(&hi))],
    )
    .expect("p validated by VerblunskyVector");
    let assembled = go.left_mul(&ge);
    FloquetCMV {
        alpha: v.clone(),
        ge,
        go,
        assembled,
    }
}

/// `E(h)` for Verblunsky data `v`.
pub fn floquet_loop(v: &VerblunskyVector) -> LaurentMatrix {
    build_factors(v).assembled
}

/// The Coxeter element `x_f`: the Floquet CMV loop with every `α_j = 0`.
///
/// `x_f^e = diag(w*, …, w*)` with `w* = [[0,1],[1,0]]`, and `x_f^o(h)` has
/// `w*` on the interior blocks, `h` at `(0, p−1)` and `h⁻¹` at `(p−1, 0)`.
pub fn coxeter_element(p: usize) -> Result<FloquetCMV> {
    if p == 0 || p % 2 != 0 {
        return Err(Error::Domain(format!(
            "the Coxeter element needs an even size, got {p}"
        )));
    }
    let mut xe = CMat::zeros(p, p);
    for k in (0..p).step_by(2) {
        xe[(k, k + 1)] = ONE;
        xe[(k + 1, k)] = ONE;
    }
    let mut mid = CMat::zeros(p, p);
    for k in (1..p - 1).step_by(2) {
        mid[(k, k + 1)] = ONE;
        mid[(k + 1, k)] = ONE;
    }
    let mut hi = CMat::zeros(p, p);
    hi[(0, p - 1)] = ONE;
    let mut lo = CMat::zeros(p, p);
    lo[(p - 1, 0)] = ONE;
    let go = LaurentMatrix::from_coeffs(p, [(-1, lo), (0, mid), (1, hi)])?;
    let assembled = go.left_mul(&xe);
    Ok(FloquetCMV {
        alpha: VerblunskyVector::zeros(p)?,
        ge: xe,
        go,
        assembled,
    })
}

/// Entry of `E(h)` at row `r` and "extended" column `c ∈ [−1, p]`: columns
/// `−1` and `p` wrap to `p−1` and `0` and pick up `h^{+1}` and `h^{-1}`.
fn extended_entry(l: &LaurentMatrix, r: usize, c: i64) -> Complex64 {
    let p = l.p() as i64;
    let power = -(c.div_euclid(p)) as i32;
    let col = c.rem_euclid(p) as usize;
    l.coeff(power)
        .map(|m| m[(r, col)])
        .unwrap_or(Complex64::new(0.0, 0.0))
}

/// Best-fit Verblunsky data for a loop of Floquet CMV shape, together with the
/// largest coefficientwise deviation between `L` and the rebuilt loop.
///
/// Within the row pair `(2k, 2k+1)`, the extended column `2k+2` equals
/// `ρ_{2k+1}·(ρ_{2k}, −α_{2k})` and the extended column `2k−1` equals
/// `ρ_{2k−1}·(ᾱ_{2k}, ρ_{2k})`; row `2k` restricted to extended columns
/// `(2k+1, 2k+2)` equals `ρ_{2k}·(ᾱ_{2k+1}, ρ_{2k+1})`. Normalizing these
/// vectors yields every coefficient.
pub fn fit_floquet(l: &LaurentMatrix) -> Option<(VerblunskyVector, f64)> {
    let p = l.p();
    let mut alpha = vec![Complex64::new(0.0, 0.0); p];
    for k in 0..p / 2 {
        let (r0, r1) = (2 * k, 2 * k + 1);
        let right = (
            extended_entry(l, r0, 2 * k as i64 + 2),
            extended_entry(l, r1, 2 * k as i64 + 2),
        );
        let left = (
            extended_entry(l, r0, 2 * k as i64 - 1),
            extended_entry(l, r1, 2 * k as i64 - 1),
        );
        let nr = (right.0.norm_sqr() + right.1.norm_sqr()).sqrt();
        let nl = (left.0.norm_sqr() + left.1.norm_sqr()).sqrt();
        if nr.max(nl) < 1e-300 {
            return None;
        }
        alpha[r0] = if nr >= nl {
            -right.1 / nr
        } else {
            left.0.conj() / nl
        };
        let row = (
            extended_entry(l, r0, 2 * k as i64 + 1),
            extended_entry(l, r0, 2 * k as i64 + 2),
        );
        let nrow = (row.0.norm_sqr() + row.1.norm_sqr()).sqrt();
        if nrow < 1e-300 {
            return None;
        }
        alpha[r1] = row.0.conj() / nrow;
    }
    let v = VerblunskyVector::new(alpha).ok()?;
    let rebuilt = floquet_loop(&v);
    let residual = entrywise_distance(l, &rebuilt);
    Some((v, residual))
}

/// Largest entrywise modulus of `a − b` over all powers.
pub fn entrywise_distance(a: &LaurentMatrix, b: &LaurentMatrix) -> f64 {
    (a - b)
        .iter()
        .map(|(_, m)| m.iter().map(|z| z.norm()).fold(0.0, f64::max))
        .fold(0.0, f64::max)
}

/// Returns the Verblunsky data of `L` if `L = g^e(v)·g^o(v)` up to an
/// entrywise residual of at most `tol`.
pub fn recognize_floquet(l: &LaurentMatrix, tol: f64) -> Option<VerblunskyVector> {
    match fit_floquet(l) {
        Some((v, residual)) if residual <= tol => Some(v),
        _ => None,
    }
}

/// The decomposition `E(h)^n = A_0 + h A_1 + h⁻¹ A_{-1}` for `1 ≤ n ≤ p/2`,
/// returned as `(A_0, A_1, A_{-1})`.
pub fn floquet_power(v: &VerblunskyVector, n: usize) -> Result<(CMat, CMat, CMat)> {
    let p = v.p();
    if n == 0 || n > p / 2 {
        return Err(Error::OutOfRange(format!(
            "power n = {n} outside 1..={}",
            p / 2
        )));
    }
    let e = floquet_loop(v);
    let en = e.pow(n as u32);
    let outside = en.norm_outside(-1, 1);
    if outside > 1e-12 {
        return Err(Error::Consistency(format!(
            "E(h)^{n} has h-powers beyond ±1 (norm {outside:.3e})"
        )));
    }
    Ok((
        en.coeff_or_zero(0),
        en.coeff_or_zero(1),
        en.coeff_or_zero(-1),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn theta_block_values() {
        let t0 = theta_block(c(0.0, 0.0)).unwrap();
        assert_eq!(t0, CMat::from_row_slice(2, 2, &[c(0., 0.), ONE, ONE, c(0., 0.)]));
        let t = theta_block(c(0.6, 0.0)).unwrap();
        let expected = CMat::from_row_slice(2, 2, &[c(0.6, 0.), c(0.8, 0.), c(0.8, 0.), c(-0.6, 0.)]);
        assert!((t - expected).norm() < 1e-15);
        let a = c(0.0, 0.3);
        let t = theta_block(a).unwrap();
        let r = 0.91f64.sqrt();
        let expected = CMat::from_row_slice(2, 2, &[c(0., -0.3), c(r, 0.), c(r, 0.), c(0., -0.3)]);
        assert!((t - expected).norm() < 1e-15);
        assert!(theta_block(c(1.0, 0.0)).is_err());
    }

    #[test]
    fn theta_block_is_unitary_with_determinant_minus_one() {
        let mut g = rng::seeded(3);
        for _ in 0..50 {
            let a = rng::annulus_point(&mut g, 0.0, 0.99);
            let t = theta_block(a).unwrap();
            assert!((&t * t.adjoint() - CMat::identity(2, 2)).norm() < 1e-14);
            assert!((t.determinant() + ONE).norm() < 1e-15);
        }
    }

    #[test]
    fn free_case_p2_is_diagonal() {
        let v = VerblunskyVector::zeros(2).unwrap();
        let e = floquet_loop(&v);
        let mut lo = CMat::zeros(2, 2);
        lo[(0, 0)] = ONE;
        let mut hi = CMat::zeros(2, 2);
        hi[(1, 1)] = ONE;
        let expected = LaurentMatrix::from_coeffs(2, [(-1, lo), (1, hi)]).unwrap();
        assert!(e.distance(&expected) < 1e-16);
        let go = build_factors(&v).go.eval(c(0.0, 1.0)).unwrap();
        let expected_go = CMat::from_row_slice(2, 2, &[c(0., 0.), c(0., 1.), c(0., -1.), c(0., 0.)]);
        assert!((go - expected_go).norm() < 1e-16);
    }

    #[test]
    fn p2_matches_hand_product() {
        let (a0, a1) = (c(0.5, 0.0), c(0.0, 0.3));
        let v = VerblunskyVector::new(vec![a0, a1]).unwrap();
        let (r0, r1) = ((1.0 - a0.norm_sqr()).sqrt(), (1.0 - a1.norm_sqr()).sqrt());
        let e = floquet_loop(&v);
        for s in 0..8 {
            let h = Complex64::from_polar(1.0, 0.7 * s as f64 + 0.1);
            let hand = CMat::from_row_slice(
                2,
                2,
                &[
                    -a0.conj() * a1 + r0 * r1 / h,
                    a0.conj() * r1 * h + r0 * a1.conj(),
                    -r0 * a1 - a0 * r1 / h,
                    r0 * r1 * h - a0 * a1.conj(),
                ],
            );
            assert!((e.eval(h).unwrap() - hand).norm() < 1e-14);
        }
    }

    #[test]
    fn coxeter_matches_zero_data() {
        for p in [2, 4, 6, 8] {
            let x = coxeter_element(p).unwrap();
            let z = build_factors(&VerblunskyVector::zeros(p).unwrap());
            assert!(x.assembled.circle_distance(&z.assembled, 8) < 1e-15);
            let unit = &x.assembled * &x.assembled.star();
            assert!(unit.distance(&LaurentMatrix::identity(p).unwrap()) < 1e-15);
        }
        let x4 = coxeter_element(4).unwrap();
        assert_eq!(x4.go.coeff(1).unwrap()[(0, 3)], ONE);
        assert_eq!(x4.go.coeff(-1).unwrap()[(3, 0)], ONE);
        assert_eq!(x4.go.coeff(0).unwrap()[(1, 2)], ONE);
        assert!(coxeter_element(3).is_err());
    }

    #[test]
    fn go_has_exactly_two_h_dependent_entries() {
        let mut g = rng::seeded(11);
        let v = rng::verblunsky(&mut g, 6, 0.6);
        let f = build_factors(&v);
        let hi = f.go.coeff(1).unwrap();
        let lo = f.go.coeff(-1).unwrap();
        assert_eq!(hi.iter().filter(|z| z.norm() > 0.0).count(), 1);
        assert_eq!(lo.iter().filter(|z| z.norm() > 0.0).count(), 1);
        assert!((hi[(0, 5)].re - v.rho(5)).abs() < 1e-16);
        assert!((lo[(5, 0)].re - v.rho(5)).abs() < 1e-16);
    }

    #[test]
    fn identity_is_not_floquet_shaped() {
        for p in [2, 4] {
            let id = LaurentMatrix::identity(p).unwrap();
            assert!(recognize_floquet(&id, 1e-6).is_none());
        }
    }

    #[test]
    fn power_of_coxeter_p4() {
        // x^e swaps rows (0,1) and (2,3), so the corner entries h and h⁻¹ of
        // x^o land at (1,3) and (2,0).
        let v = VerblunskyVector::zeros(4).unwrap();
        let (_, a1, am1) = floquet_power(&v, 1).unwrap();
        let mut e13 = CMat::zeros(4, 4);
        e13[(1, 3)] = ONE;
        let mut e20 = CMat::zeros(4, 4);
        e20[(2, 0)] = ONE;
        assert!((a1 - e13).norm() < 1e-16);
        assert!((am1 - e20).norm() < 1e-16);
        assert!(floquet_power(&v, 3).is_err());
        assert!(floquet_power(&v, 0).is_err());
    }

    #[test]
    fn power_structure_and_trace_identity() {
        let mut g = rng::seeded(12);
        for _ in 0..10 {
            let v = rng::verblunsky(&mut g, 6, 0.5);
            for n in 1..=2 {
                let (_, a1, am1) = floquet_power(&v, n).unwrap();
                for i in 0..6 {
                    for j in 0..6 {
                        if i >= j {
                            assert!(a1[(i, j)].norm() < 1e-12);
                        }
                        if i <= j {
                            assert!(am1[(i, j)].norm() < 1e-12);
                        }
                    }
                }
            }
            let (_, a1, am1) = floquet_power(&v, 3).unwrap();
            let p = v.rho_product();
            for k in 0..6 {
                let (up, down) = if k % 2 == 0 { (0.0, p) } else { (p, 0.0) };
                assert!((a1[(k, k)] - up).norm() < 1e-12);
                assert!((am1[(k, k)] - down).norm() < 1e-12);
            }
            assert!((a1.trace() - 3.0 * p).norm() < 1e-10);
            assert!((am1.trace() - 3.0 * p).norm() < 1e-10);
        }
    }

    #[test]
    fn band_structure_of_constant_power() {
        let mut g = rng::seeded(13);
        let v = rng::verblunsky(&mut g, 8, 0.6);
        for n in 1..4 {
            let (a0, _, _) = floquet_power(&v, n).unwrap();
            for i in 0..8i64 {
                for j in 0..8i64 {
                    if (i - j).abs() > 2 * n as i64 {
                        assert!(a0[(i as usize, j as usize)].norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn round_trip_recognition() {
        let mut g = rng::seeded(14);
        for p in [2, 4, 6, 8] {
            for _ in 0..10 {
                let v = rng::verblunsky(&mut g, p, 0.9);
                let back = recognize_floquet(&floquet_loop(&v), 1e-10).unwrap();
                assert!(back.distance(&v) < 1e-10);
            }
        }
    }

    #[test]
    fn json_round_trip_and_validation() {
        let v = VerblunskyVector::new(vec![c(0.5, 0.0), c(0.0, 0.3)]).unwrap();
        let text = serde_json::to_string(&v).unwrap();
        assert_eq!(text, r#"{"p":2,"alpha":[[0.5,0.0],[0.0,0.3]]}"#);
        let back: VerblunskyVector = serde_json::from_str(&text).unwrap();
        assert_eq!(back, v);
        assert!(serde_json::from_str::<VerblunskyVector>(r#"{"p":2,"alpha":[[1.0,0.0],[0.0,0.0]]}"#).is_err());
        assert!(VerblunskyVector::new(vec![c(0.1, 0.0); 3]).is_err());
    }
}
