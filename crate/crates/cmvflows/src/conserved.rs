//! Transfer matrix, discriminant, characteristic polynomial of `E(h)` and the
//! conserved quantities `P`, `I_j`, `K_n`.
//!
//! The characteristic polynomial satisfies
//!
//! ```text
//! det(zI − E(h)) = Σ_{j=-p/2}^{p/2} I_j z^{j+p/2} − (h + h⁻¹) z^{p/2} P
//!                = P z^{p/2} (Δ(z) − h − h⁻¹),
//! ```
//!
//! so its `h`-support is `{−1, 0, 1}`. It is recovered from samples: four
//! values of `h` on the unit circle separate the `h`-powers exactly, and `p+1`
//! rotated roots of unity in `z` separate the `z`-powers exactly. Every
//! routine is generic over [`Scalar`], so the same code yields derivatives
//! when run on dual numbers.

use std::f64::consts::TAU;

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::cmv::{floquet_coefficients, floquet_eval, VerblunskyVector};
use crate::error::{Error, Result};
use crate::json;
use crate::scalar::{Scalar, SmallMat};

/// Angular offset of the `z` interpolation nodes, chosen so that no node
/// coincides with a root of unity of small order.
const Z_NODE_OFFSET: f64 = 0.3;

/// The transfer matrix
/// `T_p(z) = (Π ρ_j)⁻¹ · A_{p−1}(z) ⋯ A_0(z)` with
/// `A_j(z) = [[z, −ᾱ_j], [−α_j z, 1]]`.
pub fn transfer_matrix(v: &VerblunskyVector, z: Complex64) -> Result<Matrix2<Complex64>> {
    if z.norm() == 0.0 {
        return Err(Error::Domain("transfer matrix needs z ≠ 0".into()));
    }
    let one = Complex64::new(1.0, 0.0);
    let mut t = Matrix2::identity();
    for &a in v.as_slice() {
        let step = Matrix2::new(z, -a.conj(), -a * z, one);
        t = step * t;
    }
    Ok(t / Complex64::new(v.rho_product(), 0.0))
}

/// The discriminant `Δ(z) = z^{−p/2} tr T_p(z)`.
pub fn discriminant(v: &VerblunskyVector, z: Complex64) -> Result<Complex64> {
    let t = transfer_matrix(v, z)?;
    Ok(t.trace() * z.powi(-(v.p() as i32 / 2)))
}

/// Bivariate coefficient table of `det(zI − E(h))`.
#[derive(Clone, Debug)]
pub struct CharPoly<S = Complex64> {
    p: usize,
    /// `coeffs[k][m]` multiplies `z^k h^{m−1}`, `k = 0..=p`.
    coeffs: Vec<[S; 3]>,
    /// Largest aliased contribution of `h^{±2}` seen by the four-point transform.
    alias: f64,
}

impl<S: Scalar> CharPoly<S> {
    /// Period `p`.
    pub fn p(&self) -> usize {
        self.p
    }

    /// Coefficient of `z^k h^m`, zero outside `0 ≤ k ≤ p`, `|m| ≤ 1`.
    pub fn coeff(&self, k: usize, m: i32) -> S {
        if k > self.p || m.abs() > 1 {
            return S::zero();
        }
        self.coeffs[k][(m + 1) as usize]
    }

    /// Largest coefficient at `h^{±2}` reported by the sampling; nonzero
    /// values indicate contributions outside `{−1, 0, 1}`.
    pub fn outside_support(&self) -> f64 {
        self.alias
    }

    /// Evaluates the polynomial at `(z, h)`.
    pub fn eval(&self, z: Complex64, h: Complex64) -> S {
        let hs = [h.inv(), Complex64::new(1.0, 0.0), h];
        let mut acc = S::zero();
        let mut zk = Complex64::new(1.0, 0.0);
        for row in &self.coeffs {
            for (c, hm) in row.iter().zip(hs) {
                acc += c.scale(zk * hm);
            }
            zk *= z;
        }
        acc
    }
}

/// Characteristic polynomial over a generic scalar.
pub fn char_poly_generic<S: Scalar>(alpha: &[S]) -> CharPoly<S> {
    let p = alpha.len();
    let e = floquet_coefficients(alpha);
    let n_z = p + 1;
    let z_nodes: Vec<Complex64> = (0..n_z)
        .map(|m| Complex64::from_polar(1.0, Z_NODE_OFFSET + TAU * m as f64 / n_z as f64))
        .collect();
    // h_s = i^s; row s of `z_coeffs` holds the z-coefficients of det(zI − E(h_s)).
    let mut z_coeffs: Vec<Vec<S>> = Vec::with_capacity(4);
    for s in 0..4 {
        let h = Complex64::new(0.0, 1.0).powi(s);
        let eh = floquet_eval(&e, h);
        let dets: Vec<S> = z_nodes
            .iter()
            .map(|&z| {
                let mut m = eh.scaled(Complex64::new(-1.0, 0.0));
                for i in 0..p {
                    m[(i, i)] += S::constant(z);
                }
                m.det()
            })
            .collect();
        let row = (0..n_z)
            .map(|k| {
                let mut acc = S::zero();
                for (m, d) in dets.iter().enumerate() {
                    let angle = -(k as f64) * (Z_NODE_OFFSET + TAU * m as f64 / n_z as f64);
                    acc += d.scale(Complex64::from_polar(1.0 / n_z as f64, angle));
                }
                acc
            })
            .collect();
        z_coeffs.push(row);
    }
    // Four-point inverse transform in h; bin 2 aliases h^{±2}.
    let mut coeffs = Vec::with_capacity(n_z);
    let mut alias: f64 = 0.0;
    for k in 0..n_z {
        let bin = |q: i32| {
            let mut acc = S::zero();
            for (s, row) in z_coeffs.iter().enumerate() {
                let w = Complex64::new(0.0, 1.0).powi(-q * s as i32) * 0.25;
                acc += row[k].scale(w);
            }
            acc
        };
        alias = alias.max(bin(2).magnitude());
        coeffs.push([bin(3), bin(0), bin(1)]);
    }
    CharPoly { p, coeffs, alias }
}

/// Characteristic polynomial `det(zI − E(h))` of the Floquet CMV loop of `v`.
pub fn char_poly(v: &VerblunskyVector) -> CharPoly {
    char_poly_generic(v.as_slice())
}

/// Conserved quantities over a generic scalar, indexed like [`ConservedSet`].
#[derive(Clone, Debug)]
pub struct Invariants<S> {
    /// `P = Π ρ_j`.
    pub p_value: S,
    /// `I_j` stored at position `j + p/2`.
    pub i: Vec<S>,
    /// `K_n` stored at position `n − 1`.
    pub k: Vec<S>,
}

/// `tr A_0(n)`, the `h`-constant part of `tr E(h)^n`, from `2n+1` circle samples.
pub fn trace_power_constant<S: Scalar>(e: &[SmallMat<S>; 3], n: usize) -> S {
    let m = 2 * n + 1;
    let mut acc = S::zero();
    for s in 0..m {
        let h = Complex64::from_polar(1.0, TAU * s as f64 / m as f64);
        let eh = floquet_eval(e, h);
        let mut pw = eh.clone();
        for _ in 1..n {
            pw = pw.matmul(&eh);
        }
        acc += pw.trace();
    }
    acc.scale(Complex64::new(1.0 / m as f64, 0.0))
}

/// `P`, `I_j` and `K_n` over a generic scalar.
pub fn invariants_generic<S: Scalar>(alpha: &[S]) -> Invariants<S> {
    let p = alpha.len();
    let cp = char_poly_generic(alpha);
    let i = (0..=p).map(|k| cp.coeff(k, 0)).collect();
    let p_value = alpha
        .iter()
        .fold(S::one(), |acc, &a| acc * (S::one() - a * a.conj()).sqrt());
    let e = floquet_coefficients(alpha);
    let k = (1..=p / 2)
        .map(|n| trace_power_constant(&e, n).scale(Complex64::new(1.0 / n as f64, 0.0)))
        .collect();
    Invariants { p_value, i, k }
}

/// The full set of conserved quantities.
#[derive(Clone, Debug, PartialEq)]
pub struct ConservedSet {
    /// `P = Π ρ_j`, in `(0, 1]`.
    pub p_value: f64,
    /// `I_j` for `j = −p/2 ..= p/2`, stored at position `j + p/2`.
    pub i: Vec<Complex64>,
    /// `K_n` for `n = 1 ..= p/2`, stored at position `n − 1`.
    pub k: Vec<Complex64>,
}

impl ConservedSet {
    /// Period `p`.
    pub fn p(&self) -> usize {
        self.i.len() - 1
    }

    /// `I_j` for `−p/2 ≤ j ≤ p/2`.
    pub fn i_at(&self, j: i64) -> Complex64 {
        self.i[(j + self.p() as i64 / 2) as usize]
    }

    /// `K_n` for `1 ≤ n ≤ p/2`.
    pub fn k_at(&self, n: usize) -> Complex64 {
        self.k[n - 1]
    }

    /// `(|ΔP|, max_j |ΔI_j|, max_n |ΔK_n|)` relative to `other`.
    pub fn drift(&self, other: &ConservedSet) -> (f64, f64, f64) {
        let max_diff = |a: &[Complex64], b: &[Complex64]| {
            a.iter()
                .zip(b)
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max)
        };
        (
            (self.p_value - other.p_value).abs(),
            max_diff(&self.i, &other.i),
            max_diff(&self.k, &other.k),
        )
    }
}

#[derive(Serialize, Deserialize)]
struct ConservedJson {
    #[serde(rename = "P")]
    p: f64,
    #[serde(rename = "I")]
    i: Vec<[f64; 2]>,
    #[serde(rename = "K")]
    k: Vec<[f64; 2]>,
}

impl Serialize for ConservedSet {
    fn serialize<Ser: Serializer>(&self, s: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
        ConservedJson {
            p: self.p_value,
            i: json::pairs(&self.i),
            k: json::pairs(&self.k),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ConservedSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = ConservedJson::deserialize(d)?;
        if raw.i.len() % 2 == 0 || raw.k.len() != raw.i.len() / 2 {
            return Err(D::Error::custom("I must have p+1 entries and K must have p/2"));
        }
        Ok(ConservedSet {
            p_value: raw.p,
            i: json::unpairs(&raw.i),
            k: json::unpairs(&raw.k),
        })
    }
}

/// Computes `P`, `I_j` and `K_n` for `v`.
pub fn invariants(v: &VerblunskyVector) -> ConservedSet {
    let inv = invariants_generic(v.as_slice());
    ConservedSet {
        p_value: inv.p_value.re,
        i: inv.i,
        k: inv.k,
    }
}
