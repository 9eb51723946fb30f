//! Spectral-curve data of the periodic problem.
//!
//! Solutions of `E u = z u` on the two-sided lattice obey the three-term
//! recurrences
//!
//! ```text
//! u_{2j+1} = (ρ_{2j−1} u_{2j−1} − α_{2j−1} u_{2j} − z α_{2j} u_{2j}) / (z ρ_{2j})
//! u_{2j+2} = (z ρ_{2j} u_{2j} − (z ᾱ_{2j} + ᾱ_{2j+1}) u_{2j+1}) / ρ_{2j+1}
//! ```
//!
//! whose solutions with `(u_{−1}, u_0) = (1, 0)` and `(0, 1)` are the Laurent
//! polynomials `φ_n(z)` and `ψ_n(z)`. One period of transport is the
//! monodromy `M(z) = [[φ_{p−1}, ψ_{p−1}], [φ_p, ψ_p]]` with `det M = 1` and
//! `tr M = Δ(z)`. The spectral curve `Δ(z) = h + h⁻¹` branches where
//! `Δ = ±2`; the Dirichlet points are the zeros of `ψ_{p−1}`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cmv::{build_factors, VerblunskyVector};
use crate::conserved::{char_poly, discriminant, invariants};
use crate::error::{Error, Result};
use crate::json;
use crate::laurent::CMat;
use crate::linalg::{eigenvalues, multiset_distance, poly_roots};

/// Threshold below which a Verblunsky coefficient counts as zero for the
/// genericity assumption `α_j ≠ 0`.
pub const GENERIC_ALPHA: f64 = 1e-8;

const DROP: f64 = 1e-15;

/// Finitely supported Laurent polynomial in `z` with complex coefficients.
#[derive(Clone, Default, PartialEq)]
pub struct LaurentScalar {
    coeffs: BTreeMap<i32, Complex64>,
}

impl fmt::Debug for LaurentScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.coeffs.iter()).finish()
    }
}

impl LaurentScalar {
    /// The zero polynomial.
    pub fn zero() -> Self {
        Self::default()
    }

    /// `c z^k`.
    pub fn monomial(k: i32, c: Complex64) -> Self {
        Self::from_terms([(k, c)])
    }

    /// The constant `c`.
    pub fn constant(c: Complex64) -> Self {
        Self::monomial(0, c)
    }

    /// Builds from `(power, coefficient)` pairs, summing repeats and dropping
    /// coefficients of modulus below `1e−15`.
    pub fn from_terms(terms: impl IntoIterator<Item = (i32, Complex64)>) -> Self {
        let mut coeffs = BTreeMap::new();
        for (k, c) in terms {
            *coeffs.entry(k).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        coeffs.retain(|_, c: &mut Complex64| c.norm() >= DROP);
        LaurentScalar { coeffs }
    }

    /// Coefficient of `z^k`.
    pub fn coeff(&self, k: i32) -> Complex64 {
        self.coeffs.get(&k).copied().unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// Stored `(power, coefficient)` pairs in increasing power.
    pub fn terms(&self) -> impl Iterator<Item = (i32, Complex64)> + '_ {
        self.coeffs.iter().map(|(k, c)| (*k, *c))
    }

    /// Lowest stored power.
    pub fn min_power(&self) -> Option<i32> {
        self.coeffs.keys().next().copied()
    }

    /// Highest stored power.
    pub fn max_power(&self) -> Option<i32> {
        self.coeffs.keys().next_back().copied()
    }

    /// Value at `z ≠ 0`.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().map(|(k, c)| c * z.powi(*k)).sum()
    }

    /// Multiplies by `c z^k`.
    pub fn times_monomial(&self, k: i32, c: Complex64) -> Self {
        Self::from_terms(self.coeffs.iter().map(|(j, a)| (j + k, a * c)))
    }

    /// Divides by `c z^k`; exact in the Laurent ring.
    pub fn div_monomial(&self, k: i32, c: Complex64) -> Self {
        self.times_monomial(-k, c.inv())
    }

    /// Coefficients of `z^{−lo} · self` as an ordinary polynomial, constant
    /// term first, where `lo` is the lowest stored power.
    pub fn polynomial_part(&self) -> (i32, Vec<Complex64>) {
        match (self.min_power(), self.max_power()) {
            (Some(lo), Some(hi)) => (lo, (lo..=hi).map(|k| self.coeff(k)).collect()),
            _ => (0, Vec::new()),
        }
    }
}

impl Add for &LaurentScalar {
    type Output = LaurentScalar;
    fn add(self, o: &LaurentScalar) -> LaurentScalar {
        LaurentScalar::from_terms(self.terms().chain(o.terms()))
    }
}

impl Sub for &LaurentScalar {
    type Output = LaurentScalar;
    fn sub(self, o: &LaurentScalar) -> LaurentScalar {
        LaurentScalar::from_terms(self.terms().chain(o.terms().map(|(k, c)| (k, -c))))
    }
}

impl Neg for &LaurentScalar {
    type Output = LaurentScalar;
    fn neg(self) -> LaurentScalar {
        LaurentScalar::from_terms(self.terms().map(|(k, c)| (k, -c)))
    }
}

impl Mul for &LaurentScalar {
    type Output = LaurentScalar;
    fn mul(self, o: &LaurentScalar) -> LaurentScalar {
        let mut terms = Vec::new();
        for (i, a) in self.terms() {
            for (j, b) in o.terms() {
                terms.push((i + j, a * b));
            }
        }
        LaurentScalar::from_terms(terms)
    }
}

/// Solution of the recurrence at consecutive lattice positions.
#[derive(Clone, Debug)]
pub struct Solution {
    start: i64,
    values: Vec<LaurentScalar>,
}

impl Solution {
    /// `u_n` for a position in the computed range.
    pub fn at(&self, n: i64) -> &LaurentScalar {
        &self.values[(n - self.start) as usize]
    }

    /// First and last computed positions.
    pub fn range(&self) -> (i64, i64) {
        (self.start, self.start + self.values.len() as i64 - 1)
    }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// One step of the recurrence: from `(u_{n−1}, u_n)` to `u_{n+1}`.
fn step(v: &VerblunskyVector, n: i64, prev: &LaurentScalar, cur: &LaurentScalar) -> LaurentScalar {
    if n.rem_euclid(2) == 0 {
        let num = &(&prev.times_monomial(0, c(v.rho(n - 1))) - &cur.times_monomial(0, v.alpha(n - 1)))
            - &cur.times_monomial(1, v.alpha(n));
        num.div_monomial(1, c(v.rho(n)))
    } else {
        let num = &(&prev.times_monomial(1, c(v.rho(n - 1))) - &cur.times_monomial(1, v.alpha(n - 1).conj()))
            - &cur.times_monomial(0, v.alpha(n).conj());
        num.div_monomial(0, c(v.rho(n)))
    }
}

/// Solves the recurrence from `(u_{start−1}, u_start)` up to position `last`.
pub fn propagate(
    v: &VerblunskyVector,
    start: i64,
    before: LaurentScalar,
    at_start: LaurentScalar,
    last: i64,
) -> Solution {
    let mut values = vec![before, at_start];
    for n in start..last {
        let k = values.len();
        let next = step(v, n, &values[k - 2], &values[k - 1]);
        values.push(next);
    }
    Solution {
        start: start - 1,
        values,
    }
}

/// The basis `φ_n`, `ψ_n` for `n = −1 ..= n_max`.
pub fn bloch_basis(v: &VerblunskyVector, n_max: i64) -> Result<(Solution, Solution)> {
    if n_max < 1 {
        return Err(Error::OutOfRange(format!("n_max = {n_max} must be at least 1")));
    }
    let one = LaurentScalar::constant(c(1.0));
    let phi = propagate(v, 0, one.clone(), LaurentScalar::zero(), n_max);
    let psi = propagate(v, 0, LaurentScalar::zero(), one, n_max);
    Ok((phi, psi))
}

/// The shifted solution `ψ^[j]`: `u_{j−1} = 0`, `u_j = 1`, continued with the
/// recurrence, and reindexed so that `ψ^[j]_k = u_{k+j}` for
/// `k = −1 ..= p`.
pub fn shifted_basis(v: &VerblunskyVector, j: usize) -> Result<Vec<LaurentScalar>> {
    let p = v.p();
    if j >= p {
        return Err(Error::OutOfRange(format!("shift {j} outside 0..{p}")));
    }
    let j = j as i64;
    let s = propagate(
        v,
        j,
        LaurentScalar::zero(),
        LaurentScalar::constant(c(1.0)),
        j + p as i64,
    );
    Ok((-1..=p as i64).map(|k| s.at(k + j).clone()).collect())
}

/// `W_n = φ_n ψ_{n+1} − φ_{n+1} ψ_n`.
pub fn wronskian(phi: &Solution, psi: &Solution, n: i64) -> LaurentScalar {
    &(phi.at(n) * psi.at(n + 1)) - &(phi.at(n + 1) * psi.at(n))
}

/// The monodromy matrix `[[φ_{p−1}, ψ_{p−1}], [φ_p, ψ_p]]` at `z`.
pub fn monodromy(v: &VerblunskyVector, z: Complex64) -> Result<nalgebra::Matrix2<Complex64>> {
    if z.norm() == 0.0 {
        return Err(Error::Domain("monodromy needs z ≠ 0".into()));
    }
    let p = v.p() as i64;
    let (phi, psi) = bloch_basis(v, p)?;
    Ok(nalgebra::Matrix2::new(
        phi.at(p - 1).eval(z),
        psi.at(p - 1).eval(z),
        phi.at(p).eval(z),
        psi.at(p).eval(z),
    ))
}

/// Branch points and a genericity flag.
#[derive(Clone, Debug)]
pub struct BranchPoints {
    /// The `2p` roots of `P² z^p (Δ(z)² − 4)`.
    pub points: Vec<Complex64>,
    /// Whether all roots are separated by more than `1e−6`.
    pub distinct: bool,
}

/// Roots of `Q(z)² − 4P² z^p`, where `Q(z) = Σ_k I_{k−p/2} z^k = P z^{p/2} Δ(z)`.
pub fn branch_points(v: &VerblunskyVector) -> Result<BranchPoints> {
    let p = v.p();
    let inv = invariants(v);
    let q: Vec<Complex64> = inv.i.clone();
    let mut r = vec![Complex64::new(0.0, 0.0); 2 * p + 1];
    for (a, qa) in q.iter().enumerate() {
        for (b, qb) in q.iter().enumerate() {
            r[a + b] += qa * qb;
        }
    }
    r[p] -= 4.0 * inv.p_value * inv.p_value;
    let points = poly_roots(&r)?;
    let mut min_sep = f64::INFINITY;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            min_sep = min_sep.min((a - b).norm());
        }
    }
    Ok(BranchPoints {
        points,
        distinct: min_sep > 1e-6,
    })
}

/// Dirichlet eigenvalues and the divisor above them.
#[derive(Clone, Debug)]
pub struct DirichletData {
    /// The `p − 1` roots of `z^{p/2} ψ_{p−1}(z)`.
    pub z: Vec<Complex64>,
    /// Points `(h_k, z_k)` with `h_k = φ_{p−1}(z_k)`.
    pub divisor: Vec<(Complex64, Complex64)>,
    /// Eigenvalues of the truncated pencil `z ĝ^{e*} − ĝ^o`.
    pub pencil: Vec<Complex64>,
    /// Multiset distance between the two routes.
    pub route_gap: f64,
    /// Smallest distance between two Dirichlet points; values below `1e−6`
    /// signal a (near) collision.
    pub min_separation: f64,
}

fn check_generic(v: &VerblunskyVector) -> Result<()> {
    if let Some(j) = (0..v.p()).find(|&j| v.as_slice()[j].norm() <= GENERIC_ALPHA) {
        return Err(Error::NonGeneric(format!(
            "alpha_{j} = {} vanishes; Dirichlet data need every alpha_j ≠ 0",
            v.as_slice()[j]
        )));
    }
    Ok(())
}

fn dirichlet_roots(psi_last: &LaurentScalar) -> Result<Vec<Complex64>> {
    let (_, poly) = psi_last.polynomial_part();
    poly_roots(&poly)
}

/// Dirichlet points from the zeros of `ψ_{p−1}`, cross-checked against the
/// eigenvalues of `(ĝ^{e*})⁻¹ ĝ^o`, where the hat deletes the last row and
/// column.
pub fn dirichlet_data(v: &VerblunskyVector) -> Result<DirichletData> {
    check_generic(v)?;
    let p = v.p();
    let (phi, psi) = bloch_basis(v, p as i64)?;
    let psi_last = psi.at(p as i64 - 1);
    let z = dirichlet_roots(psi_last)?;
    if z.len() != p - 1 {
        return Err(Error::Consistency(format!(
            "z^(p/2) psi_(p-1) has degree {} instead of {}",
            z.len(),
            p - 1
        )));
    }
    let divisor = z.iter().map(|&zk| (phi.at(p as i64 - 1).eval(zk), zk)).collect();
    let f = build_factors(v);
    let m = p - 1;
    let ge_hat: CMat = f.ge.view((0, 0), (m, m)).adjoint();
    let go_hat: CMat = f.go.coeff_or_zero(0).view((0, 0), (m, m)).into_owned();
    let ge_inv = ge_hat
        .try_inverse()
        .ok_or_else(|| Error::NonGeneric("truncated even factor is singular".into()))?;
    let pencil = eigenvalues(&(ge_inv * go_hat))?;
    let route_gap = multiset_distance(&z, &pencil);
    if route_gap > 1e-7 {
        return Err(Error::Consistency(format!(
            "Dirichlet points from the recurrence and the pencil differ by {route_gap:.3e}"
        )));
    }
    let mut min_separation = f64::INFINITY;
    for (i, a) in z.iter().enumerate() {
        for b in &z[i + 1..] {
            min_separation = min_separation.min((a - b).norm());
        }
    }
    Ok(DirichletData {
        z,
        divisor,
        pencil,
        route_gap,
        min_separation,
    })
}

/// The two Floquet multipliers at `z`, ordered so that `|h_plus| > 1 > |h_minus|`.
///
/// For large `|z|` this agrees with `h_plus ~ z^{p/2}/P`. The routine refuses
/// to label points where the two roots have (nearly) equal modulus.
pub fn h_branches(v: &VerblunskyVector, z: Complex64) -> Result<(Complex64, Complex64)> {
    let delta = discriminant(v, z)?;
    let disc = delta * delta - 4.0;
    if disc.norm() < 1e-8 {
        return Err(Error::Domain(format!("z = {z} is within 1e-8 of a branch point")));
    }
    let s = disc.sqrt();
    let big = if (delta + s).norm() >= (delta - s).norm() {
        (delta + s) / 2.0
    } else {
        (delta - s) / 2.0
    };
    if big.norm() - 1.0 < 1e-8 {
        return Err(Error::Domain(format!(
            "|h_plus| = |h_minus| = 1 at z = {z}; sheets cannot be told apart"
        )));
    }
    Ok((big, big.inv()))
}

/// `N_j = φ_j ψ_{p−1} − φ_{p−1} ψ_j`, which keeps the Bloch vector free of
/// cancellation for large `|z|`.
fn bloch_numerators(phi: &Solution, psi: &Solution, p: i64, last: i64) -> Vec<LaurentScalar> {
    let psi_last = psi.at(p - 1);
    let phi_last = phi.at(p - 1);
    (-1..=last)
        .map(|j| &(phi.at(j) * psi_last) - &(phi_last * psi.at(j)))
        .collect()
}

/// Bloch solution `f_j = h φ_j + ((1 − h φ_{p−1}) / ψ_{p−1}) ψ_j` for
/// `j = −1 ..= last`, normalized by `f_{p−1} = 1`.
fn bloch_extended(v: &VerblunskyVector, h: Complex64, z: Complex64, last: i64) -> Result<Vec<Complex64>> {
    let p = v.p() as i64;
    let (phi, psi) = bloch_basis(v, last.max(p))?;
    let psi_last = psi.at(p - 1).eval(z);
    let scale = psi.at(p - 1).terms().map(|(k, c)| c.norm() * z.norm().powi(k)).fold(0.0, f64::max);
    if psi_last.norm() <= 1e-14 * scale.max(1e-300) {
        return Err(Error::Domain(format!("z = {z} is a Dirichlet point")));
    }
    let nums = bloch_numerators(&phi, &psi, p, last);
    Ok((-1..=last)
        .zip(nums)
        .map(|(j, n)| (h * n.eval(z) + psi.at(j).eval(z)) / psi_last)
        .collect())
}

/// The normalized Bloch eigenvector `(f_0, …, f_{p−1})` of `E(h)` with
/// eigenvalue `z`, with `f_{p−1} = 1`.
pub fn bloch_vector(v: &VerblunskyVector, h: Complex64, z: Complex64) -> Result<Vec<Complex64>> {
    let p = v.p();
    if h.norm() == 0.0 || z.norm() == 0.0 {
        return Err(Error::Domain("h and z must be nonzero".into()));
    }
    let delta = discriminant(v, z)?;
    let off = (h * h - delta * h + 1.0).norm() / (h.norm() * (delta.norm() + h.norm() + 1.0));
    if off > 1e-8 {
        return Err(Error::Domain(format!("(h, z) is off the curve by {off:.3e}")));
    }
    if (0..p).all(|j| v.as_slice()[j].norm() > GENERIC_ALPHA) {
        let (_, psi) = bloch_basis(v, p as i64)?;
        let roots = dirichlet_roots(psi.at(p as i64 - 1))?;
        if let Some(r) = roots.iter().find(|r| (*r - z).norm() <= 1e-6) {
            return Err(Error::Domain(format!("z = {z} is within 1e-6 of the Dirichlet point {r}")));
        }
    }
    let mut f = bloch_extended(v, h, z, p as i64 - 1)?;
    f.remove(0);
    f[p - 1] = Complex64::new(1.0, 0.0);
    Ok(f)
}

/// Bloch solution extended over two periods, `f_{−1}, …, f_{2p−1}`; it satisfies
/// `f_{j+p} = h⁻¹ f_j`.
pub fn bloch_solution_two_periods(
    v: &VerblunskyVector,
    h: Complex64,
    z: Complex64,
) -> Result<Vec<Complex64>> {
    bloch_extended(v, h, z, 2 * v.p() as i64 - 1)
}

/// `B_{j+1} = φ_j ψ_{j+1} − φ_{j+1} ψ_j`.
pub fn b_coefficient(v: &VerblunskyVector, j: i64) -> Result<LaurentScalar> {
    let (phi, psi) = bloch_basis(v, (j + 1).max(1))?;
    Ok(wronskian(&phi, &psi, j))
}

/// Which end of which sheet an asymptotic estimate refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurvePoint {
    /// `z → ∞` on the sheet of `h_plus`.
    #[serde(rename = "P+")]
    PPlus,
    /// `z → ∞` on the sheet of `h_minus`.
    #[serde(rename = "P-")]
    PMinus,
    /// `z → 0` on the sheet of `h_plus`.
    #[serde(rename = "Q+")]
    QPlus,
    /// `z → 0` on the sheet of `h_minus`.
    #[serde(rename = "Q-")]
    QMinus,
}

/// One measured asymptotic `f_j ~ C z^e`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AsymptoticEntry {
    /// Component index `j`.
    pub j: usize,
    /// Where the limit is taken.
    pub point: CurvePoint,
    /// Predicted exponent `e`.
    pub expected_order: i32,
    /// Log–log slope between the two sample radii.
    pub measured_slope: f64,
    /// Predicted constant `C`.
    pub expected_constant: [f64; 2],
    /// `f_j(z) / z^e` at the extreme radius.
    pub measured_constant: [f64; 2],
    /// `|slope − e| < 0.05`.
    pub slope_ok: bool,
    /// `|C_measured − C| < 0.01 |C|`.
    pub constant_ok: bool,
}

/// All asymptotic estimates for one Verblunsky vector.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AsymptoticReport {
    /// One entry per component and limit point.
    pub entries: Vec<AsymptoticEntry>,
    /// Whether every slope and constant matched.
    pub pass: bool,
}

/// Predicted `(C, e)` of `f_j ~ C z^e` at `point`.
fn predicted(v: &VerblunskyVector, idx: usize, point: CurvePoint) -> (Complex64, i32) {
    let p = v.p() as i64;
    let half = p / 2;
    let j = idx as i64 / 2;
    let even = idx % 2 == 0;
    let a = |k: i64| v.alpha(k);
    let prod = |from: i64| Complex64::new(v.rho_range(from, p - 2), 0.0);
    match (point, even) {
        (CurvePoint::PMinus, true) => (-prod(2 * j) / a(p - 2), -(half - j - 1) as i32),
        (CurvePoint::PMinus, false) => (a(2 * j) / a(p - 2) * prod(2 * j + 1), -(half - j - 1) as i32),
        (CurvePoint::PPlus, true) => (a(2 * j).conj() / prod(2 * j), (half - j - 1) as i32),
        (CurvePoint::PPlus, false) => (prod(2 * j + 1).inv(), (half - j - 1) as i32),
        (CurvePoint::QMinus, true) => (-a(2 * j - 1).conj() * prod(2 * j), (half - j) as i32),
        (CurvePoint::QMinus, false) => (prod(2 * j + 1), (half - j - 1) as i32),
        (CurvePoint::QPlus, true) => ((a(p - 1) * prod(2 * j)).inv(), -(half - j) as i32),
        (CurvePoint::QPlus, false) => (a(2 * j + 1) / (a(p - 1) * prod(2 * j + 1)), -(half - j - 1) as i32),
    }
}

/// Direction along which the limits `z → ∞` and `z → 0` are sampled.
const LIMIT_ANGLE: f64 = 0.7;

/// Measures the orders and leading constants of every `f_j` at the four
/// points over `z = ∞` and `z = 0`, by log–log regression between
/// `|z| = 10³, 10⁴` and `|z| = 10⁻³, 10⁻⁴`.
pub fn asymptotic_orders(v: &VerblunskyVector) -> Result<AsymptoticReport> {
    check_generic(v)?;
    let bp = branch_points(v)?;
    if !bp.distinct {
        return Err(Error::NonGeneric("branch points are not distinct".into()));
    }
    let p = v.p();
    let mut entries = Vec::new();
    for (point, radii) in [
        (CurvePoint::PPlus, [1e3, 1e4]),
        (CurvePoint::PMinus, [1e3, 1e4]),
        (CurvePoint::QPlus, [1e-3, 1e-4]),
        (CurvePoint::QMinus, [1e-3, 1e-4]),
    ] {
        let samples = radii
            .iter()
            .map(|&r| {
                let z = Complex64::from_polar(r, LIMIT_ANGLE);
                let (hp, hm) = h_branches(v, z)?;
                let h = match point {
                    CurvePoint::PPlus | CurvePoint::QPlus => hp,
                    CurvePoint::PMinus | CurvePoint::QMinus => hm,
                };
                Ok((z, bloch_vector(v, h, z)?))
            })
            .collect::<Result<Vec<_>>>()?;
        for idx in 0..p {
            let (cst, e) = predicted(v, idx, point);
            let (z0, f0) = &samples[0];
            let (z1, f1) = &samples[1];
            let slope = (f1[idx].norm().ln() - f0[idx].norm().ln()) / (z1.norm().ln() - z0.norm().ln());
            let measured = f1[idx] / z1.powi(e);
            let slope_ok = (slope - e as f64).abs() < 0.05;
            let constant_ok = (measured - cst).norm() < 0.01 * cst.norm();
            entries.push(AsymptoticEntry {
                j: idx,
                point,
                expected_order: e,
                measured_slope: slope,
                expected_constant: json::pair(cst),
                measured_constant: json::pair(measured),
                slope_ok,
                constant_ok,
            });
        }
    }
    let pass = entries.iter().all(|e| e.slope_ok && e.constant_ok);
    Ok(AsymptoticReport { entries, pass })
}

/// Branch points, Dirichlet points and divisor of the spectral curve.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralCurveData {
    /// The `2p` branch points.
    pub branch: Vec<Complex64>,
    /// The `p − 1` Dirichlet points.
    pub dirichlet: Vec<Complex64>,
    /// Divisor points `(h_k, z_k)`.
    pub divisor: Vec<(Complex64, Complex64)>,
    /// Genus `p − 1`.
    pub genus: usize,
    /// Whether the branch points are distinct.
    pub generic: bool,
}

#[derive(Serialize, Deserialize)]
struct CurveJson {
    branch: Vec<[f64; 2]>,
    dirichlet: Vec<[f64; 2]>,
    divisor: Vec<[[f64; 2]; 2]>,
    genus: usize,
    generic: bool,
}

impl Serialize for SpectralCurveData {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CurveJson {
            branch: json::pairs(&self.branch),
            dirichlet: json::pairs(&self.dirichlet),
            divisor: self
                .divisor
                .iter()
                .map(|(h, z)| [json::pair(*h), json::pair(*z)])
                .collect(),
            genus: self.genus,
            generic: self.generic,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SpectralCurveData {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = CurveJson::deserialize(d)?;
        Ok(SpectralCurveData {
            branch: json::unpairs(&raw.branch),
            dirichlet: json::unpairs(&raw.dirichlet),
            divisor: raw
                .divisor
                .iter()
                .map(|[h, z]| (json::unpair(*h), json::unpair(*z)))
                .collect(),
            genus: raw.genus,
            generic: raw.generic,
        })
    }
}

/// Branch points together with the Dirichlet data.
pub fn spectral_curve(v: &VerblunskyVector) -> Result<SpectralCurveData> {
    let bp = branch_points(v)?;
    let dd = dirichlet_data(v)?;
    Ok(SpectralCurveData {
        branch: bp.points,
        dirichlet: dd.z,
        divisor: dd.divisor,
        genus: v.p() - 1,
        generic: bp.distinct,
    })
}

/// `h · det(zI − E(h))`, which vanishes exactly on the spectral curve.
pub fn curve_equation(v: &VerblunskyVector, h: Complex64, z: Complex64) -> Complex64 {
    h * char_poly(v).eval(z, h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmv::floquet_loop;
    use crate::rng;

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn generic(seed: u64, p: usize) -> VerblunskyVector {
        let mut g = rng::seeded(seed);
        rng::generic_verblunsky(&mut g, p, 0.2, 0.6)
    }

    #[test]
    fn first_basis_elements() {
        let v = generic(60, 4);
        let (phi, psi) = bloch_basis(&v, 4).unwrap();
        let want_phi = LaurentScalar::monomial(-1, cx(v.rho(3) / v.rho(0), 0.0));
        assert!((phi.at(1) - &want_phi).terms().all(|(_, c)| c.norm() < 1e-15));
        let want_psi = LaurentScalar::from_terms([
            (0, -v.alpha(0) / v.rho(0)),
            (-1, -v.alpha(3) / v.rho(0)),
        ]);
        assert!((psi.at(1) - &want_psi).terms().all(|(_, c)| c.norm() < 1e-15));
        let lead = psi.at(4).coeff(2);
        assert!((lead - 1.0 / v.rho_product()).norm() < 1e-14);
        assert_eq!(psi.at(4).max_power(), Some(2));
    }

    #[test]
    fn monodromy_determinant_and_trace() {
        let mut g = rng::seeded(61);
        for p in [2, 4, 6] {
            let v = rng::verblunsky(&mut g, p, 0.6);
            for _ in 0..10 {
                let z = rng::annulus_point(&mut g, 0.3, 2.0);
                let m = monodromy(&v, z).unwrap();
                assert!((m.determinant() - 1.0).norm() < 1e-10);
                assert!((m.trace() - discriminant(&v, z).unwrap()).norm() < 1e-10);
            }
        }
        let m = monodromy(&VerblunskyVector::zeros(2).unwrap(), cx(2.0, 0.0)).unwrap();
        assert!((m.trace() - 2.5).norm() < 1e-15);
    }

    #[test]
    fn wronskians_are_constant() {
        let v = generic(62, 6);
        let (phi, psi) = bloch_basis(&v, 6).unwrap();
        for j in 0..=3 {
            let n = 2 * j - 1;
            let w = wronskian(&phi, &psi, n).times_monomial(0, cx(v.rho(n), 0.0));
            let want = LaurentScalar::constant(cx(v.rho(5), 0.0));
            assert!((&w - &want).terms().all(|(_, c)| c.norm() < 1e-12), "{w:?}");
        }
        for j in 0..6i64 {
            let b = wronskian(&phi, &psi, j);
            let want = if j % 2 == 1 {
                LaurentScalar::constant(cx(v.rho(5) / v.rho(j), 0.0))
            } else {
                LaurentScalar::monomial(-1, cx(-v.rho(5) / v.rho(j), 0.0))
            };
            assert!((&b - &want).terms().all(|(_, c)| c.norm() < 1e-12), "j={j}: {b:?}");
        }
    }

    #[test]
    fn periodicity_transport() {
        let v = generic(63, 4);
        let (phi, psi) = bloch_basis(&v, 6).unwrap();
        let z = cx(0.7, -0.4);
        let m = monodromy(&v, z).unwrap();
        for j in -1..=1i64 {
            let row = nalgebra::RowVector2::new(phi.at(j).eval(z), psi.at(j).eval(z)) * m;
            assert!((row[0] - phi.at(j + 4).eval(z)).norm() < 1e-10);
            assert!((row[1] - psi.at(j + 4).eval(z)).norm() < 1e-10);
        }
    }

    #[test]
    fn free_branch_points() {
        let bp = branch_points(&VerblunskyVector::zeros(2).unwrap()).unwrap();
        assert!(!bp.distinct);
        let want = [cx(1., 0.), cx(1., 0.), cx(-1., 0.), cx(-1., 0.)];
        assert!(multiset_distance(&bp.points, &want) < 1e-7);
    }

    #[test]
    fn branch_points_solve_delta_squared_four() {
        let v = generic(64, 4);
        let bp = branch_points(&v).unwrap();
        assert_eq!(bp.points.len(), 8);
        assert!(bp.distinct);
        for l in bp.points {
            let d = discriminant(&v, l).unwrap();
            assert!((d * d - 4.0).norm() < 1e-8);
        }
    }

    #[test]
    fn dirichlet_points_p2_closed_form() {
        let v = generic(65, 2);
        let dd = dirichlet_data(&v).unwrap();
        assert_eq!(dd.z.len(), 1);
        assert!((dd.z[0] + v.alpha(1) / v.alpha(0)).norm() < 1e-12);
    }

    #[test]
    fn dirichlet_product_and_curve_membership() {
        for (seed, p) in [(66, 4), (67, 6), (68, 8)] {
            let v = generic(seed, p);
            let dd = dirichlet_data(&v).unwrap();
            let prod: Complex64 = dd.z.iter().product();
            let want = -v.alpha(p as i64 - 1) / v.alpha(p as i64 - 2);
            assert!((prod - want).norm() < 1e-8);
            assert!(dd.route_gap < 1e-7);
            for (h, z) in &dd.divisor {
                assert!(curve_equation(&v, *h, *z).norm() < 1e-8);
            }
        }
        let mut v = generic(69, 4).as_slice().to_vec();
        v[2] = cx(0.0, 0.0);
        assert!(matches!(
            dirichlet_data(&VerblunskyVector::new(v).unwrap()),
            Err(Error::NonGeneric(_))
        ));
    }

    #[test]
    fn h_branch_labels() {
        let (hp, hm) = h_branches(&VerblunskyVector::zeros(2).unwrap(), cx(3.0, 0.0)).unwrap();
        assert!((hp - 3.0).norm() < 1e-14 && (hm - 1.0 / 3.0).norm() < 1e-15);
        let v = generic(70, 4);
        let z = Complex64::from_polar(1e4, 0.3);
        let (hp, hm) = h_branches(&v, z).unwrap();
        assert!((hp * hm - 1.0).norm() < 1e-12);
        assert!((hp * v.rho_product() / z.powi(2) - 1.0).norm() < 1e-3);
        assert!(h_branches(&v, cx(1.0, 0.0)).is_err() || discriminant(&v, cx(1.0, 0.0)).unwrap().norm() > 2.0);
    }

    #[test]
    fn bloch_vector_is_an_eigenvector() {
        let v = generic(71, 4);
        let e = floquet_loop(&v);
        let mut g = rng::seeded(72);
        for _ in 0..10 {
            let z = rng::annulus_point(&mut g, 0.3, 0.9);
            for h in {
                let (a, b) = h_branches(&v, z).unwrap();
                [a, b]
            } {
                let f = bloch_vector(&v, h, z).unwrap();
                assert_eq!(f[3], cx(1.0, 0.0));
                let fv = nalgebra::DVector::from_vec(f.clone());
                let res = (e.eval(h).unwrap() * &fv - &fv * z).norm();
                assert!(res < 1e-7 * fv.norm(), "residual {res}");
            }
        }
    }

    #[test]
    fn bloch_solution_is_quasi_periodic() {
        let v = generic(73, 4);
        let z = cx(0.5, 0.6);
        let (h, _) = h_branches(&v, z).unwrap();
        let f = bloch_solution_two_periods(&v, h, z).unwrap();
        for j in 0..4 {
            assert!((f[j + 4 + 1] - f[j + 1] / h).norm() < 1e-9 * f[j + 1].norm().max(1.0));
        }
        assert!((f[0] - h).norm() < 1e-10 * h.norm());
    }

    #[test]
    fn product_identity() {
        let v = generic(74, 4);
        let (_, psi) = bloch_basis(&v, 4).unwrap();
        let mut g = rng::seeded(75);
        for _ in 0..5 {
            let z = rng::annulus_point(&mut g, 0.3, 3.0);
            let (hp, hm) = h_branches(&v, z).unwrap();
            let fp = bloch_vector(&v, hp, z).unwrap();
            let fm = bloch_vector(&v, hm, z).unwrap();
            for j in 0..4usize {
                let b = b_coefficient(&v, j as i64).unwrap().eval(z);
                let shifted = shifted_basis(&v, (j + 1) % 4).unwrap()[4].eval(z);
                let rhs = b * shifted / psi.at(3).eval(z);
                assert!((fp[j] * fm[j] - rhs).norm() < 1e-8 * rhs.norm().max(1.0), "j={j}");
            }
        }
    }

    #[test]
    fn shifted_basis_properties() {
        let v = generic(76, 6);
        let (_, psi) = bloch_basis(&v, 6).unwrap();
        let s0 = shifted_basis(&v, 0).unwrap();
        for k in -1..=6i64 {
            assert_eq!(&s0[(k + 1) as usize], psi.at(k));
        }
        for j in 0..3i64 {
            let s = shifted_basis(&v, (2 * j + 1) as usize).unwrap();
            let lead = s[6].coeff(3);
            let want = -v.alpha(2 * j).conj() * v.rho(2 * j) / v.rho_product();
            assert!((lead - want).norm() < 1e-12, "j={j}: {lead} vs {want}");
        }
    }

    #[test]
    fn asymptotics_match_predictions() {
        for (seed, p) in [(77, 2), (78, 4), (79, 6)] {
            let v = generic(seed, p);
            let r = asymptotic_orders(&v).unwrap();
            assert_eq!(r.entries.len(), 4 * p);
            for e in &r.entries {
                assert!(e.slope_ok && e.constant_ok, "p={p} {e:?}");
            }
            assert!(r.pass);
        }
    }

    #[test]
    fn curve_json_shape() {
        let v = generic(80, 4);
        let data = spectral_curve(&v).unwrap();
        let text = serde_json::to_value(&data).unwrap();
        assert_eq!(text["branch"].as_array().unwrap().len(), 8);
        assert_eq!(text["dirichlet"].as_array().unwrap().len(), 3);
        assert_eq!(text["genus"], 3);
        let back: SpectralCurveData = serde_json::from_value(text).unwrap();
        assert_eq!(back, data);
    }
}
