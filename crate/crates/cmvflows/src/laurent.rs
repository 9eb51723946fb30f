//! Matrix-valued Laurent polynomials in the loop parameter `h`.
//!
//! A [`LaurentMatrix`] is a finitely supported map from integer powers of `h`
//! to `p × p` complex matrices. Besides ring arithmetic it provides the
//! structure used by the loop-group side of the theory:
//!
//! * the involution `star(L)(h) = L(h̄⁻¹)†`, coefficientwise `star(L)_j = (L_{-j})†`;
//! * the projections `P₊`, `P₋`, `P₀` onto positive, negative and zero powers;
//! * the splitting `L = Π_k̃ L + Π_b̃ L` into a loop that is anti-Hermitian on
//!   the circle and a loop that is analytic in the disk with lower triangular,
//!   real-diagonal constant term;
//! * the invariant pairing `(X, Y) = Im Σ_j tr(X_j Y_{-j})` and weighted norms.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::json;

/// Dense complex matrix used for Laurent coefficients.
pub type CMat = DMatrix<Complex64>;

/// Coefficients whose Frobenius norm falls below this are dropped.
pub const CANONICAL_DROP: f64 = 1e-15;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Finitely supported Laurent polynomial with `p × p` complex coefficients.
#[derive(Clone, PartialEq)]
pub struct LaurentMatrix {
    p: usize,
    coeffs: BTreeMap<i32, CMat>,
}

impl fmt::Debug for LaurentMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = f.debug_struct("LaurentMatrix");
        s.field("p", &self.p);
        for (k, m) in &self.coeffs {
            s.field(&format!("h^{k}"), m);
        }
        s.finish()
    }
}

fn check_dimension(p: usize) -> Result<()> {
    if p == 0 || p % 2 != 0 {
        return Err(Error::Domain(format!(
            "matrix size must be a positive even integer, got {p}"
        )));
    }
    Ok(())
}

impl LaurentMatrix {
    /// The zero loop of size `p`.
    pub fn zero(p: usize) -> Result<Self> {
        check_dimension(p)?;
        Ok(LaurentMatrix {
            p,
            coeffs: BTreeMap::new(),
        })
    }

    /// The constant identity loop.
    pub fn identity(p: usize) -> Result<Self> {
        Self::constant(CMat::identity(p, p))
    }

    /// The constant loop `h ↦ m`.
    pub fn constant(m: CMat) -> Result<Self> {
        Self::monomial(0, m)
    }

    /// The single term `m·h^power`.
    pub fn monomial(power: i32, m: CMat) -> Result<Self> {
        Self::from_coeffs(m.nrows(), [(power, m)])
    }

    /// Builds a loop from `(power, coefficient)` pairs; repeated powers add up.
    pub fn from_coeffs<It>(p: usize, terms: It) -> Result<Self>
    where
        It: IntoIterator<Item = (i32, CMat)>,
    {
        check_dimension(p)?;
        let mut coeffs: BTreeMap<i32, CMat> = BTreeMap::new();
        for (k, m) in terms {
            if m.nrows() != p || m.ncols() != p {
                return Err(Error::SizeMismatch {
                    expected: p,
                    found: m.nrows().max(m.ncols()),
                });
            }
            match coeffs.get_mut(&k) {
                Some(existing) => *existing += m,
                None => {
                    coeffs.insert(k, m);
                }
            }
        }
        Ok(LaurentMatrix { p, coeffs }.canonical())
    }

    /// Builds a loop from coefficients assumed to be valid, then canonicalizes.
    fn from_map(p: usize, coeffs: BTreeMap<i32, CMat>) -> Self {
        LaurentMatrix { p, coeffs }.canonical()
    }

    fn canonical(mut self) -> Self {
        self.coeffs.retain(|_, m| m.norm() >= CANONICAL_DROP);
        self
    }

    /// Matrix size `p`.
    pub fn p(&self) -> usize {
        self.p
    }

    /// Coefficient of `h^power`, if stored.
    pub fn coeff(&self, power: i32) -> Option<&CMat> {
        self.coeffs.get(&power)
    }

    /// Coefficient of `h^power`, zero when absent.
    pub fn coeff_or_zero(&self, power: i32) -> CMat {
        self.coeffs
            .get(&power)
            .cloned()
            .unwrap_or_else(|| CMat::zeros(self.p, self.p))
    }

    /// Stored powers in increasing order.
    pub fn support(&self) -> Vec<i32> {
        self.coeffs.keys().copied().collect()
    }

    /// Iterates over `(power, coefficient)` in increasing power.
    pub fn iter(&self) -> impl Iterator<Item = (i32, &CMat)> {
        self.coeffs.iter().map(|(k, m)| (*k, m))
    }

    /// Smallest stored power.
    pub fn min_power(&self) -> Option<i32> {
        self.coeffs.keys().next().copied()
    }

    /// Largest stored power.
    pub fn max_power(&self) -> Option<i32> {
        self.coeffs.keys().next_back().copied()
    }

    /// Whether every coefficient vanishes.
    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Evaluates `Σ L_j h^j` at a nonzero `h`.
    pub fn eval(&self, h: Complex64) -> Result<CMat> {
        if h.norm() == 0.0 {
            return Err(Error::Domain("cannot evaluate a Laurent loop at h = 0".into()));
        }
        Ok(self.eval_unchecked(h))
    }

    fn eval_unchecked(&self, h: Complex64) -> CMat {
        let mut out = CMat::zeros(self.p, self.p);
        for (k, m) in &self.coeffs {
            out += m * h.powi(*k);
        }
        out
    }

    /// Cauchy product `(AB)_k = Σ_j A_j B_{k-j}`.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let mut out: BTreeMap<i32, CMat> = BTreeMap::new();
        for (i, a) in &self.coeffs {
            for (j, b) in &other.coeffs {
                let prod = a * b;
                out.entry(i + j)
                    .and_modify(|m| *m += &prod)
                    .or_insert(prod);
            }
        }
        Ok(Self::from_map(self.p, out))
    }

    /// Non-negative integer power.
    pub fn pow(&self, n: u32) -> Self {
        let mut out = Self::identity(self.p).expect("size already validated");
        for _ in 0..n {
            out = &out * self;
        }
        out
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.p != other.p {
            return Err(Error::SizeMismatch {
                expected: self.p,
                found: other.p,
            });
        }
        Ok(())
    }

    /// Coefficientwise combination `self + c·other`.
    fn axpy(&self, c: Complex64, other: &Self) -> Self {
        assert_eq!(self.p, other.p, "Laurent loops of different sizes");
        let mut out = self.coeffs.clone();
        for (k, m) in &other.coeffs {
            let term = m * c;
            out.entry(*k).and_modify(|x| *x += &term).or_insert(term);
        }
        Self::from_map(self.p, out)
    }

    /// Multiplies every coefficient by `c`.
    pub fn scale(&self, c: Complex64) -> Self {
        Self::from_map(
            self.p,
            self.coeffs.iter().map(|(k, m)| (*k, m * c)).collect(),
        )
    }

    /// Left multiplication by a constant matrix.
    pub fn left_mul(&self, m: &CMat) -> Self {
        Self::from_map(
            self.p,
            self.coeffs.iter().map(|(k, c)| (*k, m * c)).collect(),
        )
    }

    /// Right multiplication by a constant matrix.
    pub fn right_mul(&self, m: &CMat) -> Self {
        Self::from_map(
            self.p,
            self.coeffs.iter().map(|(k, c)| (*k, c * m)).collect(),
        )
    }

    /// Multiplication by `h^k`.
    pub fn shift(&self, k: i32) -> Self {
        LaurentMatrix {
            p: self.p,
            coeffs: self.coeffs.iter().map(|(j, m)| (j + k, m.clone())).collect(),
        }
    }

    /// Applies `f` to every coefficient.
    pub fn map_coeffs(&self, f: impl Fn(&CMat) -> CMat) -> Self {
        Self::from_map(self.p, self.coeffs.iter().map(|(k, m)| (*k, f(m))).collect())
    }

    /// The involution `star(L)_j = (L_{-j})†`, i.e. `L(h̄⁻¹)†`.
    pub fn star(&self) -> Self {
        LaurentMatrix {
            p: self.p,
            coeffs: self
                .coeffs
                .iter()
                .map(|(k, m)| (-k, m.adjoint()))
                .collect(),
        }
    }

    /// Splits into strictly positive, strictly negative and zero powers.
    pub fn project_pm0(&self) -> (Self, Self, Self) {
        let pick = |keep: fn(i32) -> bool| LaurentMatrix {
            p: self.p,
            coeffs: self
                .coeffs
                .iter()
                .filter(|(k, _)| keep(**k))
                .map(|(k, m)| (*k, m.clone()))
                .collect(),
        };
        (pick(|k| k > 0), pick(|k| k < 0), pick(|k| k == 0))
    }

    /// `Π_k̃ L = P₋L + Π_k L₀ − star(P₋L)`.
    ///
    /// The constant part `L₀ = Lo + D + U` (strict lower, diagonal, strict
    /// upper) contributes `Π_k L₀ = U − U† + i·Im D`. The result satisfies
    /// `star(K) = −K`.
    pub fn project_k(&self) -> Self {
        let (_, minus, _) = self.project_pm0();
        let x0 = self.coeff_or_zero(0);
        let (_, diag, upper) = split_triangular(&x0);
        let mut k0 = &upper - upper.adjoint();
        for i in 0..self.p {
            k0[(i, i)] += I * diag[(i, i)].im;
        }
        let constant = Self::from_map(self.p, BTreeMap::from([(0, k0)]));
        &(&minus + &constant) - &minus.star()
    }

    /// `Π_b̃ L = P₊L + Π_b L₀ + star(P₋L)`.
    ///
    /// The constant part contributes `Π_b L₀ = Lo + U† + Re D`, so the result
    /// has no negative powers and a lower triangular, real-diagonal constant
    /// term.
    pub fn project_b(&self) -> Self {
        let (plus, minus, _) = self.project_pm0();
        let x0 = self.coeff_or_zero(0);
        let (lower, diag, upper) = split_triangular(&x0);
        let mut b0 = lower + upper.adjoint();
        for i in 0..self.p {
            b0[(i, i)] += Complex64::new(diag[(i, i)].re, 0.0);
        }
        let constant = Self::from_map(self.p, BTreeMap::from([(0, b0)]));
        &(&plus + &constant) + &minus.star()
    }

    /// `J♯ = Π_k̃ − Π_b̃`.
    pub fn j_sharp(&self) -> Self {
        &self.project_k() - &self.project_b()
    }

    /// Invariant pairing `Im Σ_j tr(X_j Y_{-j})`, the residue of
    /// `Im ∮ tr(X(h)Y(h)) dh/(2πih)`.
    pub fn pairing(x: &Self, y: &Self) -> Result<f64> {
        x.check_same(y)?;
        let mut acc = ZERO;
        for (k, a) in &x.coeffs {
            if let Some(b) = y.coeffs.get(&(-k)) {
                acc += (a * b).trace();
            }
        }
        Ok(acc.im)
    }

    /// `Σ_j ‖X_j‖_F · w(j)`.
    pub fn weighted_norm(&self, w: &WeightFunction) -> f64 {
        self.coeffs.iter().map(|(k, m)| m.norm() * w.eval(*k)).sum()
    }

    /// Largest Frobenius norm of a coefficient of `self − other`.
    pub fn distance(&self, other: &Self) -> f64 {
        (self - other)
            .coeffs
            .values()
            .map(|m| m.norm())
            .fold(0.0, f64::max)
    }

    /// Largest Frobenius norm of a stored coefficient.
    pub fn max_coeff_norm(&self) -> f64 {
        self.coeffs.values().map(|m| m.norm()).fold(0.0, f64::max)
    }

    /// Keeps only powers in `lo..=hi`.
    pub fn truncated(&self, lo: i32, hi: i32) -> Self {
        LaurentMatrix {
            p: self.p,
            coeffs: self
                .coeffs
                .range(lo..=hi)
                .map(|(k, m)| (*k, m.clone()))
                .collect(),
        }
    }

    /// Largest Frobenius norm among coefficients outside `lo..=hi`.
    pub fn norm_outside(&self, lo: i32, hi: i32) -> f64 {
        self.coeffs
            .iter()
            .filter(|(k, _)| **k < lo || **k > hi)
            .map(|(_, m)| m.norm())
            .fold(0.0, f64::max)
    }

    /// Values at the `m` points `h_s = e^{2πis/m}`, `s = 0..m`.
    pub fn samples(&self, m: usize) -> Vec<CMat> {
        circle_points(m)
            .into_iter()
            .map(|h| self.eval_unchecked(h))
            .collect()
    }

    /// Inverse of [`LaurentMatrix::samples`]: the trigonometric interpolant of
    /// values at `m` equispaced circle points, with powers in
    /// `-⌊m/2⌋ ..= ⌈m/2⌉ − 1`.
    pub fn from_samples(p: usize, values: &[CMat]) -> Result<Self> {
        check_dimension(p)?;
        let m = values.len();
        if m == 0 {
            return Err(Error::Domain("no samples supplied".into()));
        }
        if let Some(bad) = values.iter().find(|v| v.nrows() != p || v.ncols() != p) {
            return Err(Error::SizeMismatch {
                expected: p,
                found: bad.nrows(),
            });
        }
        let lo = -((m / 2) as i32);
        let hi = lo + m as i32 - 1;
        let inv_m = 1.0 / m as f64;
        let mut coeffs = BTreeMap::new();
        for k in lo..=hi {
            let mut acc = CMat::zeros(p, p);
            for (s, v) in values.iter().enumerate() {
                let angle = -std::f64::consts::TAU * (k as f64) * (s as f64) / m as f64;
                acc += v * Complex64::from_polar(inv_m, angle);
            }
            coeffs.insert(k, acc);
        }
        Ok(Self::from_map(p, coeffs))
    }

    /// Largest Frobenius distance between `self(h)` and `other(h)` over `m`
    /// circle points.
    pub fn circle_distance(&self, other: &Self, m: usize) -> f64 {
        circle_points(m)
            .into_iter()
            .map(|h| (self.eval_unchecked(h) - other.eval_unchecked(h)).norm())
            .fold(0.0, f64::max)
    }

    /// Commutator `[A, B] = AB − BA`.
    pub fn commutator(a: &Self, b: &Self) -> Result<Self> {
        Ok(&a.multiply(b)? - &b.multiply(a)?)
    }
}

/// The `m` points `e^{2πis/m}`.
pub fn circle_points(m: usize) -> Vec<Complex64> {
    (0..m)
        .map(|s| Complex64::from_polar(1.0, std::f64::consts::TAU * s as f64 / m as f64))
        .collect()
}

/// Splits a square matrix into strict lower, diagonal and strict upper parts.
pub fn split_triangular(x: &CMat) -> (CMat, CMat, CMat) {
    let n = x.nrows();
    let mut lower = CMat::zeros(n, n);
    let mut diag = CMat::zeros(n, n);
    let mut upper = CMat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let target = match i.cmp(&j) {
                std::cmp::Ordering::Greater => &mut lower,
                std::cmp::Ordering::Equal => &mut diag,
                std::cmp::Ordering::Less => &mut upper,
            };
            target[(i, j)] = x[(i, j)];
        }
    }
    (lower, diag, upper)
}

impl Add for &LaurentMatrix {
    type Output = LaurentMatrix;
    /// Coefficientwise sum. Panics if sizes differ.
    fn add(self, o: &LaurentMatrix) -> LaurentMatrix {
        self.axpy(Complex64::new(1.0, 0.0), o)
    }
}

impl Sub for &LaurentMatrix {
    type Output = LaurentMatrix;
    /// Coefficientwise difference. Panics if sizes differ.
    fn sub(self, o: &LaurentMatrix) -> LaurentMatrix {
        self.axpy(Complex64::new(-1.0, 0.0), o)
    }
}

impl Neg for &LaurentMatrix {
    type Output = LaurentMatrix;
    fn neg(self) -> LaurentMatrix {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Mul for &LaurentMatrix {
    type Output = LaurentMatrix;
    /// Cauchy product. Panics if sizes differ; use
    /// [`LaurentMatrix::multiply`] for a fallible version.
    fn mul(self, o: &LaurentMatrix) -> LaurentMatrix {
        self.multiply(o).expect("Laurent loops of different sizes")
    }
}

#[derive(Serialize, Deserialize)]
struct LaurentJson {
    p: usize,
    coeffs: BTreeMap<String, Vec<Vec<[f64; 2]>>>,
}

impl Serialize for LaurentMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        LaurentJson {
            p: self.p,
            coeffs: self
                .coeffs
                .iter()
                .map(|(k, m)| (k.to_string(), json::matrix(m)))
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for LaurentMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = LaurentJson::deserialize(d)?;
        let mut terms = Vec::with_capacity(raw.coeffs.len());
        for (k, rows) in &raw.coeffs {
            let power: i32 = k
                .parse()
                .map_err(|_| D::Error::custom(format!("invalid power key {k:?}")))?;
            let m = json::unmatrix(rows, raw.p).map_err(D::Error::custom)?;
            terms.push((power, m));
        }
        LaurentMatrix::from_coeffs(raw.p, terms).map_err(D::Error::custom)
    }
}

/// Symmetric weight on integer powers used by [`LaurentMatrix::weighted_norm`].
#[derive(Clone)]
pub struct WeightFunction {
    rule: Arc<dyn Fn(i32) -> f64 + Send + Sync>,
}

impl fmt::Debug for WeightFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WeightFunction")
            .field("w(0)", &self.eval(0))
            .field("w(1)", &self.eval(1))
            .finish()
    }
}

impl Default for WeightFunction {
    /// `w(n) = exp(√(|n| + 1))`.
    fn default() -> Self {
        WeightFunction::new(|n| ((n.unsigned_abs() as f64) + 1.0).sqrt().exp())
    }
}

impl WeightFunction {
    /// Wraps a rule. The rule should be positive and symmetric.
    pub fn new(rule: impl Fn(i32) -> f64 + Send + Sync + 'static) -> Self {
        WeightFunction {
            rule: Arc::new(rule),
        }
    }

    /// `w(n)`.
    pub fn eval(&self, n: i32) -> f64 {
        (self.rule)(n)
    }

    /// Checks `w(n) = w(−n) > 0` for `|n| ≤ range`.
    pub fn is_symmetric_positive(&self, range: i32) -> bool {
        (0..=range).all(|n| {
            let (a, b) = (self.eval(n), self.eval(-n));
            a > 0.0 && a == b
        })
    }

    /// Checks that `w(n)/n^s` increases on `from..=to`.
    pub fn outgrows_power(&self, s: f64, from: i32, to: i32) -> bool {
        let ratio = |n: i32| self.eval(n) / (n as f64).powf(s);
        (from.max(1)..to).all(|n| ratio(n + 1) > ratio(n))
    }

    /// Checks that `|w(n)^{1/n} − 1|` decreases on `from..=to`.
    pub fn root_tends_to_one(&self, from: i32, to: i32) -> bool {
        let dev = |n: i32| (self.eval(n).powf(1.0 / n as f64) - 1.0).abs();
        (from.max(1)..to).all(|n| dev(n + 1) < dev(n))
    }
}
