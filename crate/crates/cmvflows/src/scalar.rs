//! Scalar abstraction shared by plain complex arithmetic and forward-mode
//! differentiation.
//!
//! The conserved quantities are non-holomorphic functions of the Verblunsky
//! coefficients, so derivatives are taken with respect to the real coordinates
//! `Re α_j` and `Im α_j`. [`Dual`] carries a complex value together with its
//! derivative along one real direction; conjugation acts on both parts because
//! the infinitesimal is real. Every routine written against [`Scalar`] runs
//! unchanged on [`Complex64`] (plain evaluation) and on [`Dual`] (one
//! directional derivative per pass).

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use num_complex::Complex64;

/// Field operations needed by the generic matrix routines.
pub trait Scalar:
    Copy
    + Debug
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
{
    /// Embeds a complex constant.
    fn constant(c: Complex64) -> Self;
    /// Complex conjugate.
    fn conj(self) -> Self;
    /// The underlying complex value.
    fn value(self) -> Complex64;
    /// Principal square root.
    fn sqrt(self) -> Self;
    /// Principal natural logarithm.
    fn ln(self) -> Self;
    /// Real part, as a scalar.
    fn re(self) -> Self;
    /// Imaginary part, as a scalar.
    fn im(self) -> Self;

    /// Embeds a real constant.
    fn real(x: f64) -> Self {
        Self::constant(Complex64::new(x, 0.0))
    }
    /// Additive identity.
    fn zero() -> Self {
        Self::real(0.0)
    }
    /// Multiplicative identity.
    fn one() -> Self {
        Self::real(1.0)
    }
    /// Multiplies by a complex constant.
    fn scale(self, c: Complex64) -> Self {
        self * Self::constant(c)
    }
    /// Modulus of the value, used for pivoting.
    fn magnitude(self) -> f64 {
        self.value().norm()
    }
}

impl Scalar for Complex64 {
    fn constant(c: Complex64) -> Self {
        c
    }
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn value(self) -> Complex64 {
        self
    }
    fn sqrt(self) -> Self {
        Complex64::sqrt(self)
    }
    fn ln(self) -> Self {
        Complex64::ln(self)
    }
    fn re(self) -> Self {
        Complex64::new(self.re, 0.0)
    }
    fn im(self) -> Self {
        Complex64::new(self.im, 0.0)
    }
    fn scale(self, c: Complex64) -> Self {
        self * c
    }
}

/// Complex value paired with its derivative along one real direction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual {
    /// Function value.
    pub v: Complex64,
    /// Directional derivative.
    pub d: Complex64,
}

impl Dual {
    /// Creates a dual number from value and tangent.
    pub fn new(v: Complex64, d: Complex64) -> Self {
        Dual { v, d }
    }

    /// A constant (zero tangent).
    pub fn constant_of(v: Complex64) -> Self {
        Dual {
            v,
            d: Complex64::new(0.0, 0.0),
        }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual::new(self.v + o.v, self.d + o.d)
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual::new(self.v - o.v, self.d - o.d)
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual::new(self.v * o.v, self.v * o.d + self.d * o.v)
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, o: Dual) -> Dual {
        let q = self.v / o.v;
        Dual::new(q, (self.d - q * o.d) / o.v)
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual::new(-self.v, -self.d)
    }
}

impl AddAssign for Dual {
    fn add_assign(&mut self, o: Dual) {
        *self = *self + o;
    }
}

impl SubAssign for Dual {
    fn sub_assign(&mut self, o: Dual) {
        *self = *self - o;
    }
}

impl MulAssign for Dual {
    fn mul_assign(&mut self, o: Dual) {
        *self = *self * o;
    }
}

impl Scalar for Dual {
    fn constant(c: Complex64) -> Self {
        Dual::constant_of(c)
    }
    fn conj(self) -> Self {
        Dual::new(self.v.conj(), self.d.conj())
    }
    fn value(self) -> Complex64 {
        self.v
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        Dual::new(s, self.d / (2.0 * s))
    }
    fn ln(self) -> Self {
        Dual::new(self.v.ln(), self.d / self.v)
    }
    fn re(self) -> Self {
        Dual::new(Complex64::new(self.v.re, 0.0), Complex64::new(self.d.re, 0.0))
    }
    fn im(self) -> Self {
        Dual::new(Complex64::new(self.v.im, 0.0), Complex64::new(self.d.im, 0.0))
    }
    fn scale(self, c: Complex64) -> Self {
        Dual::new(self.v * c, self.d * c)
    }
}

/// Dense square matrix over a [`Scalar`], stored row-major.
///
/// This is deliberately small: it provides exactly the products, traces and
/// determinants that the differentiable code paths need.
#[derive(Clone, Debug, PartialEq)]
pub struct SmallMat<S> {
    n: usize,
    data: Vec<S>,
}

impl<S: Scalar> SmallMat<S> {
    /// The `n × n` zero matrix.
    pub fn zeros(n: usize) -> Self {
        SmallMat {
            n,
            data: vec![S::zero(); n * n],
        }
    }

    /// The `n × n` identity matrix.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }

    /// Dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Matrix product.
    pub fn matmul(&self, other: &Self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    /// Entrywise sum.
    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (o, b) in out.data.iter_mut().zip(&other.data) {
            *o += *b;
        }
        out
    }

    /// Multiplies every entry by a complex constant.
    pub fn scaled(&self, c: Complex64) -> Self {
        SmallMat {
            n: self.n,
            data: self.data.iter().map(|x| x.scale(c)).collect(),
        }
    }

    /// Sum of the diagonal.
    pub fn trace(&self) -> S {
        (0..self.n).fold(S::zero(), |acc, i| acc + self[(i, i)])
    }

    /// Determinant by Gaussian elimination with partial pivoting on the value.
    pub fn det(&self) -> S {
        let n = self.n;
        let mut a = self.data.clone();
        let mut det = S::one();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&r1, &r2| {
                    a[r1 * n + col]
                        .magnitude()
                        .total_cmp(&a[r2 * n + col].magnitude())
                })
                .unwrap_or(col);
            if a[pivot * n + col].magnitude() == 0.0 {
                return S::zero();
            }
            if pivot != col {
                for j in 0..n {
                    a.swap(col * n + j, pivot * n + j);
                }
                det = -det;
            }
            let p = a[col * n + col];
            det *= p;
            for r in col + 1..n {
                let f = a[r * n + col] / p;
                for j in col..n {
                    let t = a[col * n + j];
                    a[r * n + j] -= f * t;
                }
            }
        }
        det
    }

    /// Values of the entries as a row-major complex vector.
    pub fn values(&self) -> Vec<Complex64> {
        self.data.iter().map(|x| x.value()).collect()
    }
}

impl<S> std::ops::Index<(usize, usize)> for SmallMat<S> {
    type Output = S;
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.n + j]
    }
}

impl<S> std::ops::IndexMut<(usize, usize)> for SmallMat<S> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.n + j]
    }
}
