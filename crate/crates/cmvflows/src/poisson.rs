//! Wirtinger derivatives, the Ablowitz–Ladik bracket, Hamiltonian vector
//! fields and the Sklyanin bracket on coordinate functions.
//!
//! The Ablowitz–Ladik bracket on the polydisk is
//!
//! ```text
//! {f, g} = 2i Σ_j ρ_j² (∂f/∂α_j · ∂g/∂ᾱ_j − ∂f/∂ᾱ_j · ∂g/∂α_j),
//! ```
//!
//! so the Hamiltonian vector field of `H` has components
//! `{H, α_j} = −2i ρ_j² ∂H/∂ᾱ_j`. Observables are written once against
//! [`Dual`] and differentiated in forward mode along the real coordinates
//! `Re α_j`, `Im α_j`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cmv::{build_factors, floquet_coefficients, VerblunskyVector};
use crate::conserved::{invariants_generic, trace_power_constant};
use crate::error::{Error, Result};
use crate::laurent::{CMat, LaurentMatrix};
use crate::scalar::{Dual, Scalar};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Default step of the central-difference oracle.
pub const FD_STEP: f64 = 1e-6;

type ObservableFn = dyn Fn(&[Dual]) -> Dual + Send + Sync;

/// A function of the Verblunsky coefficients, written over dual numbers so
/// that it can be differentiated.
#[derive(Clone)]
pub struct Observable {
    label: String,
    arity: usize,
    f: Arc<ObservableFn>,
}

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Observable")
            .field("label", &self.label)
            .field("arity", &self.arity)
            .finish()
    }
}

impl Observable {
    /// Wraps a closure evaluating the observable on `arity` coefficients.
    pub fn new(
        label: impl Into<String>,
        arity: usize,
        f: impl Fn(&[Dual]) -> Dual + Send + Sync + 'static,
    ) -> Self {
        Observable {
            label: label.into(),
            arity,
            f: Arc::new(f),
        }
    }

    /// Human-readable name.
    pub fn label(&self) -> &str {
        &self.label
    }

    /// Number of coefficients the observable expects.
    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Plain value at `v`.
    pub fn evaluate(&self, v: &VerblunskyVector) -> Result<Complex64> {
        self.check(v)?;
        let args: Vec<Dual> = v.as_slice().iter().map(|&a| Dual::constant_of(a)).collect();
        Ok(self.eval_dual(&args).v)
    }

    fn eval_dual(&self, args: &[Dual]) -> Dual {
        (self.f)(args)
    }

    fn check(&self, v: &VerblunskyVector) -> Result<()> {
        if v.p() != self.arity {
            return Err(Error::SizeMismatch {
                expected: self.arity,
                found: v.p(),
            });
        }
        Ok(())
    }

    /// The coordinate `α_j`.
    pub fn alpha(p: usize, j: usize) -> Self {
        Self::new(format!("alpha_{j}"), p, move |a| a[j])
    }

    /// The coordinate `ᾱ_j`.
    pub fn alpha_bar(p: usize, j: usize) -> Self {
        Self::new(format!("conj(alpha_{j})"), p, move |a| a[j].conj())
    }

    /// `Re α_j`.
    pub fn re_alpha(p: usize, j: usize) -> Self {
        Self::new(format!("Re alpha_{j}"), p, move |a| a[j].re())
    }

    /// `Im α_j`.
    pub fn im_alpha(p: usize, j: usize) -> Self {
        Self::new(format!("Im alpha_{j}"), p, move |a| a[j].im())
    }

    /// `P = Π ρ_j`.
    pub fn p_value(p: usize) -> Self {
        Self::new("P", p, |a| {
            a.iter()
                .fold(Dual::one(), |acc, &x| acc * (Dual::one() - x * x.conj()).sqrt())
        })
    }

    /// `log P = ½ Σ log(1 − |α_j|²)`.
    pub fn log_p(p: usize) -> Self {
        Self::new("log P", p, |a| {
            a.iter()
                .fold(Dual::zero(), |acc, &x| acc + (Dual::one() - x * x.conj()).ln())
                .scale(Complex64::new(0.5, 0.0))
        })
    }

    /// `Re K_n` (`re = true`) or `Im K_n`.
    pub fn k(p: usize, n: usize, re: bool) -> Self {
        let label = format!("{} K_{n}", if re { "Re" } else { "Im" });
        Self::new(label, p, move |a| {
            let e = floquet_coefficients(a);
            let k = trace_power_constant(&e, n).scale(Complex64::new(1.0 / n as f64, 0.0));
            if re {
                k.re()
            } else {
                k.im()
            }
        })
    }

    /// `Re I_j` (`re = true`) or `Im I_j`, for `−p/2 ≤ j ≤ p/2`.
    pub fn i(p: usize, j: i64, re: bool) -> Self {
        let label = format!("{} I_{j}", if re { "Re" } else { "Im" });
        let idx = (j + p as i64 / 2) as usize;
        Self::new(label, p, move |a| {
            let inv = invariants_generic(a);
            if re {
                inv.i[idx].re()
            } else {
                inv.i[idx].im()
            }
        })
    }

    /// The Ablowitz–Ladik Hamiltonian `Re K_1 − 2 log P`.
    pub fn al_hamiltonian(p: usize) -> Self {
        let k1 = Self::k(p, 1, true);
        let lp = Self::log_p(p);
        Self::new("Re K_1 - 2 log P", p, move |a| {
            k1.eval_dual(a) - lp.eval_dual(a).scale(Complex64::new(2.0, 0.0))
        })
    }

    /// `c · self`.
    pub fn scaled(&self, c: Complex64) -> Self {
        let f = self.clone();
        Self::new(format!("({c})·{}", self.label), self.arity, move |a| {
            f.eval_dual(a).scale(c)
        })
    }

    /// `self + c · other`.
    pub fn combine(&self, c: Complex64, other: &Observable) -> Self {
        let (f, g) = (self.clone(), other.clone());
        Self::new(
            format!("{} + ({c})·{}", self.label, other.label),
            self.arity,
            move |a| f.eval_dual(a) + g.eval_dual(a).scale(c),
        )
    }
}

/// Wirtinger derivatives `∂f/∂α_j` and `∂f/∂ᾱ_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct WirtingerGradient {
    /// `∂f/∂α_j`.
    pub d_alpha: Vec<Complex64>,
    /// `∂f/∂ᾱ_j`.
    pub d_alphabar: Vec<Complex64>,
}

impl WirtingerGradient {
    /// Largest componentwise difference, relative to the larger magnitude
    /// (floored at one).
    pub fn relative_distance(&self, other: &Self) -> f64 {
        let pairs = self
            .d_alpha
            .iter()
            .zip(&other.d_alpha)
            .chain(self.d_alphabar.iter().zip(&other.d_alphabar));
        pairs
            .map(|(a, b)| (a - b).norm() / a.norm().max(b.norm()).max(1.0))
            .fold(0.0, f64::max)
    }
}

fn check_margin(v: &VerblunskyVector, margin: f64) -> Result<()> {
    if v.max_modulus() >= 1.0 - margin {
        return Err(Error::Domain(format!(
            "max |alpha| = {} leaves less than {margin} to the boundary",
            v.max_modulus()
        )));
    }
    Ok(())
}

/// Real-coordinate derivatives via dual numbers: returns `(∂f/∂x_j, ∂f/∂y_j)`.
fn real_partials(obs: &Observable, v: &VerblunskyVector) -> Vec<(Complex64, Complex64)> {
    let base: Vec<Dual> = v.as_slice().iter().map(|&a| Dual::constant_of(a)).collect();
    (0..v.p())
        .map(|j| {
            let mut args = base.clone();
            args[j].d = Complex64::new(1.0, 0.0);
            let dx = obs.eval_dual(&args).d;
            args[j].d = I;
            let dy = obs.eval_dual(&args).d;
            (dx, dy)
        })
        .collect()
}

fn from_partials(partials: Vec<(Complex64, Complex64)>) -> WirtingerGradient {
    let d_alpha = partials.iter().map(|(dx, dy)| (dx - I * dy) * 0.5).collect();
    let d_alphabar = partials.iter().map(|(dx, dy)| (dx + I * dy) * 0.5).collect();
    WirtingerGradient {
        d_alpha,
        d_alphabar,
    }
}

/// Wirtinger gradient by forward-mode differentiation.
pub fn wirtinger(obs: &Observable, v: &VerblunskyVector) -> Result<WirtingerGradient> {
    obs.check(v)?;
    check_margin(v, 2.0 * FD_STEP)?;
    Ok(from_partials(real_partials(obs, v)))
}

/// Wirtinger gradient by central differences with step `step`.
pub fn wirtinger_fd(obs: &Observable, v: &VerblunskyVector, step: f64) -> Result<WirtingerGradient> {
    obs.check(v)?;
    check_margin(v, 2.0 * step)?;
    let base: Vec<Dual> = v.as_slice().iter().map(|&a| Dual::constant_of(a)).collect();
    let eval_at = |j: usize, delta: Complex64| {
        let mut args = base.clone();
        args[j].v += delta;
        obs.eval_dual(&args).v
    };
    let partials = (0..v.p())
        .map(|j| {
            let dx = (eval_at(j, Complex64::new(step, 0.0)) - eval_at(j, Complex64::new(-step, 0.0)))
                / (2.0 * step);
            let dy = (eval_at(j, Complex64::new(0.0, step)) - eval_at(j, Complex64::new(0.0, -step)))
                / (2.0 * step);
            (dx, dy)
        })
        .collect();
    Ok(from_partials(partials))
}

/// The bracket evaluated from precomputed gradients.
pub fn al_bracket_from_gradients(
    f: &WirtingerGradient,
    g: &WirtingerGradient,
    v: &VerblunskyVector,
) -> Complex64 {
    let sum: Complex64 = (0..v.p())
        .map(|j| {
            let r2 = 1.0 - v.as_slice()[j].norm_sqr();
            (f.d_alpha[j] * g.d_alphabar[j] - f.d_alphabar[j] * g.d_alpha[j]) * r2
        })
        .sum();
    2.0 * I * sum
}

/// The Ablowitz–Ladik bracket `{f, g}` at `v`.
pub fn al_bracket(f: &Observable, g: &Observable, v: &VerblunskyVector) -> Result<Complex64> {
    let gf = wirtinger(f, v)?;
    let gg = wirtinger(g, v)?;
    Ok(al_bracket_from_gradients(&gf, &gg, v))
}

/// The Hamiltonian vector field `dα_j/dt = {H, α_j} = −2i ρ_j² ∂H/∂ᾱ_j`.
pub fn hamiltonian_field(h: &Observable, v: &VerblunskyVector) -> Result<Vec<Complex64>> {
    let g = wirtinger(h, v)?;
    Ok(field_from_gradient(&g, v))
}

pub(crate) fn field_from_gradient(g: &WirtingerGradient, v: &VerblunskyVector) -> Vec<Complex64> {
    v.as_slice()
        .iter()
        .zip(&g.d_alphabar)
        .map(|(a, d)| -2.0 * I * (1.0 - a.norm_sqr()) * d)
        .collect()
}

/// Gradients of a coordinate function on the factor `g`: the left gradient
/// `Dφ` and right gradient `D'φ = g⁻¹ Dφ g`, with respect to the pairing.
struct FactorGradient {
    left: LaurentMatrix,
    right: LaurentMatrix,
}

fn unit(p: usize, a: usize) -> CMat {
    let mut m = CMat::zeros(p, p);
    m[(a, a)] = Complex64::new(1.0, 0.0);
    m
}

/// `F_a = Im (g)_{aa}|_{h^0}` and `G_a = Re (g)_{aa}|_{h^0}` on the factor that
/// carries `θ_a`, where `g` is `g^e` for even `a` and `g^o` for odd `a`. Their
/// gradients are `DF = g E_aa`, `D'F = E_aa g` and `DG = i DF`, `D'G = i D'F`.
fn coordinate_gradients(factor: &LaurentMatrix, a: usize, real_part: bool) -> FactorGradient {
    let e = unit(factor.p(), a);
    let c = if real_part { I } else { Complex64::new(1.0, 0.0) };
    FactorGradient {
        left: factor.right_mul(&e).scale(c),
        right: factor.left_mul(&e).scale(c),
    }
}

/// `½ (J♯ D'φ, D'ψ) − ½ (J♯ Dφ, Dψ)` on one factor.
fn factor_bracket(phi: &FactorGradient, psi: &FactorGradient) -> Result<f64> {
    let right = LaurentMatrix::pairing(&phi.right.j_sharp(), &psi.right)?;
    let left = LaurentMatrix::pairing(&phi.left.j_sharp(), &psi.left)?;
    Ok(0.5 * right - 0.5 * left)
}

/// Coordinate brackets `[[{F_a,F_b}, {F_a,G_b}], [{G_a,F_b}, {G_a,G_b}]]` of
/// the product Sklyanin structure at `(g^e, g^o)`.
///
/// With `F_a = −Im α_a` and `G_a = Re α_a` these reproduce the
/// Ablowitz–Ladik brackets of the coordinates, in particular
/// `{F_a, G_a} = −ρ_a²`.
pub fn sklyanin_coordinate_brackets(
    v: &VerblunskyVector,
    a: usize,
    b: usize,
) -> Result<[[Complex64; 2]; 2]> {
    let p = v.p();
    if a >= p || b >= p {
        return Err(Error::OutOfRange(format!(
            "coordinate indices ({a}, {b}) outside 0..{p}"
        )));
    }
    let f = build_factors(v);
    let ge = LaurentMatrix::constant(f.ge.clone())?;
    let factor_of = |k: usize| if k % 2 == 0 { &ge } else { &f.go };
    let mut table = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (r, real_a) in [false, true].into_iter().enumerate() {
        for (s, real_b) in [false, true].into_iter().enumerate() {
            // Functions on different factors Poisson commute in the product.
            if a % 2 != b % 2 {
                continue;
            }
            let phi = coordinate_gradients(factor_of(a), a, real_a);
            let psi = coordinate_gradients(factor_of(b), b, real_b);
            table[r][s] = Complex64::new(factor_bracket(&phi, &psi)?, 0.0);
        }
    }
    Ok(table)
}

/// One entry of an involution report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BracketEntry {
    /// Label of the first observable.
    pub a: String,
    /// Label of the second observable.
    pub b: String,
    /// `{a, b}` as `[re, im]`.
    pub value: [f64; 2],
}

/// Result of [`involution_check`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InvolutionReport {
    /// Every unordered pair that was evaluated.
    pub pairs: Vec<BracketEntry>,
    /// Largest `|{a, b}|`.
    pub max_abs: f64,
    /// Acceptance threshold.
    pub tol: f64,
    /// Whether `max_abs < tol`.
    pub pass: bool,
}

/// The independent real integrals `P`, `I_0`, `Re I_j`, `Im I_j` for
/// `1 ≤ j ≤ p/2 − 1`.
pub fn integral_observables(p: usize) -> Vec<Observable> {
    let mut out = vec![Observable::p_value(p), Observable::i(p, 0, true)];
    for j in 1..(p as i64 / 2) {
        out.push(Observable::i(p, j, true));
        out.push(Observable::i(p, j, false));
    }
    out
}

/// Evaluates the AL bracket on every unordered pair of
/// [`integral_observables`] and reports the largest modulus.
pub fn involution_check(v: &VerblunskyVector, tol: f64) -> Result<InvolutionReport> {
    let obs = integral_observables(v.p());
    let grads = obs
        .iter()
        .map(|o| wirtinger(o, v))
        .collect::<Result<Vec<_>>>()?;
    let mut pairs = Vec::new();
    let mut max_abs: f64 = 0.0;
    for x in 0..obs.len() {
        for y in x + 1..obs.len() {
            let value = al_bracket_from_gradients(&grads[x], &grads[y], v);
            max_abs = max_abs.max(value.norm());
            pairs.push(BracketEntry {
                a: obs[x].label().to_string(),
                b: obs[y].label().to_string(),
                value: [value.re, value.im],
            });
        }
    }
    Ok(InvolutionReport {
        pairs,
        max_abs,
        tol,
        pass: max_abs < tol,
    })
}
