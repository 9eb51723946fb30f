//! Hamiltonian flows on Verblunsky data, by direct integration, through the
//! Lax form, and by loop-group factorization.
//!
//! The generators are the real and imaginary parts of `K_n` and `I_j`,
//! `log P`, `P`, and the Ablowitz–Ladik Hamiltonian `Re K_1 − 2 log P`. Each
//! generates `dα_j/dt = {H, α_j}` under the Ablowitz–Ladik bracket. The Lax
//! form of the `K_n` flows is `dE/dt = [E, Π_k̃(iE^n)]` (real part) and
//! `dE/dt = [E, Π_k̃(E^n)]` (imaginary part).

mod factor;

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cmv::{floquet_loop, floquet_power, VerblunskyVector};
use crate::conserved::{char_poly, invariants, ConservedSet};
use crate::error::{Error, Result};
use crate::laurent::{split_triangular, CMat, LaurentMatrix};
use crate::poisson::{hamiltonian_field, Observable};

pub use factor::{
    dressing_action, flow_by_factorization, iwasawa_factorize, spectral_factorize,
    DressingResult, FactorFlowReport, Iwasawa, SpectralFactor, FLOW_SIGN_IM_I, FLOW_SIGN_RE_I,
};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Distance to the unit circle below which integration aborts.
pub const BOUNDARY_MARGIN: f64 = 1e-6;

/// Generator of a flow.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HamiltonianKind {
    /// `Re K_n`, `1 ≤ n ≤ p/2`.
    ReK,
    /// `Im K_n`, `1 ≤ n ≤ p/2`.
    ImK,
    /// `Re I_n`, `0 ≤ n ≤ p/2 − 1`.
    ReI,
    /// `Im I_n`, `0 ≤ n ≤ p/2 − 1`.
    ImI,
    /// `log P`; its flow is `α_j ↦ α_j e^{it}`.
    #[serde(rename = "logP")]
    LogP,
    /// `P`; its flow is `α_j ↦ α_j e^{itP}`.
    P,
    /// The Ablowitz–Ladik Hamiltonian `Re K_1 − 2 log P`.
    AL,
}

/// A generator together with its index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HamiltonianSpec {
    /// Which family.
    pub kind: HamiltonianKind,
    /// Index within the family; ignored for `logP`, `P` and `AL`.
    #[serde(default)]
    pub n: usize,
}

impl HamiltonianSpec {
    /// Creates a spec.
    pub fn new(kind: HamiltonianKind, n: usize) -> Self {
        HamiltonianSpec { kind, n }
    }

    /// Checks that `n` is admissible for period `p`.
    pub fn validate(&self, p: usize) -> Result<()> {
        use HamiltonianKind::*;
        let ok = match self.kind {
            ReK | ImK => (1..=p / 2).contains(&self.n),
            ReI | ImI => self.n < p / 2,
            LogP | P | AL => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::OutOfRange(format!(
                "{:?} with n = {} is not defined for p = {p}",
                self.kind, self.n
            )))
        }
    }

    /// The generator as an observable on period-`p` data.
    pub fn observable(&self, p: usize) -> Result<Observable> {
        use HamiltonianKind::*;
        self.validate(p)?;
        Ok(match self.kind {
            ReK => Observable::k(p, self.n, true),
            ImK => Observable::k(p, self.n, false),
            ReI => Observable::i(p, self.n as i64, true),
            ImI => Observable::i(p, self.n as i64, false),
            LogP => Observable::log_p(p),
            P => Observable::p_value(p),
            AL => Observable::al_hamiltonian(p),
        })
    }
}

/// Deviation of the conserved quantities from their initial values.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Drift {
    /// `|P(t) − P(0)|`.
    pub p: f64,
    /// `max_j |I_j(t) − I_j(0)|`.
    pub i_max: f64,
    /// `max_n |K_n(t) − K_n(0)|`.
    pub k_max: f64,
}

/// Sampled solution of a flow.
#[derive(Clone, Debug)]
pub struct Trajectory {
    /// Sample times, increasing.
    pub times: Vec<f64>,
    /// States at the sample times.
    pub states: Vec<VerblunskyVector>,
    /// Conserved-quantity drift at the sample times.
    pub drift: Vec<Drift>,
}

impl Trajectory {
    /// The last state.
    pub fn final_state(&self) -> &VerblunskyVector {
        self.states.last().expect("trajectories are never empty")
    }

    /// Componentwise maximum of the drift records.
    pub fn max_drift(&self) -> Drift {
        self.drift.iter().fold(Drift::default(), |acc, d| Drift {
            p: acc.p.max(d.p),
            i_max: acc.i_max.max(d.i_max),
            k_max: acc.k_max.max(d.k_max),
        })
    }

    /// CSV with header `t,re_a0,im_a0,…,P_drift,maxI_drift`, one row per
    /// sample, floats in `{:.16e}`.
    pub fn to_csv(&self) -> String {
        let p = self.states.first().map_or(0, |s| s.p());
        let mut out = String::from("t");
        for j in 0..p {
            let _ = write!(out, ",re_a{j},im_a{j}");
        }
        out.push_str(",P_drift,maxI_drift\n");
        for ((t, s), d) in self.times.iter().zip(&self.states).zip(&self.drift) {
            let _ = write!(out, "{t:.16e}");
            for a in s.as_slice() {
                let _ = write!(out, ",{:.16e},{:.16e}", a.re, a.im);
            }
            let _ = writeln!(out, ",{:.16e},{:.16e}", d.p, d.i_max);
        }
        out
    }
}

fn drift_from(reference: &ConservedSet, v: &VerblunskyVector) -> Drift {
    let (p, i_max, k_max) = invariants(v).drift(reference);
    Drift { p, i_max, k_max }
}

fn axpy(v: &VerblunskyVector, c: f64, k: &[Complex64]) -> Option<VerblunskyVector> {
    let alpha = v
        .as_slice()
        .iter()
        .zip(k)
        .map(|(a, d)| a + d * c)
        .collect();
    VerblunskyVector::new(alpha).ok()
}

/// One classical Runge–Kutta step of size `dt` (which may be negative) for
/// the field of `h`.
pub fn rk4_step(h: &Observable, v: &VerblunskyVector, dt: f64) -> Result<VerblunskyVector> {
    let outside = || Error::Domain("Runge–Kutta stage left the polydisk".into());
    let k1 = hamiltonian_field(h, v)?;
    let k2 = hamiltonian_field(h, &axpy(v, dt / 2.0, &k1).ok_or_else(outside)?)?;
    let k3 = hamiltonian_field(h, &axpy(v, dt / 2.0, &k2).ok_or_else(outside)?)?;
    let k4 = hamiltonian_field(h, &axpy(v, dt, &k3).ok_or_else(outside)?)?;
    let incr: Vec<Complex64> = (0..v.p())
        .map(|j| (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) / 6.0)
        .collect();
    axpy(v, dt, &incr).ok_or_else(outside)
}

/// Integrates `dα/dt = {H, α}` with fixed-step RK4 from `0` to `t_end`.
///
/// The number of steps is `round(t_end / dt)` (at least one), with the step
/// adjusted to land on `t_end`. Integration stops with
/// [`Error::BoundaryApproach`], carrying the partial trajectory, if any
/// `|α_j|` comes within [`BOUNDARY_MARGIN`] of the unit circle.
pub fn integrate_ode(
    v0: &VerblunskyVector,
    spec: HamiltonianSpec,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory> {
    if !(dt > 0.0) || !t_end.is_finite() || t_end < 0.0 {
        return Err(Error::Domain(format!(
            "need dt > 0 and t_end ≥ 0, got dt = {dt}, t_end = {t_end}"
        )));
    }
    let h = spec.observable(v0.p())?;
    let steps = ((t_end / dt).round() as usize).max(if t_end > 0.0 { 1 } else { 0 });
    let step = if steps == 0 { 0.0 } else { t_end / steps as f64 };
    let reference = invariants(v0);
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![v0.clone()],
        drift: vec![Drift::default()],
    };
    let mut v = v0.clone();
    for s in 1..=steps {
        let abort = |traj: &Trajectory, v: &VerblunskyVector| Error::BoundaryApproach {
            t: *traj.times.last().expect("nonempty"),
            max_modulus: v.max_modulus(),
            partial: Box::new(traj.clone()),
        };
        let next = match rk4_step(&h, &v, step) {
            Ok(next) => next,
            Err(_) => return Err(abort(&traj, &v)),
        };
        if next.max_modulus() > 1.0 - BOUNDARY_MARGIN {
            return Err(abort(&traj, &next));
        }
        v = next;
        traj.times.push(step * s as f64);
        traj.drift.push(drift_from(&reference, &v));
        traj.states.push(v.clone());
    }
    Ok(traj)
}

/// Closed-form flow of `P`: `α_j(t) = α_j(0) e^{itP(0)}`.
pub fn p_flow_exact(v0: &VerblunskyVector, t: f64) -> VerblunskyVector {
    let phase = Complex64::from_polar(1.0, t * v0.rho_product());
    v0.scaled(phase).expect("rotation preserves the polydisk")
}

/// `E_r(h)`, the coefficient of `z^{p−r}` in `det(zI − E(h))`, as a scalar
/// Laurent polynomial in `h` times the identity.
fn e_coefficient(cp: &crate::conserved::CharPoly, r: usize) -> Result<LaurentMatrix> {
    let p = cp.p();
    let id = CMat::identity(p, p);
    LaurentMatrix::from_coeffs(p, (-1..=1).map(|m| (m, &id * cp.coeff(p - r, m))))
}

/// `∇ᵀE_j(E(h)) = −Σ_{i=0}^{j−1} E_{j−1−i}(h) E(h)^i` for `1 ≤ j ≤ p`.
pub fn nabla_e(v: &VerblunskyVector, j: usize) -> Result<LaurentMatrix> {
    let p = v.p();
    if j == 0 || j > p {
        return Err(Error::OutOfRange(format!("j = {j} outside 1..={p}")));
    }
    let e = floquet_loop(v);
    let cp = char_poly(v);
    let mut acc = LaurentMatrix::zero(p)?;
    let mut power = LaurentMatrix::identity(p)?;
    for i in 0..j {
        let coeff = e_coefficient(&cp, j - 1 - i)?;
        acc = &acc - &(&coeff * &power);
        power = &power * &e;
    }
    Ok(acc)
}

/// The gradient `Dφ(E(h))` of a central function:
///
/// * `Im I_n`: `E ∇ᵀE_j` with `j = p/2 − n`;
/// * `Re I_n`: `i E ∇ᵀE_j`;
/// * `P`: `−i h E ∇ᵀE_{p/2}`.
pub fn grad_central(v: &VerblunskyVector, spec: HamiltonianSpec) -> Result<LaurentMatrix> {
    spec.validate(v.p())?;
    let p = v.p();
    let e = floquet_loop(v);
    match spec.kind {
        HamiltonianKind::ImI => Ok(&e * &nabla_e(v, p / 2 - spec.n)?),
        HamiltonianKind::ReI => Ok((&e * &nabla_e(v, p / 2 - spec.n)?).scale(I)),
        HamiltonianKind::P => Ok((&e * &nabla_e(v, p / 2)?).scale(-I).shift(1)),
        other => Err(Error::OutOfRange(format!(
            "central gradient is provided for ReI, ImI and P, not {other:?}"
        ))),
    }
}

/// Right side of the Lax equation: `[E, Π_k̃(iE^n)]` for `Re K_n` and
/// `[E, Π_k̃(E^n)]` for `Im K_n`.
pub fn lax_rhs(v: &VerblunskyVector, spec: HamiltonianSpec) -> Result<LaurentMatrix> {
    spec.validate(v.p())?;
    let e = floquet_loop(v);
    let en = e.pow(spec.n as u32);
    let arg = match spec.kind {
        HamiltonianKind::ReK => en.scale(I),
        HamiltonianKind::ImK => en,
        other => {
            return Err(Error::OutOfRange(format!(
                "Lax form is provided for ReK and ImK, not {other:?}"
            )))
        }
    };
    LaurentMatrix::commutator(&e, &arg.project_k())
}

/// The same right side assembled from `Q_n(h) = ½ diag A_0(n) + upper(A_0(n))
/// + h⁻¹ A_{−1}(n)`: `[E, i(Q + Q*)]` for `Re K_n` and `[E, Q − Q*]` for
/// `Im K_n`.
pub fn lax_rhs_via_q(v: &VerblunskyVector, spec: HamiltonianSpec) -> Result<LaurentMatrix> {
    spec.validate(v.p())?;
    let p = v.p();
    let (a0, _, am1) = floquet_power(v, spec.n)?;
    let (_, diag, upper) = split_triangular(&a0);
    let q = LaurentMatrix::from_coeffs(p, [(0, diag * Complex64::new(0.5, 0.0) + upper), (-1, am1)])?;
    let m = match spec.kind {
        HamiltonianKind::ReK => (&q + &q.star()).scale(I),
        HamiltonianKind::ImK => &q - &q.star(),
        other => {
            return Err(Error::OutOfRange(format!(
                "Lax form is provided for ReK and ImK, not {other:?}"
            )))
        }
    };
    LaurentMatrix::commutator(&floquet_loop(v), &m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use HamiltonianKind::*;

    #[test]
    fn spec_validation() {
        assert!(HamiltonianSpec::new(ReK, 0).validate(4).is_err());
        assert!(HamiltonianSpec::new(ReK, 2).validate(4).is_ok());
        assert!(HamiltonianSpec::new(ImI, 2).validate(4).is_err());
        assert!(HamiltonianSpec::new(ImI, 1).validate(4).is_ok());
        let s: HamiltonianSpec = serde_json::from_str(r#"{"kind":"logP"}"#).unwrap();
        assert_eq!(s, HamiltonianSpec::new(LogP, 0));
    }

    #[test]
    fn p_flow_closed_form() {
        let v = VerblunskyVector::new(vec![Complex64::new(0.5, 0.0), Complex64::new(0.0, 0.3)]).unwrap();
        assert_eq!(p_flow_exact(&v, 0.0), v);
        let half = p_flow_exact(&v, std::f64::consts::PI / v.rho_product());
        assert!(half.distance(&v.scaled(Complex64::new(-1.0, 0.0)).unwrap()) < 1e-15);
        let z = VerblunskyVector::zeros(4).unwrap();
        assert_eq!(p_flow_exact(&z, 1.3), z);
    }

    #[test]
    fn ode_reproduces_exact_p_flow_and_log_p_rotation() {
        let mut g = rng::seeded(40);
        let v = rng::verblunsky(&mut g, 4, 0.6);
        let traj = integrate_ode(&v, HamiltonianSpec::new(P, 0), 1.0, 1e-3).unwrap();
        assert!(traj.final_state().distance(&p_flow_exact(&v, 1.0)) < 1e-10);
        let traj = integrate_ode(&v, HamiltonianSpec::new(LogP, 0), 1.0, 1e-3).unwrap();
        let rotated = v.scaled(Complex64::from_polar(1.0, 1.0)).unwrap();
        assert!(traj.final_state().distance(&rotated) < 1e-10);
    }

    #[test]
    fn al_flow_is_gauge_rotated_re_k1_flow() {
        let mut g = rng::seeded(41);
        let v = rng::verblunsky(&mut g, 4, 0.6);
        let t = 0.5;
        let al = integrate_ode(&v, HamiltonianSpec::new(AL, 0), t, 1e-3).unwrap();
        let k1 = integrate_ode(&v, HamiltonianSpec::new(ReK, 1), t, 1e-3).unwrap();
        let gauged = k1.final_state().scaled(Complex64::from_polar(1.0, -2.0 * t)).unwrap();
        assert!(al.final_state().distance(&gauged) < 1e-10);
    }

    #[test]
    fn csv_layout() {
        let v = VerblunskyVector::zeros(2).unwrap();
        let traj = integrate_ode(&v, HamiltonianSpec::new(P, 0), 0.002, 1e-3).unwrap();
        let csv = traj.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "t,re_a0,im_a0,re_a1,im_a1,P_drift,maxI_drift");
        assert_eq!(csv.lines().count(), 4);
        assert_eq!(lines.next().unwrap().split(',').count(), 7);
    }

    #[test]
    fn boundary_abort_keeps_partial_trajectory() {
        // Im K_1 pushes mass between neighbours; starting next to the circle
        // with a large step the trajectory leaves the disk quickly.
        let v = VerblunskyVector::new(vec![
            Complex64::new(0.999_999, 0.0),
            Complex64::new(0.0, 0.5),
        ])
        .unwrap();
        match integrate_ode(&v, HamiltonianSpec::new(ImK, 1), 10.0, 0.5) {
            Err(Error::BoundaryApproach { partial, .. }) => {
                assert_eq!(partial.states[0], v);
            }
            other => panic!("expected boundary abort, got {other:?}"),
        }
    }

    #[test]
    fn nabla_recursion_and_first_gradient() {
        let mut g = rng::seeded(42);
        let v = rng::verblunsky(&mut g, 4, 0.6);
        let e = floquet_loop(&v);
        let id = LaurentMatrix::identity(4).unwrap();
        assert!(nabla_e(&v, 1).unwrap().distance(&(-&id)) < 1e-15);
        let cp = char_poly(&v);
        for j in 1..4 {
            let lhs = &(&e * &nabla_e(&v, j).unwrap()) - &e_coefficient(&cp, j).unwrap();
            let rhs = nabla_e(&v, j + 1).unwrap();
            assert!(lhs.circle_distance(&rhs, 16) < 1e-10);
        }
        // ∇ᵀE_p makes E∇ᵀE_p − E_p I vanish (Cayley–Hamilton).
        let ch = &(&e * &nabla_e(&v, 4).unwrap()) - &e_coefficient(&cp, 4).unwrap();
        assert!(ch.circle_distance(&LaurentMatrix::zero(4).unwrap(), 16) < 1e-10);
    }

    #[test]
    fn central_gradient_free_case() {
        let v = VerblunskyVector::zeros(2).unwrap();
        let d = grad_central(&v, HamiltonianSpec::new(ImI, 0)).unwrap();
        assert!(d.distance(&(-&floquet_loop(&v))) < 1e-15);
        let d = grad_central(&v, HamiltonianSpec::new(ReI, 0)).unwrap();
        assert!(d.distance(&floquet_loop(&v).scale(-I)) < 1e-15);
        assert!(grad_central(&v, HamiltonianSpec::new(ReK, 1)).is_err());
    }

    #[test]
    fn lax_rhs_routes_agree_and_vanish_at_coxeter() {
        let mut g = rng::seeded(43);
        for p in [2, 4, 6] {
            let v = rng::verblunsky(&mut g, p, 0.6);
            for n in 1..=p / 2 {
                for kind in [ReK, ImK] {
                    let spec = HamiltonianSpec::new(kind, n);
                    let a = lax_rhs(&v, spec).unwrap();
                    let b = lax_rhs_via_q(&v, spec).unwrap();
                    assert!(a.distance(&b) < 1e-12);
                    let z = lax_rhs(&VerblunskyVector::zeros(p).unwrap(), spec).unwrap();
                    assert!(z.max_coeff_norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn lax_rhs_matches_ode_derivative() {
        let mut g = rng::seeded(44);
        let v = rng::verblunsky(&mut g, 4, 0.6);
        for kind in [ReK, ImK] {
            for n in 1..=2 {
                let spec = HamiltonianSpec::new(kind, n);
                let h = spec.observable(4).unwrap();
                let dt = 1e-6;
                let plus = floquet_loop(&rk4_step(&h, &v, dt).unwrap());
                let minus = floquet_loop(&rk4_step(&h, &v, -dt).unwrap());
                let fd = (&plus - &minus).scale(Complex64::new(0.5 / dt, 0.0));
                let rhs = lax_rhs(&v, spec).unwrap();
                for z in [Complex64::new(1.0, 0.0), I] {
                    let diff = (fd.eval(z).unwrap() - rhs.eval(z).unwrap()).iter().map(|x| x.norm()).fold(0.0, f64::max);
                    assert!(diff < 1e-5, "{kind:?} n={n}: {diff}");
                }
            }
        }
    }
}
