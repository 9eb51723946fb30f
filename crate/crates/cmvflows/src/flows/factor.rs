//! Loop-group factorizations and the flows built from them.
//!
//! * [`spectral_factorize`] writes a positive loop as `Φ = b · star(b)` with
//!   `b` analytic in the disk and `b(0)` lower triangular with positive
//!   diagonal. It follows Bauer: the Cholesky factor of the block Toeplitz
//!   matrix `[Φ_{i−j}]` has a last block row that converges to
//!   `(b_{n−1}, …, b_1, b_0)`.
//! * [`iwasawa_factorize`] splits `g = k·b` with `k` unitary on the circle by
//!   factoring `star(g)·g = star(b)·b`.
//! * [`flow_by_factorization`] evolves `E(h)` along the flow of `Re I_n` or
//!   `Im I_n` as `E(t) = b_1⁻¹ E(0) b_1`, where
//!   `b_1 · star(b_1) = exp(−σt(X + X*))` and `X = Dφ(E(h, 0))`.
//! * [`dressing_action`] evaluates `k(g)⁻¹ x k(x⁻¹gx)` together with the
//!   equivalent form `b(g) x b(x⁻¹gx)⁻¹`.

use nalgebra::Cholesky;
use num_complex::Complex64;
use serde::Serialize;

use super::{grad_central, HamiltonianKind, HamiltonianSpec};
use crate::cmv::{build_factors, fit_floquet, VerblunskyVector};
use crate::error::{Error, Result, StageExt};
use crate::laurent::{circle_points, CMat, LaurentMatrix};
use crate::linalg::{hermitian_exp, min_hermitian_eigenvalue, ql_split, reversal};

/// Orientation of the factorization flow of `Re I_n` relative to its
/// Ablowitz–Ladik Hamiltonian flow, fixed by comparing the two routes.
pub const FLOW_SIGN_RE_I: f64 = 1.0;
/// Orientation of the factorization flow of `Im I_n`.
pub const FLOW_SIGN_IM_I: f64 = 1.0;

/// Longest time step taken by one factorization.
pub const MAX_FACTOR_STEP: f64 = 0.25;

/// Recognition threshold applied to reconstructed Floquet CMV loops.
pub const RECOGNITION_TOL: f64 = 1e-7;

const MIN_EIGENVALUE: f64 = 1e-12;

/// Analytic factor of a positive loop.
#[derive(Clone, Debug)]
pub struct SpectralFactor {
    /// `b` with powers `0..n`.
    pub b: LaurentMatrix,
    /// `max_s ‖Φ(h_s) − b(h_s) b(h_s)*‖_F` over the check grid.
    pub residual: f64,
    /// Truncation order that was accepted.
    pub order: usize,
}

fn sample_count(n: usize) -> usize {
    (2 * n).max(64)
}

fn inverse(m: &CMat, what: &str) -> Result<CMat> {
    m.clone()
        .try_inverse()
        .ok_or_else(|| Error::Domain(format!("{what} is singular on the circle")))
}

fn bauer_coefficients(phi: &LaurentMatrix, n: usize) -> Result<Vec<CMat>> {
    let p = phi.p();
    let dim = n * p;
    let mut t = CMat::zeros(dim, dim);
    for bi in 0..n {
        for bj in 0..n {
            let c = phi.coeff_or_zero(bi as i32 - bj as i32);
            t.view_mut((bi * p, bj * p), (p, p)).copy_from(&c);
        }
    }
    let l = Cholesky::new(t)
        .ok_or_else(|| Error::Domain("block Toeplitz matrix is not positive definite".into()))?
        .unpack();
    Ok((0..n)
        .map(|k| l.view(((n - 1) * p, (n - 1 - k) * p), (p, p)).into_owned())
        .collect())
}

/// Factors a loop that is Hermitian positive definite on the circle as
/// `Φ = b · star(b)`, with `b` analytic (powers `0..n_max`) and `b(0)` lower
/// triangular with positive diagonal.
///
/// The truncation order starts at 8 and doubles up to `n_max` until the
/// coefficients change by less than `tol / 10`; the accepted factor must
/// reproduce `Φ` to `tol` on `max(2n, 64)` circle points.
pub fn spectral_factorize(phi: &LaurentMatrix, n_max: usize, tol: f64) -> Result<SpectralFactor> {
    let p = phi.p();
    if n_max == 0 {
        return Err(Error::OutOfRange("truncation order must be positive".into()));
    }
    let scale = phi.max_coeff_norm().max(1.0);
    if phi.distance(&phi.star()) > 1e-10 * scale {
        return Err(Error::Domain("loop is not self-adjoint under star".into()));
    }
    let grid = sample_count(n_max);
    for (s, m) in phi.samples(grid).iter().enumerate() {
        let lam = min_hermitian_eigenvalue(m);
        if lam < MIN_EIGENVALUE {
            return Err(Error::Domain(format!(
                "sample {s} has minimum eigenvalue {lam:.3e}; the loop is not positive"
            )));
        }
    }
    let mut n = n_max.min(8);
    let mut prev: Option<Vec<CMat>> = None;
    let mut change = f64::INFINITY;
    let coeffs = loop {
        let cur = bauer_coefficients(phi, n)?;
        if let Some(old) = &prev {
            change = cur
                .iter()
                .enumerate()
                .map(|(k, c)| match old.get(k) {
                    Some(o) => (c - o).norm(),
                    None => c.norm(),
                })
                .fold(0.0, f64::max);
        }
        if change < 0.1 * tol || n == n_max {
            break cur;
        }
        prev = Some(cur);
        n = (2 * n).min(n_max);
    };
    let b = LaurentMatrix::from_coeffs(p, coeffs.into_iter().enumerate().map(|(k, c)| (k as i32, c)))?;
    let check = sample_count(n);
    let residual = phi
        .samples(check)
        .iter()
        .zip(b.samples(check))
        .map(|(f, bh)| (f - &bh * bh.adjoint()).norm())
        .fold(0.0, f64::max);
    if residual > tol {
        return Err(Error::NotConverged {
            what: format!("spectral factorization at order {n}"),
            residual,
        });
    }
    Ok(SpectralFactor {
        b,
        residual,
        order: n,
    })
}

/// Result of [`iwasawa_factorize`].
#[derive(Clone, Debug)]
pub struct Iwasawa {
    /// Unitary-on-the-circle factor.
    pub k: LaurentMatrix,
    /// Analytic factor with `b(0)` lower triangular, positive diagonal.
    pub b: LaurentMatrix,
    /// `max_s ‖k(h_s) k(h_s)* − I‖_F`.
    pub unitarity_residual: f64,
    /// `max_s ‖k(h_s) b(h_s) − g(h_s)‖_F`.
    pub product_residual: f64,
    /// Residual reported by the spectral factorization.
    pub spectral_residual: f64,
}

fn transpose_flip(l: &LaurentMatrix) -> LaurentMatrix {
    let j = reversal(l.p());
    l.map_coeffs(|m| (&j * m * &j).transpose())
}

/// Splits `g = k · b` with `k` unitary on the circle and `b` analytic in the
/// disk with `b(0)` lower triangular and positive on the diagonal.
///
/// `star(g)·g = star(b)·b`; conjugating the transpose by the reversal `J`
/// turns this into a factorization `d · star(d)` with `d = J bᵀ J`.
pub fn iwasawa_factorize(g: &LaurentMatrix, n_max: usize, tol: f64) -> Result<Iwasawa> {
    let p = g.p();
    let grid = sample_count(n_max);
    let g_samples = g.samples(grid);
    for m in &g_samples {
        inverse(m, "g")?;
    }
    let psi = &g.star() * g;
    let d = spectral_factorize(&transpose_flip(&psi), n_max, tol).stage("spectral factorization")?;
    let b = transpose_flip(&d.b);
    let b_samples = b.samples(grid);
    let k_samples: Vec<CMat> = g_samples
        .iter()
        .zip(&b_samples)
        .map(|(gh, bh)| Ok(gh * inverse(bh, "b")?))
        .collect::<Result<_>>()?;
    let k = LaurentMatrix::from_samples(p, &k_samples)?;
    let check = 2 * grid;
    let id = CMat::identity(p, p);
    let unitarity_residual = k
        .samples(check)
        .iter()
        .map(|m| (m * m.adjoint() - &id).norm())
        .fold(0.0, f64::max);
    let product_residual = (&k * &b).circle_distance(g, check);
    if unitarity_residual.max(product_residual) > tol {
        return Err(Error::NotConverged {
            what: "Iwasawa factorization".into(),
            residual: unitarity_residual.max(product_residual),
        });
    }
    Ok(Iwasawa {
        k,
        b,
        unitarity_residual,
        product_residual,
        spectral_residual: d.residual,
    })
}

/// Outcome of [`flow_by_factorization`].
#[derive(Clone, Debug, Serialize)]
pub struct FactorFlowReport {
    /// Verblunsky data at the final time.
    pub state: VerblunskyVector,
    /// Largest spectral-factorization residual over all sub-steps.
    pub spectral_residual: f64,
    /// Largest `‖g^e(t)|_{h=1} − g^e(t)|_{h=i}‖_F` over all sub-steps.
    pub ge_h_dependence: f64,
    /// Largest Floquet-shape residual of the reconstructed loops.
    pub recognition_residual: f64,
    /// Number of sub-steps.
    pub steps: usize,
}

fn flow_sign(kind: HamiltonianKind) -> Result<f64> {
    match kind {
        HamiltonianKind::ReI => Ok(FLOW_SIGN_RE_I),
        HamiltonianKind::ImI => Ok(FLOW_SIGN_IM_I),
        other => Err(Error::OutOfRange(format!(
            "the factorization route is provided for ReI and ImI, not {other:?}"
        ))),
    }
}

struct SubStep {
    state: VerblunskyVector,
    spectral_residual: f64,
    ge_h_dependence: f64,
    recognition_residual: f64,
}

fn factor_step(v: &VerblunskyVector, spec: HamiltonianSpec, t: f64, n: usize, tol: f64) -> Result<SubStep> {
    let p = v.p();
    let sigma = flow_sign(spec.kind)?;
    let x = grad_central(v, spec).stage("central gradient")?;
    let grid = sample_count(n);
    let phi_samples: Vec<CMat> = x
        .samples(grid)
        .iter()
        .map(|xs| hermitian_exp(&((xs + xs.adjoint()) * Complex64::new(-sigma * t, 0.0))))
        .collect();
    let phi = LaurentMatrix::from_samples(p, &phi_samples)?;
    // Hermitian symmetry of the sampled loop holds up to roundoff; restore it
    // exactly before factoring.
    let phi = (&phi + &phi.star()).scale(Complex64::new(0.5, 0.0));
    let b1 = spectral_factorize(&phi, n, tol).stage("spectral factorization")?;
    let factors = build_factors(v);
    let ge0 = &factors.ge;
    let b1_0 = b1.b.coeff_or_zero(0);
    let (u, _l_inv) = ql_split(&(inverse(&b1_0, "b_1(0)")? * ge0)).stage("constant split")?;
    let b2 = b1.b.left_mul(&ge0.adjoint()).right_mul(&u);
    let ge_at = |h: Complex64| -> Result<CMat> {
        Ok(inverse(&b1.b.eval(h)?, "b_1")? * ge0 * b2.eval(h)?)
    };
    let ge_one = ge_at(Complex64::new(1.0, 0.0))?;
    let ge_i = ge_at(Complex64::new(0.0, 1.0))?;
    let ge_h_dependence = (&ge_one - &ge_i).norm();
    let go_samples: Vec<CMat> = circle_points(grid)
        .into_iter()
        .map(|h| Ok(inverse(&b2.eval(h)?, "b_2")? * factors.go.eval(h)? * b1.b.eval(h)?))
        .collect::<Result<_>>()?;
    let go_t = LaurentMatrix::from_samples(p, &go_samples)?;
    let outside = go_t.norm_outside(-1, 1);
    let e_t = go_t.truncated(-1, 1).left_mul(&ge_one);
    let (state, fit) = fit_floquet(&e_t)
        .ok_or_else(|| Error::Consistency("evolved loop has no Floquet CMV reading".into()))?;
    let recognition_residual = fit.max(outside);
    if recognition_residual > RECOGNITION_TOL {
        return Err(Error::Consistency(format!(
            "evolved loop deviates from Floquet CMV shape by {recognition_residual:.3e}"
        )));
    }
    Ok(SubStep {
        state,
        spectral_residual: b1.residual,
        ge_h_dependence,
        recognition_residual,
    })
}

/// Evolves `v0` for time `t` along the flow of `Re I_n` or `Im I_n` by loop
/// factorization, splitting `t` into steps of at most [`MAX_FACTOR_STEP`].
///
/// Each step builds `X = Dφ(E(h))`, factors `exp(−σt(X + X*)) = b_1 star(b_1)`
/// on a circle grid, splits `b_1(0)⁻¹ g^e = u l⁻¹`, sets
/// `b_2 = g^e* b_1 u`, and forms `g^e(t) = b_1⁻¹ g^e b_2`,
/// `g^o(t) = b_2⁻¹ g^o b_1`, from which the new coefficients are read.
pub fn flow_by_factorization(
    v0: &VerblunskyVector,
    spec: HamiltonianSpec,
    t: f64,
    n: usize,
    tol: f64,
) -> Result<FactorFlowReport> {
    spec.validate(v0.p())?;
    flow_sign(spec.kind)?;
    if !t.is_finite() {
        return Err(Error::Domain(format!("time {t} is not finite")));
    }
    let steps = (t.abs() / MAX_FACTOR_STEP).ceil() as usize;
    let mut report = FactorFlowReport {
        state: v0.clone(),
        spectral_residual: 0.0,
        ge_h_dependence: 0.0,
        recognition_residual: 0.0,
        steps,
    };
    if steps == 0 {
        return Ok(report);
    }
    let tau = t / steps as f64;
    for _ in 0..steps {
        let s = factor_step(&report.state, spec, tau, n, tol)?;
        report.state = s.state;
        report.spectral_residual = report.spectral_residual.max(s.spectral_residual);
        report.ge_h_dependence = report.ge_h_dependence.max(s.ge_h_dependence);
        report.recognition_residual = report.recognition_residual.max(s.recognition_residual);
    }
    Ok(report)
}

/// Both evaluations of the dressing action.
#[derive(Clone, Debug)]
pub struct DressingResult {
    /// `k(g)⁻¹ x k(x⁻¹gx)`.
    pub k_line: LaurentMatrix,
    /// `b(g) x b(x⁻¹gx)⁻¹`.
    pub b_line: LaurentMatrix,
    /// `max_s ‖k_line(h_s) − b_line(h_s)‖_F`.
    pub line_gap: f64,
}

/// The dressing action `Φ_g(x) = k(g)⁻¹ x k(x⁻¹gx)` of a loop `g` on a
/// unitary loop `x`, with `k` from [`iwasawa_factorize`]. Since
/// `k(g)⁻¹ = b(g) g⁻¹`, it also equals `b(g) x b(x⁻¹gx)⁻¹`; both are
/// computed on a circle grid and compared.
pub fn dressing_action(
    g: &LaurentMatrix,
    x: &LaurentMatrix,
    n: usize,
    tol: f64,
) -> Result<DressingResult> {
    let p = g.p();
    let y = &(&x.star() * g) * x;
    let fg = iwasawa_factorize(g, n, tol).stage("factor g")?;
    let fy = iwasawa_factorize(&y, n, tol).stage("factor x^-1 g x")?;
    let grid = sample_count(n);
    let mut k_samples = Vec::with_capacity(grid);
    let mut b_samples = Vec::with_capacity(grid);
    let mut line_gap: f64 = 0.0;
    for h in circle_points(grid) {
        let xh = x.eval(h)?;
        let kl = inverse(&fg.k.eval(h)?, "k(g)")? * &xh * fy.k.eval(h)?;
        let bl = fg.b.eval(h)? * &xh * inverse(&fy.b.eval(h)?, "b(x^-1 g x)")?;
        line_gap = line_gap.max((&kl - &bl).norm());
        k_samples.push(kl);
        b_samples.push(bl);
    }
    Ok(DressingResult {
        k_line: LaurentMatrix::from_samples(p, &k_samples)?,
        b_line: LaurentMatrix::from_samples(p, &b_samples)?,
        line_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmv::{coxeter_element, floquet_loop, recognize_floquet};
    use crate::flows::integrate_ode;
    use crate::rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn trivial_spectral_factors() {
        let id = LaurentMatrix::identity(2).unwrap();
        let f = spectral_factorize(&id, 16, 1e-12).unwrap();
        assert!(f.b.distance(&id) < 1e-14);
        let d = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(4., 0.), c(1., 0.)]));
        let f = spectral_factorize(&LaurentMatrix::constant(d).unwrap(), 16, 1e-12).unwrap();
        let want = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(2., 0.), c(1., 0.)]));
        assert!(f.b.distance(&LaurentMatrix::constant(want).unwrap()) < 1e-14);
    }

    #[test]
    fn non_positive_loop_is_rejected() {
        let d = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1., 0.), c(-1., 0.)]));
        let r = spectral_factorize(&LaurentMatrix::constant(d).unwrap(), 8, 1e-10);
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn unitary_loop_has_trivial_iwasawa_factor() {
        let mut g = rng::seeded(50);
        let e = floquet_loop(&rng::verblunsky(&mut g, 4, 0.6));
        let f = iwasawa_factorize(&e, 32, 1e-10).unwrap();
        assert!(f.b.distance(&LaurentMatrix::identity(4).unwrap()) < 1e-12);
        assert!(f.k.circle_distance(&e, 16) < 1e-12);
    }

    #[test]
    fn constant_iwasawa_is_ql() {
        let mut g = rng::seeded(51);
        let a = rng::matrix(&mut g, 4, 1.0) + CMat::identity(4, 4) * c(3.0, 0.0);
        let f = iwasawa_factorize(&LaurentMatrix::constant(a.clone()).unwrap(), 16, 1e-10).unwrap();
        let (u, l) = ql_split(&a).unwrap();
        assert!((f.k.coeff_or_zero(0) - u).norm() < 1e-12);
        assert!((f.b.coeff_or_zero(0) - l).norm() < 1e-12);
    }

    #[test]
    fn factorization_flow_at_zero_time_is_identity() {
        let mut g = rng::seeded(52);
        let v = rng::verblunsky(&mut g, 4, 0.6);
        let r = flow_by_factorization(&v, HamiltonianSpec::new(HamiltonianKind::ImI, 0), 0.0, 32, 1e-10).unwrap();
        assert_eq!(r.state, v);
        assert!(flow_by_factorization(&v, HamiltonianSpec::new(HamiltonianKind::ReK, 1), 0.1, 32, 1e-10).is_err());
    }

    #[test]
    fn factorization_flow_sign_matches_hamiltonian_flow() {
        let mut g = rng::seeded(53);
        let v = rng::verblunsky(&mut g, 4, 0.5);
        for kind in [HamiltonianKind::ReI, HamiltonianKind::ImI] {
            let spec = HamiltonianSpec::new(kind, 1);
            let t = 1e-4;
            let f = flow_by_factorization(&v, spec, t, 32, 1e-11).unwrap();
            let ode = integrate_ode(&v, spec, t, t).unwrap();
            let vel_f: Vec<Complex64> = f.state.as_slice().iter().zip(v.as_slice()).map(|(a, b)| (a - b) / t).collect();
            let vel_o: Vec<Complex64> = ode.final_state().as_slice().iter().zip(v.as_slice()).map(|(a, b)| (a - b) / t).collect();
            let diff = vel_f.iter().zip(&vel_o).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(diff < 1e-4, "{kind:?}: {vel_f:?} vs {vel_o:?}");
        }
    }

    #[test]
    fn identity_dressing_is_trivial() {
        let x = coxeter_element(4).unwrap().assembled;
        let id = LaurentMatrix::identity(4).unwrap();
        let r = dressing_action(&id, &x, 16, 1e-10).unwrap();
        assert!(r.k_line.distance(&x) < 1e-12);
        assert!(recognize_floquet(&r.k_line, 1e-10).is_some());
    }

    fn lower_positive(g: &mut rng::SeededRng, p: usize) -> CMat {
        let mut m = rng::matrix(g, p, 0.3);
        for i in 0..p {
            m[(i, i)] = c(1.0 + rng::uniform(g, 0.0, 0.5), 0.0);
            for j in i + 1..p {
                m[(i, j)] = c(0.0, 0.0);
            }
        }
        m
    }

    fn planted_analytic(g: &mut rng::SeededRng, p: usize) -> LaurentMatrix {
        let c0 = lower_positive(g, p);
        let c1 = rng::matrix(g, p, 0.1);
        let c2 = rng::matrix(g, p, 0.05);
        LaurentMatrix::from_coeffs(p, [(0, c0), (1, c1), (2, c2)]).unwrap()
    }

    #[test]
    fn spectral_factor_recovers_plant() {
        let mut g = rng::seeded(54);
        for p in [2, 4] {
            let plant = planted_analytic(&mut g, p);
            let phi = &plant * &plant.star();
            let f = spectral_factorize(&phi, 64, 1e-10).unwrap();
            assert!(f.b.distance(&plant) < 1e-8, "p={p}: {}", f.b.distance(&plant));
            assert!(f.order <= 64);
        }
    }

    #[test]
    fn iwasawa_recovers_plant() {
        let mut g = rng::seeded(55);
        let b = planted_analytic(&mut g, 4);
        let k = floquet_loop(&rng::verblunsky(&mut g, 4, 0.6));
        let f = iwasawa_factorize(&(&k * &b), 64, 1e-10).unwrap();
        assert!(f.b.distance(&b) < 1e-8);
        assert!(f.k.circle_distance(&k, 64) < 1e-8);
    }

    #[test]
    fn coxeter_dressing_orbit_is_floquet() {
        let mut g = rng::seeded(56);
        let x = coxeter_element(4).unwrap().assembled;
        for _ in 0..3 {
            let a0 = CMat::identity(4, 4) + rng::matrix(&mut g, 4, 0.2);
            let a1 = rng::matrix(&mut g, 4, 0.2);
            let loop_g = LaurentMatrix::from_coeffs(4, [(0, a0), (1, a1)]).unwrap();
            let r = dressing_action(&loop_g, &x, 64, 1e-10).unwrap();
            assert!(r.line_gap < 1e-8, "gap {}", r.line_gap);
            let (_, res) = fit_floquet(&r.k_line).expect("Floquet reading");
            assert!(res < 1e-7, "recognition residual {res:.3e}");
        }
    }

    #[test]
    fn factorization_route_matches_ode() {
        let mut g = rng::seeded(57);
        let v = rng::verblunsky(&mut g, 4, 0.5);
        for kind in [HamiltonianKind::ReI, HamiltonianKind::ImI] {
            for n in [0, 1] {
                let spec = HamiltonianSpec::new(kind, n);
                let f = flow_by_factorization(&v, spec, 0.05, 64, 1e-10).unwrap();
                let ode = integrate_ode(&v, spec, 0.05, 1e-4).unwrap();
                let gap = f.state.distance(ode.final_state());
                assert!(gap < 1e-6, "{kind:?} n={n}: {gap:.3e}");
                assert!(f.spectral_residual < 1e-8 && f.ge_h_dependence < 1e-7);
            }
        }
    }
}
