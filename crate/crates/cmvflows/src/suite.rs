//! The property suite: twelve seeded numerical checks that together exercise
//! every route of the library, each with fixed tolerances and, where
//! relevant, a runtime budget.
//!
//! Every check draws its random data from a generator derived from the suite
//! seed and the criterion number, so a single criterion can be rerun in
//! isolation with identical data.

use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;

use crate::cmv::{coxeter_element, fit_floquet, floquet_loop, floquet_power};
use crate::conserved::discriminant;
use crate::curve::{asymptotic_orders, bloch_vector, dirichlet_data, h_branches, monodromy};
use crate::error::Result;
use crate::flows::{
    dressing_action, flow_by_factorization, integrate_ode, iwasawa_factorize, lax_rhs, p_flow_exact, rk4_step,
    spectral_factorize, HamiltonianKind, HamiltonianSpec,
};
use crate::laurent::{CMat, LaurentMatrix};
use crate::linalg::{eigenvalues, multiset_distance};
use crate::poisson::{hamiltonian_field, involution_check, sklyanin_coordinate_brackets, Observable};
use crate::rng::{self, SeededRng};

/// One measured quantity and its bound.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    /// What was measured.
    pub what: String,
    /// Measured value (largest over all trials).
    pub value: f64,
    /// Strict upper bound for a pass.
    pub bound: f64,
}

impl Check {
    fn new(what: &str, value: f64, bound: f64) -> Self {
        Check {
            what: what.into(),
            value,
            bound,
        }
    }

    /// Whether `value < bound`; NaN fails.
    pub fn pass(&self) -> bool {
        self.value < self.bound
    }
}

/// Outcome of one criterion.
#[derive(Clone, Debug, Serialize)]
pub struct CriterionReport {
    /// Criterion number, 1 to 12.
    pub id: u32,
    /// Short title.
    pub name: String,
    /// All measured quantities.
    pub checks: Vec<Check>,
    /// Wall-clock seconds.
    pub seconds: f64,
    /// Runtime budget in seconds, if any.
    pub time_limit: Option<f64>,
    /// Error raised by the library, if the check could not complete.
    pub error: Option<String>,
    /// Overall verdict.
    pub pass: bool,
}

impl CriterionReport {
    /// One-line human summary starting with `PASS` or `FAIL`.
    pub fn line(&self) -> String {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        let mut parts: Vec<String> = self
            .checks
            .iter()
            .map(|c| format!("{} {:.3e} < {:.0e}", c.what, c.value, c.bound))
            .collect();
        match self.time_limit {
            Some(limit) => parts.push(format!("time {:.2} s < {limit} s", self.seconds)),
            None => parts.push(format!("time {:.2} s", self.seconds)),
        }
        if let Some(e) = &self.error {
            parts.push(format!("error: {e}"));
        }
        format!("{verdict} criterion {:>2} {}: {}", self.id, self.name, parts.join("; "))
    }
}

/// All criteria of one suite run.
#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    /// Seed the data were drawn from.
    pub seed: u64,
    /// One report per criterion, in order.
    pub criteria: Vec<CriterionReport>,
    /// Whether every criterion passed.
    pub pass: bool,
}

/// Number of criteria in the suite.
pub const CRITERIA: u32 = 12;

fn criterion_rng(seed: u64, id: u32) -> SeededRng {
    rng::seeded(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(id as u64))
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn max_entry(m: &CMat) -> f64 {
    m.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

fn finish(id: u32, name: &str, time_limit: Option<f64>, start: Instant, out: Result<Vec<Check>>) -> CriterionReport {
    let seconds = start.elapsed().as_secs_f64();
    let (checks, error) = match out {
        Ok(checks) => (checks, None),
        Err(e) => (Vec::new(), Some(e.to_string())),
    };
    let pass = error.is_none()
        && checks.iter().all(Check::pass)
        && time_limit.map_or(true, |limit| seconds < limit);
    CriterionReport {
        id,
        name: name.into(),
        checks,
        seconds,
        time_limit,
        error,
        pass,
    }
}

fn determinant_identity(g: &mut SeededRng) -> Result<Vec<Check>> {
    let mut worst: f64 = 0.0;
    for s in 0..50 {
        let p = [2, 4, 6, 8][s % 4];
        let v = rng::verblunsky(g, p, 0.6);
        let z = rng::annulus_point(g, 0.5, 1.5);
        let h = rng::annulus_point(g, 0.5, 1.5);
        let e = floquet_loop(&v).eval(h)?;
        let lhs = (CMat::identity(p, p) * z - e).determinant();
        let rhs = v.rho_product() * z.powi(p as i32 / 2) * (discriminant(&v, z)? - h - h.inv());
        worst = worst.max((lhs - rhs).norm() / lhs.norm().max(1.0));
    }
    Ok(vec![Check::new("relative gap", worst, 1e-10)])
}

fn power_structure(g: &mut SeededRng) -> Result<Vec<Check>> {
    let mut off: f64 = 0.0;
    let mut trace: f64 = 0.0;
    for _ in 0..20 {
        let v = rng::verblunsky(g, 6, 0.6);
        for n in 1..=2 {
            let (_, a1, am1) = floquet_power(&v, n)?;
            for i in 0..6 {
                for j in 0..6 {
                    if i >= j {
                        off = off.max(a1[(i, j)].norm());
                    }
                    if i <= j {
                        off = off.max(am1[(i, j)].norm());
                    }
                }
            }
        }
        let (_, a1, am1) = floquet_power(&v, 3)?;
        let want = 3.0 * v.rho_product();
        trace = trace.max((a1.trace() - want).norm()).max((am1.trace() - want).norm());
    }
    Ok(vec![
        Check::new("off-pattern", off, 1e-12),
        Check::new("trace identity", trace, 1e-10),
    ])
}

fn bracket_ground_truth(g: &mut SeededRng) -> Result<Vec<Check>> {
    let mut k1: f64 = 0.0;
    let mut logp: f64 = 0.0;
    for s in 0..50 {
        let p = [2, 4, 6, 8][s % 4];
        let v = rng::verblunsky(g, p, 0.6);
        let fk = hamiltonian_field(&Observable::k(p, 1, true), &v)?;
        let fl = hamiltonian_field(&Observable::log_p(p), &v)?;
        for j in 0..p {
            let jj = j as i64;
            let want = c(0.0, v.rho(jj).powi(2)) * (v.alpha(jj - 1) + v.alpha(jj + 1));
            k1 = k1.max((fk[j] - want).norm());
            logp = logp.max((fl[j] - c(0.0, 1.0) * v.alpha(jj)).norm());
        }
    }
    Ok(vec![
        Check::new("Re K_1 field", k1, 1e-12),
        Check::new("log P field", logp, 1e-12),
    ])
}

fn involution(g: &mut SeededRng) -> Result<Vec<Check>> {
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let v = rng::verblunsky(g, 4, 0.6);
        worst = worst.max(involution_check(&v, 1e-8)?.max_abs);
    }
    Ok(vec![Check::new("max |{A,B}|", worst, 1e-8)])
}

fn sklyanin_agreement(g: &mut SeededRng) -> Result<Vec<Check>> {
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let v = rng::verblunsky(g, 4, 0.6);
        for a in 0..4 {
            for b in 0..4 {
                let t = sklyanin_coordinate_brackets(&v, a, b)?;
                // α = G − iF with F = −Im α, G = Re α.
                let (ff, fg, gf, gg) = (t[0][0], t[0][1], t[1][0], t[1][1]);
                let alpha_alphabar = gg + c(0.0, 1.0) * gf - c(0.0, 1.0) * fg + ff;
                let alpha_alpha = gg - c(0.0, 1.0) * gf - c(0.0, 1.0) * fg - ff;
                let want = if a == b { c(0.0, 2.0 * v.rho(a as i64).powi(2)) } else { c(0.0, 0.0) };
                worst = worst.max((alpha_alphabar - want).norm()).max(alpha_alpha.norm());
            }
        }
    }
    Ok(vec![Check::new("table vs 2i δ ρ²", worst, 1e-10)])
}

fn unitarity_residual(l: &LaurentMatrix, m: usize) -> f64 {
    let p = l.p();
    l.samples(m)
        .iter()
        .map(|e| (e * e.adjoint() - CMat::identity(p, p)).norm())
        .fold(0.0, f64::max)
}

fn conservation(g: &mut SeededRng) -> Result<Vec<Check>> {
    let v = rng::verblunsky(g, 4, 0.6);
    let spec = HamiltonianSpec::new(HamiltonianKind::ReK, 1);
    let traj = integrate_ode(&v, spec, 1.0, 1e-3)?;
    let drift = traj.max_drift();
    let e0 = floquet_loop(&v);
    let e1 = floquet_loop(traj.final_state());
    let mut moved: f64 = 0.0;
    for h in [c(1.0, 0.0), c(0.0, 1.0)] {
        moved = moved.max(multiset_distance(&eigenvalues(&e0.eval(h)?)?, &eigenvalues(&e1.eval(h)?)?));
    }
    Ok(vec![
        Check::new("P drift", drift.p, 1e-8),
        Check::new("I drift", drift.i_max, 1e-8),
        Check::new("unitarity", unitarity_residual(&e1, 32), 1e-9),
        Check::new("eigenvalue motion", moved, 1e-7),
    ])
}

fn lax_consistency(g: &mut SeededRng) -> Result<Vec<Check>> {
    let dt = 1e-6;
    let specs = [
        HamiltonianSpec::new(HamiltonianKind::ReK, 1),
        HamiltonianSpec::new(HamiltonianKind::ImK, 1),
        HamiltonianSpec::new(HamiltonianKind::ReK, 2),
        HamiltonianSpec::new(HamiltonianKind::ImK, 2),
    ];
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let v = rng::verblunsky(g, 4, 0.6);
        for spec in specs {
            let obs = spec.observable(4)?;
            let fwd = floquet_loop(&rk4_step(&obs, &v, dt)?);
            let back = floquet_loop(&rk4_step(&obs, &v, -dt)?);
            let rhs = lax_rhs(&v, spec)?;
            for h in [c(1.0, 0.0), c(0.0, 1.0)] {
                let fd = (fwd.eval(h)? - back.eval(h)?) / c(2.0 * dt, 0.0);
                worst = worst.max(max_entry(&(fd - rhs.eval(h)?)));
            }
        }
    }
    Ok(vec![Check::new("dE/dt vs Lax", worst, 1e-5)])
}

fn exact_p_flow(g: &mut SeededRng) -> Result<Vec<Check>> {
    let mut worst: f64 = 0.0;
    for p in [2, 4, 6, 8] {
        let v = rng::verblunsky(g, p, 0.6);
        let traj = integrate_ode(&v, HamiltonianSpec::new(HamiltonianKind::P, 0), 1.0, 1e-3)?;
        worst = worst.max(traj.final_state().distance(&p_flow_exact(&v, 1.0)));
    }
    Ok(vec![Check::new("ODE vs closed form", worst, 1e-10)])
}

fn factorization_route(g: &mut SeededRng) -> Result<Vec<Check>> {
    let mut gap: f64 = 0.0;
    let mut spectral: f64 = 0.0;
    let mut h_dep: f64 = 0.0;
    for p in [2, 4] {
        let v = rng::verblunsky(g, p, 0.6);
        for kind in [HamiltonianKind::ReI, HamiltonianKind::ImI] {
            for n in 0..p / 2 {
                let spec = HamiltonianSpec::new(kind, n);
                let f = flow_by_factorization(&v, spec, 0.05, 64, 1e-10)?;
                let ode = integrate_ode(&v, spec, 0.05, 1e-4)?;
                gap = gap.max(f.state.distance(ode.final_state()));
                spectral = spectral.max(f.spectral_residual);
                h_dep = h_dep.max(f.ge_h_dependence);
            }
        }
    }
    Ok(vec![
        Check::new("endpoint gap", gap, 1e-6),
        Check::new("spectral residual", spectral, 1e-8),
        Check::new("g^e(t) h-dependence", h_dep, 1e-7),
    ])
}

/// A random loop `A_0 + h A_1` near the identity.
pub fn random_dressing_loop(g: &mut SeededRng, p: usize) -> Result<LaurentMatrix> {
    let a0 = CMat::identity(p, p) + rng::matrix(g, p, 0.2);
    let a1 = rng::matrix(g, p, 0.2);
    LaurentMatrix::from_coeffs(p, [(0, a0), (1, a1)])
}

/// Dressing residuals of one trial: `(recognition residual, line gap)`.
pub fn dressing_trial(loop_g: &LaurentMatrix) -> Result<(f64, f64)> {
    let x = coxeter_element(loop_g.p())?.assembled;
    let r = dressing_action(loop_g, &x, 64, 1e-10)?;
    let recog = match fit_floquet(&r.k_line) {
        Some((_, res)) => res,
        None => f64::INFINITY,
    };
    Ok((recog, r.line_gap))
}

fn dressing_orbit(g: &mut SeededRng) -> Result<Vec<Check>> {
    let mut recog: f64 = 0.0;
    let mut gap: f64 = 0.0;
    for _ in 0..20 {
        let loop_g = random_dressing_loop(g, 4)?;
        let (r, l) = dressing_trial(&loop_g)?;
        recog = recog.max(r);
        gap = gap.max(l);
    }
    Ok(vec![
        Check::new("recognition residual", recog, 1e-7),
        Check::new("k-line vs b-line", gap, 1e-8),
    ])
}

fn curve_suite(g: &mut SeededRng) -> Result<Vec<Check>> {
    let mut mono: f64 = 0.0;
    let mut product: f64 = 0.0;
    let mut routes: f64 = 0.0;
    let mut bloch: f64 = 0.0;
    let mut slope: f64 = 0.0;
    let mut constant: f64 = 0.0;
    for p in [2, 4, 6, 8] {
        let v = rng::generic_verblunsky(g, p, 0.2, 0.6);
        for _ in 0..20 {
            let z = rng::annulus_point(g, 0.3, 3.0);
            let m = monodromy(&v, z)?;
            mono = mono
                .max((m.determinant() - 1.0).norm())
                .max((m.trace() - discriminant(&v, z)?).norm());
        }
        let dd = dirichlet_data(&v)?;
        let prod: Complex64 = dd.z.iter().product();
        let pi = p as i64;
        product = product.max((prod + v.alpha(pi - 1) / v.alpha(pi - 2)).norm());
        routes = routes.max(dd.route_gap);
        let e = floquet_loop(&v);
        let mut tried = 0;
        while tried < 10 {
            let z = rng::annulus_point(g, 0.3, 3.0);
            let Ok((hp, hm)) = h_branches(&v, z) else { continue };
            tried += 1;
            for h in [hp, hm] {
                let f = nalgebra::DVector::from_vec(bloch_vector(&v, h, z)?);
                let res = (e.eval(h)? * &f - &f * z).norm() / f.norm();
                bloch = bloch.max(res);
            }
        }
        let report = asymptotic_orders(&v)?;
        for entry in &report.entries {
            slope = slope.max((entry.measured_slope - entry.expected_order as f64).abs());
            let want = crate::json::unpair(entry.expected_constant);
            let got = crate::json::unpair(entry.measured_constant);
            constant = constant.max((got - want).norm() / want.norm());
        }
    }
    Ok(vec![
        Check::new("det M, tr M", mono, 1e-10),
        Check::new("Dirichlet product", product, 1e-8),
        Check::new("Dirichlet routes", routes, 1e-7),
        Check::new("Bloch residual", bloch, 1e-7),
        Check::new("asymptotic slope", slope, 0.05),
        Check::new("asymptotic constant (relative)", constant, 0.01),
    ])
}

/// A random analytic loop `c_0 + h c_1 + h² c_2` with `c_0` lower triangular,
/// positive on the diagonal, and `‖c_1‖ + ‖c_2‖` small against `c_0`.
pub fn planted_analytic_loop(g: &mut SeededRng, p: usize) -> Result<LaurentMatrix> {
    let mut c0 = rng::matrix(g, p, 0.3);
    for i in 0..p {
        c0[(i, i)] = c(1.0 + rng::uniform(g, 0.0, 0.5), 0.0);
        for j in i + 1..p {
            c0[(i, j)] = c(0.0, 0.0);
        }
    }
    let c1 = rng::matrix(g, p, 0.1);
    let c2 = rng::matrix(g, p, 0.05);
    LaurentMatrix::from_coeffs(p, [(0, c0), (1, c1), (2, c2)])
}

fn plant_and_recover(g: &mut SeededRng) -> Result<Vec<Check>> {
    let mut spectral: f64 = 0.0;
    let mut iwasawa: f64 = 0.0;
    for s in 0..10 {
        let p = [2, 4][s % 2];
        let plant = planted_analytic_loop(g, p)?;
        let f = spectral_factorize(&(&plant * &plant.star()), 64, 1e-10)?;
        spectral = spectral.max(f.b.distance(&plant));
    }
    for s in 0..10 {
        let p = [2, 4][s % 2];
        let b = planted_analytic_loop(g, p)?;
        let k = floquet_loop(&rng::verblunsky(g, p, 0.6));
        let f = iwasawa_factorize(&(&k * &b), 64, 1e-10)?;
        iwasawa = iwasawa.max(f.b.distance(&b)).max(f.k.circle_distance(&k, 128));
    }
    Ok(vec![
        Check::new("spectral plant", spectral, 1e-8),
        Check::new("Iwasawa plant", iwasawa, 1e-8),
    ])
}

/// Runs criterion `id` (1 to 12) with data drawn from `seed`.
pub fn run_criterion(id: u32, seed: u64) -> Option<CriterionReport> {
    type Body = fn(&mut SeededRng) -> Result<Vec<Check>>;
    let (name, limit, body): (&str, Option<f64>, Body) = match id {
        1 => ("determinant identity", Some(1.0), determinant_identity),
        2 => ("power structure", None, power_structure),
        3 => ("bracket ground truth", None, bracket_ground_truth),
        4 => ("involution", Some(30.0), involution),
        5 => ("Sklyanin and AL brackets agree", None, sklyanin_agreement),
        6 => ("conservation under flow", Some(10.0), conservation),
        7 => ("Lax consistency", None, lax_consistency),
        8 => ("exact P flow", None, exact_p_flow),
        9 => ("factorization route", Some(60.0), factorization_route),
        10 => ("dressing orbit", None, dressing_orbit),
        11 => ("spectral curve", None, curve_suite),
        12 => ("plant and recover", None, plant_and_recover),
        _ => return None,
    };
    let mut g = criterion_rng(seed, id);
    let start = Instant::now();
    let out = body(&mut g);
    Some(finish(id, name, limit, start, out))
}

/// Runs every criterion in order.
pub fn run_all(seed: u64) -> SuiteReport {
    let criteria: Vec<CriterionReport> = (1..=CRITERIA).filter_map(|id| run_criterion(id, seed)).collect();
    let pass = criteria.iter().all(|c| c.pass);
    SuiteReport { seed, criteria, pass }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reports_are_deterministic() {
        let a = run_criterion(3, 11).unwrap();
        let b = run_criterion(3, 11).unwrap();
        assert_eq!(a.checks[0].value, b.checks[0].value);
        assert!(a.pass);
        assert!(run_criterion(13, 11).is_none());
    }

    #[test]
    fn line_format() {
        let r = run_criterion(8, 1).unwrap();
        assert!(r.line().starts_with("PASS criterion  8 exact P flow: ODE vs closed form"));
        let failing = finish(
            1,
            "x",
            Some(1.0),
            Instant::now(),
            Ok(vec![Check::new("v", f64::NAN, 1.0)]),
        );
        assert!(!failing.pass);
        assert!(failing.line().starts_with("FAIL"));
    }

    #[test]
    fn unit_circle_samples_are_unitary() {
        let v = rng::verblunsky(&mut rng::seeded(5), 4, 0.6);
        assert!(unitarity_residual(&floquet_loop(&v), 16) < 1e-13);
    }
}
