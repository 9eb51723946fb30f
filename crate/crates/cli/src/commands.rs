//! Dispatch from a validated configuration to the library.

use cmvflows::cmv::{coxeter_element, fit_floquet, floquet_loop, VerblunskyVector};
use cmvflows::conserved::invariants;
use cmvflows::curve::spectral_curve;
use cmvflows::flows::{dressing_action, flow_by_factorization, integrate_ode, Trajectory};
use cmvflows::laurent::CMat;
use cmvflows::poisson::{involution_check, sklyanin_coordinate_brackets, InvolutionReport};
use cmvflows::suite::{self, run_all};
use cmvflows::{json, rng, Error};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Command, ExperimentConfig};
use crate::error::{AtStage, CliError};

/// Number of seeded trials in `orbit-check`.
pub const ORBIT_TRIALS: u64 = 20;

/// Largest recognition residual accepted by `orbit-check`.
pub const ORBIT_RECOGNITION_TOL: f64 = 1e-7;

/// Largest gap between the two dressing evaluations accepted by `orbit-check`.
pub const ORBIT_LINE_TOL: f64 = 1e-8;

/// Largest Sklyanin-table deviation accepted by `bracket-check`.
pub const SKLYANIN_TOL: f64 = 1e-10;

/// Dirichlet points closer than this are reported as a collision.
pub const DIRICHLET_COLLISION_TOL: f64 = 1e-6;

/// What a command produced.
#[derive(Debug)]
pub struct Emit {
    /// Main result, written to the output path or standard output.
    pub body: String,
    /// Secondary summary, written to standard output when the body goes to a
    /// file and to standard error otherwise.
    pub side: Option<String>,
    /// Lines for standard error.
    pub log: Vec<String>,
    /// Failure to report after the outputs were written.
    pub failure: Option<CliError>,
}

impl Emit {
    fn body(body: String) -> Self {
        Emit {
            body,
            side: None,
            log: Vec::new(),
            failure: None,
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

/// Runs `command` on `config`; `seed` overrides the configured seed.
pub fn run(command: Command, config: &ExperimentConfig, seed: Option<u64>) -> Result<Emit, CliError> {
    let v = config.validate(command)?;
    let seed = seed.unwrap_or(config.seed);
    match command {
        Command::Simulate => simulate(config, &v),
        Command::Invariants => Ok(Emit::body(to_json(&invariants(&v)))),
        Command::Curve => curve(&v),
        Command::OrbitCheck => orbit_check(config, v.p(), seed),
        Command::BracketCheck => bracket_check(&v),
        Command::FactorFlow => factor_flow(config, &v),
        Command::Verify => Ok(verify(seed)),
    }
}

fn curve(v: &VerblunskyVector) -> Result<Emit, CliError> {
    let data = spectral_curve(v).at("curve")?;
    let mut emit = Emit::body(to_json(&data));
    emit.log = collision_warnings(&data.dirichlet);
    Ok(emit)
}

/// One warning per pair of points closer than [`DIRICHLET_COLLISION_TOL`].
fn collision_warnings(z: &[Complex64]) -> Vec<String> {
    let mut out = Vec::new();
    for (i, a) in z.iter().enumerate() {
        for b in &z[i + 1..] {
            if (a - b).norm() < DIRICHLET_COLLISION_TOL {
                out.push(format!(
                    "warning: Dirichlet points {a} and {b} coincide within {DIRICHLET_COLLISION_TOL:e}"
                ));
            }
        }
    }
    out
}

#[derive(Serialize)]
struct DriftSummary {
    #[serde(rename = "P")]
    p: f64,
    #[serde(rename = "I")]
    i: f64,
    #[serde(rename = "K")]
    k: f64,
}

#[derive(Serialize)]
struct SimulateSummary {
    hamiltonian: cmvflows::flows::HamiltonianSpec,
    t_end: f64,
    steps: usize,
    #[serde(rename = "final")]
    final_state: VerblunskyVector,
    max_drift: DriftSummary,
    max_unitarity_residual: f64,
}

fn unitarity(traj: &Trajectory, m: usize) -> f64 {
    traj.states
        .iter()
        .map(|s| {
            let p = s.p();
            floquet_loop(s)
                .samples(m)
                .iter()
                .map(|e| (e * e.adjoint() - CMat::identity(p, p)).norm())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

fn simulate(config: &ExperimentConfig, v: &VerblunskyVector) -> Result<Emit, CliError> {
    let fp = config.flow_params(v.p())?;
    let (traj, failure) = match integrate_ode(v, fp.spec, fp.t_end, fp.dt) {
        Ok(traj) => (traj, None),
        Err(Error::BoundaryApproach { t, max_modulus, partial }) => {
            let err = Error::BoundaryApproach {
                t,
                max_modulus,
                partial: partial.clone(),
            };
            (*partial, Some(CliError::Numerical { stage: "ode", source: err }))
        }
        Err(e) => return Err(CliError::Numerical { stage: "ode", source: e }),
    };
    let d = traj.max_drift();
    let summary = SimulateSummary {
        hamiltonian: fp.spec,
        t_end: *traj.times.last().expect("nonempty"),
        steps: traj.times.len() - 1,
        final_state: traj.final_state().clone(),
        max_drift: DriftSummary {
            p: d.p,
            i: d.i_max,
            k: d.k_max,
        },
        max_unitarity_residual: unitarity(&traj, config.h_samples),
    };
    Ok(Emit {
        body: traj.to_csv(),
        side: Some(to_json(&summary)),
        log: Vec::new(),
        failure,
    })
}

#[derive(Serialize)]
struct OrbitTrial {
    trial: u64,
    recognition_residual: f64,
    line_gap: f64,
    pass: bool,
}

#[derive(Serialize)]
struct OrbitReport {
    p: usize,
    seed: u64,
    trials: Vec<OrbitTrial>,
    max_recognition_residual: f64,
    max_line_gap: f64,
    pass: bool,
}

fn orbit_check(config: &ExperimentConfig, p: usize, seed: u64) -> Result<Emit, CliError> {
    let x = coxeter_element(p).at("coxeter element")?.assembled;
    let trials = (0..ORBIT_TRIALS)
        .into_par_iter()
        .map(|trial| {
            let mut g = rng::seeded(seed.wrapping_add(trial));
            let loop_g = suite::random_dressing_loop(&mut g, p).at("random loop")?;
            let r = dressing_action(&loop_g, &x, config.truncation, config.tolerance).at("dressing action")?;
            let recognition_residual = fit_floquet(&r.k_line).map_or(f64::INFINITY, |(_, res)| res);
            Ok(OrbitTrial {
                trial,
                recognition_residual,
                line_gap: r.line_gap,
                pass: recognition_residual < ORBIT_RECOGNITION_TOL && r.line_gap < ORBIT_LINE_TOL,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let report = OrbitReport {
        p,
        seed,
        max_recognition_residual: trials.iter().map(|t| t.recognition_residual).fold(0.0, f64::max),
        max_line_gap: trials.iter().map(|t| t.line_gap).fold(0.0, f64::max),
        pass: trials.iter().all(|t| t.pass),
        trials,
    };
    Ok(Emit::body(to_json(&report)))
}

#[derive(Serialize)]
struct SklyaninEntry {
    a: usize,
    b: usize,
    /// `[[{F_a,F_b}, {F_a,G_b}], [{G_a,F_b}, {G_a,G_b}]]` as `[re, im]` pairs.
    table: [[[f64; 2]; 2]; 2],
    deviation: f64,
}

#[derive(Serialize)]
struct BracketReport {
    involution: InvolutionReport,
    sklyanin: Vec<SklyaninEntry>,
    sklyanin_max_deviation: f64,
    sklyanin_tol: f64,
    pass: bool,
}

fn sklyanin_entry(v: &VerblunskyVector, a: usize, b: usize) -> cmvflows::Result<SklyaninEntry> {
    let t = sklyanin_coordinate_brackets(v, a, b)?;
    let i = Complex64::new(0.0, 1.0);
    let (ff, fg, gf, gg) = (t[0][0], t[0][1], t[1][0], t[1][1]);
    let alpha_alphabar = gg + i * gf - i * fg + ff;
    let alpha_alpha = gg - i * gf - i * fg - ff;
    let want = if a == b {
        Complex64::new(0.0, 2.0 * v.rho(a as i64).powi(2))
    } else {
        Complex64::new(0.0, 0.0)
    };
    Ok(SklyaninEntry {
        a,
        b,
        table: t.map(|row| row.map(json::pair)),
        deviation: (alpha_alphabar - want).norm().max(alpha_alpha.norm()),
    })
}

fn bracket_check(v: &VerblunskyVector) -> Result<Emit, CliError> {
    let p = v.p();
    let involution = involution_check(v, 1e-8).at("involution")?;
    let sklyanin = (0..p * p)
        .into_par_iter()
        .map(|k| sklyanin_entry(v, k / p, k % p))
        .collect::<cmvflows::Result<Vec<_>>>()
        .at("sklyanin bracket")?;
    let sklyanin_max_deviation = sklyanin.iter().map(|e| e.deviation).fold(0.0, f64::max);
    let pass = involution.pass && sklyanin_max_deviation < SKLYANIN_TOL;
    Ok(Emit::body(to_json(&BracketReport {
        involution,
        sklyanin,
        sklyanin_max_deviation,
        sklyanin_tol: SKLYANIN_TOL,
        pass,
    })))
}

#[derive(Serialize)]
struct FactorFlowComparison {
    hamiltonian: cmvflows::flows::HamiltonianSpec,
    t_end: f64,
    factorization: VerblunskyVector,
    ode: VerblunskyVector,
    max_component_gap: f64,
    spectral_residual: f64,
    ge_h_dependence: f64,
    recognition_residual: f64,
    steps: usize,
}

fn factor_flow(config: &ExperimentConfig, v: &VerblunskyVector) -> Result<Emit, CliError> {
    let fp = config.flow_params(v.p())?;
    let f = flow_by_factorization(v, fp.spec, fp.t_end, config.truncation, config.tolerance)
        .at("factorization route")?;
    let ode = integrate_ode(v, fp.spec, fp.t_end, fp.dt).at("ode route")?;
    Ok(Emit::body(to_json(&FactorFlowComparison {
        hamiltonian: fp.spec,
        t_end: fp.t_end,
        max_component_gap: f.state.distance(ode.final_state()),
        factorization: f.state,
        ode: ode.final_state().clone(),
        spectral_residual: f.spectral_residual,
        ge_h_dependence: f.ge_h_dependence,
        recognition_residual: f.recognition_residual,
        steps: f.steps,
    })))
}

fn verify(seed: u64) -> Emit {
    let report = run_all(seed);
    let log = report.criteria.iter().map(|c| c.line()).collect();
    let failure = (!report.pass).then(|| {
        let failed: Vec<String> = report
            .criteria
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.id.to_string())
            .collect();
        CliError::Verification(format!("criteria {} failed", failed.join(", ")))
    });
    Emit {
        body: to_json(&report),
        side: None,
        log,
        failure,
    }
}
