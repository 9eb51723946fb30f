//! Experiment configuration read from JSON.

use std::path::PathBuf;

use cmvflows::cmv::VerblunskyVector;
use cmvflows::flows::HamiltonianSpec;
use cmvflows::json;
use serde::Deserialize;

use crate::error::CliError;

/// Subcommands of the front-end.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Integrate the Hamiltonian ODE and write the trajectory as CSV.
    Simulate,
    /// Conserved quantities `P`, `I_j`, `K_n`.
    Invariants,
    /// Branch points, Dirichlet points and divisor.
    Curve,
    /// Seeded dressing-orbit trials of the Coxeter element.
    OrbitCheck,
    /// Involution and Sklyanin coordinate-bracket reports.
    BracketCheck,
    /// Factorization route against the ODE route.
    FactorFlow,
    /// The full property suite.
    Verify,
}

impl Command {
    /// Name as written on the command line.
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Invariants => "invariants",
            Command::Curve => "curve",
            Command::OrbitCheck => "orbit-check",
            Command::BracketCheck => "bracket-check",
            Command::FactorFlow => "factor-flow",
            Command::Verify => "verify",
        }
    }
}

fn default_h_samples() -> usize {
    64
}

fn default_truncation() -> usize {
    64
}

fn default_tolerance() -> f64 {
    1e-8
}

/// Contents of the `--config` file.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Period.
    pub p: usize,
    /// Verblunsky coefficients as `[re, im]` pairs.
    pub alpha: Vec<[f64; 2]>,
    /// Optional command; must match the command line when present.
    #[serde(default)]
    pub command: Option<Command>,
    /// Flow generator for `simulate` and `factor-flow`.
    #[serde(default)]
    pub hamiltonian: Option<HamiltonianSpec>,
    /// Final time.
    #[serde(default)]
    pub t_end: Option<f64>,
    /// ODE step.
    #[serde(default)]
    pub dt: Option<f64>,
    /// Circle samples for unitarity checks.
    #[serde(default = "default_h_samples")]
    pub h_samples: usize,
    /// Truncation order of the spectral factorization.
    #[serde(default = "default_truncation")]
    pub truncation: usize,
    /// Tolerance of the spectral factorization.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Seed for randomized checks.
    #[serde(default)]
    pub seed: u64,
    /// Output path; the `--output` flag takes precedence.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

/// Parameters needed by the flow commands.
#[derive(Clone, Copy, Debug)]
pub struct FlowParams {
    /// Generator.
    pub spec: HamiltonianSpec,
    /// Final time.
    pub t_end: f64,
    /// ODE step.
    pub dt: f64,
}

impl ExperimentConfig {
    /// Parses JSON text.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))
    }

    /// Validated Verblunsky vector.
    pub fn verblunsky(&self) -> Result<VerblunskyVector, CliError> {
        if self.alpha.len() != self.p {
            return Err(CliError::Config(format!(
                "alpha has {} entries but p = {}",
                self.alpha.len(),
                self.p
            )));
        }
        VerblunskyVector::new(json::unpairs(&self.alpha)).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Checks the fields every command needs and those specific to `command`.
    pub fn validate(&self, command: Command) -> Result<VerblunskyVector, CliError> {
        if let Some(c) = self.command {
            if c != command {
                return Err(CliError::Config(format!(
                    "config is for `{}` but `{}` was requested",
                    c.name(),
                    command.name()
                )));
            }
        }
        let v = self.verblunsky()?;
        if self.h_samples == 0 || self.truncation == 0 {
            return Err(CliError::Config("h_samples and truncation must be positive".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(CliError::Config(format!("tolerance {} must be positive", self.tolerance)));
        }
        if matches!(command, Command::Simulate | Command::FactorFlow) {
            self.flow_params(v.p())?;
        }
        Ok(v)
    }

    /// The flow parameters, validated.
    pub fn flow_params(&self, p: usize) -> Result<FlowParams, CliError> {
        let spec = self
            .hamiltonian
            .ok_or_else(|| CliError::Config("`hamiltonian` is required".into()))?;
        spec.validate(p).map_err(|e| CliError::Config(e.to_string()))?;
        let t_end = self.t_end.ok_or_else(|| CliError::Config("`t_end` is required".into()))?;
        let dt = self.dt.ok_or_else(|| CliError::Config("`dt` is required".into()))?;
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(CliError::Config(format!("dt = {dt} must be positive")));
        }
        if !(t_end >= 0.0) || !t_end.is_finite() {
            return Err(CliError::Config(format!("t_end = {t_end} must be finite and nonnegative")));
        }
        Ok(FlowParams { spec, t_end, dt })
    }
}
