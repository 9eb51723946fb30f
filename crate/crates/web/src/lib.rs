//! Browser demo: three operations of the library exposed through
//! `wasm-bindgen` for the static page in `www/`.
//!
//! Coefficients cross the boundary as flat `[re_0, im_0, re_1, im_1, …]`
//! arrays and results come back as JSON strings. The `*_json` functions hold
//! the logic and run natively; the exported wrappers only convert errors.

use cmvflows::cmv::VerblunskyVector;
use cmvflows::conserved::invariants;
use cmvflows::curve::{branch_points, dirichlet_data};
use cmvflows::flows::{integrate_ode, HamiltonianKind, HamiltonianSpec};
use cmvflows::json;
use num_complex::Complex64;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest number of samples returned by [`flow_json`].
pub const MAX_FLOW_SAMPLES: usize = 2000;

fn parse_alpha(flat: &[f64]) -> Result<VerblunskyVector, String> {
    if flat.len() % 2 != 0 {
        return Err("coefficients must come as re/im pairs".into());
    }
    let alpha = flat
        .chunks_exact(2)
        .map(|c| Complex64::new(c[0], c[1]))
        .collect();
    VerblunskyVector::new(alpha).map_err(|e| e.to_string())
}

fn parse_kind(kind: &str) -> Result<HamiltonianKind, String> {
    serde_json::from_value(serde_json::Value::String(kind.into()))
        .map_err(|_| format!("unknown Hamiltonian {kind:?}"))
}

#[derive(Serialize)]
struct CurveView {
    branch: Vec<[f64; 2]>,
    dirichlet: Vec<[f64; 2]>,
    generic: bool,
    note: Option<String>,
}

/// Branch points and, when every `α_j ≠ 0`, Dirichlet points.
pub fn curve_json(flat: &[f64]) -> Result<String, String> {
    let v = parse_alpha(flat)?;
    let bp = branch_points(&v).map_err(|e| e.to_string())?;
    let (dirichlet, note) = match dirichlet_data(&v) {
        Ok(d) => (json::pairs(&d.z), None),
        Err(e) => (Vec::new(), Some(e.to_string())),
    };
    serde_json::to_string(&CurveView {
        branch: json::pairs(&bp.points),
        dirichlet,
        generic: bp.distinct,
        note,
    })
    .map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct FlowView {
    times: Vec<f64>,
    /// `alpha[j]` is the path of `α_j`.
    alpha: Vec<Vec<[f64; 2]>>,
    max_drift_p: f64,
    max_drift_i: f64,
}

/// Trajectory of the flow of `kind` with index `n`, thinned to at most
/// [`MAX_FLOW_SAMPLES`] samples.
pub fn flow_json(flat: &[f64], kind: &str, n: usize, t_end: f64, dt: f64) -> Result<String, String> {
    let v = parse_alpha(flat)?;
    let spec = HamiltonianSpec::new(parse_kind(kind)?, n);
    spec.validate(v.p()).map_err(|e| e.to_string())?;
    if t_end / dt > 1e5 {
        return Err("at most 100000 steps".into());
    }
    let traj = integrate_ode(&v, spec, t_end, dt).map_err(|e| e.to_string())?;
    let stride = traj.times.len().div_ceil(MAX_FLOW_SAMPLES).max(1);
    let keep: Vec<usize> = (0..traj.times.len()).step_by(stride).collect();
    let d = traj.max_drift();
    serde_json::to_string(&FlowView {
        times: keep.iter().map(|&i| traj.times[i]).collect(),
        alpha: (0..v.p())
            .map(|j| keep.iter().map(|&i| json::pair(traj.states[i].as_slice()[j])).collect())
            .collect(),
        max_drift_p: d.p,
        max_drift_i: d.i_max,
    })
    .map_err(|e| e.to_string())
}

/// The conserved quantities as `{"P", "I", "K"}`.
pub fn invariants_json(flat: &[f64]) -> Result<String, String> {
    let v = parse_alpha(flat)?;
    serde_json::to_string(&invariants(&v)).map_err(|e| e.to_string())
}

/// Branch points and Dirichlet points of the spectral curve.
#[wasm_bindgen]
pub fn curve(alpha: &[f64]) -> Result<String, JsValue> {
    curve_json(alpha).map_err(|e| JsValue::from_str(&e))
}

/// Sampled trajectory of a Hamiltonian flow.
#[wasm_bindgen]
pub fn flow(alpha: &[f64], kind: &str, n: usize, t_end: f64, dt: f64) -> Result<String, JsValue> {
    flow_json(alpha, kind, n, t_end, dt).map_err(|e| JsValue::from_str(&e))
}

/// Conserved quantities `P`, `I_j`, `K_n`.
#[wasm_bindgen(js_name = conserved)]
pub fn conserved_quantities(alpha: &[f64]) -> Result<String, JsValue> {
    invariants_json(alpha).map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_view_of_generic_data() {
        let out: serde_json::Value =
            serde_json::from_str(&curve_json(&[0.3, 0.1, -0.2, 0.4, 0.5, -0.1, 0.1, 0.25]).unwrap()).unwrap();
        assert_eq!(out["branch"].as_array().unwrap().len(), 8);
        assert_eq!(out["dirichlet"].as_array().unwrap().len(), 3);
        assert!(out["note"].is_null());
    }

    #[test]
    fn curve_view_without_dirichlet_points() {
        let out: serde_json::Value = serde_json::from_str(&curve_json(&[0.0, 0.0, 0.3, 0.0]).unwrap()).unwrap();
        assert_eq!(out["dirichlet"].as_array().unwrap().len(), 0);
        assert!(out["note"].as_str().unwrap().contains("non-generic"));
    }

    #[test]
    fn flow_view_is_thinned_and_conservative() {
        let out: serde_json::Value =
            serde_json::from_str(&flow_json(&[0.3, 0.1, -0.2, 0.4], "AL", 0, 5.0, 1e-3).unwrap()).unwrap();
        assert!(out["times"].as_array().unwrap().len() <= MAX_FLOW_SAMPLES + 1);
        assert_eq!(out["alpha"].as_array().unwrap().len(), 2);
        assert!(out["max_drift_i"].as_f64().unwrap() < 1e-8);
    }

    #[test]
    fn bad_input_is_reported() {
        assert!(curve_json(&[0.3]).is_err());
        assert!(curve_json(&[1.5, 0.0, 0.0, 0.0]).is_err());
        assert!(flow_json(&[0.1, 0.0, 0.0, 0.0], "Nope", 0, 1.0, 0.1).is_err());
        assert!(flow_json(&[0.1, 0.0, 0.0, 0.0], "ReK", 5, 1.0, 0.1).is_err());
        assert!(invariants_json(&[0.0, 0.0, 0.0, 0.0]).unwrap().starts_with("{\"P\":1.0"));
    }
}
