//! JSON report written by every subcommand.

use std::collections::BTreeMap;

use confgeom::classify::ClassificationResult;
use confgeom::invariants::{identity_residuals, ConformalData};
use confgeom::pseudolinalg::Matrix;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: &str = "1.0.0";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: String,
    pub tool: Tool,
    pub command: String,
    pub input: Option<InputEcho>,
    pub points: Vec<PointReport>,
    pub classification: Option<ClassReport>,
    pub residuals: Vec<ResidualRow>,
    pub catalog: Vec<CatalogRow>,
    /// `None` when the command performs no pass/fail check.
    pub passed: Option<bool>,
    pub timing_ms: f64,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.to_string(),
            tool: Tool { name: "confgeom".into(), version: env!("CARGO_PKG_VERSION").into() },
            command: command.into(),
            input: None,
            points: Vec::new(),
            classification: None,
            residuals: Vec::new(),
            catalog: Vec::new(),
            passed: None,
            timing_ms: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tool {
    pub name: String,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputEcho {
    pub surface: Option<String>,
    pub file: Option<String>,
    pub params: BTreeMap<String, f64>,
    pub dsl: String,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointReport {
    pub point: Vec<f64>,
    pub tau: f64,
    pub metric: Vec<Vec<f64>>,
    pub blaschke: Vec<Vec<f64>>,
    pub second_form: Vec<Vec<f64>>,
    pub conformal_form: Vec<f64>,
    pub rho: f64,
    pub second_form_eigenvalues: Vec<f64>,
    pub blaschke_eigenvalues: Vec<f64>,
    pub identities: BTreeMap<String, f64>,
}

fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl From<&ConformalData> for PointReport {
    fn from(cd: &ConformalData) -> Self {
        let ids = identity_residuals(cd);
        Self {
            point: cd.point.clone(),
            tau: cd.tau,
            metric: rows(&cd.metric),
            blaschke: rows(&cd.blaschke),
            second_form: rows(&cd.second_form),
            conformal_form: cd.conformal_form.iter().copied().collect(),
            rho: cd.rho,
            second_form_eigenvalues: cd.second_form_eigenvalues(),
            blaschke_eigenvalues: cd.blaschke_eigenvalues(),
            identities: ids.named().iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub samples: usize,
    pub verdict: String,
    pub regular: bool,
    pub degeneracy: Option<String>,
    pub conformal: bool,
    pub para_umbilical: bool,
    pub max_conformal_form: Option<f64>,
    pub lambda: Option<f64>,
    pub lambda_stddev: Option<f64>,
    pub mu: Option<f64>,
    pub mu_stddev: Option<f64>,
    pub fit_residual: Option<f64>,
    pub c_vector: Option<Vec<f64>>,
    pub c_norm: Option<f64>,
    pub c_residuals: BTreeMap<String, f64>,
    pub space_form_case: Option<String>,
}

impl From<&ClassificationResult> for ClassReport {
    fn from(r: &ClassificationResult) -> Self {
        let fit = r.fit.as_ref();
        let mut c_residuals = BTreeMap::new();
        if let Some(c) = &r.c {
            c_residuals.insert("constancy".into(), c.constancy_residual);
            c_residuals.insert("y".into(), c.y_residual);
            c_residuals.insert("xi".into(), c.xi_residual);
            c_residuals.insert("xi_squared".into(), c.xi_residual_squared);
            c_residuals.insert("norm".into(), c.norm_residual);
        }
        Self {
            samples: r.samples,
            verdict: r.verdict().into(),
            regular: r.regular,
            degeneracy: r.degeneracy.clone(),
            conformal: r.conformal,
            para_umbilical: r.para_umbilical,
            max_conformal_form: r.max_conformal_form,
            lambda: fit.map(|f| f.lambda),
            lambda_stddev: fit.map(|f| f.lambda_stddev),
            mu: fit.map(|f| f.mu),
            mu_stddev: fit.map(|f| f.mu_stddev),
            fit_residual: fit.map(|f| f.max_residual),
            c_vector: r.c.as_ref().map(|c| c.c_vec.iter().copied().collect()),
            c_norm: r.c_norm(),
            c_residuals,
            space_form_case: r.space_form_case.map(|c| c.name().to_string()),
        }
    }
}

/// How a residual is compared with its bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    /// Passes when `value < tolerance`.
    Below,
    /// Passes when `value >= tolerance`.
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualRow {
    pub suite: String,
    pub subject: String,
    pub name: String,
    /// `None` for a non-finite value.
    pub value: Option<f64>,
    pub tolerance: f64,
    pub bound: Bound,
    pub pass: bool,
}

impl ResidualRow {
    pub fn new(suite: &str, subject: &str, name: &str, value: f64, tolerance: f64, bound: Bound) -> Self {
        let pass = match bound {
            Bound::Below => value < tolerance,
            Bound::AtLeast => value >= tolerance,
        };
        Self {
            suite: suite.into(),
            subject: subject.into(),
            name: name.into(),
            value: value.is_finite().then_some(value),
            tolerance,
            bound,
            pass,
        }
    }

    /// A row recording a failure to compute anything at all.
    pub fn error(suite: &str, subject: &str, message: &str) -> Self {
        Self {
            suite: suite.into(),
            subject: subject.into(),
            name: format!("error: {message}"),
            value: None,
            tolerance: 0.0,
            bound: Bound::Below,
            pass: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogRow {
    pub name: String,
    pub family: String,
    pub description: String,
    pub constraint: String,
    pub defaults: BTreeMap<String, f64>,
    pub ambient: String,
    pub dsl: Option<String>,
}

/// Seventeen significant digits.
pub fn sig17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn sig17_list(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| sig17(*x)).collect();
    format!("[{}]", parts.join(", "))
}
