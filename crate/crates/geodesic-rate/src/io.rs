//! File formats: the JSON solution record written by `solve` and read
//! back by `verify`, plus the CSV exports. All floats in CSV output go
//! through one deterministic 9-significant-digit formatter so repeated
//! runs are byte-identical.

use crate::domain::{PathProfile, TimeGrid, VerificationReport};
use crate::error::Error;
use crate::full::FullSolution;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

/// Errors from reading or writing artifact files.
#[derive(Debug)]
pub enum IoError {
    /// Underlying filesystem failure.
    Io(std::io::Error),
    /// File exists but does not parse as the expected schema.
    Parse(String),
    /// Parsed data violates a model invariant.
    Model(Error),
}

impl fmt::Display for IoError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IoError::Io(e) => write!(f, "i/o error: {e}"),
            IoError::Parse(m) => write!(f, "parse error: {m}"),
            IoError::Model(e) => write!(f, "invalid data: {e}"),
        }
    }
}

impl std::error::Error for IoError {}

impl From<std::io::Error> for IoError {
    fn from(e: std::io::Error) -> Self {
        IoError::Io(e)
    }
}

impl From<Error> for IoError {
    fn from(e: Error) -> Self {
        IoError::Model(e)
    }
}

/// Grid-sampled arrays of a solution: `t` and `F` at the `N + 1`
/// nodes, `rho` on the `N` cells, `g` at the nodes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridData {
    pub t: Vec<f64>,
    #[serde(rename = "F")]
    pub f: Vec<f64>,
    pub rho: Vec<f64>,
    pub g: Vec<f64>,
}

/// On-disk form of a [`FullSolution`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveRecord {
    pub a: f64,
    pub b_star: f64,
    #[serde(rename = "I1")]
    pub i1: f64,
    #[serde(rename = "I2")]
    pub i2: f64,
    #[serde(rename = "I_total")]
    pub i_total: f64,
    #[serde(rename = "t_B_est")]
    pub t_b_est: f64,
    #[serde(rename = "x_B_est")]
    pub x_b_est: f64,
    pub converged: bool,
    pub grid: GridData,
}

impl From<&FullSolution> for SolveRecord {
    fn from(sol: &FullSolution) -> Self {
        SolveRecord {
            a: sol.a,
            b_star: sol.b_star,
            i1: sol.i1,
            i2: sol.i2,
            i_total: sol.i_total,
            t_b_est: sol.t_b_est,
            x_b_est: sol.x_b_est,
            converged: sol.report.converged,
            grid: GridData {
                t: sol.profile.grid().nodes().to_vec(),
                f: sol.profile.f().to_vec(),
                rho: sol.profile.rho().to_vec(),
                g: sol.g_full.clone(),
            },
        }
    }
}

impl SolveRecord {
    /// Rebuild the profile, checking that `t` is a uniform grid and
    /// the array lengths are consistent.
    pub fn to_profile(&self) -> Result<PathProfile, IoError> {
        let t = &self.grid.t;
        if t.len() < 2 {
            return Err(IoError::Parse("grid needs at least two nodes".into()));
        }
        let n = t.len() - 1;
        let grid = TimeGrid::uniform(t[0], t[n], n)?;
        let dt = grid.dt();
        for (k, &tk) in t.iter().enumerate() {
            if (tk - grid.node(k)).abs() > 1e-9 * dt.max(1.0) {
                return Err(IoError::Model(Error::NonUniformGrid));
            }
        }
        if self.grid.f.len() != n + 1 || self.grid.rho.len() != n {
            return Err(IoError::Parse("array lengths inconsistent with grid".into()));
        }
        Ok(PathProfile::new(
            grid,
            self.grid.f.clone(),
            self.grid.rho.clone(),
        )?)
    }
}

pub fn write_solve_json(path: &Path, record: &SolveRecord) -> Result<(), IoError> {
    let body = serde_json::to_string_pretty(record)
        .map_err(|e| IoError::Parse(e.to_string()))?;
    fs::write(path, body + "\n")?;
    Ok(())
}

pub fn read_solve_json(path: &Path) -> Result<SolveRecord, IoError> {
    let body = fs::read_to_string(path)?;
    serde_json::from_str(&body).map_err(|e| IoError::Parse(e.to_string()))
}

pub fn verification_report_json(report: &VerificationReport) -> String {
    #[derive(Serialize)]
    struct Rep<'a> {
        passed: bool,
        min_margin: f64,
        argmin_pair: (f64, f64),
        violations: Vec<(f64, f64, f64)>,
        near_zero_unexpected: &'a [(f64, f64)],
    }
    let rep = Rep {
        passed: report.passed,
        min_margin: report.min_margin,
        argmin_pair: report.argmin_pair,
        violations: report
            .violations
            .iter()
            .map(|v| (v.p, v.q, v.margin))
            .collect(),
        near_zero_unexpected: &report.near_zero_unexpected,
    };
    serde_json::to_string_pretty(&rep).expect("static schema")
}

/// Fixed 9-significant-digit scientific form, locale-independent.
pub fn fmt_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0.00000000e0".to_string();
    }
    format!("{x:.8e}")
}

/// `t,F,rho` rows for one shape profile.
pub fn write_shape_csv(path: &Path, rows: &[(f64, f64, f64)]) -> Result<(), IoError> {
    let mut out = fs::File::create(path)?;
    writeln!(out, "t,F,rho")?;
    for &(t, f, rho) in rows {
        writeln!(out, "{},{},{}", fmt_sig9(t), fmt_sig9(f), fmt_sig9(rho))?;
    }
    Ok(())
}

/// One sweep result row.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub a: f64,
    pub i_exact: f64,
    pub i_solver: f64,
    pub rel_err: f64,
    pub b_star: f64,
    pub t_b_est: f64,
    pub x_b_est: f64,
    pub converged: bool,
}

pub fn sweep_csv_string(rows: &[SweepRow]) -> String {
    let mut s = String::from("a,I_exact,I_solver,rel_err,b_star,t_B_est,x_B_est,converged\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            fmt_sig9(r.a),
            fmt_sig9(r.i_exact),
            fmt_sig9(r.i_solver),
            fmt_sig9(r.rel_err),
            fmt_sig9(r.b_star),
            fmt_sig9(r.t_b_est),
            fmt_sig9(r.x_b_est),
            r.converged
        ));
    }
    s
}
