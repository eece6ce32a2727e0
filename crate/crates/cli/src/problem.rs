//! Problem files: JSON with complex entries as `[re, im]` pairs and
//! matrices as row-major nested arrays.

use std::path::Path;

use jcomplete::completion::ParameterSet;
use jcomplete::matnum::{CMatrix, C64};
use jcomplete::realization::Realization;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub type MatrixJson = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Reflection,
    Parameters,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub kind: Kind,
    pub m1: usize,
    pub m2: usize,
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a: Option<MatrixJson>,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub b: Option<MatrixJson>,
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    pub c: Option<MatrixJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<MatrixJson>,
    #[serde(rename = "S0", default, skip_serializing_if = "Option::is_none")]
    pub s0: Option<MatrixJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma1: Option<MatrixJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<MatrixJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Tolerances>,
}

/// A validated problem.
pub enum Problem {
    Reflection(Realization),
    Parameters(ParameterSet),
}

/// Realization `D + C(λ − A)⁻¹B` with its dimensions spelled out, so empty
/// blocks keep their shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RealizationFile {
    pub inputs: usize,
    pub outputs: usize,
    pub states: usize,
    #[serde(rename = "D")]
    pub d: MatrixJson,
    #[serde(rename = "C")]
    pub c: MatrixJson,
    #[serde(rename = "A")]
    pub a: MatrixJson,
    #[serde(rename = "B")]
    pub b: MatrixJson,
}

impl RealizationFile {
    pub fn from_realization(r: &Realization) -> Self {
        Self {
            inputs: r.input_dim(),
            outputs: r.output_dim(),
            states: r.state_dim(),
            d: to_json(&r.d),
            c: to_json(&r.c),
            a: to_json(&r.a),
            b: to_json(&r.b),
        }
    }
}

pub fn to_json(m: &CMatrix) -> MatrixJson {
    (0..m.rows())
        .map(|i| m.row(i).iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

/// Reads `json` as a `rows × cols` matrix. An empty array stands for any
/// matrix with no entries.
pub fn from_json(name: &str, json: &MatrixJson, rows: usize, cols: usize) -> Result<CMatrix, CliError> {
    if rows * cols == 0 && json.iter().all(|r| r.is_empty()) && (json.is_empty() || json.len() == rows) {
        return Ok(CMatrix::zeros(rows, cols));
    }
    if json.len() != rows || json.iter().any(|r| r.len() != cols) {
        let got_cols = json.first().map_or(0, |r| r.len());
        return Err(CliError::validation(format!(
            "{name} must be {rows}x{cols}, got {}x{got_cols}",
            json.len()
        )));
    }
    let mut data = Vec::with_capacity(rows * cols);
    for row in json {
        for &[re, im] in row {
            if !re.is_finite() || !im.is_finite() {
                return Err(CliError::validation(format!("{name} has a non-finite entry")));
            }
            data.push(C64::new(re, im));
        }
    }
    CMatrix::new(rows, cols, data).map_err(|e| CliError::validation(e.to_string()))
}

fn require<'a>(name: &str, m: &'a Option<MatrixJson>) -> Result<&'a MatrixJson, CliError> {
    m.as_ref().ok_or_else(|| CliError::validation(format!("missing matrix \"{name}\"")))
}

fn forbid(kind: &str, present: &[(&str, &Option<MatrixJson>)]) -> Result<(), CliError> {
    match present.iter().find(|(_, m)| m.is_some()) {
        Some((name, _)) => Err(CliError::validation(format!("\"{name}\" does not belong in a {kind} problem"))),
        None => Ok(()),
    }
}

impl ProblemFile {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::validation(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
    }

    pub fn from_parameters(p: &ParameterSet, tolerances: Option<Tolerances>) -> Self {
        Self {
            kind: Kind::Parameters,
            m1: p.m1(),
            m2: p.m2(),
            a: None,
            b: None,
            c: None,
            alpha: Some(to_json(&p.alpha)),
            s0: Some(to_json(&p.s0)),
            gamma1: Some(to_json(&p.gamma1)),
            gamma: Some(to_json(&p.gamma)),
            tolerances,
        }
    }

    pub fn validate(&self) -> Result<Problem, CliError> {
        let (m1, m2) = (self.m1, self.m2);
        if m1 == 0 || m2 == 0 {
            return Err(CliError::validation("m1 and m2 must be positive"));
        }
        match self.kind {
            Kind::Reflection => {
                forbid("reflection", &[("alpha", &self.alpha), ("S0", &self.s0), ("gamma1", &self.gamma1), ("gamma", &self.gamma)])?;
                let a_json = require("A", &self.a)?;
                let n = a_json.len();
                let a = from_json("A", a_json, n, n)?;
                let b = from_json("B", require("B", &self.b)?, n, m1)?;
                let c = from_json("C", require("C", &self.c)?, m2, n)?;
                Ok(Problem::Reflection(Realization::new(CMatrix::zeros(m2, m1), c, a, b)?))
            }
            Kind::Parameters => {
                forbid("parameters", &[("A", &self.a), ("B", &self.b), ("C", &self.c)])?;
                let alpha_json = require("alpha", &self.alpha)?;
                let n = alpha_json.len();
                let alpha = from_json("alpha", alpha_json, n, n)?;
                let s0 = from_json("S0", require("S0", &self.s0)?, n, n)?;
                let gamma1 = from_json("gamma1", require("gamma1", &self.gamma1)?, n, m1)?;
                let gamma = from_json("gamma", require("gamma", &self.gamma)?, n, m2)?;
                Ok(Problem::Parameters(ParameterSet::new(alpha, s0, gamma1, gamma)?))
            }
        }
    }
}
