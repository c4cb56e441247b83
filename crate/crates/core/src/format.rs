//! On-disk formats: problem files (JSON, 1-based COO), solve reports (JSON)
//! and iteration traces (CSV).

use std::fmt::Write as _;

use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ConstraintKind, ConstraintMap, ModelError, NormOrder, Problem, RegularizerTerm};
use crate::solver::{IterationTrace, SolveReport, SolveStatus};
use crate::symmat::SymmetricMatrix;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid problem file: {0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl Serialize for NormOrder {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            NormOrder::Infinity => s.serialize_str("inf"),
            other => s.serialize_f64(other.value()),
        }
    }
}

impl<'de> Deserialize<'de> for NormOrder {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        let p = match Raw::deserialize(d)? {
            Raw::Num(v) => v,
            Raw::Str(s) if matches!(s.to_ascii_lowercase().as_str(), "inf" | "infinity") => f64::INFINITY,
            Raw::Str(s) => return Err(de::Error::custom(format!("norm order must be a number or \"inf\", got {s:?}"))),
        };
        NormOrder::new(p).map_err(de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CooMatrix {
    pub format: String,
    /// `[i, j, v]`, 1-based, `i <= j`.
    pub entries: Vec<(usize, usize, f64)>,
}

impl CooMatrix {
    pub fn from_matrix(m: &SymmetricMatrix) -> Self {
        let n = m.dim();
        let entries = (0..n)
            .flat_map(|i| (i..n).map(move |j| (i, j)))
            .filter_map(|(i, j)| {
                let v = m.get(i, j);
                (v != 0.0).then_some((i + 1, j + 1, v))
            })
            .collect();
        Self {
            format: "coo".into(),
            entries,
        }
    }

    pub fn to_matrix(&self, n: usize) -> Result<SymmetricMatrix, FormatError> {
        if self.format != "coo" {
            return Err(FormatError::Invalid(format!("unsupported matrix format {:?}", self.format)));
        }
        let mut m = SymmetricMatrix::zeros(n);
        for &(i, j, v) in &self.entries {
            let (i, j) = check_position(i, j, n)?;
            m.set(i, j, v);
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ConstraintsDoc {
    None,
    Pinning { positions: Vec<(usize, usize)>, b: Vec<f64> },
    General { matrices: Vec<CooMatrix>, b: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularizerDoc {
    pub positions: Vec<(usize, usize)>,
    pub lambda: f64,
    pub p: NormOrder,
    /// Per-position count; omitted when every position counts once.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multiplicity: Option<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDoc {
    pub n: usize,
    pub mu: f64,
    #[serde(rename = "C")]
    pub c: CooMatrix,
    #[serde(default = "no_constraints")]
    pub constraints: ConstraintsDoc,
    #[serde(default)]
    pub regularizers: Vec<RegularizerDoc>,
}

fn no_constraints() -> ConstraintsDoc {
    ConstraintsDoc::None
}

fn check_position(i: usize, j: usize, n: usize) -> Result<(usize, usize), FormatError> {
    if i == 0 || j == 0 || i > n || j > n {
        return Err(FormatError::Invalid(format!("index ({i}, {j}) outside 1..={n}")));
    }
    Ok((i.min(j) - 1, i.max(j) - 1))
}

fn one_based(p: &[(usize, usize)]) -> Vec<(usize, usize)> {
    p.iter().map(|&(i, j)| (i + 1, j + 1)).collect()
}

impl ProblemDoc {
    pub fn from_problem(problem: &Problem) -> Self {
        let cm = problem.constraints();
        let constraints = match &cm.kind {
            ConstraintKind::EntryPinning(p) if p.is_empty() => ConstraintsDoc::None,
            ConstraintKind::EntryPinning(p) => ConstraintsDoc::Pinning {
                positions: one_based(p),
                b: cm.b.clone(),
            },
            ConstraintKind::GeneralMatrices(mats) => ConstraintsDoc::General {
                matrices: mats.iter().map(CooMatrix::from_matrix).collect(),
                b: cm.b.clone(),
            },
        };
        let regularizers = problem
            .regularizers()
            .iter()
            .map(|t| RegularizerDoc {
                positions: one_based(t.positions()),
                lambda: t.lambda(),
                p: t.p(),
                multiplicity: t.multiplicity().iter().any(|&m| m != 1).then(|| t.multiplicity().to_vec()),
            })
            .collect();
        Self {
            n: problem.dim(),
            mu: problem.mu(),
            c: CooMatrix::from_matrix(problem.c()),
            constraints,
            regularizers,
        }
    }

    pub fn to_problem(&self) -> Result<Problem, FormatError> {
        let n = self.n;
        if n == 0 {
            return Err(FormatError::Invalid("n must be >= 1".into()));
        }
        let zero_based = |p: &[(usize, usize)]| p.iter().map(|&(i, j)| check_position(i, j, n)).collect::<Result<Vec<_>, _>>();
        let constraints = match &self.constraints {
            ConstraintsDoc::None => ConstraintMap::none(),
            ConstraintsDoc::Pinning { positions, b } => ConstraintMap::pinning(zero_based(positions)?, b.clone())?,
            ConstraintsDoc::General { matrices, b } => {
                let mats = matrices.iter().map(|m| m.to_matrix(n)).collect::<Result<Vec<_>, _>>()?;
                ConstraintMap::general(mats, b.clone())?
            }
        };
        let regularizers = self
            .regularizers
            .iter()
            .map(|r| {
                let pos = zero_based(&r.positions)?;
                let m = r.multiplicity.clone().unwrap_or_else(|| vec![1; pos.len()]);
                Ok(RegularizerTerm::with_multiplicity(pos, m, r.lambda, r.p)?)
            })
            .collect::<Result<Vec<_>, FormatError>>()?;
        Ok(Problem::new(self.c.to_matrix(n)?, self.mu, constraints, regularizers)?)
    }
}

pub fn problem_to_json(problem: &Problem) -> String {
    serde_json::to_string(&ProblemDoc::from_problem(problem)).expect("problem documents always serialize")
}

pub fn problem_from_json(text: &str) -> Result<Problem, FormatError> {
    serde_json::from_str::<ProblemDoc>(text)?.to_problem()
}

/// The solve report document. Metrics are `null` when no iterate exists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportDoc {
    pub status: SolveStatus,
    pub iterations: usize,
    pub time_s: f64,
    pub primal: Option<f64>,
    pub dual: Option<f64>,
    pub gap: Option<f64>,
    pub pinf: Option<f64>,
    pub dinf: Option<f64>,
}

impl ReportDoc {
    pub fn from_report(r: &SolveReport) -> Self {
        let finite = |v: f64| v.is_finite().then_some(v);
        Self {
            status: r.status,
            iterations: r.iterations,
            time_s: r.time_s,
            primal: finite(r.primal),
            dual: finite(r.dual),
            gap: finite(r.gap),
            pinf: finite(r.kkt.pinf),
            dinf: finite(r.kkt.dinf),
        }
    }

    /// Report for a run that never produced an iterate.
    pub fn failure() -> Self {
        Self {
            status: SolveStatus::Failure,
            iterations: 0,
            time_s: 0.0,
            primal: None,
            dual: None,
            gap: None,
            pinf: None,
            dinf: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report documents always serialize")
    }
}

pub const TRACE_COLUMNS: [&str; 10] = ["k", "g", "delta_u_norm", "d_norm", "theta", "nu", "sigma", "alpha", "ls_trials", "elapsed_s"];

/// Trace CSV with 17 significant digits for every real column.
pub fn trace_to_csv(trace: &IterationTrace) -> String {
    let mut out = TRACE_COLUMNS.join(",");
    out.push('\n');
    for r in &trace.records {
        let _ = writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e}",
            r.k, r.g, r.delta_u_norm, r.d_norm, r.theta, r.nu, r.sigma, r.alpha, r.ls_trials, r.elapsed_s
        );
    }
    out
}
