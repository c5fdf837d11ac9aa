//! Report document and its JSON/CSV renderings.

use std::collections::BTreeMap;
use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;

use crate::hilbert::HermitianMatrix;
use crate::optimizer::BoundReport;
use crate::simulator::{BranchProbabilities, FrequencyTable};
use crate::synthesis::{NovelCloningMachine, ValidationReport};

use super::json::format_f64;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Header {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    /// Raw value of `NQCM_TOL_OVERRIDE`, echoed only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol_override: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndependenceReport {
    pub independent: bool,
    pub min_eigenvalue: f64,
    pub tolerance: f64,
    pub gram: Vec<Vec<Complex64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllocationReport {
    /// `"explicit"` or `"optimized"`.
    pub source: &'static str,
    /// `rows[n-1][i] = p_n^(i)`.
    pub rows: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub objective: f64,
    /// Uniform optimum `t` the ascent started from.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uniform_optimum: Option<f64>,
    pub residual_min_eigenvalue: f64,
    pub residual_max_eigenvalue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosedForm {
    pub exponent: u32,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairBounds {
    pub i: usize,
    pub j: usize,
    pub overlap: f64,
    pub duan_guo: f64,
    pub chefles_barnett: Vec<ClosedForm>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub allocation_bound: Option<BoundReport>,
}

/// A synthesized machine always travels with its validation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MachineReport {
    pub state_dim: usize,
    pub state_count: usize,
    pub max_copies: usize,
    pub blank_index: usize,
    pub probe_dim: usize,
    pub failure_branches: usize,
    pub composite_dim: usize,
    pub unitary_built: bool,
    pub unitary_dim_cap: usize,
    pub validation: ValidationReport,
}

impl MachineReport {
    pub fn new(m: &NovelCloningMachine, blank_index: usize, validation: ValidationReport) -> Self {
        Self {
            state_dim: m.source().dim(),
            state_count: m.source().len(),
            max_copies: m.max_copies(),
            blank_index,
            probe_dim: m.probe_dim(),
            failure_branches: m.failure_branches(),
            composite_dim: m.composite_dim(),
            unitary_built: m.unitary().is_some(),
            unitary_dim_cap: m.unitary_dim_cap(),
            validation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateProbabilities {
    pub state: usize,
    /// `"unitary"` when computed from `U`, `"images"` from the stored output vectors.
    pub method: &'static str,
    #[serde(flatten)]
    pub probabilities: BranchProbabilities,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateFrequencies {
    pub state: usize,
    #[serde(flatten)]
    pub table: FrequencyTable,
    pub max_abs_z: f64,
    /// Outcomes with `4 < |z| <= 5`.
    pub flagged: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub s: f64,
    #[serde(rename = "M")]
    pub m: usize,
    pub weight_mode: &'static str,
    pub uniform_optimum: f64,
    pub duan_guo: f64,
    pub chefles_barnett: f64,
    /// `uniform_optimum − chefles_barnett`.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub header: Header,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub independence: Option<IndependenceReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub allocation: Option<AllocationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Vec<PairBounds>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub machine: Option<MachineReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub branch_probabilities: Option<Vec<StateProbabilities>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<Vec<StateFrequencies>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Vec<SweepRow>>,
    /// Seconds per stage.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<BTreeMap<String, f64>>,
}

impl RunReport {
    pub fn new(command: &str, tol_override: Option<String>) -> Self {
        Self {
            header: Header {
                tool: "nqcm",
                version: env!("CARGO_PKG_VERSION"),
                command: command.to_string(),
                tol_override,
            },
            warnings: Vec::new(),
            independence: None,
            allocation: None,
            bounds: None,
            machine: None,
            branch_probabilities: None,
            monte_carlo: None,
            sweep: None,
            timing: None,
        }
    }

    /// CSV for the sweep table, or the branch probability table joined
    /// with Monte Carlo counts when present. `None` if neither exists.
    pub fn to_csv(&self) -> Option<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        if let Some(rows) = &self.sweep {
            for row in rows {
                w.serialize(CsvSweep::from(row)).ok()?;
            }
        } else if let Some(tables) = &self.branch_probabilities {
            w.write_record([
                "state",
                "outcome",
                "copies",
                "probability",
                "count",
                "frequency",
                "z_score",
            ])
            .ok()?;
            for t in tables {
                let mc = self
                    .monte_carlo
                    .as_ref()
                    .and_then(|v| v.iter().find(|f| f.state == t.state));
                let outcomes = success_failure(&t.probabilities);
                for (q, (label, copies, p)) in outcomes.into_iter().enumerate() {
                    let row = mc.map(|f| &f.table.rows[q]);
                    w.write_record([
                        t.state.to_string(),
                        label,
                        copies.map(|c| c.to_string()).unwrap_or_default(),
                        format_f64(p),
                        row.map(|r| r.count.to_string()).unwrap_or_default(),
                        row.map(|r| format_f64(r.frequency)).unwrap_or_default(),
                        row.and_then(|r| r.z_score)
                            .map(format_f64)
                            .unwrap_or_default(),
                    ])
                    .ok()?;
                }
            }
        } else {
            return None;
        }
        String::from_utf8(w.into_inner().ok()?).ok()
    }
}

fn success_failure(p: &BranchProbabilities) -> Vec<(String, Option<usize>, f64)> {
    let s = p
        .success
        .iter()
        .enumerate()
        .map(|(n, &v)| (format!("success({})", n + 1), Some(n + 2), v));
    let f = p
        .failure
        .iter()
        .enumerate()
        .map(|(l, &v)| (format!("failure({})", l + 1), None, v));
    s.chain(f).collect()
}

#[derive(Serialize)]
struct CsvSweep {
    s: String,
    #[serde(rename = "M")]
    m: usize,
    weight_mode: &'static str,
    uniform_optimum: String,
    duan_guo: String,
    chefles_barnett: String,
    gap: String,
}

impl From<&SweepRow> for CsvSweep {
    fn from(r: &SweepRow) -> Self {
        Self {
            s: format_f64(r.s),
            m: r.m,
            weight_mode: r.weight_mode,
            uniform_optimum: format_f64(r.uniform_optimum),
            duan_guo: format_f64(r.duan_guo),
            chefles_barnett: format_f64(r.chefles_barnett),
            gap: format_f64(r.gap),
        }
    }
}

pub(crate) fn gram_rows(g: &HermitianMatrix) -> Vec<Vec<Complex64>> {
    (0..g.size())
        .map(|i| (0..g.size()).map(|j| g[(i, j)]).collect())
        .collect()
}

/// Per-stage wall-clock timer; a disabled timer records nothing.
pub(crate) struct Stopwatch {
    stages: Option<BTreeMap<String, f64>>,
}

impl Stopwatch {
    pub(crate) fn new(enabled: bool) -> Self {
        Self {
            stages: enabled.then(BTreeMap::new),
        }
    }

    pub(crate) fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        if let Some(stages) = &mut self.stages {
            *stages.entry(stage.to_string()).or_insert(0.0) += start.elapsed().as_secs_f64();
        }
        out
    }

    pub(crate) fn finish(self) -> Option<BTreeMap<String, f64>> {
        self.stages
    }
}
