//! Command dispatch for the `nqcm` binary.

pub mod config;
pub mod json;
pub mod report;

use std::fmt;

use clap::ValueEnum;

use crate::error::Error;
use crate::hilbert::{gram_matrix, is_linearly_independent, HermitianMatrix, PureState, StateSet};
use crate::optimizer::{
    check_pair_bound, chefles_barnett_bound, duan_guo_bound, max_per_state_success,
    max_uniform_success, weighted_objective, WeightVector, DEFAULT_ROUNDS,
};
use crate::simulator::{
    apply_machine, branch_probabilities, member_branch_probabilities, monte_carlo,
};
use crate::synthesis::{
    feasibility, residual, synthesize, validate_machine, NovelCloningMachine, ProbabilityAllocation,
};

pub use config::{emit_config, parse_config, ConfigError, Parsed, ProblemConfig, Tolerances};
pub use report::RunReport;

use report::{
    gram_rows, AllocationReport, ClosedForm, IndependenceReport, MachineReport, PairBounds,
    StateFrequencies, StateProbabilities, Stopwatch, SweepRow,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

/// Environment variable echoed into the report header.
pub const TOL_OVERRIDE_VAR: &str = "NQCM_TOL_OVERRIDE";

/// Overlap grid of the sweep: `s = j / 20` for `j = 1..=19`.
pub fn sweep_overlaps() -> Vec<f64> {
    (1..=19).map(|j| j as f64 / 20.0).collect()
}
pub const SWEEP_MAX_COPIES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Linear independence of the state set.
    Check,
    /// Optimize (unless an allocation is given), synthesize and validate.
    Synth,
    /// Pairwise bounds and closed-form limits.
    Bounds,
    /// Synthesize, then exact probabilities and Monte Carlo per member state.
    Simulate,
    /// Uniform optimum against closed forms over a fixed overlap grid.
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::Synth => "synth",
            Command::Bounds => "bounds",
            Command::Simulate => "simulate",
            Command::Sweep => "sweep",
        }
    }

    /// Whether `--format csv` applies.
    pub fn supports_csv(self) -> bool {
        matches!(self, Command::Sweep | Command::Synth | Command::Simulate)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RunOptions {
    pub timing: bool,
    pub tol_override: Option<String>,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(Error),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io(_) => EXIT_IO,
            CliError::Core(e) if e.is_numerical() => EXIT_NUMERICAL,
            CliError::Core(
                Error::Infeasible(_) | Error::DependentSet(_) | Error::Indefinite(_),
            ) => EXIT_INFEASIBLE,
            CliError::Core(_) => EXIT_CONFIG,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Core(Error::Infeasible(min)) => write!(
                f,
                "allocation is infeasible: residual minimum eigenvalue {min:e}"
            ),
            CliError::Core(Error::DependentSet(min)) => write!(
                f,
                "state set is linearly dependent: minimum Gram eigenvalue {min:e}"
            ),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

/// Runs one command. `sweep` ignores the configuration; every other
/// command requires one.
///
/// `check` on a dependent set still returns its report; the caller decides
/// the exit status from `independence.independent`.
pub fn run_command(
    cmd: Command,
    cfg: Option<&ProblemConfig>,
    opts: &RunOptions,
) -> Result<RunReport, CliError> {
    let mut report = RunReport::new(cmd.name(), opts.tol_override.clone());
    let mut clock = Stopwatch::new(opts.timing);
    if cmd == Command::Sweep {
        report.sweep = Some(clock.time("sweep", run_sweep)?);
        report.timing = clock.finish();
        return Ok(report);
    }
    let cfg =
        cfg.ok_or_else(|| CliError::Config(format!("`{}` needs a config file", cmd.name())))?;
    let set = cfg.state_set()?;
    let gram = gram_matrix(&set);

    let (independent, min_eig) = clock.time("independence", || {
        is_linearly_independent(&set, cfg.independence_tol())
    })?;
    report.independence = Some(IndependenceReport {
        independent,
        min_eigenvalue: min_eig,
        tolerance: cfg.independence_tol(),
        gram: gram_rows(&gram),
    });
    if cmd == Command::Check {
        report.timing = clock.finish();
        return Ok(report);
    }
    if !independent {
        return Err(Error::DependentSet(min_eig).into());
    }

    let weights = cfg.weight_vector()?;
    let (alloc, alloc_report) = clock.time("optimize", || allocate(cfg, &gram, &weights))?;
    report.allocation = Some(alloc_report);

    if cmd == Command::Bounds {
        report.bounds = Some(pair_bounds(&alloc, &gram, cfg.max_copies)?);
        report.timing = clock.finish();
        return Ok(report);
    }

    let machine = clock.time("synthesize", || {
        synthesize(&set, cfg.max_copies, &alloc, &cfg.synthesis_options())
    })?;
    if cmd == Command::Simulate && machine.unitary().is_none() {
        return Err(CliError::Config(format!(
            "simulate needs the explicit unitary, but the composite dimension {} exceeds unitary_dim_cap = {}",
            machine.composite_dim(),
            cfg.unitary_dim_cap
        )));
    }
    let validation = clock.time("validate", || validate_machine(&machine))?;
    report.machine = Some(MachineReport::new(&machine, cfg.blank_index, validation));
    report.branch_probabilities =
        Some(clock.time("probabilities", || exact_tables(&machine, &set))?);

    if cmd == Command::Simulate {
        let tables = clock.time("monte_carlo", || {
            set.iter()
                .enumerate()
                .map(|(i, psi)| {
                    let table = monte_carlo(&machine, psi, cfg.trials, cfg.seed)?;
                    Ok(StateFrequencies {
                        state: i,
                        max_abs_z: table.max_abs_z(),
                        flagged: table.flagged().map(|r| r.outcome.to_string()).collect(),
                        table,
                    })
                })
                .collect::<crate::Result<Vec<_>>>()
        })?;
        report.monte_carlo = Some(tables);
    }
    report.timing = clock.finish();
    Ok(report)
}

fn allocate(
    cfg: &ProblemConfig,
    gram: &HermitianMatrix,
    weights: &WeightVector,
) -> Result<(ProbabilityAllocation, AllocationReport), CliError> {
    let (alloc, source, uniform_optimum) = match cfg.explicit_allocation()? {
        Some(a) => (a, "explicit", None),
        None => {
            let uniform = max_uniform_success(gram, cfg.max_copies, weights)?;
            let best = max_per_state_success(gram, cfg.max_copies, weights, DEFAULT_ROUNDS)?;
            (best.allocation, "optimized", Some(uniform.objective))
        }
    };
    let feas = feasibility(
        &residual(gram, &alloc, cfg.max_copies)?,
        cfg.feasibility_tol(),
    )?;
    if !feas.feasible {
        return Err(Error::Infeasible(feas.min_eigenvalue).into());
    }
    let report = AllocationReport {
        source,
        rows: alloc.rows().to_vec(),
        weights: weights.as_slice().to_vec(),
        objective: weighted_objective(&alloc, weights),
        uniform_optimum,
        residual_min_eigenvalue: feas.min_eigenvalue,
        residual_max_eigenvalue: feas.max_eigenvalue,
    };
    Ok((alloc, report))
}

fn pair_bounds(
    alloc: &ProbabilityAllocation,
    gram: &HermitianMatrix,
    max_copies: usize,
) -> crate::Result<Vec<PairBounds>> {
    let k = gram.size();
    let mut out = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            let bound = check_pair_bound(alloc, gram, i, j)?;
            let s = bound.overlap;
            let chefles_barnett = (2..=max_copies as u32 + 1)
                .map(|m| {
                    Ok(ClosedForm {
                        exponent: m,
                        value: chefles_barnett_bound(s, m)?,
                    })
                })
                .collect::<crate::Result<Vec<_>>>()?;
            out.push(PairBounds {
                i,
                j,
                overlap: s,
                duan_guo: duan_guo_bound(s)?,
                chefles_barnett,
                allocation_bound: Some(bound),
            });
        }
    }
    Ok(out)
}

fn exact_tables(m: &NovelCloningMachine, set: &StateSet) -> crate::Result<Vec<StateProbabilities>> {
    set.iter()
        .enumerate()
        .map(|(i, psi)| {
            let (probabilities, method) = if m.unitary().is_some() {
                (branch_probabilities(&apply_machine(m, psi)?, m)?, "unitary")
            } else {
                (member_branch_probabilities(m, i)?, "images")
            };
            Ok(StateProbabilities {
                state: i,
                method,
                total: probabilities.total(),
                probabilities,
            })
        })
        .collect()
}

/// Qubit pair with real overlap `s`.
fn overlap_pair(s: f64) -> crate::Result<StateSet> {
    StateSet::new(vec![
        PureState::from_real(&[1.0, 0.0])?,
        PureState::from_real(&[s, (1.0 - s * s).sqrt()])?,
    ])
}

/// All weight on the top branch `M`, whose exponent is `M + 1`.
fn run_sweep() -> crate::Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for s in sweep_overlaps() {
        let gram = gram_matrix(&overlap_pair(s)?);
        for m in 1..=SWEEP_MAX_COPIES {
            let w = WeightVector::single_branch(m, m)?;
            let t = max_uniform_success(&gram, m, &w)?.objective;
            let cb = chefles_barnett_bound(s, m as u32 + 1)?;
            rows.push(SweepRow {
                s,
                m,
                weight_mode: "top_branch",
                uniform_optimum: t,
                duan_guo: duan_guo_bound(s)?,
                chefles_barnett: cb,
                gap: t - cb,
            });
        }
    }
    Ok(rows)
}
