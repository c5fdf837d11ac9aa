//! Running a machine on an input and measuring the Xerox number operator.

use std::fmt;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{dot, PureState};
use crate::rng::SplitMix64;
use crate::synthesis::NovelCloningMachine;

/// Output norms may deviate from 1 by this much before renormalization.
pub const OUTPUT_NORM_TOL: f64 = 1e-10;

/// Result of a probe measurement.
///
/// `Success { branch: n }` is the eigenvalue `n` of the Xerox number operator
/// and carries `n + 1` copies of the input. `Failure { branch: l }` labels the
/// probe index `M + l - 1`, which lies outside the operator's spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    Success { branch: usize },
    Failure { branch: usize },
}

impl Outcome {
    /// Number of copies on a success branch.
    pub fn copies(&self) -> Option<usize> {
        match self {
            Outcome::Success { branch } => Some(branch + 1),
            Outcome::Failure { .. } => None,
        }
    }

    pub fn is_success(&self) -> bool {
        matches!(self, Outcome::Success { .. })
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Success { branch } => write!(f, "success({branch})"),
            Outcome::Failure { branch } => write!(f, "failure({branch})"),
        }
    }
}

/// `N_X = Σ_n n |P_n⟩⟨P_n|` over the success probe vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct XeroxOperator {
    probe_dim: usize,
    success_count: usize,
}

impl XeroxOperator {
    pub fn new(probe_dim: usize, success_count: usize) -> Result<Self> {
        if success_count == 0 || success_count >= probe_dim {
            return Err(Error::InvalidArgument(format!(
                "need 0 < M < N_C, got M = {success_count}, N_C = {probe_dim}"
            )));
        }
        Ok(Self {
            probe_dim,
            success_count,
        })
    }

    pub fn for_machine(m: &NovelCloningMachine) -> Self {
        Self {
            probe_dim: m.probe_dim(),
            success_count: m.max_copies(),
        }
    }

    pub fn probe_dim(&self) -> usize {
        self.probe_dim
    }

    pub fn success_count(&self) -> usize {
        self.success_count
    }

    /// Eigenvalue on probe basis vector `probe`; zero off the success block.
    pub fn eigenvalue(&self, probe: usize) -> usize {
        if probe < self.success_count {
            probe + 1
        } else {
            0
        }
    }

    pub fn outcome(&self, probe: usize) -> Outcome {
        if probe < self.success_count {
            Outcome::Success { branch: probe + 1 }
        } else {
            Outcome::Failure {
                branch: probe - self.success_count + 1,
            }
        }
    }

    pub fn probe_index(&self, outcome: Outcome) -> usize {
        match outcome {
            Outcome::Success { branch } => branch - 1,
            Outcome::Failure { branch } => self.success_count + branch - 1,
        }
    }

    /// All outcomes in sampling order: success `1..M`, then failure `1..N_C-M`.
    pub fn outcomes(&self) -> impl Iterator<Item = Outcome> + '_ {
        (0..self.probe_dim).map(|q| self.outcome(q))
    }
}

/// Branch weights of a composite output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchProbabilities {
    /// `success[n-1]` is the weight of branch `n`.
    pub success: Vec<f64>,
    /// Weights of probe indices `M..N_C-1`; the last one is the idle initial-probe index.
    pub failure: Vec<f64>,
}

impl BranchProbabilities {
    pub fn total(&self) -> f64 {
        self.success.iter().chain(&self.failure).sum()
    }

    pub fn total_success(&self) -> f64 {
        self.success.iter().sum()
    }

    /// Probabilities in probe order.
    pub fn ordered(&self) -> impl Iterator<Item = f64> + '_ {
        self.success.iter().chain(&self.failure).copied()
    }

    pub fn get(&self, outcome: Outcome) -> f64 {
        match outcome {
            Outcome::Success { branch } => self.success[branch - 1],
            Outcome::Failure { branch } => self.failure[branch - 1],
        }
    }
}

/// `U (ψ ⊗ |blank⟩^{⊗M} ⊗ |P⟩)`.
pub fn apply_machine(m: &NovelCloningMachine, input: &PureState) -> Result<PureState> {
    let out = m.apply_raw(input)?;
    let norm = out.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > OUTPUT_NORM_TOL {
        return Err(Error::NotNormalized(norm));
    }
    PureState::normalized(out)
}

fn branch_weights(amps: &[Complex64], m: &NovelCloningMachine) -> Result<BranchProbabilities> {
    if amps.len() != m.composite_dim() {
        return Err(Error::DimensionMismatch {
            expected: m.composite_dim(),
            found: amps.len(),
        });
    }
    let layout = m.layout();
    let mc = m.max_copies();
    Ok(BranchProbabilities {
        success: (0..mc).map(|q| layout.block_weight(amps, q)).collect(),
        failure: (mc..m.probe_dim())
            .map(|q| layout.block_weight(amps, q))
            .collect(),
    })
}

/// Squared norms of the probe blocks of `output`.
pub fn branch_probabilities(
    output: &PureState,
    m: &NovelCloningMachine,
) -> Result<BranchProbabilities> {
    branch_weights(output.amplitudes(), m)
}

/// Branch weights of the stored image `w_i` of member state `i`; needs no explicit unitary.
pub fn member_branch_probabilities(
    m: &NovelCloningMachine,
    i: usize,
) -> Result<BranchProbabilities> {
    let w = m.input_images().get(i).ok_or(Error::IndexOutOfRange {
        index: i,
        len: m.input_images().len(),
    })?;
    branch_weights(w, m)
}

/// Inverse-CDF selection on one uniform draw `u ∈ [0, 1)`.
///
/// Branches with zero weight are never returned.
pub fn sample_outcome(probs: &BranchProbabilities, xerox: &XeroxOperator, u: f64) -> Outcome {
    let target = u * probs.total();
    let mut cumulative = 0.0;
    let mut last_positive = 0;
    for (q, p) in probs.ordered().enumerate() {
        if p <= 0.0 {
            continue;
        }
        cumulative += p;
        last_positive = q;
        if target < cumulative {
            return xerox.outcome(q);
        }
    }
    xerox.outcome(last_positive)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub outcome: Outcome,
    pub probability: f64,
    /// Renormalized projection of the output onto the observed probe block.
    pub post_state: PureState,
    /// `|⟨ψ^{⊗(n+1)} ⊗ blank^{⊗(M-n)} ⊗ P_n | post⟩|²`; success outcomes only.
    pub clone_fidelity: Option<f64>,
}

/// Projective measurement of the probe on `output = U(input ⊗ ...)`.
pub fn measure_xerox(
    output: &PureState,
    m: &NovelCloningMachine,
    input: &PureState,
    rng: &mut SplitMix64,
) -> Result<MeasurementRecord> {
    let probs = branch_probabilities(output, m)?;
    let xerox = XeroxOperator::for_machine(m);
    let outcome = sample_outcome(&probs, &xerox, rng.next_f64());
    let probe = xerox.probe_index(outcome);
    let post_state = PureState::normalized(m.layout().project_block(output.amplitudes(), probe))?;
    let clone_fidelity = match outcome {
        Outcome::Success { branch } => {
            if input.dim() != m.layout().state_dim {
                return Err(Error::DimensionMismatch {
                    expected: m.layout().state_dim,
                    found: input.dim(),
                });
            }
            let reference = m.clone_reference(input, branch);
            Some(dot(&reference, post_state.amplitudes()).norm_sqr())
        }
        Outcome::Failure { .. } => None,
    };
    Ok(MeasurementRecord {
        outcome,
        probability: probs.get(outcome),
        post_state,
        clone_fidelity,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyRow {
    pub outcome: Outcome,
    pub count: u64,
    pub frequency: f64,
    pub probability: f64,
    /// `(freq − p)·√T / √(p(1−p))`, defined for `p ∈ (0, 1)`.
    pub z_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyTable {
    pub trials: u64,
    pub seed: u64,
    pub rows: Vec<FrequencyRow>,
}

impl FrequencyTable {
    pub fn max_abs_z(&self) -> f64 {
        self.rows
            .iter()
            .filter_map(|r| r.z_score)
            .map(f64::abs)
            .fold(0.0, f64::max)
    }

    /// Rows with `4 < |z| ≤ 5`: unusual but not failing.
    pub fn flagged(&self) -> impl Iterator<Item = &FrequencyRow> {
        self.rows
            .iter()
            .filter(|r| r.z_score.is_some_and(|z| z.abs() > 4.0 && z.abs() <= 5.0))
    }

    pub fn count_total(&self) -> u64 {
        self.rows.iter().map(|r| r.count).sum()
    }
}

/// Samples `trials` probe measurements of `U(input ⊗ ...)`.
///
/// Trial `t` draws from [`SplitMix64::for_trial`]`(seed, t)`, so the table does
/// not depend on evaluation order.
pub fn monte_carlo(
    m: &NovelCloningMachine,
    input: &PureState,
    trials: u64,
    seed: u64,
) -> Result<FrequencyTable> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let output = apply_machine(m, input)?;
    let probs = branch_probabilities(&output, m)?;
    let xerox = XeroxOperator::for_machine(m);
    let mut counts = vec![0u64; m.probe_dim()];
    for t in 0..trials {
        let u = SplitMix64::for_trial(seed, t).next_f64();
        counts[xerox.probe_index(sample_outcome(&probs, &xerox, u))] += 1;
    }
    let tf = trials as f64;
    let rows = probs
        .ordered()
        .zip(counts)
        .enumerate()
        .map(|(q, (p, count))| {
            let frequency = count as f64 / tf;
            let z_score =
                (p > 0.0 && p < 1.0).then(|| (frequency - p) * tf.sqrt() / (p * (1.0 - p)).sqrt());
            FrequencyRow {
                outcome: xerox.outcome(q),
                count,
                frequency,
                probability: p,
                z_score,
            }
        })
        .collect();
    Ok(FrequencyTable { trials, seed, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::StateSet;
    use crate::synthesis::{synthesize, ProbabilityAllocation, SynthesisOptions};

    fn real(v: &[f64]) -> PureState {
        PureState::from_real(v).unwrap()
    }

    fn orthogonal_machine() -> NovelCloningMachine {
        let s = StateSet::new(vec![real(&[1.0, 0.0]), real(&[0.0, 1.0])]).unwrap();
        let alloc = ProbabilityAllocation::state_uniform(&[1.0], 2).unwrap();
        synthesize(&s, 1, &alloc, &SynthesisOptions::default()).unwrap()
    }

    fn duan_guo_machine() -> NovelCloningMachine {
        let s = StateSet::new(vec![real(&[1.0, 0.0]), real(&[0.5, 0.75f64.sqrt()])]).unwrap();
        let alloc = ProbabilityAllocation::state_uniform(&[2.0 / 3.0], 2).unwrap();
        synthesize(&s, 1, &alloc, &SynthesisOptions::default()).unwrap()
    }

    #[test]
    fn xerox_spectrum() {
        let x = XeroxOperator::new(5, 3).unwrap();
        assert_eq!(
            (0..5).map(|q| x.eigenvalue(q)).collect::<Vec<_>>(),
            [1, 2, 3, 0, 0]
        );
        assert_eq!(x.outcome(3), Outcome::Failure { branch: 1 });
        assert_eq!(x.probe_index(Outcome::Success { branch: 2 }), 1);
        assert_eq!(Outcome::Success { branch: 2 }.copies(), Some(3));
        assert!(XeroxOperator::new(3, 3).is_err());
    }

    #[test]
    fn orthogonal_member_is_cloned_deterministically() {
        let m = orthogonal_machine();
        let psi = real(&[1.0, 0.0]);
        let out = apply_machine(&m, &psi).unwrap();
        let reference = m.clone_reference(&psi, 1);
        assert!((dot(&reference, out.amplitudes()).norm() - 1.0).abs() < 1e-12);
        let probs = branch_probabilities(&out, &m).unwrap();
        assert!((probs.success[0] - 1.0).abs() < 1e-12);
        assert!(probs.failure.iter().all(|&f| f < 1e-24));
        let mut rng = SplitMix64::new(9);
        for _ in 0..20 {
            let rec = measure_xerox(&out, &m, &psi, &mut rng).unwrap();
            assert_eq!(rec.outcome, Outcome::Success { branch: 1 });
            assert!((rec.clone_fidelity.unwrap() - 1.0).abs() < 1e-12);
        }
        let table = monte_carlo(&m, &psi, 500, 3).unwrap();
        assert_eq!(table.rows[0].count, 500);
        assert_eq!(table.count_total(), 500);
    }

    #[test]
    fn duan_guo_probabilities() {
        let m = duan_guo_machine();
        for (i, psi) in m.source().iter().enumerate() {
            let out = apply_machine(&m, psi).unwrap();
            let probs = branch_probabilities(&out, &m).unwrap();
            assert!((probs.success[0] - 2.0 / 3.0).abs() < 1e-9);
            assert!((probs.failure[0] - 1.0 / 3.0).abs() < 1e-9);
            assert!(probs.failure[1].abs() < 1e-20);
            assert!((probs.total() - 1.0).abs() < 1e-10);
            let stored = member_branch_probabilities(&m, i).unwrap();
            assert!((stored.success[0] - probs.success[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn measurement_is_reproducible_and_failure_is_orthogonal_to_success() {
        let m = duan_guo_machine();
        let psi = m.source().states()[1].clone();
        let out = apply_machine(&m, &psi).unwrap();
        let a = measure_xerox(&out, &m, &psi, &mut SplitMix64::new(42)).unwrap();
        let b = measure_xerox(&out, &m, &psi, &mut SplitMix64::new(42)).unwrap();
        assert_eq!(a, b);

        let mut rng = SplitMix64::new(1);
        let mut saw_failure = false;
        for _ in 0..64 {
            let rec = measure_xerox(&out, &m, &psi, &mut rng).unwrap();
            match rec.outcome {
                Outcome::Failure { .. } => {
                    saw_failure = true;
                    assert!(rec.clone_fidelity.is_none());
                    assert_eq!(m.layout().block_weight(rec.post_state.amplitudes(), 0), 0.0);
                }
                Outcome::Success { .. } => {
                    assert!(rec.clone_fidelity.unwrap() >= 1.0 - 1e-9);
                }
            }
        }
        assert!(saw_failure);
    }

    #[test]
    fn inverse_cdf_skips_empty_branches() {
        let x = XeroxOperator::new(4, 2).unwrap();
        let probs = BranchProbabilities {
            success: vec![0.0, 0.25],
            failure: vec![0.75, 0.0],
        };
        assert_eq!(
            sample_outcome(&probs, &x, 0.0),
            Outcome::Success { branch: 2 }
        );
        assert_eq!(
            sample_outcome(&probs, &x, 0.2499),
            Outcome::Success { branch: 2 }
        );
        assert_eq!(
            sample_outcome(&probs, &x, 0.25),
            Outcome::Failure { branch: 1 }
        );
        assert_eq!(
            sample_outcome(&probs, &x, 0.999_999_999_999),
            Outcome::Failure { branch: 1 }
        );
    }

    #[test]
    fn monte_carlo_rejects_zero_trials() {
        let m = orthogonal_machine();
        assert!(monte_carlo(&m, &real(&[1.0, 0.0]), 0, 1).is_err());
    }

    #[test]
    fn duan_guo_frequencies_concentrate() {
        let m = duan_guo_machine();
        let psi = m.source().states()[0].clone();
        let t = monte_carlo(&m, &psi, 100_000, 7).unwrap();
        let z = t.rows[0].z_score.unwrap();
        assert!(z.abs() <= 4.0, "z = {z}");
        assert_eq!(t, monte_carlo(&m, &psi, 100_000, 7).unwrap());
    }
}
