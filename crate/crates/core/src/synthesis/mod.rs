//! Construction and validation of cloning machines.
//!
//! The composite space is `A ⊗ B_1 ⊗ ... ⊗ B_M ⊗ C` with the input register
//! `A`, `M` blank registers of the input dimension `d`, and a probe `C` of
//! dimension `N_C = M + L + 1`. Probe basis vectors are assigned as
//!
//! * `0 .. M-1`: success branch `n` (producing `n + 1` copies) uses index `n - 1`;
//! * `M .. M+L-1`: failure branch `l` uses index `M + l - 1`;
//! * `M + L`: the initial probe state `|P⟩`.
//!
//! A member state `ψ_i` is sent to
//!
//! ```text
//! w_i = Σ_n √p_n^(i) ψ_i^{⊗(n+1)} ⊗ |blank⟩^{⊗(M-n)} ⊗ |n-1⟩
//!     + Σ_l C[i][l] |χ_l⟩ ⊗ |M+l-1⟩
//! ```
//!
//! where `χ_l` is the `(l-1)`-th computational basis vector of `AB` and `C`
//! factors the residual, `Σ_l conj(C[i][l]) C[j][l] = R_ij`.

mod completion;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{
    conjugate_factor, dot, eigendecompose_hermitian, gram_matrix, hadamard_power,
    is_linearly_independent, kron, CMatrix, HermitianMatrix, PureState, StateSet, INDEPENDENCE_TOL,
    PSD_TOL,
};

/// Column sums of an allocation may exceed 1 by at most this much.
pub const ALLOCATION_SUM_TOL: f64 = 1e-12;
/// Default composite dimension above which no explicit unitary is built.
pub const DEFAULT_UNITARY_DIM_CAP: usize = 4096;
/// Failure columns with a smaller norm are dropped from `C`.
pub const FAILURE_COLUMN_TOL: f64 = 1e-7;
pub const OVERLAP_TOL: f64 = 1e-9;
pub const NORMALIZATION_TOL: f64 = 1e-9;
/// Unitarity defect tolerance, scaled by `√D`.
pub const UNITARITY_TOL: f64 = 1e-10;
pub const MAPPING_TOL: f64 = 1e-10;

/// Success probabilities `p[n][i]` for branch `n + 1` and state `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityAllocation {
    p: Vec<Vec<f64>>,
    states: usize,
}

impl ProbabilityAllocation {
    /// `rows[n][i]` is the probability that state `i` lands in branch `n + 1`.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let states = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || states == 0 {
            return Err(Error::InvalidAllocation(
                "allocation must be non-empty".into(),
            ));
        }
        for (n, row) in rows.iter().enumerate() {
            if row.len() != states {
                return Err(Error::ShapeMismatch {
                    expected_rows: rows.len(),
                    expected_cols: states,
                    rows: n,
                    cols: row.len(),
                });
            }
            for (i, &x) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&x) {
                    return Err(Error::InvalidAllocation(format!(
                        "p[{}][{}] = {x} is not a probability",
                        n + 1,
                        i + 1
                    )));
                }
            }
        }
        for i in 0..states {
            let total: f64 = rows.iter().map(|r| r[i]).sum();
            if total > 1.0 + ALLOCATION_SUM_TOL {
                return Err(Error::InvalidAllocation(format!(
                    "success probabilities of state {} sum to {total}",
                    i + 1
                )));
            }
        }
        Ok(Self { p: rows, states })
    }

    pub fn zeros(branches: usize, states: usize) -> Self {
        Self {
            p: vec![vec![0.0; states]; branches],
            states,
        }
    }

    /// Allocation with `p[n][i] = per_branch[n]` for every state.
    pub fn state_uniform(per_branch: &[f64], states: usize) -> Result<Self> {
        Self::new(per_branch.iter().map(|&x| vec![x; states]).collect())
    }

    pub fn branches(&self) -> usize {
        self.p.len()
    }

    pub fn states(&self) -> usize {
        self.states
    }

    /// Probability for branch `n` (1-based, producing `n + 1` copies) and state `i` (0-based).
    pub fn get(&self, n: usize, i: usize) -> f64 {
        self.p[n - 1][i]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.p
    }

    /// Total success probability of state `i`.
    pub fn total_success(&self, i: usize) -> f64 {
        self.p.iter().map(|r| r[i]).sum()
    }
}

/// `R = G − Σ_n A_n G^{∘(n+1)} A_n` with `A_n = diag(√p_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualMatrix(HermitianMatrix);

impl ResidualMatrix {
    pub fn matrix(&self) -> &HermitianMatrix {
        &self.0
    }
}

pub fn residual(
    gram: &HermitianMatrix,
    alloc: &ProbabilityAllocation,
    max_copies: usize,
) -> Result<ResidualMatrix> {
    let k = gram.size();
    if alloc.branches() != max_copies || alloc.states() != k {
        return Err(Error::ShapeMismatch {
            expected_rows: max_copies,
            expected_cols: k,
            rows: alloc.branches(),
            cols: alloc.states(),
        });
    }
    let mut r = gram.matrix().clone();
    for n in 1..=max_copies {
        let power = hadamard_power(gram, (n + 1) as u32)?;
        let roots: Vec<f64> = (0..k).map(|i| alloc.get(n, i).sqrt()).collect();
        for i in 0..k {
            for j in 0..k {
                r[(i, j)] -= power[(i, j)] * (roots[i] * roots[j]);
            }
        }
    }
    Ok(ResidualMatrix(HermitianMatrix::symmetrized(r)))
}

/// Spectral summary used for feasibility decisions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Feasibility {
    pub feasible: bool,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
}

pub fn feasibility(r: &ResidualMatrix, tol: f64) -> Result<Feasibility> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "feasibility tolerance must be positive, got {tol}"
        )));
    }
    let eig = eigendecompose_hermitian(r.matrix())?;
    let diag_ok = r.matrix().diagonal().iter().all(|&x| x >= -tol);
    Ok(Feasibility {
        feasible: diag_ok && eig.min() >= -tol * eig.max().max(1.0),
        min_eigenvalue: eig.min(),
        max_eigenvalue: eig.max(),
    })
}

/// True iff `R` is positive semidefinite within `tol` (relative) and its diagonal is nonnegative within `tol`.
pub fn is_feasible(r: &ResidualMatrix, tol: f64) -> Result<bool> {
    Ok(feasibility(r, tol)?.feasible)
}

/// Knobs for [`synthesize`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthesisOptions {
    pub blank_index: usize,
    pub unitary_dim_cap: usize,
    pub independence_tol: f64,
    pub feasibility_tol: f64,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        Self {
            blank_index: 0,
            unitary_dim_cap: DEFAULT_UNITARY_DIM_CAP,
            independence_tol: INDEPENDENCE_TOL,
            feasibility_tol: PSD_TOL,
        }
    }
}

/// Index arithmetic for `A ⊗ B^{⊗M} ⊗ C`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompositeLayout {
    pub state_dim: usize,
    pub max_copies: usize,
    /// `d^(M+1)`.
    pub register_dim: usize,
    pub probe_dim: usize,
}

impl CompositeLayout {
    pub fn new(state_dim: usize, max_copies: usize, probe_dim: usize) -> Result<Self> {
        let exp = u32::try_from(max_copies + 1).map_err(|_| Error::DimensionOverflow)?;
        let register_dim = state_dim.checked_pow(exp).ok_or(Error::DimensionOverflow)?;
        register_dim
            .checked_mul(probe_dim)
            .ok_or(Error::DimensionOverflow)?;
        Ok(Self {
            state_dim,
            max_copies,
            register_dim,
            probe_dim,
        })
    }

    /// Composite dimension `D = d^(M+1) · N_C`.
    pub fn dim(&self) -> usize {
        self.register_dim * self.probe_dim
    }

    #[inline]
    pub fn index(&self, register: usize, probe: usize) -> usize {
        register * self.probe_dim + probe
    }

    /// Adds `scale · register ⊗ |probe⟩` into `target`.
    pub fn accumulate(
        &self,
        target: &mut [Complex64],
        register: &[Complex64],
        probe: usize,
        scale: Complex64,
    ) {
        for (a, &z) in register.iter().enumerate() {
            target[self.index(a, probe)] += scale * z;
        }
    }

    /// Squared norm of the block tagged by probe basis vector `probe`.
    pub fn block_weight(&self, v: &[Complex64], probe: usize) -> f64 {
        (0..self.register_dim)
            .map(|a| v[self.index(a, probe)].norm_sqr())
            .sum()
    }

    /// Component of `v` on probe block `probe`, zero elsewhere.
    pub fn project_block(&self, v: &[Complex64], probe: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
        for a in 0..self.register_dim {
            let idx = self.index(a, probe);
            out[idx] = v[idx];
        }
        out
    }
}

/// A synthesized cloning machine. Immutable once built.
#[derive(Debug, Clone)]
pub struct NovelCloningMachine {
    source: StateSet,
    allocation: ProbabilityAllocation,
    failure_coeffs: CMatrix,
    residual: ResidualMatrix,
    layout: CompositeLayout,
    blank: PureState,
    unitary: Option<CMatrix>,
    input_images: Vec<Vec<Complex64>>,
    unitary_dim_cap: usize,
}

impl NovelCloningMachine {
    pub fn source(&self) -> &StateSet {
        &self.source
    }

    /// `M`.
    pub fn max_copies(&self) -> usize {
        self.layout.max_copies
    }

    pub fn allocation(&self) -> &ProbabilityAllocation {
        &self.allocation
    }

    /// `k x L` failure amplitudes `C[i][l]`.
    pub fn failure_coeffs(&self) -> &CMatrix {
        &self.failure_coeffs
    }

    /// Number of failure branches `L`.
    pub fn failure_branches(&self) -> usize {
        self.failure_coeffs.cols()
    }

    pub fn residual(&self) -> &ResidualMatrix {
        &self.residual
    }

    /// `N_C`.
    pub fn probe_dim(&self) -> usize {
        self.layout.probe_dim
    }

    /// Probe index of the initial probe state `|P⟩`.
    pub fn initial_probe(&self) -> usize {
        self.layout.probe_dim - 1
    }

    pub fn layout(&self) -> &CompositeLayout {
        &self.layout
    }

    pub fn composite_dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn blank(&self) -> &PureState {
        &self.blank
    }

    pub fn unitary(&self) -> Option<&CMatrix> {
        self.unitary.as_ref()
    }

    pub fn unitary_dim_cap(&self) -> usize {
        self.unitary_dim_cap
    }

    /// True when the composite dimension exceeded the cap and `U` was not built.
    pub fn unitary_skipped(&self) -> bool {
        self.unitary.is_none()
    }

    /// The vectors `w_i`.
    pub fn input_images(&self) -> &[Vec<Complex64>] {
        &self.input_images
    }

    /// Failure probability of state `i` on branch `l` (1-based), `|C[i][l]|²`.
    pub fn failure_probability(&self, i: usize, l: usize) -> f64 {
        self.failure_coeffs[(i, l - 1)].norm_sqr()
    }

    /// `ψ ⊗ |blank⟩^{⊗M}` on the `AB` register.
    fn register_input(&self, input: &PureState) -> Vec<Complex64> {
        let mut acc = input.amplitudes().to_vec();
        for _ in 0..self.max_copies() {
            acc = kron(&acc, self.blank.amplitudes());
        }
        acc
    }

    /// `ψ ⊗ |blank⟩^{⊗M} ⊗ |P⟩`.
    pub fn embed_input(&self, input: &PureState) -> Result<Vec<Complex64>> {
        if input.dim() != self.layout.state_dim {
            return Err(Error::DimensionMismatch {
                expected: self.layout.state_dim,
                found: input.dim(),
            });
        }
        let mut v = vec![Complex64::new(0.0, 0.0); self.composite_dim()];
        self.layout.accumulate(
            &mut v,
            &self.register_input(input),
            self.initial_probe(),
            Complex64::new(1.0, 0.0),
        );
        Ok(v)
    }

    /// `ψ^{⊗(n+1)} ⊗ |blank⟩^{⊗(M-n)}`, the register content of success branch `n`.
    pub fn clone_register(&self, input: &PureState, n: usize) -> Vec<Complex64> {
        let mut acc = input.amplitudes().to_vec();
        for _ in 0..n {
            acc = kron(&acc, input.amplitudes());
        }
        for _ in n..self.max_copies() {
            acc = kron(&acc, self.blank.amplitudes());
        }
        acc
    }

    /// The success-branch reference `ψ^{⊗(n+1)} ⊗ |blank⟩^{⊗(M-n)} ⊗ |n-1⟩`.
    pub fn clone_reference(&self, input: &PureState, n: usize) -> Vec<Complex64> {
        let mut v = vec![Complex64::new(0.0, 0.0); self.composite_dim()];
        self.layout.accumulate(
            &mut v,
            &self.clone_register(input, n),
            n - 1,
            Complex64::new(1.0, 0.0),
        );
        v
    }

    /// `U (ψ ⊗ |blank⟩^{⊗M} ⊗ |P⟩)` as raw amplitudes.
    pub fn apply_raw(&self, input: &PureState) -> Result<Vec<Complex64>> {
        let u = self
            .unitary
            .as_ref()
            .ok_or(Error::MissingUnitary(self.composite_dim()))?;
        let v = self.embed_input(input)?;
        // v has support only on the initial-probe block
        let mut out = vec![Complex64::new(0.0, 0.0); self.composite_dim()];
        for (col, &z) in v.iter().enumerate() {
            if z == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (r, o) in out.iter_mut().enumerate() {
                *o += u[(r, col)] * z;
            }
        }
        Ok(out)
    }
}

/// Builds the machine for `set` with `max_copies` success branches and the given allocation.
pub fn synthesize(
    set: &StateSet,
    max_copies: usize,
    alloc: &ProbabilityAllocation,
    opts: &SynthesisOptions,
) -> Result<NovelCloningMachine> {
    if max_copies == 0 {
        return Err(Error::InvalidArgument(
            "max_copies must be at least 1".into(),
        ));
    }
    let d = set.dim();
    if opts.blank_index >= d {
        return Err(Error::IndexOutOfRange {
            index: opts.blank_index,
            len: d,
        });
    }
    let (independent, lambda) = is_linearly_independent(set, opts.independence_tol)?;
    if !independent {
        return Err(Error::DependentSet(lambda));
    }
    let gram = gram_matrix(set);
    let res = residual(&gram, alloc, max_copies)?;
    let feas = feasibility(&res, opts.feasibility_tol)?;
    if !feas.feasible {
        return Err(Error::Infeasible(feas.min_eigenvalue));
    }

    let k = set.len();
    let factor = conjugate_factor(res.matrix())?;
    let kept: Vec<usize> = (0..k)
        .filter(|&l| {
            factor
                .row(l)
                .iter()
                .map(Complex64::norm_sqr)
                .sum::<f64>()
                .sqrt()
                >= FAILURE_COLUMN_TOL
        })
        .collect();
    let failures = kept.len();
    let mut failure_coeffs = CMatrix::zeros(k, failures);
    for (col, &l) in kept.iter().enumerate() {
        for i in 0..k {
            failure_coeffs[(i, col)] = factor[(l, i)];
        }
    }

    let layout = CompositeLayout::new(d, max_copies, max_copies + failures + 1)?;
    let blank = PureState::basis(d, opts.blank_index)?;
    let mut machine = NovelCloningMachine {
        source: set.clone(),
        allocation: alloc.clone(),
        failure_coeffs,
        residual: res,
        layout,
        blank,
        unitary: None,
        input_images: Vec::new(),
        unitary_dim_cap: opts.unitary_dim_cap,
    };

    let dim = layout.dim();
    let mut images = Vec::with_capacity(k);
    for (i, psi) in set.iter().enumerate() {
        let mut w = vec![Complex64::new(0.0, 0.0); dim];
        for n in 1..=max_copies {
            let p = alloc.get(n, i);
            if p > 0.0 {
                layout.accumulate(
                    &mut w,
                    &machine.clone_register(psi, n),
                    n - 1,
                    Complex64::new(p.sqrt(), 0.0),
                );
            }
        }
        for l in 0..failures {
            // χ_l is the l-th computational basis vector of AB
            w[layout.index(l, max_copies + l)] += machine.failure_coeffs[(i, l)];
        }
        images.push(w);
    }
    machine.input_images = images;

    if dim <= opts.unitary_dim_cap {
        let inputs = set
            .iter()
            .map(|psi| machine.embed_input(psi))
            .collect::<Result<Vec<_>>>()?;
        machine.unitary = Some(completion::complete_unitary(
            &inputs,
            &machine.input_images,
            dim,
        )?);
    }
    Ok(machine)
}

/// Defects of a synthesized machine against its defining identities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    /// `max_{i,j} |⟨w_i|w_j⟩ − ⟨ψ_i|ψ_j⟩|`.
    pub overlap_error: f64,
    /// `max_i |Σ_n p_n^(i) + Σ_l |C[i][l]|² − 1|`.
    pub normalization_error: f64,
    /// `‖U^†U − I‖_F`, when `U` is present.
    pub unitarity_defect: Option<f64>,
    pub unitarity_tolerance: f64,
    /// `max_i ‖U v_i − w_i‖`, when `U` is present.
    pub mapping_error: Option<f64>,
    pub overlap_ok: bool,
    pub normalization_ok: bool,
    pub unitarity_ok: bool,
    pub mapping_ok: bool,
    pub passed: bool,
}

pub fn validate_machine(m: &NovelCloningMachine) -> Result<ValidationReport> {
    let k = m.source.len();
    let gram = gram_matrix(&m.source);
    let mut overlap_error: f64 = 0.0;
    for i in 0..k {
        for j in 0..k {
            let got = dot(&m.input_images[i], &m.input_images[j]);
            overlap_error = overlap_error.max((got - gram[(i, j)]).norm());
        }
    }

    let mut normalization_error: f64 = 0.0;
    for i in 0..k {
        let failure: f64 = (0..m.failure_branches())
            .map(|l| m.failure_coeffs[(i, l)].norm_sqr())
            .sum();
        let total = m.allocation.total_success(i) + failure;
        normalization_error = normalization_error.max((total - 1.0).abs());
    }

    let dim = m.composite_dim();
    let unitarity_tolerance = UNITARITY_TOL * (dim as f64).sqrt();
    let (unitarity_defect, mapping_error) = match &m.unitary {
        Some(u) => {
            let defect = u.gram().distance(&CMatrix::identity(dim))?;
            let mut worst: f64 = 0.0;
            for (psi, w) in m.source.iter().zip(&m.input_images) {
                let img = m.apply_raw(psi)?;
                let err = img
                    .iter()
                    .zip(w)
                    .map(|(a, b)| (a - b).norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                worst = worst.max(err);
            }
            (Some(defect), Some(worst))
        }
        None => (None, None),
    };

    let overlap_ok = overlap_error <= OVERLAP_TOL;
    let normalization_ok = normalization_error <= NORMALIZATION_TOL;
    let unitarity_ok = unitarity_defect.is_none_or(|x| x <= unitarity_tolerance);
    let mapping_ok = mapping_error.is_none_or(|x| x <= MAPPING_TOL);
    Ok(ValidationReport {
        overlap_error,
        normalization_error,
        unitarity_defect,
        unitarity_tolerance,
        mapping_error,
        overlap_ok,
        normalization_ok,
        unitarity_ok,
        mapping_ok,
        passed: overlap_ok && normalization_ok && unitarity_ok && mapping_ok,
    })
}

/// Distance between the machine's actual output on a superposition of
/// member states and the output an ideal superposition cloner would give.
///
/// The coefficient vector is rescaled to unit norm and its global phase is
/// fixed so the largest-modulus entry is real positive. The ideal output puts
/// `√p̄_n ψ^{⊗(n+1)} ⊗ |blank⟩^{⊗(M-n)}` on success block `n` with
/// `p̄_n = Σ_i |c_i|² p_n^(i)`, and agrees with the actual output on every
/// other probe block, so only the success branches are compared.
pub fn linearity_witness(m: &NovelCloningMachine, coefficients: &[Complex64]) -> Result<f64> {
    let k = m.source.len();
    if coefficients.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: coefficients.len(),
        });
    }
    let scale = coefficients
        .iter()
        .map(Complex64::norm_sqr)
        .sum::<f64>()
        .sqrt();
    if scale.is_nan() || scale <= 0.0 {
        return Err(Error::InvalidArgument(
            "coefficients must not all vanish".into(),
        ));
    }
    let lead = coefficients
        .iter()
        .copied()
        .reduce(|a, b| if b.norm() > a.norm() { b } else { a })
        .expect("non-empty");
    let phase = lead.conj() / lead.norm();
    let c: Vec<Complex64> = coefficients.iter().map(|&z| z * phase / scale).collect();

    let d = m.layout.state_dim;
    let mut amps = vec![Complex64::new(0.0, 0.0); d];
    for (ci, psi) in c.iter().zip(m.source.iter()) {
        for (a, &z) in amps.iter_mut().zip(psi.amplitudes()) {
            *a += ci * z;
        }
    }
    let psi = PureState::normalized(amps)?;
    let actual = m.apply_raw(&psi)?;

    let mut ideal = vec![Complex64::new(0.0, 0.0); actual.len()];
    for n in 1..=m.max_copies() {
        let pbar: f64 = c
            .iter()
            .enumerate()
            .map(|(i, ci)| ci.norm_sqr() * m.allocation.get(n, i))
            .sum();
        if pbar > 0.0 {
            m.layout.accumulate(
                &mut ideal,
                &m.clone_register(&psi, n),
                n - 1,
                Complex64::new(pbar.sqrt(), 0.0),
            );
        }
    }
    let mut dist = 0.0;
    for probe in 0..m.max_copies() {
        for a in 0..m.layout.register_dim {
            let idx = m.layout.index(a, probe);
            dist += (actual[idx] - ideal[idx]).norm_sqr();
        }
    }
    Ok(dist.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    const S: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn real(v: &[f64]) -> PureState {
        PureState::from_real(v).unwrap()
    }

    fn set(states: &[&[f64]]) -> StateSet {
        StateSet::new(states.iter().map(|s| real(s)).collect()).unwrap()
    }

    fn overlap_pair(s: f64) -> StateSet {
        set(&[&[1.0, 0.0], &[s, (1.0 - s * s).sqrt()]])
    }

    #[test]
    fn allocation_validation() {
        assert!(ProbabilityAllocation::new(vec![vec![0.5, 1.2]]).is_err());
        assert!(ProbabilityAllocation::new(vec![vec![0.6], vec![0.6]]).is_err());
        assert!(matches!(
            ProbabilityAllocation::new(vec![vec![0.1, 0.2], vec![0.1]]),
            Err(Error::ShapeMismatch { .. })
        ));
        let a = ProbabilityAllocation::new(vec![vec![0.5, 0.25], vec![0.5, 0.75]]).unwrap();
        assert_eq!(a.get(2, 1), 0.75);
        assert_eq!(a.total_success(1), 1.0);
    }

    #[test]
    fn residual_with_zero_allocation_is_gram() {
        let g = gram_matrix(&overlap_pair(0.5));
        let r = residual(&g, &ProbabilityAllocation::zeros(2, 2), 2).unwrap();
        assert_eq!(r.matrix(), &g);
    }

    #[test]
    fn residual_of_perfect_orthogonal_cloning_vanishes() {
        let g = HermitianMatrix::identity(3);
        let alloc = ProbabilityAllocation::new(vec![vec![0.0; 3], vec![1.0; 3]]).unwrap();
        let r = residual(&g, &alloc, 2).unwrap();
        assert_eq!(r.matrix(), &HermitianMatrix::zeros(3));
    }

    #[test]
    fn residual_at_duan_guo_boundary() {
        let g = gram_matrix(&overlap_pair(0.5));
        let alloc = ProbabilityAllocation::state_uniform(&[2.0 / 3.0], 2).unwrap();
        let r = residual(&g, &alloc, 1).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((r.matrix()[(i, j)].re - 1.0 / 3.0).abs() < 1e-15);
            }
        }
        let f = feasibility(&r, 1e-9).unwrap();
        assert!(f.min_eigenvalue.abs() < 1e-15);
        assert!(f.feasible);
    }

    #[test]
    fn residual_shape_mismatch() {
        let g = gram_matrix(&overlap_pair(0.5));
        assert!(matches!(
            residual(&g, &ProbabilityAllocation::zeros(2, 2), 1),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn feasibility_examples() {
        let zero = ResidualMatrix(HermitianMatrix::zeros(2));
        assert!(is_feasible(&zero, 1e-9).unwrap());
        let g = gram_matrix(&overlap_pair(0.5));
        let alloc = ProbabilityAllocation::state_uniform(&[0.9], 2).unwrap();
        let r = residual(&g, &alloc, 1).unwrap();
        let f = feasibility(&r, 1e-9).unwrap();
        assert!(!f.feasible);
        assert!(f.min_eigenvalue < 0.0);
        assert!(is_feasible(&r, 0.0).is_err());
    }

    #[test]
    fn orthogonal_perfect_cloner() {
        let s = set(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let alloc = ProbabilityAllocation::state_uniform(&[1.0], 2).unwrap();
        let m = synthesize(&s, 1, &alloc, &SynthesisOptions::default()).unwrap();
        assert_eq!(m.failure_branches(), 0);
        assert_eq!(m.probe_dim(), 2);
        assert_eq!(m.composite_dim(), 8);
        let u = m.unitary().unwrap();
        // |i⟩|0⟩|P⟩ -> |i⟩|i⟩|P_1⟩; P is probe index 1, P_1 is probe index 0
        let l = m.layout();
        let src0 = l.index(0, 1);
        let src1 = l.index(2, 1);
        assert!((u[(l.index(0, 0), src0)] - 1.0).norm() < 1e-12);
        assert!((u[(l.index(3, 0), src1)] - 1.0).norm() < 1e-12);
        let rep = validate_machine(&m).unwrap();
        assert!(rep.passed);
        assert!(rep.overlap_error < 1e-12 && rep.normalization_error < 1e-12);
        assert!(rep.unitarity_defect.unwrap() < 1e-12);
    }

    #[test]
    fn duan_guo_machine_has_single_failure_branch() {
        let s = overlap_pair(0.5);
        let alloc = ProbabilityAllocation::state_uniform(&[2.0 / 3.0], 2).unwrap();
        let m = synthesize(&s, 1, &alloc, &SynthesisOptions::default()).unwrap();
        assert_eq!(m.failure_branches(), 1);
        for i in 0..2 {
            assert!((m.failure_probability(i, 1) - 1.0 / 3.0).abs() < 1e-9);
        }
        let rep = validate_machine(&m).unwrap();
        assert!(rep.passed, "{rep:?}");
        assert!(rep.overlap_error < 1e-9 && rep.normalization_error < 1e-9);
    }

    #[test]
    fn zero_allocation_never_clones() {
        let s = overlap_pair(0.3);
        let alloc = ProbabilityAllocation::zeros(2, 2);
        let m = synthesize(&s, 2, &alloc, &SynthesisOptions::default()).unwrap();
        assert_eq!(m.failure_branches(), 2);
        for i in 0..2 {
            let f: f64 = (1..=2).map(|l| m.failure_probability(i, l)).sum();
            assert!((f - 1.0).abs() < 1e-12);
        }
        assert!(validate_machine(&m).unwrap().passed);
    }

    #[test]
    fn corrupted_allocation_is_flagged() {
        let s = overlap_pair(0.5);
        let alloc = ProbabilityAllocation::state_uniform(&[2.0 / 3.0], 2).unwrap();
        let mut m = synthesize(&s, 1, &alloc, &SynthesisOptions::default()).unwrap();
        let scaled = alloc
            .rows()
            .iter()
            .map(|r| r.iter().map(|x| x * 1.01).collect())
            .collect();
        m.allocation = ProbabilityAllocation::new(scaled).unwrap();
        let rep = validate_machine(&m).unwrap();
        assert!(!rep.normalization_ok);
        assert!(!rep.passed);
        assert!(rep.overlap_ok);
    }

    #[test]
    fn synthesis_errors() {
        let dependent = set(&[&[1.0, 0.0], &[0.0, 1.0], &[S, S]]);
        let alloc = ProbabilityAllocation::zeros(1, 3);
        assert!(matches!(
            synthesize(&dependent, 1, &alloc, &SynthesisOptions::default()),
            Err(Error::DependentSet(_))
        ));
        let s = overlap_pair(0.5);
        let alloc = ProbabilityAllocation::state_uniform(&[0.9], 2).unwrap();
        assert!(matches!(
            synthesize(&s, 1, &alloc, &SynthesisOptions::default()),
            Err(Error::Infeasible(_))
        ));
        let opts = SynthesisOptions {
            blank_index: 2,
            ..Default::default()
        };
        assert!(matches!(
            synthesize(&s, 1, &ProbabilityAllocation::zeros(1, 2), &opts),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn dimension_cap_skips_unitary() {
        let s = overlap_pair(0.5);
        let alloc = ProbabilityAllocation::state_uniform(&[0.3, 0.3], 2).unwrap();
        let opts = SynthesisOptions {
            unitary_dim_cap: 8,
            ..Default::default()
        };
        let m = synthesize(&s, 2, &alloc, &opts).unwrap();
        assert!(m.unitary_skipped());
        assert!(matches!(
            linearity_witness(&m, &[Complex64::new(1.0, 0.0); 2]),
            Err(Error::MissingUnitary(_))
        ));
        let rep = validate_machine(&m).unwrap();
        assert!(rep.unitarity_defect.is_none() && rep.passed);
    }

    #[test]
    fn witness_examples() {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let dg = synthesize(
            &overlap_pair(0.5),
            1,
            &ProbabilityAllocation::state_uniform(&[2.0 / 3.0], 2).unwrap(),
            &SynthesisOptions::default(),
        )
        .unwrap();
        assert!(linearity_witness(&dg, &[one, zero]).unwrap() < 1e-10);
        assert!(linearity_witness(&dg, &[zero, Complex64::new(0.0, 2.0)]).unwrap() < 1e-10);
        assert!(linearity_witness(&dg, &[one * S, one * S]).unwrap() > 1e-3);

        let orth = synthesize(
            &set(&[&[1.0, 0.0], &[0.0, 1.0]]),
            1,
            &ProbabilityAllocation::state_uniform(&[1.0], 2).unwrap(),
            &SynthesisOptions::default(),
        )
        .unwrap();
        // entangled (|00⟩+|11⟩)/√2 versus |+⟩|+⟩: distance √(2 − √2)
        let w = linearity_witness(&orth, &[one, one]).unwrap();
        assert!((w - (2.0 - 2f64.sqrt()).sqrt()).abs() < 1e-12);
        assert!(linearity_witness(&orth, &[zero, zero]).is_err());
    }
}
