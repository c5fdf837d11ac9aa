//! Success-probability allocation under the residual PSD constraint, and
//! the closed-form pairwise bounds.
//!
//! Both allocators search against a feasibility tolerance of
//! [`SEARCH_TOL`], much tighter than the synthesis default, so that their
//! results synthesize with normalization errors far below `1e-9` after
//! eigenvalue clamping.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{eigendecompose_hermitian, HermitianMatrix, INDEPENDENCE_TOL, PSD_TOL};
use crate::synthesis::{feasibility, residual, ProbabilityAllocation};

/// Bisection stops once the bracket is narrower than this.
pub const BISECTION_WIDTH: f64 = 1e-9;
/// Relative eigenvalue tolerance used while searching.
pub const SEARCH_TOL: f64 = 1e-12;
/// Bisection steps per coordinate in the ascent.
pub const COORDINATE_STEPS: usize = 40;
pub const DEFAULT_ROUNDS: usize = 50;
/// A full ascent cycle improving the objective by less than this ends the search.
pub const IMPROVEMENT_TOL: f64 = 1e-9;
/// Gram rows whose sorted moduli agree to this tolerance are treated as symmetric.
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Slack allowed in [`BoundReport::satisfied`].
pub const BOUND_SLACK: f64 = 1e-9;

/// Nonnegative per-branch weights, not all zero.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::Empty("weight vector"));
        }
        if w.iter().any(|&x| !x.is_finite() || x < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "weights must be finite and nonnegative: {w:?}"
            )));
        }
        if w.iter().sum::<f64>() <= 0.0 {
            return Err(Error::InvalidArgument(
                "weights must not all be zero".into(),
            ));
        }
        Ok(Self(w))
    }

    pub fn ones(branches: usize) -> Result<Self> {
        Self::new(vec![1.0; branches])
    }

    /// All weight on branch `n` (1-based).
    pub fn single_branch(branches: usize, n: usize) -> Result<Self> {
        if n == 0 || n > branches {
            return Err(Error::IndexOutOfRange {
                index: n,
                len: branches,
            });
        }
        let mut w = vec![0.0; branches];
        w[n - 1] = 1.0;
        Self::new(w)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// `w / Σ w`.
    pub fn normalized(&self) -> Vec<f64> {
        let total: f64 = self.0.iter().sum();
        self.0.iter().map(|x| x / total).collect()
    }
}

/// An allocation together with its objective value.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    pub allocation: ProbabilityAllocation,
    pub objective: f64,
}

/// `Σ_{n,i} ŵ_n p_n^(i) / k` with normalized weights `ŵ`.
pub fn weighted_objective(alloc: &ProbabilityAllocation, w: &WeightVector) -> f64 {
    let wn = w.normalized();
    let k = alloc.states() as f64;
    alloc
        .rows()
        .iter()
        .zip(&wn)
        .map(|(row, wi)| wi * row.iter().sum::<f64>())
        .sum::<f64>()
        / k
}

fn check_inputs(g: &HermitianMatrix, max_copies: usize, w: &WeightVector) -> Result<()> {
    if max_copies == 0 {
        return Err(Error::InvalidArgument(
            "max_copies must be at least 1".into(),
        ));
    }
    if w.len() != max_copies {
        return Err(Error::DimensionMismatch {
            expected: max_copies,
            found: w.len(),
        });
    }
    let eig = eigendecompose_hermitian(g)?;
    if eig.min() < -PSD_TOL * eig.max().max(1.0) {
        return Err(Error::Indefinite(eig.min()));
    }
    if eig.min() <= INDEPENDENCE_TOL {
        return Err(Error::DependentSet(eig.min()));
    }
    Ok(())
}

fn search_feasible(
    g: &HermitianMatrix,
    alloc: &ProbabilityAllocation,
    max_copies: usize,
) -> Result<bool> {
    Ok(feasibility(&residual(g, alloc, max_copies)?, SEARCH_TOL)?.feasible)
}

fn scaled(weights: &[f64], t: f64, states: usize) -> Result<ProbabilityAllocation> {
    let per_branch: Vec<f64> = weights.iter().map(|w| (t * w).min(1.0)).collect();
    ProbabilityAllocation::state_uniform(&per_branch, states)
}

/// Largest `t ∈ [0, 1]` such that `p_n^(i) = t ŵ_n` keeps the residual PSD.
///
/// The objective reported is `t`. The feasible set in `t` is an interval
/// `[0, t*]` because the residual is affine in `t` with a negative
/// semidefinite slope, so bisection brackets `t*`.
pub fn max_uniform_success(
    g: &HermitianMatrix,
    max_copies: usize,
    w: &WeightVector,
) -> Result<Optimum> {
    check_inputs(g, max_copies, w)?;
    let k = g.size();
    let wn = w.normalized();
    if search_feasible(g, &scaled(&wn, 1.0, k)?, max_copies)? {
        return Ok(Optimum {
            allocation: scaled(&wn, 1.0, k)?,
            objective: 1.0,
        });
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while hi - lo >= BISECTION_WIDTH {
        let mid = 0.5 * (lo + hi);
        if search_feasible(g, &scaled(&wn, mid, k)?, max_copies)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Optimum {
        allocation: scaled(&wn, lo, k)?,
        objective: lo,
    })
}

/// State-dependent allocation by coordinate ascent from the uniform optimum.
///
/// Coordinates are visited with the branch index outer and the state index
/// inner, both ascending, skipping zero-weight branches. Each coordinate is
/// raised by bisection towards the largest value that keeps the state's
/// total success probability at most 1. Afterwards, states whose Gram rows
/// agree up to permutation have their probabilities averaged when the
/// averaged point stays feasible.
///
/// This is a local heuristic; no global optimality is claimed.
pub fn max_per_state_success(
    g: &HermitianMatrix,
    max_copies: usize,
    w: &WeightVector,
    rounds: usize,
) -> Result<Optimum> {
    if rounds == 0 {
        return Err(Error::InvalidArgument("rounds must be at least 1".into()));
    }
    let start = max_uniform_success(g, max_copies, w)?;
    let k = g.size();
    let wn = w.normalized();
    let mut p: Vec<Vec<f64>> = start.allocation.rows().to_vec();
    let mut objective = weighted_objective(&start.allocation, w);

    for _ in 0..rounds {
        let before = objective;
        for n in 0..max_copies {
            if wn[n] == 0.0 {
                continue;
            }
            for i in 0..k {
                let others: f64 = (0..max_copies).filter(|&m| m != n).map(|m| p[m][i]).sum();
                let cap = (1.0 - others).clamp(0.0, 1.0);
                if cap <= p[n][i] {
                    continue;
                }
                let mut candidate = p.clone();
                candidate[n][i] = cap;
                if search_feasible(
                    g,
                    &ProbabilityAllocation::new(candidate.clone())?,
                    max_copies,
                )? {
                    p = candidate;
                    continue;
                }
                let (mut lo, mut hi) = (p[n][i], cap);
                for _ in 0..COORDINATE_STEPS {
                    let mid = 0.5 * (lo + hi);
                    candidate[n][i] = mid;
                    if search_feasible(
                        g,
                        &ProbabilityAllocation::new(candidate.clone())?,
                        max_copies,
                    )? {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                p[n][i] = lo;
            }
        }
        objective = weighted_objective(&ProbabilityAllocation::new(p.clone())?, w);
        if objective - before < IMPROVEMENT_TOL {
            break;
        }
    }

    let mut allocation = ProbabilityAllocation::new(p)?;
    if let Some(sym) = symmetrized(g, &allocation)? {
        if search_feasible(g, &sym, max_copies)? {
            allocation = sym;
        }
    }
    let objective = weighted_objective(&allocation, w);
    Ok(Optimum {
        allocation,
        objective,
    })
}

/// Groups states whose Gram rows have equal sorted moduli.
fn symmetry_classes(g: &HermitianMatrix) -> Vec<Vec<usize>> {
    let k = g.size();
    let signatures: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            let mut row: Vec<f64> = (0..k).map(|j| g[(i, j)].norm()).collect();
            row.sort_by(f64::total_cmp);
            row
        })
        .collect();
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for i in 0..k {
        let found = classes.iter_mut().find(|c| {
            signatures[c[0]]
                .iter()
                .zip(&signatures[i])
                .all(|(a, b)| (a - b).abs() <= SYMMETRY_TOL)
        });
        match found {
            Some(c) => c.push(i),
            None => classes.push(vec![i]),
        }
    }
    classes
}

fn symmetrized(
    g: &HermitianMatrix,
    alloc: &ProbabilityAllocation,
) -> Result<Option<ProbabilityAllocation>> {
    let classes = symmetry_classes(g);
    if classes.iter().all(|c| c.len() == 1) {
        return Ok(None);
    }
    let mut rows = alloc.rows().to_vec();
    for row in &mut rows {
        for class in &classes {
            let mean = class.iter().map(|&i| row[i]).sum::<f64>() / class.len() as f64;
            for &i in class {
                row[i] = mean;
            }
        }
    }
    Ok(Some(ProbabilityAllocation::new(rows)?))
}

fn check_overlap(s: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::InvalidArgument(format!(
            "overlap modulus must lie in [0, 1], got {s}"
        )));
    }
    Ok(())
}

/// `1 / (1 + s)`.
pub fn duan_guo_bound(s: f64) -> Result<f64> {
    check_overlap(s)?;
    Ok(1.0 / (1.0 + s))
}

/// `(1 − s) / (1 − s^m)`, where `m` is the exponent in the denominator
/// (the copy count `n + 1` of the branch). Returns 1 for `s = 0` or
/// `m = 1`, and the limit `1/m` at `s = 1`.
pub fn chefles_barnett_bound(s: f64, m: u32) -> Result<f64> {
    check_overlap(s)?;
    if m == 0 {
        return Err(Error::InvalidArgument("exponent must be at least 1".into()));
    }
    if s == 0.0 || m == 1 {
        return Ok(1.0);
    }
    if s == 1.0 {
        return Ok(1.0 / m as f64);
    }
    Ok((1.0 - s) / (1.0 - s.powi(m as i32)))
}

/// `D²(a, b) = 2(1 − |⟨a|b⟩|)` given the overlap modulus.
pub fn min_normed_distance_sq(s: f64) -> f64 {
    2.0 * (1.0 - s)
}

/// Pairwise necessary condition for feasibility, in probability and distance form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub i: usize,
    pub j: usize,
    /// `s = |G_ij|`.
    pub overlap: f64,
    /// `½ Σ_n (p_n^(i) + p_n^(j)) (1 − s^{n+1})`.
    pub lhs: f64,
    /// `1 − s`.
    pub rhs: f64,
    /// `Σ_n p̄_n D²(ψ_i^{⊗(n+1)}, ψ_j^{⊗(n+1)})`.
    pub distance_lhs: f64,
    /// `D²(ψ_i, ψ_j)`.
    pub distance_rhs: f64,
    pub satisfied: bool,
}

pub fn check_pair_bound(
    alloc: &ProbabilityAllocation,
    g: &HermitianMatrix,
    i: usize,
    j: usize,
) -> Result<BoundReport> {
    let k = g.size();
    if alloc.states() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: alloc.states(),
        });
    }
    for idx in [i, j] {
        if idx >= k {
            return Err(Error::IndexOutOfRange { index: idx, len: k });
        }
    }
    if i == j {
        return Err(Error::InvalidArgument(
            "pair bound needs two distinct states".into(),
        ));
    }
    let s = g[(i, j)].norm().min(1.0);
    let mut lhs = 0.0;
    let mut distance_lhs = 0.0;
    for n in 1..=alloc.branches() {
        let pbar = 0.5 * (alloc.get(n, i) + alloc.get(n, j));
        let sn = s.powi(n as i32 + 1);
        lhs += pbar * (1.0 - sn);
        distance_lhs += pbar * min_normed_distance_sq(sn);
    }
    let rhs = 1.0 - s;
    Ok(BoundReport {
        i,
        j,
        overlap: s,
        lhs,
        rhs,
        distance_lhs,
        distance_rhs: min_normed_distance_sq(s),
        satisfied: lhs <= rhs + BOUND_SLACK,
    })
}

/// Bound reports for every pair `i < j`.
pub fn check_all_pairs(
    alloc: &ProbabilityAllocation,
    g: &HermitianMatrix,
) -> Result<Vec<BoundReport>> {
    let k = g.size();
    let mut out = Vec::with_capacity(k * k.saturating_sub(1) / 2);
    for i in 0..k {
        for j in i + 1..k {
            out.push(check_pair_bound(alloc, g, i, j)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{gram_matrix, PureState, StateSet};
    use crate::synthesis::is_feasible;

    fn pair_gram(s: f64) -> HermitianMatrix {
        gram_matrix(
            &StateSet::new(vec![
                PureState::from_real(&[1.0, 0.0]).unwrap(),
                PureState::from_real(&[s, (1.0 - s * s).sqrt()]).unwrap(),
            ])
            .unwrap(),
        )
    }

    #[test]
    fn weight_vector_validation() {
        assert!(WeightVector::new(vec![]).is_err());
        assert!(WeightVector::new(vec![0.0, 0.0]).is_err());
        assert!(WeightVector::new(vec![1.0, -0.1]).is_err());
        assert_eq!(
            WeightVector::new(vec![1.0, 3.0]).unwrap().normalized(),
            vec![0.25, 0.75]
        );
        assert_eq!(
            WeightVector::single_branch(3, 2).unwrap().as_slice(),
            &[0.0, 1.0, 0.0]
        );
        assert!(WeightVector::single_branch(3, 4).is_err());
    }

    #[test]
    fn uniform_orthogonal_reaches_one() {
        for m in 1..=3 {
            let opt = max_uniform_success(
                &HermitianMatrix::identity(3),
                m,
                &WeightVector::single_branch(m, 1).unwrap(),
            )
            .unwrap();
            assert_eq!(opt.objective, 1.0);
            assert_eq!(opt.allocation.get(1, 2), 1.0);
        }
    }

    #[test]
    fn uniform_duan_guo() {
        let opt = max_uniform_success(&pair_gram(0.5), 1, &WeightVector::ones(1).unwrap()).unwrap();
        assert!((opt.objective - 2.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn uniform_single_branch_reduction() {
        let g = pair_gram(0.5);
        // branch 2 carries 3 copies: (1 - s)/(1 - s^3) = 4/7
        let opt = max_uniform_success(&g, 3, &WeightVector::single_branch(3, 2).unwrap()).unwrap();
        assert!((opt.objective - 4.0 / 7.0).abs() < 1e-6);
        // branch 3 carries 4 copies: (1 - s)/(1 - s^4) = 8/15
        let opt = max_uniform_success(&g, 3, &WeightVector::single_branch(3, 3).unwrap()).unwrap();
        assert!((opt.objective - 8.0 / 15.0).abs() < 1e-6);
    }

    #[test]
    fn uniform_rejects_bad_gram() {
        let dependent = HermitianMatrix::from_real_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let w = WeightVector::ones(1).unwrap();
        assert!(matches!(
            max_uniform_success(&dependent, 1, &w),
            Err(Error::DependentSet(_))
        ));
        let indefinite =
            HermitianMatrix::from_real_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(
            max_uniform_success(&indefinite, 1, &w),
            Err(Error::Indefinite(_))
        ));
        assert!(matches!(
            max_uniform_success(&pair_gram(0.5), 2, &w),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn per_state_orthogonal() {
        let opt = max_per_state_success(
            &HermitianMatrix::identity(2),
            2,
            &WeightVector::single_branch(2, 2).unwrap(),
            DEFAULT_ROUNDS,
        )
        .unwrap();
        assert_eq!(opt.allocation.rows()[1], vec![1.0, 1.0]);
    }

    #[test]
    fn per_state_dominates_uniform() {
        let g = pair_gram(0.5);
        let w = WeightVector::ones(1).unwrap();
        let opt = max_per_state_success(&g, 1, &w, DEFAULT_ROUNDS).unwrap();
        assert!(opt.objective >= 2.0 / 3.0 - 1e-9);
        let r = residual(&g, &opt.allocation, 1).unwrap();
        assert!(is_feasible(&r, PSD_TOL).unwrap());
        // symmetric instance keeps equal probabilities
        let a = &opt.allocation;
        assert!((a.get(1, 0) - a.get(1, 1)).abs() <= 1e-6);
    }

    #[test]
    fn per_state_symmetric_multi_branch() {
        let g = pair_gram(0.3);
        let w = WeightVector::new(vec![1.0, 2.0, 0.5]).unwrap();
        let uni = max_uniform_success(&g, 3, &w).unwrap();
        let opt = max_per_state_success(&g, 3, &w, DEFAULT_ROUNDS).unwrap();
        assert!(opt.objective >= weighted_objective(&uni.allocation, &w) - 1e-12);
        for n in 1..=3 {
            let a = &opt.allocation;
            assert!((a.get(n, 0) - a.get(n, 1)).abs() <= 1e-6);
        }
    }

    #[test]
    fn closed_forms() {
        assert_eq!(duan_guo_bound(0.0).unwrap(), 1.0);
        assert!((duan_guo_bound(0.5).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((duan_guo_bound(1.0 - 1e-12).unwrap() - 0.5).abs() < 1e-11);
        assert!(duan_guo_bound(1.5).is_err());
        assert!((chefles_barnett_bound(0.5, 3).unwrap() - 4.0 / 7.0).abs() < 1e-15);
        assert!(
            (chefles_barnett_bound(0.5, 2).unwrap() - duan_guo_bound(0.5).unwrap()).abs() < 1e-15
        );
        assert_eq!(chefles_barnett_bound(0.0, 4).unwrap(), 1.0);
        assert!((chefles_barnett_bound(1e-12, 4).unwrap() - 1.0).abs() < 1e-11);
        assert_eq!(chefles_barnett_bound(0.7, 1).unwrap(), 1.0);
        assert!(chefles_barnett_bound(0.5, 0).is_err());
    }

    #[test]
    fn pair_bound_examples() {
        let g = pair_gram(0.5);
        let zero = ProbabilityAllocation::zeros(1, 2);
        let r = check_pair_bound(&zero, &g, 0, 1).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert!(r.satisfied);

        let boundary = ProbabilityAllocation::state_uniform(&[2.0 / 3.0], 2).unwrap();
        let r = check_pair_bound(&boundary, &g, 0, 1).unwrap();
        assert!((r.lhs - 0.5).abs() < 1e-15 && (r.rhs - 0.5).abs() < 1e-15);
        assert!(r.satisfied);
        assert!((r.distance_lhs - 2.0 * r.lhs).abs() < 1e-12);
        assert!((r.distance_rhs - 2.0 * r.rhs).abs() < 1e-12);

        let bad = ProbabilityAllocation::state_uniform(&[0.9], 2).unwrap();
        let r = check_pair_bound(&bad, &g, 0, 1).unwrap();
        assert!(r.lhs > r.rhs && !r.satisfied);

        assert!(check_pair_bound(&zero, &g, 0, 0).is_err());
        assert!(matches!(
            check_pair_bound(&zero, &g, 0, 2),
            Err(Error::IndexOutOfRange { .. })
        ));
    }
}
