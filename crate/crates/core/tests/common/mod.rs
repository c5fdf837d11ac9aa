//! Instance generators and independent reference computations shared by
//! the integration tests.
#![allow(dead_code)]

use nqcm::hilbert::{gram_matrix, min_eigenvalue, HermitianMatrix, PureState, StateSet};
use nqcm::optimizer::{max_per_state_success, WeightVector, DEFAULT_ROUNDS};
use nqcm::synthesis::ProbabilityAllocation;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub use rand::SeedableRng;
pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Haar-distributed pure state from normalized complex Gaussian amplitudes.
pub fn random_state(rng: &mut TestRng, d: usize) -> PureState {
    let v: Vec<Complex64> = (0..d)
        .map(|_| c(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    PureState::normalized(v).unwrap()
}

pub fn random_set(rng: &mut TestRng, d: usize, k: usize) -> StateSet {
    StateSet::new((0..k).map(|_| random_state(rng, d)).collect()).unwrap()
}

/// Random set whose Gram matrix has minimum eigenvalue at least `floor`.
pub fn well_conditioned_set(rng: &mut TestRng, d: usize, k: usize, floor: f64) -> StateSet {
    loop {
        let set = random_set(rng, d, k);
        if min_eigenvalue(&gram_matrix(&set)).unwrap() >= floor {
            return set;
        }
    }
}

/// `{(1, 0), (s, √(1 − s²))}`.
pub fn overlap_pair(s: f64) -> StateSet {
    StateSet::new(vec![
        PureState::from_real(&[1.0, 0.0]).unwrap(),
        PureState::from_real(&[s, (1.0 - s * s).sqrt()]).unwrap(),
    ])
    .unwrap()
}

pub fn random_weights(rng: &mut TestRng, m: usize) -> WeightVector {
    loop {
        let w: Vec<f64> = (0..m)
            .map(|_| {
                if rng.gen_bool(0.25) {
                    0.0
                } else {
                    rng.gen::<f64>()
                }
            })
            .collect();
        if let Ok(w) = WeightVector::new(w) {
            return w;
        }
    }
}

/// Per-state distribution over `m` branches summing to 1.
pub fn random_total_success(rng: &mut TestRng, m: usize, k: usize) -> ProbabilityAllocation {
    let mut rows = vec![vec![0.0; k]; m];
    for i in 0..k {
        let raw: Vec<f64> = (0..m).map(|_| rng.gen::<f64>() + 1e-3).collect();
        let total: f64 = raw.iter().sum();
        for (row, x) in rows.iter_mut().zip(&raw) {
            row[i] = x / total;
        }
    }
    ProbabilityAllocation::new(rows).unwrap()
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub set: StateSet,
    pub max_copies: usize,
    pub allocation: ProbabilityAllocation,
}

/// Random feasible problem with `d ∈ {2, 3}`, `2 ≤ k ≤ d`, `M ∈ {1, 2, 3}`.
///
/// Even draws use the optimizer's boundary allocation, odd draws a random
/// interior allocation shrunk until feasible.
pub fn random_instance(rng: &mut TestRng, index: usize) -> Instance {
    let d = rng.gen_range(2..=3);
    let k = rng.gen_range(2..=d);
    let m = rng.gen_range(1..=3);
    let set = well_conditioned_set(rng, d, k, 0.05);
    let g = gram_matrix(&set);
    let allocation = if index.is_multiple_of(2) {
        max_per_state_success(&g, m, &random_weights(rng, m), DEFAULT_ROUNDS)
            .unwrap()
            .allocation
    } else {
        interior_allocation(rng, &g, m)
    };
    Instance {
        set,
        max_copies: m,
        allocation,
    }
}

fn interior_allocation(rng: &mut TestRng, g: &HermitianMatrix, m: usize) -> ProbabilityAllocation {
    let k = g.size();
    let mut rows: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..k).map(|_| rng.gen::<f64>()).collect())
        .collect();
    for i in 0..k {
        let total: f64 = rows.iter().map(|r| r[i]).sum();
        let cap = rng.gen::<f64>();
        for row in &mut rows {
            row[i] *= cap / total.max(1.0);
        }
    }
    loop {
        let a = ProbabilityAllocation::new(rows.clone()).unwrap();
        if reference_psd(&reference_residual(g, &a, m), 1e-12) {
            return a;
        }
        for row in &mut rows {
            for x in row.iter_mut() {
                *x *= 0.5;
            }
        }
    }
}

/// `R_ij = G_ij − Σ_n √(p_n^(i) p_n^(j)) G_ij^{n+1}`, entry by entry.
pub fn reference_residual(
    g: &HermitianMatrix,
    a: &ProbabilityAllocation,
    m: usize,
) -> Vec<Vec<Complex64>> {
    let k = g.size();
    let mut r = vec![vec![c(0.0, 0.0); k]; k];
    for i in 0..k {
        for j in 0..k {
            let mut x = g[(i, j)];
            for n in 1..=m {
                let mut power = c(1.0, 0.0);
                for _ in 0..=n {
                    power *= g[(i, j)];
                }
                x -= (a.get(n, i) * a.get(n, j)).sqrt() * power;
            }
            r[i][j] = x;
        }
    }
    r
}

/// PSD test by pivoted `LDL^†` with a relative floor, independent of any eigensolver.
pub fn reference_psd(h: &[Vec<Complex64>], rel_tol: f64) -> bool {
    let k = h.len();
    let scale = h.iter().flatten().map(|z| z.norm()).fold(1.0_f64, f64::max);
    let floor = rel_tol * scale;
    let mut a: Vec<Vec<Complex64>> = h.to_vec();
    let mut alive: Vec<usize> = (0..k).collect();
    while !alive.is_empty() {
        let (pos, &p) = alive
            .iter()
            .enumerate()
            .max_by(|x, y| a[*x.1][*x.1].re.total_cmp(&a[*y.1][*y.1].re))
            .unwrap();
        let d = a[p][p].re;
        if d < -floor {
            return false;
        }
        alive.remove(pos);
        if d <= floor {
            // every remaining diagonal is ~0, so PSD forces the block to ~0
            let mut worst: f64 = 0.0;
            for &i in alive.iter().chain(std::iter::once(&p)) {
                for &j in &alive {
                    worst = worst.max(a[i][j].norm());
                }
            }
            return worst <= floor;
        }
        for &i in &alive {
            for &j in &alive {
                let upd = a[i][p] * a[p][j] / d;
                a[i][j] -= upd;
            }
        }
    }
    true
}

/// Closed-form eigenvalues of the Hermitian `[[a, b], [conj b, d]]`, larger first.
pub fn eig2(a: f64, b: Complex64, d: f64) -> (f64, f64) {
    let mean = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    (mean + rad, mean - rad)
}
