//! Dense complex linear algebra on pure states and their Gram matrices.
//!
//! Tensor products use the leftmost-slowest index convention: for
//! `a ⊗ b` the amplitude at `i * dim(b) + j` is `a[i] * b[j]`.

mod eigen;
mod matrix;
mod state;

pub use eigen::{eigendecompose_hermitian, EigenDecomposition, CONVERGENCE_TOL, MAX_SWEEPS};
pub use matrix::{CMatrix, HermitianMatrix};
pub use state::{PureState, StateSet, NORM_TOL};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default threshold on the smallest Gram eigenvalue for linear independence.
pub const INDEPENDENCE_TOL: f64 = 1e-8;
/// Relative band `[-PSD_TOL * max(1, λ_max), 0)` of eigenvalues clamped to zero.
pub const PSD_TOL: f64 = 1e-9;

/// `⟨a|b⟩`, conjugate-linear in `a`.
pub fn inner_product(a: &PureState, b: &PureState) -> Result<Complex64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(dot(a.amplitudes(), b.amplitudes()))
}

/// Raw `⟨a|b⟩` on amplitude slices of equal length.
pub(crate) fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Kronecker product of raw amplitude vectors, leftmost factor slowest.
pub(crate) fn kron(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &x in a {
        out.extend(b.iter().map(|&y| x * y));
    }
    out
}

/// `f_1 ⊗ f_2 ⊗ ... ⊗ f_n`.
pub fn tensor_product(factors: &[&PureState]) -> Result<PureState> {
    let (first, rest) = factors
        .split_first()
        .ok_or(Error::Empty("tensor factors"))?;
    let mut acc = first.amplitudes().to_vec();
    for f in rest {
        acc = kron(&acc, f.amplitudes());
    }
    PureState::new(acc)
}

/// `ψ^{⊗n}` for `n ≥ 1`.
pub fn tensor_power(state: &PureState, n: usize) -> Result<PureState> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "tensor power must be at least 1".into(),
        ));
    }
    let factors = vec![state; n];
    tensor_product(&factors)
}

/// Gram matrix `G_ij = ⟨ψ_i|ψ_j⟩`.
pub fn gram_matrix(set: &StateSet) -> HermitianMatrix {
    let k = set.len();
    let mut g = CMatrix::zeros(k, k);
    for i in 0..k {
        g[(i, i)] = Complex64::new(1.0, 0.0);
        for j in i + 1..k {
            let z = dot(set.states()[i].amplitudes(), set.states()[j].amplitudes());
            g[(i, j)] = z;
            g[(j, i)] = z.conj();
        }
    }
    HermitianMatrix::symmetrized(g)
}

/// Elementwise power `G^{∘m}`; for a Gram matrix this is the Gram matrix of `m` tensor copies.
pub fn hadamard_power(g: &HermitianMatrix, m: u32) -> Result<HermitianMatrix> {
    if m < 1 {
        return Err(Error::InvalidPower(m));
    }
    let n = g.size();
    let mut out = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = g[(i, j)].powu(m);
        }
    }
    Ok(HermitianMatrix::symmetrized(out))
}

pub fn min_eigenvalue(h: &HermitianMatrix) -> Result<f64> {
    Ok(eigendecompose_hermitian(h)?.min())
}

/// Returns whether the smallest Gram eigenvalue exceeds `tol`, together with that eigenvalue.
pub fn is_linearly_independent(set: &StateSet, tol: f64) -> Result<(bool, f64)> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "independence tolerance must be positive, got {tol}"
        )));
    }
    let lambda = min_eigenvalue(&gram_matrix(set))?;
    Ok((lambda > tol, lambda))
}

/// Factors a positive semidefinite `R` as `C^† C` with `C = diag(√λ) V^†`.
///
/// Eigenvalues in `[-PSD_TOL * max(1, λ_max), 0)` are clamped to zero, so
/// the corresponding rows of `C` vanish.
pub fn conjugate_factor(r: &HermitianMatrix) -> Result<CMatrix> {
    let eig = eigendecompose_hermitian(r)?;
    let floor = -PSD_TOL * eig.max().max(1.0);
    if eig.min() < floor {
        return Err(Error::Indefinite(eig.min()));
    }
    let k = r.size();
    let mut c = CMatrix::zeros(k, k);
    for (l, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda <= 0.0 {
            continue;
        }
        let root = lambda.sqrt();
        for j in 0..k {
            c[(l, j)] = eig.eigenvectors[(j, l)].conj() * root;
        }
    }
    Ok(c)
}
