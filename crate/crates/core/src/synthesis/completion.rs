//! Completion of a Gram-preserving map `v_i -> w_i` to a full unitary.
//!
//! Both families are orthonormalized by modified Gram-Schmidt with one
//! reorthogonalization pass, giving `q_a` and `r_a` with identical
//! triangular coefficients. The unitary is then accumulated as a product of
//! rank-one phase shifts and Householder reflections, each sending the
//! current image of `q_a` onto `r_a` while fixing `r_0 .. r_{a-1}`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hilbert::{dot, CMatrix};

/// Relative residual norm below which a vector counts as dependent on its predecessors.
const DEPENDENCE_TOL: f64 = 1e-10;

/// Modified Gram-Schmidt with one reorthogonalization pass.
pub(crate) fn orthonormalize(vectors: &[Vec<Complex64>]) -> Result<Vec<Vec<Complex64>>> {
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let original = norm(v);
        let mut x = v.clone();
        for _pass in 0..2 {
            for q in &basis {
                let coef = dot(q, &x);
                for (xi, qi) in x.iter_mut().zip(q) {
                    *xi -= coef * qi;
                }
            }
        }
        let residual = norm(&x);
        if residual.is_nan() || residual <= DEPENDENCE_TOL * original.max(f64::MIN_POSITIVE) {
            return Err(Error::DependentSet(residual));
        }
        for xi in &mut x {
            *xi /= residual;
        }
        basis.push(x);
    }
    Ok(basis)
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt()
}

/// Returns `y = x^† U` as a row vector.
fn covector_times(x: &[Complex64], u: &CMatrix) -> Vec<Complex64> {
    let n = u.cols();
    let mut y = vec![Complex64::new(0.0, 0.0); n];
    for (r, &xr) in x.iter().enumerate() {
        if xr == Complex64::new(0.0, 0.0) {
            continue;
        }
        let c = xr.conj();
        for (yj, &urj) in y.iter_mut().zip(u.row(r)) {
            *yj += c * urj;
        }
    }
    y
}

/// `U <- U + scale * x (x^† U)`.
fn rank_one_update(u: &mut CMatrix, x: &[Complex64], scale: Complex64) {
    let y = covector_times(x, u);
    let n = u.cols();
    for (r, &xr) in x.iter().enumerate() {
        let a = scale * xr;
        if a == Complex64::new(0.0, 0.0) {
            continue;
        }
        for j in 0..n {
            u[(r, j)] += a * y[j];
        }
    }
}

/// Builds a `dim x dim` unitary with `U v_i = w_i`, given `⟨v_i|v_j⟩ = ⟨w_i|w_j⟩`.
pub(crate) fn complete_unitary(
    inputs: &[Vec<Complex64>],
    outputs: &[Vec<Complex64>],
    dim: usize,
) -> Result<CMatrix> {
    if inputs.len() != outputs.len() {
        return Err(Error::DimensionMismatch {
            expected: inputs.len(),
            found: outputs.len(),
        });
    }
    if let Some(bad) = inputs.iter().chain(outputs).find(|v| v.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: bad.len(),
        });
    }
    let q = orthonormalize(inputs)?;
    let r = orthonormalize(outputs)?;

    let mut u = CMatrix::identity(dim);
    for (qa, ra) in q.iter().zip(&r) {
        let x = u.mul_vec(qa)?;
        let z = dot(&x, ra);
        let phase = if z.norm() > 0.0 {
            z / z.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        if (phase - 1.0).norm() > 0.0 {
            rank_one_update(&mut u, &x, phase - 1.0);
        }
        let x: Vec<Complex64> = x.iter().map(|&xi| xi * phase).collect();
        let mut diff: Vec<Complex64> = x.iter().zip(ra).map(|(&a, &b)| a - b).collect();
        let dn = norm(&diff);
        if dn > 1e-15 {
            for d in &mut diff {
                *d /= dn;
            }
            rank_one_update(&mut u, &diff, Complex64::new(-2.0, 0.0));
        }
    }
    Ok(u)
}
