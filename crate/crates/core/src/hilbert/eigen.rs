//! Cyclic Jacobi eigensolver for complex Hermitian matrices.
//!
//! Each rotation annihilates one off-diagonal pair `(p, q)`. The complex
//! entry `a_pq = r e^{iφ}` is first made real by the phase `diag(1, e^{-iφ})`
//! on column `q`, after which the classical real rotation applies. The
//! combined 2x2 unitary is
//!
//! ```text
//! J = [[ c,            s           ],
//!      [ -s e^{-iφ},   c e^{-iφ}   ]]
//! ```
//!
//! and the iteration updates `A <- J^† A J`, `V <- V J`.

use num_complex::Complex64;

use super::matrix::{CMatrix, HermitianMatrix};
use crate::error::{Error, Result};

/// Hard cap on full sweeps over the upper triangle.
pub const MAX_SWEEPS: usize = 100;
/// Convergence when `off(A) < CONVERGENCE_TOL * ‖H‖_F`.
pub const CONVERGENCE_TOL: f64 = 1e-13;

/// Eigenvalues (descending) and the matching orthonormal eigenvector columns.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl EigenDecomposition {
    /// Rebuilds `V diag(λ) V^†`.
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.eigenvalues.len();
        let mut out = CMatrix::zeros(n, n);
        for (k, &lambda) in self.eigenvalues.iter().enumerate() {
            for i in 0..n {
                let vi = self.eigenvectors[(i, k)] * lambda;
                for j in 0..n {
                    out[(i, j)] += vi * self.eigenvectors[(j, k)].conj();
                }
            }
        }
        out
    }

    pub fn min(&self) -> f64 {
        *self.eigenvalues.last().expect("non-empty decomposition")
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues[0]
    }
}

fn off_diagonal_norm(a: &CMatrix) -> f64 {
    let n = a.rows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a[(i, j)].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

pub fn eigendecompose_hermitian(h: &HermitianMatrix) -> Result<EigenDecomposition> {
    let n = h.size();
    if n == 0 {
        return Err(Error::Empty("matrix"));
    }
    let mut a = h.matrix().clone();
    let mut v = CMatrix::identity(n);
    let threshold = CONVERGENCE_TOL * a.frobenius_norm();

    let mut off = off_diagonal_norm(&a);
    let mut sweeps = 0;
    while off > threshold {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence {
                sweeps,
                off_norm: off,
            });
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
        sweeps += 1;
        off = off_diagonal_norm(&a);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[(y, y)].re.total_cmp(&a[(x, x)].re));
    let eigenvalues = order.iter().map(|&k| a[(k, k)].re).collect();
    let mut eigenvectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for i in 0..n {
            eigenvectors[(i, dst)] = v[(i, src)];
        }
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

fn rotate(a: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let phase = (apq / r).conj();

    let theta = (aqq - app) / (2.0 * r);
    let t = if theta.is_finite() {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    } else {
        // |θ| overflowed: t ≈ 1/(2θ)
        r / (aqq - app)
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    let j_pp = Complex64::new(c, 0.0);
    let j_pq = Complex64::new(s, 0.0);
    let j_qp = phase * -s;
    let j_qq = phase * c;

    let n = a.rows();
    // A <- A J
    for m in 0..n {
        let amp = a[(m, p)];
        let amq = a[(m, q)];
        a[(m, p)] = amp * j_pp + amq * j_qp;
        a[(m, q)] = amp * j_pq + amq * j_qq;
    }
    // A <- J^† A
    for m in 0..n {
        let apm = a[(p, m)];
        let aqm = a[(q, m)];
        a[(p, m)] = j_pp.conj() * apm + j_qp.conj() * aqm;
        a[(q, m)] = j_pq.conj() * apm + j_qq.conj() * aqm;
    }
    a[(p, q)] = Complex64::new(0.0, 0.0);
    a[(q, p)] = Complex64::new(0.0, 0.0);
    a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);
    // V <- V J
    for m in 0..n {
        let vmp = v[(m, p)];
        let vmq = v[(m, q)];
        v[(m, p)] = vmp * j_pp + vmq * j_qp;
        v[(m, q)] = vmp * j_pq + vmq * j_qq;
    }
}
