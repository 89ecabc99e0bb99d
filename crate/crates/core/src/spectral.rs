//! Symmetric eigendecomposition by cyclic Jacobi rotations.
//!
//! The Laplacians handled here are small and dense, so a plain Jacobi solver
//! is accurate to machine precision and bit-reproducible across runs.

use thiserror::Error;

use crate::graph::Matrix;

pub const OFF_DIAGONAL_TOL: f64 = 1e-12;
pub const MAX_SWEEPS: usize = 100;

/// Eigenvalues closer than this are treated as one eigenvalue when grouping
/// eigenspaces.
pub const EIGEN_GROUP_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },
}

/// Eigendecomposition `L = V0 diag(λ) V0ᵀ` with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    /// Column `k` is the eigenvector of `eigenvalues[k]`.
    eigenvectors: Matrix,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &Matrix {
        &self.eigenvectors
    }

    /// Column `k` of V0.
    pub fn eigenvector(&self, k: usize) -> Vec<f64> {
        (0..self.dim()).map(|i| self.eigenvectors[(i, k)]).collect()
    }

    /// Algebraic connectivity λ₂.
    pub fn lambda2(&self) -> f64 {
        self.eigenvalues[1]
    }

    /// `V0 diag(λ) V0ᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        let n = self.dim();
        let mut out = Matrix::zeros(n);
        for k in 0..n {
            let lam = self.eigenvalues[k];
            for i in 0..n {
                let vik = self.eigenvectors[(i, k)] * lam;
                for j in 0..n {
                    out[(i, j)] += vik * self.eigenvectors[(j, k)];
                }
            }
        }
        out
    }
}

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let n = a.dim();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Eigenvalues come back ascending. Each eigenvector is sign-normalized so
/// that its entry sum is positive, or, when the sum vanishes, its
/// largest-magnitude entry is positive. For a connected graph Laplacian the
/// first column is therefore `1/√N`.
pub fn eigendecompose(l: &Matrix) -> Result<Spectrum, SpectralError> {
    let n = l.dim();
    if !l.is_symmetric(1e-12) {
        return Err(SpectralError::NotSymmetric);
    }
    let mut a = l.clone();
    let mut v = Matrix::identity(n);

    let mut sweeps = 0;
    let mut off = off_diagonal_norm(&a);
    while off > OFF_DIAGONAL_TOL {
        if sweeps == MAX_SWEEPS {
            return Err(SpectralError::NoConvergence {
                sweeps,
                off_norm: off,
            });
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                // Rotation annihilating a[p][q] (Golub & Van Loan 8.5.2).
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;

                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
        sweeps += 1;
        off = off_diagonal_norm(&a);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));

    let eigenvalues: Vec<f64> = order.iter().map(|&k| a[(k, k)]).collect();
    let mut vecs = Matrix::zeros(n);
    for (col, &k) in order.iter().enumerate() {
        let sum: f64 = (0..n).map(|i| v[(i, k)]).sum();
        let sign = if sum.abs() > 1e-8 {
            sum.signum()
        } else {
            let (_, big) = (0..n)
                .map(|i| v[(i, k)])
                .fold((0.0f64, 0.0f64), |(m, val), x| {
                    if x.abs() > m {
                        (x.abs(), x)
                    } else {
                        (m, val)
                    }
                });
            if big < 0.0 {
                -1.0
            } else {
                1.0
            }
        };
        for i in 0..n {
            vecs[(i, col)] = sign * v[(i, k)];
        }
    }

    Ok(Spectrum {
        eigenvalues,
        eigenvectors: vecs,
    })
}

/// Orthonormality defect `max |V0ᵀV0 - I|`.
pub fn orthonormality_defect(spec: &Spectrum) -> f64 {
    let v = spec.eigenvectors();
    v.transpose().matmul(v).max_abs_diff(&Matrix::identity(spec.dim()))
}
