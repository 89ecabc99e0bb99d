//! The weighted semigroup `e^{γt}(e^{−Lt} − 𝟏1̄)`, its max-norm supremum
//! `Γ∞(γ)`, and the semi-norm
//! `⦀v⦀∞ = sup_{t≥0} ‖e^{γt} e^{−Lt}(v − ave(v)𝟏)‖∞`.
//!
//! Both suprema are evaluated on the spectral form
//! `Σ_{k≥2} e^{(γ−λ_k)t} v_k v_kᵀ`, which avoids the cancellation of
//! subtracting `𝟏1̄` from `e^{−Lt}` at large `t`. The scan runs on a merged
//! geometric and uniform grid over `[0, T_scan]`, refines the best grid
//! point by golden-section search, and compares against the analytic
//! `t → ∞` limit when `γ = λ₂`.

use serde::Serialize;
use thiserror::Error;

use crate::graph::Matrix;
use crate::spectral::{Spectrum, EIGEN_GROUP_TOL};

const GRID_POINTS: usize = 2000;
const GOLDEN_TOL: f64 = 1e-12;

/// Slack allowed when `γ` is passed as a rounded copy of `λ₂`.
pub const GAMMA_SLACK: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeminormError {
    #[error("gamma = {gamma} must satisfy 0 < gamma <= lambda2 = {lambda2}")]
    GammaOutOfRange { gamma: f64, lambda2: f64 },
    #[error("vector length {got} does not match graph size {n}")]
    DimensionMismatch { got: usize, n: usize },
}

/// `Γ∞(γ)` together with the time at which the supremum was attained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaInfinity {
    pub gamma: f64,
    pub value: f64,
    /// `f64::INFINITY` when the supremum is only approached as `t → ∞`.
    pub t_star: f64,
}

impl GammaInfinity {
    /// Replaces the numeric value by the size bound `N − 1`.
    pub fn upper_bound(gamma: f64, n: usize) -> Self {
        GammaInfinity {
            gamma,
            value: n as f64 - 1.0,
            t_star: f64::NAN,
        }
    }
}

/// Lower and upper bounds `2 − 2/N ≤ Γ∞ ≤ N − 1` for a connected graph.
pub fn gamma_infinity_bounds(n: usize) -> (f64, f64) {
    let n = n as f64;
    (2.0 - 2.0 / n, n - 1.0)
}

pub fn ave(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// A vector split into its average and its deviation from consensus.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationVector {
    pub v: Vec<f64>,
    pub ave: f64,
    pub deviation: Vec<f64>,
}

impl DeviationVector {
    pub fn new(v: &[f64]) -> Self {
        let a = ave(v);
        DeviationVector {
            v: v.to_vec(),
            ave: a,
            deviation: v.iter().map(|x| x - a).collect(),
        }
    }

    /// `max_{i,j} |v_i − v_j|`.
    pub fn spread(&self) -> f64 {
        let (lo, hi) = self
            .v
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
        hi - lo
    }
}

/// `e^{−Lt} = V0 e^{−Λ0 t} V0ᵀ`.
pub fn heat_semigroup(spec: &Spectrum, t: f64) -> Matrix {
    assert!(t >= 0.0, "heat semigroup needs t >= 0");
    let n = spec.dim();
    let v = spec.eigenvectors();
    let mut out = Matrix::zeros(n);
    for (k, &lam) in spec.eigenvalues().iter().enumerate() {
        let w = (-lam * t).exp();
        if w == 0.0 {
            continue;
        }
        for i in 0..n {
            let vik = v[(i, k)] * w;
            for j in 0..n {
                out[(i, j)] += vik * v[(j, k)];
            }
        }
    }
    out
}

/// Decay rates `λ_k − γ` of the non-consensus modes, with near-zero rates
/// snapped to exactly zero.
struct Modes<'a> {
    spec: &'a Spectrum,
    rates: Vec<f64>,
    horizon: f64,
}

impl<'a> Modes<'a> {
    fn new(spec: &'a Spectrum, gamma: f64) -> Result<Self, SeminormError> {
        let lambda2 = spec.lambda2();
        if !(gamma > 0.0 && gamma <= lambda2 + GAMMA_SLACK) || lambda2 <= EIGEN_GROUP_TOL {
            return Err(SeminormError::GammaOutOfRange { gamma, lambda2 });
        }
        let rates: Vec<f64> = spec.eigenvalues()[1..]
            .iter()
            .map(|&lam| {
                let r = lam - gamma;
                if r.abs() <= EIGEN_GROUP_TOL {
                    0.0
                } else {
                    r
                }
            })
            .collect();
        let slowest = rates
            .iter()
            .copied()
            .filter(|&r| r > 0.0)
            .fold(f64::INFINITY, f64::min);
        let mut horizon = 10.0 / lambda2;
        if slowest.is_finite() {
            horizon = horizon.max(10.0 / slowest);
        }
        Ok(Modes {
            spec,
            rates,
            horizon,
        })
    }

    fn has_persistent_mode(&self) -> bool {
        self.rates.contains(&0.0)
    }

    /// Weights `e^{−r_k t}` for modes `k = 2..N`; `None` means `t = ∞`.
    fn weights(&self, t: Option<f64>) -> Vec<f64> {
        self.rates
            .iter()
            .map(|&r| match t {
                Some(t) => (-r * t).exp(),
                None if r == 0.0 => 1.0,
                None => 0.0,
            })
            .collect()
    }

    /// `‖Σ_k w_k v_k v_kᵀ‖∞`.
    fn matrix_norm(&self, t: Option<f64>) -> f64 {
        let w = self.weights(t);
        let n = self.spec.dim();
        let v = self.spec.eigenvectors();
        let mut best = 0.0f64;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                let mut entry = 0.0;
                for (m, wk) in w.iter().enumerate() {
                    entry += wk * v[(i, m + 1)] * v[(j, m + 1)];
                }
                row += entry.abs();
            }
            best = best.max(row);
        }
        best
    }

    /// `‖Σ_k w_k c_k v_k‖∞` with `c_k = v_kᵀ x`.
    fn vector_norm(&self, coeffs: &[f64], t: Option<f64>) -> f64 {
        let w = self.weights(t);
        let n = self.spec.dim();
        let v = self.spec.eigenvectors();
        (0..n)
            .map(|i| {
                w.iter()
                    .zip(coeffs)
                    .enumerate()
                    .map(|(m, (wk, ck))| wk * ck * v[(i, m + 1)])
                    .sum::<f64>()
                    .abs()
            })
            .fold(0.0, f64::max)
    }

    fn grid(&self) -> Vec<f64> {
        let half = GRID_POINTS / 2;
        let t_max = self.horizon;
        let mut ts: Vec<f64> = (0..half)
            .map(|k| t_max * k as f64 / (half - 1) as f64)
            .collect();
        let lo = (t_max * 1e-7).ln();
        let hi = t_max.ln();
        ts.extend((0..half).map(|k| (lo + (hi - lo) * k as f64 / (half - 1) as f64).exp()));
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        ts
    }

    /// Supremum of `f` over `t ≥ 0`, returning `(value, argmax)`.
    fn supremum(&self, f: impl Fn(Option<f64>) -> f64) -> (f64, f64) {
        let grid = self.grid();
        let values: Vec<f64> = grid.iter().map(|&t| f(Some(t))).collect();
        let (mut best_i, mut best) = (0, values[0]);
        for (i, &v) in values.iter().enumerate() {
            if v > best {
                best = v;
                best_i = i;
            }
        }
        let lo = grid[best_i.saturating_sub(1)];
        let hi = grid[(best_i + 1).min(grid.len() - 1)];
        let (t_ref, v_ref) = golden_max(&|t| f(Some(t)), lo, hi);
        let (mut value, mut t_star) = (best, grid[best_i]);
        if v_ref > value {
            value = v_ref;
            t_star = t_ref;
        }
        if self.has_persistent_mode() {
            let limit = f(None);
            if limit > value {
                value = limit;
                t_star = f64::INFINITY;
            }
        }
        (value, t_star)
    }
}

fn golden_max(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let tol = GOLDEN_TOL * (1.0 + b.abs());
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// `Γ∞(γ) = sup_{t≥0} ‖e^{γt}(e^{−Lt} − 𝟏1̄)‖∞`.
pub fn gamma_infinity(spec: &Spectrum, gamma: f64) -> Result<GammaInfinity, SeminormError> {
    let modes = Modes::new(spec, gamma)?;
    let (value, t_star) = modes.supremum(|t| modes.matrix_norm(t));
    Ok(GammaInfinity {
        gamma,
        value,
        t_star,
    })
}

/// The semi-norm `⦀v⦀∞` for contraction rate `γ`.
pub fn seminorm_inf(spec: &Spectrum, gamma: f64, v: &[f64]) -> Result<f64, SeminormError> {
    let n = spec.dim();
    if v.len() != n {
        return Err(SeminormError::DimensionMismatch { got: v.len(), n });
    }
    let modes = Modes::new(spec, gamma)?;
    let coeffs: Vec<f64> = (1..n)
        .map(|k| (0..n).map(|i| spec.eigenvectors()[(i, k)] * v[i]).sum())
        .collect();
    Ok(modes.supremum(|t| modes.vector_norm(&coeffs, t)).0)
}

/// Evaluates `⦀·⦀∞` for many vectors with one precomputed mode table.
pub struct SeminormEvaluator<'a> {
    modes: Modes<'a>,
}

impl<'a> SeminormEvaluator<'a> {
    pub fn new(spec: &'a Spectrum, gamma: f64) -> Result<Self, SeminormError> {
        Ok(SeminormEvaluator {
            modes: Modes::new(spec, gamma)?,
        })
    }

    pub fn eval(&self, v: &[f64]) -> f64 {
        let spec = self.modes.spec;
        let n = spec.dim();
        assert_eq!(v.len(), n);
        let coeffs: Vec<f64> = (1..n)
            .map(|k| (0..n).map(|i| spec.eigenvectors()[(i, k)] * v[i]).sum())
            .collect();
        self.modes.supremum(|t| self.modes.vector_norm(&coeffs, t)).0
    }
}
