//! Real Lambert W function, branches W₀ and W₋₁.
//!
//! Both branches use Halley's iteration on `w·eʷ − y`. Starting points come
//! from the branch-point series near `−1/e`, `log(1+y)` on the principal
//! branch, and the `log(−y) − log(−log(−y))` asymptote on the lower branch.

use std::f64::consts::E;

use thiserror::Error;

/// `−1/e`, the shared branch point.
pub const BRANCH_POINT: f64 = -1.0 / E;

const MAX_ITER: usize = 50;

/// Arguments this far below `−1/e` are treated as rounding noise and clamped.
const BRANCH_CLAMP: f64 = 1e-14;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum LambertError {
    #[error("argument {y} outside the domain of branch {branch:?}")]
    Domain { y: f64, branch: Branch },
    #[error("Halley iteration for branch {branch:?} did not converge at y = {y}")]
    NoConvergence { y: f64, branch: Branch },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Principal,
    Secondary,
}

/// A Lambert W evaluation request.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WQuery {
    pub y: f64,
    pub branch: Branch,
}

impl WQuery {
    pub fn eval(self) -> Result<f64, LambertError> {
        match self.branch {
            Branch::Principal => w0(self.y),
            Branch::Secondary => w_minus1(self.y),
        }
    }
}

fn clamp_branch(y: f64, branch: Branch) -> Result<f64, LambertError> {
    if y.is_nan() {
        return Err(LambertError::Domain { y, branch });
    }
    if y < BRANCH_POINT {
        if BRANCH_POINT - y <= BRANCH_CLAMP {
            return Ok(BRANCH_POINT);
        }
        return Err(LambertError::Domain { y, branch });
    }
    Ok(y)
}

/// Series in `p = √(2(e·y + 1))` about the branch point; `sign` picks the
/// branch (+1 for W₀, −1 for W₋₁).
fn branch_series(y: f64, sign: f64) -> f64 {
    let p = sign * (2.0 * (E * y + 1.0)).max(0.0).sqrt();
    -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
}

fn halley(y: f64, mut w: f64, branch: Branch) -> Result<f64, LambertError> {
    // near −1/e the iterates can cycle at rounding level; keep the best one
    let mut best = (f64::INFINITY, w);
    for _ in 0..MAX_ITER {
        let ew = w.exp();
        let f = w * ew - y;
        if f == 0.0 {
            return Ok(w);
        }
        if f.abs() < best.0 {
            best = (f.abs(), w);
        }
        let wp1 = w + 1.0;
        if wp1 == 0.0 {
            // exactly at the branch point the derivative vanishes
            return Ok(w);
        }
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let step = f / denom;
        let next = w - step;
        if !next.is_finite() {
            return Err(LambertError::NoConvergence { y, branch });
        }
        if (next - w).abs() <= 4.0 * f64::EPSILON * (1.0 + next.abs()) {
            return Ok(next);
        }
        w = next;
    }
    if best.0 <= 8.0 * f64::EPSILON * y.abs().max(1.0) {
        return Ok(best.1);
    }
    Err(LambertError::NoConvergence { y, branch })
}

/// Principal branch: the `x ≥ −1` with `x·eˣ = y`, for `y ≥ −1/e`.
pub fn w0(y: f64) -> Result<f64, LambertError> {
    let y = clamp_branch(y, Branch::Principal)?;
    if y == 0.0 {
        return Ok(0.0);
    }
    if y == BRANCH_POINT {
        return Ok(-1.0);
    }
    if y == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    if y > 1e300 {
        // y·(1+w)eʷ would overflow inside Halley's denominator
        return w0_exp(y.ln());
    }
    let start = if y < -0.25 {
        branch_series(y, 1.0)
    } else {
        y.ln_1p()
    };
    let w = halley(y, start, Branch::Principal)?;
    Ok(w.max(-1.0))
}

/// Secondary branch: the `x ≤ −1` with `x·eˣ = y`, for `−1/e ≤ y < 0`.
pub fn w_minus1(y: f64) -> Result<f64, LambertError> {
    let y = clamp_branch(y, Branch::Secondary)?;
    if y >= 0.0 {
        return Err(LambertError::Domain {
            y,
            branch: Branch::Secondary,
        });
    }
    if y == BRANCH_POINT {
        return Ok(-1.0);
    }
    let start = if y < -0.25 {
        branch_series(y, -1.0)
    } else {
        let l1 = (-y).ln();
        let l2 = (-l1).ln();
        l1 - l2
    };
    let w = halley(y, start, Branch::Secondary)?;
    Ok(w.min(-1.0))
}

/// `W₀(e^ln_y)` without forming `e^ln_y`, for arguments that overflow.
pub fn w0_exp(ln_y: f64) -> Result<f64, LambertError> {
    if ln_y < 700.0 {
        return w0(ln_y.exp());
    }
    if ln_y == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    // w + ln w = ln_y, Newton from the two-term asymptote
    let mut w = ln_y - ln_y.ln();
    for _ in 0..MAX_ITER {
        let g = w + w.ln() - ln_y;
        let next = w - g / (1.0 + 1.0 / w);
        if (next - w).abs() <= 4.0 * f64::EPSILON * next.abs() {
            return Ok(next);
        }
        w = next;
    }
    Err(LambertError::NoConvergence {
        y: f64::INFINITY,
        branch: Branch::Principal,
    })
}

/// The unique `x ≥ c` solving `a(x − c) = e^{−ωx}` for `a, ω > 0`:
/// `x = W(ω e^{−ωc}/a)/ω + c`.
pub fn solve_linear_exp(a: f64, c: f64, omega: f64) -> Result<f64, LambertError> {
    assert!(a > 0.0 && omega > 0.0, "solve_linear_exp needs a, ω > 0");
    let ln_arg = omega.ln() - omega * c - a.ln();
    Ok(w0_exp(ln_arg)? / omega + c)
}
