//! Closed-form sampling times.
//!
//! On a sampling interval the sampling error of agent `i` is affine between
//! neighbor updates: `|f_k^i(t_ℓp + τ)| = |aτ + c|`. The next sampling time
//! is the first `τ` at which this reaches `b e^{−ωτ}` with `b = δ_i E(t_ℓp)`.
//! [`phi0`] handles the principal-branch cases and [`phi`] adds the
//! secondary-branch case where the error shrinks toward zero but meets the
//! threshold before getting there.

use serde::Serialize;
use thiserror::Error;

use crate::lambert::{w0_exp, w_minus1, LambertError};
use crate::params::QuantRange;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TriggerError {
    #[error(transparent)]
    Lambert(#[from] LambertError),
    #[error("agent {agent}: update at t = {t_new} is outside ({t_prev}, {candidate})")]
    OutOfOrder {
        agent: usize,
        t_new: f64,
        t_prev: f64,
        candidate: f64,
    },
}

/// Which closed form produced a candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiBranch {
    /// Threshold already met at `τ = 0`.
    Immediate,
    Principal,
    Secondary,
    Logarithmic,
    /// No crossing: `a = c = 0`.
    Never,
}

impl PhiBranch {
    pub fn as_str(self) -> &'static str {
        match self {
            PhiBranch::Immediate => "immediate",
            PhiBranch::Principal => "principal",
            PhiBranch::Secondary => "secondary",
            PhiBranch::Logarithmic => "logarithmic",
            PhiBranch::Never => "never",
        }
    }
}

fn phi0_branch(a: f64, b: f64, c: f64, omega: f64) -> Result<(f64, PhiBranch), LambertError> {
    debug_assert!(b > 0.0 && omega > 0.0);
    if c.abs() >= b {
        return Ok((0.0, PhiBranch::Immediate));
    }
    if a != 0.0 {
        // W(ωb/|a|·e^{ωc/a}) in the log domain so tiny |a| cannot overflow
        let ln_arg = (omega * b / a.abs()).ln() + omega * c / a;
        let tau = w0_exp(ln_arg)? / omega - c / a;
        return Ok((tau.max(0.0), PhiBranch::Principal));
    }
    if c != 0.0 {
        return Ok(((b / c.abs()).ln() / omega, PhiBranch::Logarithmic));
    }
    Ok((f64::INFINITY, PhiBranch::Never))
}

/// `φ₀(a, b, c)`; `+∞` when `a = c = 0`.
pub fn phi0(a: f64, b: f64, c: f64, omega: f64) -> Result<f64, LambertError> {
    phi0_branch(a, b, c, omega).map(|(t, _)| t)
}

/// Membership in `Υ_ω`: `ac < 0` and `1 < ωb/|a| ≤ e^{−1−ωc/a}`.
pub fn in_upsilon(a: f64, b: f64, c: f64, omega: f64) -> bool {
    if !(a * c < 0.0) {
        return false;
    }
    let s = omega * b / a.abs();
    1.0 < s && s <= (-1.0 - omega * c / a).exp()
}

/// `φ(a, b, c)`, the first `τ ≥ 0` with `|aτ + c| ≥ b e^{−ωτ}`, together
/// with the closed form used.
pub fn phi_branch(a: f64, b: f64, c: f64, omega: f64) -> Result<(f64, PhiBranch), LambertError> {
    if c.abs() < b && in_upsilon(a, b, c, omega) {
        let y = -(omega * b / a.abs()) * (omega * c / a).exp();
        let tau = w_minus1(y)? / omega - c / a;
        return Ok((tau.max(0.0), PhiBranch::Secondary));
    }
    phi0_branch(a, b, c, omega)
}

pub fn phi(a: f64, b: f64, c: f64, omega: f64) -> Result<f64, LambertError> {
    phi_branch(a, b, c, omega).map(|(t, _)| t)
}

/// Per-agent constants of the triggering rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TriggerThreshold {
    pub delta: f64,
    pub tau_max: f64,
    pub range: QuantRange,
}

impl TriggerThreshold {
    /// `δ_i E(t)`.
    pub fn at(&self, t: f64) -> f64 {
        self.delta * self.range.at(t)
    }
}

/// Planning state of one agent on its current sampling interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CandidateState {
    pub agent: usize,
    pub k: u64,
    pub t_k: f64,
    pub p: u32,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub t_ell_p: f64,
    pub candidate: f64,
    pub branch: PhiBranch,
}

/// One line of the candidate audit log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CandidateRecord {
    pub agent: usize,
    pub k: u64,
    pub p: u32,
    pub t_ell_p: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub candidate: f64,
    pub branch: PhiBranch,
}

impl CandidateState {
    pub fn record(&self) -> CandidateRecord {
        CandidateRecord {
            agent: self.agent,
            k: self.k,
            p: self.p,
            t_ell_p: self.t_ell_p,
            a: self.a,
            b: self.b,
            c: self.c,
            candidate: self.candidate,
            branch: self.branch,
        }
    }

    /// Time already spent on this interval at the last update.
    pub fn elapsed(&self) -> f64 {
        self.t_ell_p - self.t_k
    }
}

/// First candidate after sampling at `t_k`, with
/// `a = d_i q_i(t_k) − Σ_j q_j` and `c = 0`.
pub fn initial_candidate(
    agent: usize,
    k: u64,
    t_k: f64,
    a: f64,
    th: &TriggerThreshold,
) -> Result<CandidateState, TriggerError> {
    let b = th.at(t_k);
    let (tau, branch) = phi0_branch(a, b, 0.0, th.range.omega)?;
    Ok(CandidateState {
        agent,
        k,
        t_k,
        p: 0,
        a,
        b,
        c: 0.0,
        t_ell_p: t_k,
        candidate: t_k + tau.min(th.tau_max),
        branch,
    })
}

/// Re-plans after a neighbor update at `t_new` changes the slope to `a_new`.
pub fn recompute_candidate(
    state: &CandidateState,
    a_new: f64,
    t_new: f64,
    th: &TriggerThreshold,
) -> Result<CandidateState, TriggerError> {
    if !(t_new > state.t_ell_p && t_new < state.candidate) {
        return Err(TriggerError::OutOfOrder {
            agent: state.agent,
            t_new,
            t_prev: state.t_ell_p,
            candidate: state.candidate,
        });
    }
    let c = state.c + (t_new - state.t_ell_p) * state.a;
    let b = th.at(t_new);
    debug_assert!(
        c.abs() < b * (1.0 + 1e-9) + 1e-300,
        "agent {}: |c| = {} >= b = {} at t = {}",
        state.agent,
        c.abs(),
        b,
        t_new
    );
    let (tau, branch) = phi_branch(a_new, b, c, th.range.omega)?;
    let shifted = tau + (t_new - state.t_k);
    Ok(CandidateState {
        agent: state.agent,
        k: state.k,
        t_k: state.t_k,
        p: state.p + 1,
        a: a_new,
        b,
        c,
        t_ell_p: t_new,
        candidate: state.t_k + shifted.min(th.tau_max),
        branch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// First τ in [0, cap] with |aτ + c| ≥ b e^{−ωτ}: grid scan, then bisection.
    fn scan(a: f64, b: f64, c: f64, omega: f64, cap: f64) -> f64 {
        let g = |t: f64| (a * t + c).abs() - b * (-omega * t).exp();
        if g(0.0) >= 0.0 {
            return 0.0;
        }
        let steps = 200_000;
        let dt = cap / steps as f64;
        let mut lo = 0.0;
        for s in 1..=steps {
            let t = s as f64 * dt;
            if g(t) >= 0.0 {
                let mut hi = t;
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if g(mid) >= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                return hi;
            }
            lo = t;
        }
        f64::INFINITY
    }

    #[test]
    fn phi0_examples() {
        assert_eq!(phi0(0.0, 1.0, 0.0, 1.0).unwrap(), f64::INFINITY);
        assert!((phi0(1.0, 1.0, 0.0, 1.0).unwrap() - 0.567_143_290_409_783_9).abs() < 1e-14);
        assert!((phi0(0.0, 2.0, 1.0, 1.0).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!((phi0(1.0, 1.0, 0.0, 1.0).unwrap() - scan(1.0, 1.0, 0.0, 1.0, 5.0)).abs() < 1e-9);
    }

    #[test]
    fn phi0_tiny_slope() {
        let t = phi0(1e-300, 1.0, 0.0, 1.0).unwrap();
        assert!(t.is_finite() && t > 600.0);
        let resid = (1e-300 * t) / (-t).exp();
        assert!((resid - 1.0).abs() < 1e-9);
    }

    #[test]
    fn phi_matches_phi0_off_upsilon() {
        for &(a, c) in &[(1.0, 0.5), (-2.0, -0.3), (0.0, 0.4), (3.0, 0.0), (-1.0, 0.0)] {
            for &om in &[0.1, 1.0, 3.0] {
                assert_eq!(phi(a, 1.0, c, om).unwrap(), phi0(a, 1.0, c, om).unwrap());
            }
        }
    }

    #[test]
    fn met_at_start_is_zero() {
        // |c| ≥ b: the threshold holds as τ → 0⁺
        assert_eq!(phi(-1.0, 2.0, 2.0, 1.0).unwrap(), 0.0);
        assert_eq!(phi(-1.0, 1.5, 2.0, 1.0).unwrap(), 0.0);
        assert_eq!(scan(-1.0, 1.5, 2.0, 1.0, 5.0), 0.0);
    }

    #[test]
    fn secondary_branch_against_scan() {
        // normalized ω = 1, a = −1, 0 < c < b; secondary iff 1 < b ≤ e^{c−1}
        for &(b, c) in &[(3.0, 2.5), (4.0, 2.2), (2.0, 1.8), (1.5, 1.2), (5.0, 2.7)] {
            let in_set = 1.0 < b && b <= (c - 1.0f64).exp();
            let (t, br) = phi_branch(-1.0, b, c, 1.0).unwrap();
            let oracle = scan(-1.0, b, c, 1.0, 20.0);
            if in_set {
                assert_eq!(br, PhiBranch::Secondary);
                let formula = w_minus1(-b * (-c as f64).exp()).unwrap() + c;
                assert!((t - formula).abs() < 1e-12);
                assert!(t < c);
            } else {
                assert_eq!(br, PhiBranch::Principal);
                assert!(t > c);
            }
            assert!((t - oracle).abs() < 1e-7, "b={b} c={c}: {t} vs {oracle}");
        }
        // general ω and a: the set scales as ωb/|a| and ωc/a
        let (a, b, c, om) = (-0.4, 0.5, 2.0, 1.5);
        assert!(in_upsilon(a, b, c, om));
        assert!((phi(a, b, c, om).unwrap() - scan(a, b, c, om, 20.0)).abs() < 1e-7);
    }

    fn threshold() -> TriggerThreshold {
        TriggerThreshold {
            delta: 0.1,
            tau_max: 1.0,
            range: QuantRange {
                gamma_inf: 1.0,
                e0: 1.0,
                omega: 0.5,
            },
        }
    }

    #[test]
    fn initial_candidate_cases() {
        let th = threshold();
        let idle = initial_candidate(0, 0, 2.0, 0.0, &th).unwrap();
        assert_eq!(idle.candidate, 3.0);
        assert_eq!(idle.branch, PhiBranch::Never);
        // two agents with q₁ = −q₂ = q: a = d₁q₁ − q₂ = 2q
        let q = 0.3;
        let st = initial_candidate(0, 0, 0.0, 2.0 * q, &th).unwrap();
        let want = scan(2.0 * q, th.at(0.0), 0.0, 0.5, 1.0);
        assert!((st.candidate - want).abs() < 1e-9);
        assert!(st.candidate <= 1.0);
    }

    #[test]
    fn recompute_unchanged_slope_keeps_candidate() {
        let th = threshold();
        let st = initial_candidate(1, 4, 0.0, 0.0, &th).unwrap();
        let next = recompute_candidate(&st, 0.0, 0.25, &th).unwrap();
        assert_eq!(next.c, 0.0);
        assert_eq!(next.candidate, st.candidate);
        assert_eq!(next.p, 1);
    }

    #[test]
    fn recompute_reversal_takes_secondary_branch() {
        // slope 1, then a slow reversal: the error drifts back toward zero
        // and the shrinking threshold catches it on the way down
        let th = TriggerThreshold {
            delta: 1.0,
            tau_max: 10.0,
            range: QuantRange {
                gamma_inf: 0.5,
                e0: 1.0,
                omega: 3.0,
            },
        };
        let st = initial_candidate(0, 0, 0.0, 1.0, &th).unwrap();
        let t1 = 0.5 * st.candidate;
        let next = recompute_candidate(&st, -0.01, t1, &th).unwrap();
        assert_eq!(next.branch, PhiBranch::Secondary);
        let oracle = scan(-0.01, next.b, next.c, 3.0, 10.0);
        assert!((next.candidate - t1 - oracle).abs() < 1e-9);
    }

    #[test]
    fn recompute_rejects_out_of_order() {
        let th = threshold();
        let st = initial_candidate(0, 0, 1.0, 0.2, &th).unwrap();
        assert!(recompute_candidate(&st, 0.1, 1.0, &th).is_err());
        assert!(recompute_candidate(&st, 0.1, st.candidate, &th).is_err());
    }

    #[test]
    fn tau_max_cap_after_shift() {
        let th = threshold();
        let st = initial_candidate(0, 0, 0.0, 0.0, &th).unwrap();
        let next = recompute_candidate(&st, 1e-6, 0.9, &th).unwrap();
        assert_eq!(next.candidate, 1.0);
    }
}
