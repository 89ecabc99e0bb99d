//! Global event ledger: distinct event times `t_ℓ`, per-agent sample
//! counters `k_i(ℓ)` and triggering sets `I(ℓ)`.

use serde::Serialize;

use super::SimError;

/// Slack for time comparisons in the replay checks.
const TIME_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LedgerEntry {
    pub ell: usize,
    pub t: f64,
    /// `k_i(ℓ)`: index of each agent's latest sample at or before `t_ℓ`.
    pub k: Vec<u64>,
    /// `I(ℓ)`, ascending 0-based ids.
    pub triggered: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EventLedger {
    entries: Vec<LedgerEntry>,
    /// `sample_times[i][k] = t_k^i`.
    sample_times: Vec<Vec<f64>>,
}

impl EventLedger {
    pub fn new(n: usize) -> Self {
        EventLedger {
            entries: Vec::new(),
            sample_times: vec![Vec::new(); n],
        }
    }

    pub(crate) fn push(&mut self, t: f64, triggered: Vec<usize>) {
        for &i in &triggered {
            self.sample_times[i].push(t);
        }
        let k = self
            .sample_times
            .iter()
            .map(|s| s.len().saturating_sub(1) as u64)
            .collect();
        let ell = self.entries.len();
        self.entries.push(LedgerEntry {
            ell,
            t,
            k,
            triggered,
        });
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn sample_times(&self, i: usize) -> &[f64] {
        &self.sample_times[i]
    }

    /// Latest sample time of agent `i` at or before `t`.
    pub fn last_sample_before(&self, i: usize, t: f64) -> Option<(usize, f64)> {
        let s = &self.sample_times[i];
        let idx = s.partition_point(|&x| x <= t);
        (idx > 0).then(|| (idx - 1, s[idx - 1]))
    }

    /// Replays the bookkeeping properties over the whole ledger:
    /// a) counters advance by at most one, b) exactly the triggered agents
    /// advance, c) `t_{k_i(ℓ)}^i ≤ t_ℓ < t_{ℓ+1}`, e) `t_{ℓ+1} ≤
    /// t_{k_i(ℓ)}^i + τmax_i`, f) every `N` events advance time by at least
    /// `min_i τ̃min_i / N`.
    pub fn replay(&self, tau_max: &[f64], tau_min_floor: f64) -> Result<(), SimError> {
        let n = self.sample_times.len();
        let fail = |ell: usize, property: char, detail: String| SimError::Ledger {
            ell,
            property,
            detail,
        };
        for w in self.entries.windows(2) {
            let (cur, next) = (&w[0], &w[1]);
            if !(cur.t < next.t) {
                return Err(fail(next.ell, 'c', format!("t_ell = {} !< {}", cur.t, next.t)));
            }
            for i in 0..n {
                let (k0, k1) = (cur.k[i], next.k[i]);
                if !(k0 <= k1 && k1 <= k0 + 1) {
                    return Err(fail(next.ell, 'a', format!("agent {}: k {k0} -> {k1}", i + 1)));
                }
                let advanced = k1 == k0 + 1;
                if advanced != next.triggered.contains(&i) {
                    return Err(fail(
                        next.ell,
                        'b',
                        format!("agent {}: advanced = {advanced}, in I = {}", i + 1, !advanced),
                    ));
                }
                let tk = self.sample_times[i][k0 as usize];
                if !(tk <= cur.t) {
                    return Err(fail(cur.ell, 'c', format!("agent {}: t_k = {tk} > t_ell = {}", i + 1, cur.t)));
                }
                if next.t > tk + tau_max[i] + TIME_SLACK {
                    return Err(fail(
                        next.ell,
                        'e',
                        format!("agent {}: {} > {tk} + {}", i + 1, next.t, tau_max[i]),
                    ));
                }
            }
        }
        let step = tau_min_floor / n as f64;
        for ell in 0..self.entries.len().saturating_sub(n) {
            let gap = self.entries[ell + n].t - self.entries[ell].t;
            if gap < step - TIME_SLACK {
                return Err(fail(ell, 'f', format!("t_(ell+N) - t_ell = {gap:e} < {step:e}")));
            }
        }
        Ok(())
    }
}
