//! Piecewise-linear state trajectories.

use serde::Serialize;

use super::SimError;

/// `x_i(t) = x + u (t − t0)` from `t0` up to the next breakpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Breakpoint {
    pub t: f64,
    pub x: f64,
    pub u: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    agents: Vec<Vec<Breakpoint>>,
    horizon: f64,
}

impl Trajectory {
    pub fn new(x0: &[f64], horizon: f64) -> Self {
        Trajectory {
            agents: x0
                .iter()
                .map(|&x| vec![Breakpoint { t: 0.0, x, u: 0.0 }])
                .collect(),
            horizon,
        }
    }

    pub fn n_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn breakpoints(&self, i: usize) -> &[Breakpoint] {
        &self.agents[i]
    }

    /// Starts a new linear piece for agent `i` at `t` with slope `u`.
    pub(crate) fn set_input(&mut self, i: usize, t: f64, u: f64) {
        let x = self.agent_state(i, t);
        let list = &mut self.agents[i];
        let last = list.last_mut().expect("trajectory starts non-empty");
        if last.t == t {
            last.u = u;
        } else {
            list.push(Breakpoint { t, x, u });
        }
    }

    fn piece(&self, i: usize, t: f64) -> &Breakpoint {
        let list = &self.agents[i];
        let idx = list.partition_point(|b| b.t <= t);
        &list[idx.saturating_sub(1)]
    }

    /// State of agent `i` at `t`, without the horizon check.
    pub fn agent_state(&self, i: usize, t: f64) -> f64 {
        let b = self.piece(i, t);
        b.x + b.u * (t - b.t)
    }

    /// Input of agent `i` on the piece containing `t` (right-continuous).
    pub fn agent_input(&self, i: usize, t: f64) -> f64 {
        self.piece(i, t).u
    }

    /// `x(t)` by exact interpolation.
    pub fn state_at(&self, t: f64) -> Result<Vec<f64>, SimError> {
        self.check_time(t)?;
        Ok((0..self.n_agents()).map(|i| self.agent_state(i, t)).collect())
    }

    pub fn input_at(&self, t: f64) -> Result<Vec<f64>, SimError> {
        self.check_time(t)?;
        Ok((0..self.n_agents()).map(|i| self.agent_input(i, t)).collect())
    }

    fn check_time(&self, t: f64) -> Result<(), SimError> {
        if !(t >= 0.0 && t <= self.horizon) {
            return Err(SimError::OutOfHorizon {
                t,
                horizon: self.horizon,
            });
        }
        Ok(())
    }

    /// Export times: the uniform grid `0, dt, 2dt, …`, the horizon, and
    /// `extra` times, sorted with duplicates within `1e-12` collapsed.
    pub fn export_times(&self, dt: f64, extra: &[f64]) -> Vec<f64> {
        let mut ts: Vec<f64> = Vec::new();
        if dt > 0.0 {
            let steps = (self.horizon / dt + 1e-9).floor() as u64;
            ts.extend((0..=steps).map(|k| k as f64 * dt).filter(|&t| t <= self.horizon));
        } else {
            ts.push(0.0);
        }
        ts.push(self.horizon);
        ts.extend(extra.iter().copied().filter(|&t| t >= 0.0 && t <= self.horizon));
        ts.sort_by(f64::total_cmp);
        let mut out: Vec<f64> = Vec::with_capacity(ts.len());
        for t in ts {
            if out.last().map_or(true, |&prev| t - prev > 1e-12) {
                out.push(t);
            }
        }
        out
    }
}

/// `max_{i,j} |x_i − x_j|`.
pub fn spread(x: &[f64]) -> f64 {
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    hi - lo
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation() {
        let mut tr = Trajectory::new(&[1.0, -1.0], 2.0);
        tr.set_input(0, 0.0, -0.5);
        tr.set_input(0, 1.0, 0.0);
        assert_eq!(tr.agent_state(0, 0.0), 1.0);
        assert_eq!(tr.agent_state(0, 0.5), 0.75);
        assert_eq!(tr.agent_state(0, 1.0), 0.5);
        assert_eq!(tr.agent_state(0, 1.7), 0.5);
        assert_eq!(tr.agent_input(0, 1.0), 0.0);
        assert_eq!(tr.agent_input(0, 0.99), -0.5);
        assert_eq!(tr.state_at(2.0).unwrap(), vec![0.5, -1.0]);
        assert!(tr.state_at(2.1).is_err());
        assert_eq!(tr.breakpoints(0).len(), 2);
    }

    #[test]
    fn export_times_merge() {
        let tr = Trajectory::new(&[0.0], 0.35);
        let ts = tr.export_times(0.1, &[0.1 + 1e-13, 0.25, 0.35]);
        assert_eq!(ts.len(), 6);
        assert_eq!(ts[5], 0.35);
        let only = Trajectory::new(&[0.0], 0.0).export_times(1e-3, &[0.0]);
        assert_eq!(only, vec![0.0]);
    }
}
