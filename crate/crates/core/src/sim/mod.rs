//! Exact event-driven simulation of the quantized self-triggered protocol.
//!
//! Inputs are piecewise constant, so states are piecewise linear and the
//! engine jumps from one sampling instant to the next with no integration
//! error. At each instant every due agent measures relative states (using
//! the states just before any input change), all indices are broadcast and
//! decoded with the shared range `E(t)`, and then every affected agent
//! re-plans in ascending id order.

mod ledger;
mod trajectory;

use serde::Serialize;
use thiserror::Error;

pub use ledger::{EventLedger, LedgerEntry};
pub use trajectory::{spread, Breakpoint, Trajectory};

use crate::graph::Graph;
use crate::params::ProtocolParams;
use crate::quantizer::{decode_sum, encode_index, QuantIndex, QuantizerError, QuantizerSpec};
use crate::trigger::{
    initial_candidate, recompute_candidate, CandidateRecord, CandidateState, TriggerError,
    TriggerThreshold,
};

/// Candidates this close to the earliest one fire in the same instant.
pub const SIMULTANEITY_SLACK: f64 = 1e-12;

/// Slack on the inter-event and envelope inequalities.
const CHECK_SLACK: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(
        "unsaturation violated: agent {agent} measured x_{agent} - x_{neighbor} = {z} at t = {t}, \
         beyond E(t) = {range}"
    )]
    Saturation {
        agent: usize,
        neighbor: usize,
        t: f64,
        z: f64,
        range: f64,
    },
    #[error("consensus envelope violated at t = {t}: max gap {gap} > E(t) = {bound}")]
    Envelope { t: f64, gap: f64, bound: f64 },
    #[error(
        "inter-event bound violated: agent {agent}, sample {k}: {dt} outside [{lo}, {hi}]"
    )]
    InterEvent {
        agent: usize,
        k: u64,
        dt: f64,
        lo: f64,
        hi: f64,
    },
    #[error("event ledger property {property}) violated at ell = {ell}: {detail}")]
    Ledger {
        ell: usize,
        property: char,
        detail: String,
    },
    #[error("{events} events exceed the no-Zeno bound {bound}")]
    Zeno { events: usize, bound: usize },
    #[error("t = {t} outside the simulated horizon [0, {horizon}]")]
    OutOfHorizon { t: f64, horizon: f64 },
    #[error("expected {expected} initial states, got {got}")]
    InitialLength { expected: usize, got: usize },
    #[error(transparent)]
    Trigger(#[from] TriggerError),
    #[error(transparent)]
    Quantizer(#[from] QuantizerError),
}

/// One sampling instant of one agent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleRecord {
    pub agent: usize,
    pub k: u64,
    pub t_k: f64,
    /// Transmitted index `p`; the decoded sum is `2pE(t_k)/R`.
    pub q_index: i64,
    /// `q_i(t_k)`.
    pub q: f64,
    /// `Σ_j (x_i − x_j)(t_k)`, the unquantized sum.
    pub measured: f64,
    /// Candidate recomputations on the interval that starts here.
    pub recompute_count: u32,
}

#[derive(Debug, Clone)]
struct AgentRuntime {
    candidate: f64,
    plan: Option<CandidateState>,
}

#[derive(Debug, Clone)]
pub struct Simulation<'g> {
    graph: &'g Graph,
    params: ProtocolParams,
    thresholds: Vec<TriggerThreshold>,
    agents: Vec<AgentRuntime>,
    /// Latest decoded `q_j`, as known to every neighbor.
    q: Vec<f64>,
    t: f64,
    trajectory: Trajectory,
    ledger: EventLedger,
    samples: Vec<Vec<SampleRecord>>,
    audit: Vec<CandidateRecord>,
    record_audit: bool,
}

impl<'g> Simulation<'g> {
    pub fn new(
        graph: &'g Graph,
        params: &ProtocolParams,
        x0: &[f64],
        horizon: f64,
    ) -> Result<Self, SimError> {
        let n = graph.n_vertices();
        if x0.len() != n {
            return Err(SimError::InitialLength {
                expected: n,
                got: x0.len(),
            });
        }
        let range = params.range();
        let thresholds = params
            .agents
            .iter()
            .map(|a| TriggerThreshold {
                delta: a.delta,
                tau_max: a.tau_max,
                range,
            })
            .collect();
        Ok(Simulation {
            graph,
            params: params.clone(),
            thresholds,
            agents: x0
                .iter()
                .map(|_| AgentRuntime {
                    candidate: 0.0,
                    plan: None,
                })
                .collect(),
            q: vec![0.0; n],
            t: 0.0,
            trajectory: Trajectory::new(x0, horizon),
            ledger: EventLedger::new(n),
            samples: vec![Vec::new(); n],
            audit: Vec::new(),
            record_audit: true,
        })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn states(&self) -> Vec<f64> {
        (0..self.agents.len())
            .map(|i| self.trajectory.agent_state(i, self.t))
            .collect()
    }

    /// Earliest pending candidate.
    pub fn next_time(&self) -> f64 {
        self.agents
            .iter()
            .map(|a| a.candidate)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn plan(&self, i: usize) -> Option<&CandidateState> {
        self.agents[i].plan.as_ref()
    }

    /// `a_i = d_i q_i(t_k) − Σ_{j∈N_i} q_j` with the latest decoded sums.
    fn slope(&self, i: usize) -> f64 {
        let own = self.graph.neighbors(i).len() as f64 * self.q[i];
        own - self.graph.neighbors(i).iter().map(|&j| self.q[j]).sum::<f64>()
    }

    /// Advances to the earliest candidate and processes that instant.
    /// Returns the event time and the agents that sampled.
    pub fn step(&mut self) -> Result<(f64, Vec<usize>), SimError> {
        let t_star = self.next_time();
        self.t = t_star;
        let x = self.states();
        let fired: Vec<usize> = (0..self.agents.len())
            .filter(|&i| self.agents[i].candidate <= t_star + SIMULTANEITY_SLACK)
            .collect();

        // measure and encode with pre-update states
        let range = self.params.quant_range(t_star);
        let quant = QuantizerSpec::new(range, self.params.levels)?;
        let mut sent = Vec::with_capacity(fired.len());
        for &i in &fired {
            let xi = x[i];
            let mut p = 0i64;
            let mut measured = 0.0;
            for &j in self.graph.neighbors(i) {
                let z = xi - x[j];
                measured += z;
                p += quant.index(z).map_err(|_| SimError::Saturation {
                    agent: i + 1,
                    neighbor: j + 1,
                    t: t_star,
                    z,
                    range,
                })?;
            }
            let idx = encode_index(&quant, self.params.dtilde, p)?;
            sent.push((i, idx, measured));
        }

        // deliver
        for &(i, idx, measured) in &sent {
            let q = decode_sum(idx, range, self.params.levels)?;
            self.q[i] = q;
            self.trajectory.set_input(i, t_star, -q);
            self.check_interval(i, t_star)?;
            let k = self.samples[i].len() as u64;
            self.samples[i].push(SampleRecord {
                agent: i,
                k,
                t_k: t_star,
                q_index: idx.p,
                q,
                measured,
                recompute_count: 0,
            });
        }

        // re-plan
        let mut is_fired = vec![false; self.agents.len()];
        for &i in &fired {
            is_fired[i] = true;
        }
        for i in 0..self.agents.len() {
            let th = self.thresholds[i];
            let plan = if is_fired[i] {
                let k = self.samples[i].len() as u64 - 1;
                initial_candidate(i, k, t_star, self.slope(i), &th)?
            } else if self.graph.neighbors(i).iter().any(|&j| is_fired[j]) {
                let prev = self.agents[i].plan.expect("every agent samples at t = 0");
                let next = recompute_candidate(&prev, self.slope(i), t_star, &th)?;
                if let Some(s) = self.samples[i].last_mut() {
                    s.recompute_count = next.p;
                }
                next
            } else {
                continue;
            };
            if self.record_audit {
                self.audit.push(plan.record());
            }
            self.agents[i].candidate = plan.candidate;
            self.agents[i].plan = Some(plan);
        }

        self.ledger.push(t_star, fired.clone());
        Ok((t_star, fired))
    }

    /// Inter-event time of agent `i` ending at `t` lies in `[τ̃min_i, τmax_i]`.
    fn check_interval(&self, i: usize, t: f64) -> Result<(), SimError> {
        if let Some(prev) = self.samples[i].last() {
            let dt = t - prev.t_k;
            let a = &self.params.agents[i];
            let (lo, hi) = (a.tau_min_tilde, a.tau_max);
            if dt < lo - CHECK_SLACK || dt > hi + CHECK_SLACK {
                return Err(SimError::InterEvent {
                    agent: i + 1,
                    k: prev.k + 1,
                    dt,
                    lo,
                    hi,
                });
            }
        }
        Ok(())
    }

    fn finish(self) -> RunOutput {
        RunOutput {
            trajectory: self.trajectory,
            ledger: self.ledger,
            samples: self.samples,
            audit: self.audit,
            params: self.params,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub horizon: f64,
    pub grid_dt: f64,
    /// Post-run envelope and ledger assertions.
    pub check: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            horizon: 16.0,
            grid_dt: 1e-3,
            check: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trajectory: Trajectory,
    pub ledger: EventLedger,
    /// `samples[i][k]`.
    pub samples: Vec<Vec<SampleRecord>>,
    pub audit: Vec<CandidateRecord>,
    pub params: ProtocolParams,
}

/// `Σ_i ⌈T/τ̃min_i⌉ + N`.
pub fn zeno_bound(params: &ProtocolParams, horizon: f64) -> usize {
    params
        .agents
        .iter()
        .map(|a| (horizon / a.tau_min_tilde).ceil() as usize)
        .sum::<usize>()
        + params.n_agents()
}

/// Simulates on `[0, horizon]`. With `opts.check`, also asserts the
/// consensus envelope on the export grid and replays the ledger.
pub fn run(
    graph: &Graph,
    params: &ProtocolParams,
    x0: &[f64],
    opts: RunOptions,
) -> Result<RunOutput, SimError> {
    let mut sim = Simulation::new(graph, params, x0, opts.horizon)?;
    let bound = zeno_bound(params, opts.horizon);
    while sim.next_time() <= opts.horizon {
        sim.step()?;
        if sim.ledger.len() > bound {
            return Err(SimError::Zeno {
                events: sim.ledger.len(),
                bound,
            });
        }
    }
    let out = sim.finish();
    if opts.check {
        out.check_envelope(opts.grid_dt)?;
        let tau_max: Vec<f64> = params.agents.iter().map(|a| a.tau_max).collect();
        out.ledger.replay(&tau_max, params.min_tau_min_tilde())?;
    }
    Ok(out)
}

/// Sampling and quantization errors at one time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorDecomposition {
    pub t: f64,
    /// `f_i(t) = Σ_j (x_i − x_j)(t) − Σ_j (x_i − x_j)(t_k^i)`.
    pub f: Vec<f64>,
    /// `g_i(t) = Σ_j (x_i − x_j)(t_k^i) − q_i(t_k^i)`.
    pub g: Vec<f64>,
    /// `(Lx)(t)`.
    pub lx: Vec<f64>,
    /// `ẋ(t)` (right derivative).
    pub xdot: Vec<f64>,
}

impl RunOutput {
    pub fn horizon(&self) -> f64 {
        self.trajectory.horizon()
    }

    pub fn event_times(&self) -> Vec<f64> {
        self.ledger.entries().iter().map(|e| e.t).collect()
    }

    /// Export grid: uniform `dt` points plus every event time.
    pub fn export_times(&self, dt: f64) -> Vec<f64> {
        self.trajectory.export_times(dt, &self.event_times())
    }

    /// `max_{i,j}|x_i − x_j| ≤ E(t)` on the export grid.
    pub fn check_envelope(&self, dt: f64) -> Result<(), SimError> {
        for t in self.export_times(dt) {
            let gap = spread(&self.trajectory.state_at(t)?);
            let bound = self.params.quant_range(t);
            if gap > bound * (1.0 + CHECK_SLACK) {
                return Err(SimError::Envelope { t, gap, bound });
            }
        }
        Ok(())
    }

    pub fn error_decomposition(&self, graph: &Graph, t: f64) -> Result<ErrorDecomposition, SimError> {
        let x = self.trajectory.state_at(t)?;
        let n = x.len();
        let mut out = ErrorDecomposition {
            t,
            f: vec![0.0; n],
            g: vec![0.0; n],
            lx: vec![0.0; n],
            xdot: self.trajectory.input_at(t)?,
        };
        for i in 0..n {
            let lxi: f64 = graph.neighbors(i).iter().map(|&j| x[i] - x[j]).sum();
            out.lx[i] = lxi;
            let (k, _) = self
                .ledger
                .last_sample_before(i, t)
                .expect("every agent samples at t = 0");
            let s = &self.samples[i][k];
            out.f[i] = lxi - s.measured;
            out.g[i] = s.measured - s.q;
        }
        Ok(out)
    }

    /// Inter-event times per agent.
    pub fn inter_event_times(&self, i: usize) -> Vec<f64> {
        self.samples[i].windows(2).map(|w| w[1].t_k - w[0].t_k).collect()
    }

    pub fn total_samples(&self) -> usize {
        self.samples.iter().map(Vec::len).sum()
    }

    pub fn alphabet_size(&self) -> u64 {
        QuantIndex::alphabet_size(self.params.levels, self.params.dtilde)
    }
}
