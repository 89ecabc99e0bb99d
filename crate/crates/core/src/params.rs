//! Design constants of the protocol and the feasibility checks behind the
//! consensus certificate.
//!
//! Notation: `ξ_i = 2Γ∞d_i/R`, `η_i = γ − 2Γ∞δ_i`,
//! `κ(ω) = max_i (δ_i + d_i e^{ωτmax_i}/R)` and `E(t) = 2Γ∞E₀e^{−ωt}`.

use serde::Serialize;
use thiserror::Error;

use crate::graph::Graph;
use crate::lambert::{w0, w0_exp, LambertError};
use crate::quantizer::QuantIndex;
use crate::seminorm::{gamma_infinity, GammaInfinity, SeminormError};
use crate::spectral::{eigendecompose, SpectralError, Spectrum};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamsError {
    #[error("graph is not connected")]
    Disconnected,
    #[error("{field} has {got} entries, expected one per agent ({n})")]
    Length { field: &'static str, got: usize, n: usize },
    #[error("{field} must be positive and finite, got {value}")]
    NonPositive { field: String, value: f64 },
    #[error("quantization level count R = {0} must be odd")]
    EvenLevels(u32),
    #[error("degree bound dtilde = {dtilde} is below the maximum degree {max_degree}")]
    DegreeBound { dtilde: u32, max_degree: usize },
    #[error("thresholds violate delta_i + d_i/R < gamma/(2 Gamma_inf) for agents {agents:?}")]
    Infeasible { agents: Vec<usize> },
    #[error("delta_i >= gamma/(2 Gamma_inf) for agents {agents:?}; no level count is feasible")]
    NoFeasibleLevels { agents: Vec<usize> },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Seminorm(#[from] SeminormError),
    #[error(transparent)]
    Lambert(#[from] LambertError),
}

/// Per-agent inputs entering the design formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AgentDesign {
    pub degree: usize,
    pub delta: f64,
    pub tau_max: f64,
}

/// `E(t) = 2Γ∞E₀e^{−ωt}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuantRange {
    pub gamma_inf: f64,
    pub e0: f64,
    pub omega: f64,
}

impl QuantRange {
    pub fn at(&self, t: f64) -> f64 {
        2.0 * self.gamma_inf * self.e0 * (-self.omega * t).exp()
    }
}

/// `κ(ω) = max_i (δ_i + d_i e^{ωτmax_i}/R)`.
pub fn kappa(omega: f64, levels: u32, agents: &[AgentDesign]) -> f64 {
    agents
        .iter()
        .map(|a| a.delta + a.degree as f64 * (omega * a.tau_max).exp() / levels as f64)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `(ξ_i, η_i)`.
pub fn xi_eta(gamma: f64, gamma_inf: f64, levels: u32, a: &AgentDesign) -> (f64, f64) {
    (
        2.0 * gamma_inf * a.degree as f64 / levels as f64,
        gamma - 2.0 * gamma_inf * a.delta,
    )
}

/// Agents violating `δ_i + d_i/R < γ/(2Γ∞)`, 0-based.
pub fn threshold_violations(
    gamma: f64,
    gamma_inf: f64,
    levels: u32,
    agents: &[AgentDesign],
) -> Vec<usize> {
    let bound = gamma / (2.0 * gamma_inf);
    agents
        .iter()
        .enumerate()
        .filter(|(_, a)| !(a.delta + (a.degree as f64) / (levels as f64) < bound))
        .map(|(i, _)| i)
        .collect()
}

/// `ω̃` and the agent attaining the minimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OmegaTilde {
    pub value: f64,
    pub agent: usize,
}

/// `ω̃ = min_i (η_i − W(ξ_i τmax_i e^{η_i τmax_i})/τmax_i)`.
pub fn omega_tilde(
    gamma: f64,
    gamma_inf: f64,
    levels: u32,
    agents: &[AgentDesign],
) -> Result<OmegaTilde, ParamsError> {
    let bad = threshold_violations(gamma, gamma_inf, levels, agents);
    if !bad.is_empty() {
        return Err(ParamsError::Infeasible { agents: bad });
    }
    let mut best = OmegaTilde {
        value: f64::INFINITY,
        agent: 0,
    };
    for (i, a) in agents.iter().enumerate() {
        let (xi, eta) = xi_eta(gamma, gamma_inf, levels, a);
        let value = if a.tau_max == 0.0 {
            eta - xi
        } else {
            let ln_arg = xi.ln() + a.tau_max.ln() + eta * a.tau_max;
            eta - w0_exp(ln_arg)? / a.tau_max
        };
        if value < best.value {
            best = OmegaTilde { value, agent: i };
        }
    }
    Ok(best)
}

/// `τ̃min_i = W(ωδ_i / (d_i² + Σ_{j∈N_i} d_j e^{ωτmax_j}))/ω`.
pub fn tau_min_tilde(
    omega: f64,
    agent: &AgentDesign,
    neighbors: &[AgentDesign],
) -> Result<f64, ParamsError> {
    let denom = (agent.degree * agent.degree) as f64
        + neighbors
            .iter()
            .map(|nb| nb.degree as f64 * (omega * nb.tau_max).exp())
            .sum::<f64>();
    Ok(w0(omega * agent.delta / denom)? / omega)
}

/// Smallest odd `R` with `δ_i + d_i/R < γ/(2Γ∞)` for every agent.
pub fn min_feasible_levels(
    gamma: f64,
    gamma_inf: f64,
    agents: &[AgentDesign],
) -> Result<u32, ParamsError> {
    let bound = gamma / (2.0 * gamma_inf);
    let hopeless: Vec<usize> = agents
        .iter()
        .enumerate()
        .filter(|(_, a)| !(a.delta < bound))
        .map(|(i, _)| i)
        .collect();
    if !hopeless.is_empty() {
        return Err(ParamsError::NoFeasibleLevels { agents: hopeless });
    }
    let ok = |r: u32| threshold_violations(gamma, gamma_inf, r, agents).is_empty();
    let estimate = agents
        .iter()
        .map(|a| a.degree as f64 / (bound - a.delta))
        .fold(0.0, f64::max);
    let mut r = (estimate.floor().min(u32::MAX as f64 / 2.0) as u32) | 1;
    while r > 1 && ok(r - 2) {
        r -= 2;
    }
    while !ok(r) {
        r += 2;
    }
    Ok(r)
}

/// Raw design inputs, before defaults are applied.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignInputs {
    pub e0: f64,
    pub gamma: Option<f64>,
    pub omega: Option<f64>,
    pub levels: u32,
    pub dtilde: Option<u32>,
    pub delta: Vec<f64>,
    pub tau_max: Vec<f64>,
    /// Use `Γ∞ ≤ N − 1` instead of the scanned supremum.
    pub use_gamma_inf_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgentParams {
    pub degree: usize,
    pub delta: f64,
    pub tau_max: f64,
    pub tau_min_tilde: f64,
    pub xi: f64,
    pub eta: f64,
}

impl AgentParams {
    fn design(&self) -> AgentDesign {
        AgentDesign {
            degree: self.degree,
            delta: self.delta,
            tau_max: self.tau_max,
        }
    }
}

/// Fully resolved protocol constants.
#[derive(Debug, Clone)]
pub struct ProtocolParams {
    pub spectrum: Spectrum,
    pub lambda2: f64,
    pub gamma: f64,
    pub gamma_inf: GammaInfinity,
    pub e0: f64,
    pub omega: f64,
    /// `None` when the thresholds are infeasible and `ω` was given explicitly.
    pub omega_tilde: Option<OmegaTilde>,
    pub levels: u32,
    pub dtilde: u32,
    pub agents: Vec<AgentParams>,
    pub neighbors: Vec<Vec<usize>>,
}

fn positive(field: impl Into<String>, value: f64) -> Result<(), ParamsError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(ParamsError::NonPositive {
            field: field.into(),
            value,
        })
    }
}

impl ProtocolParams {
    /// Resolves defaults (`γ → λ₂`, `ω → ω̃`, `d̃ → max degree`) and computes
    /// every derived constant. Fails only when the constants cannot be
    /// formed; assumption verdicts come from [`ProtocolParams::validate`].
    pub fn new(graph: &Graph, inputs: &DesignInputs) -> Result<Self, ParamsError> {
        let n = graph.n_vertices();
        if inputs.delta.len() != n {
            return Err(ParamsError::Length {
                field: "delta",
                got: inputs.delta.len(),
                n,
            });
        }
        if inputs.tau_max.len() != n {
            return Err(ParamsError::Length {
                field: "tau_max",
                got: inputs.tau_max.len(),
                n,
            });
        }
        if inputs.levels.is_multiple_of(2) {
            return Err(ParamsError::EvenLevels(inputs.levels));
        }
        positive("e0", inputs.e0)?;
        for (i, (&d, &t)) in inputs.delta.iter().zip(&inputs.tau_max).enumerate() {
            positive(format!("delta[{}]", i + 1), d)?;
            positive(format!("tau_max[{}]", i + 1), t)?;
        }
        if !graph.is_connected() {
            return Err(ParamsError::Disconnected);
        }
        let max_degree = graph.max_degree();
        let dtilde = inputs.dtilde.unwrap_or(max_degree as u32);
        if (dtilde as usize) < max_degree {
            return Err(ParamsError::DegreeBound { dtilde, max_degree });
        }

        let spectrum = eigendecompose(&graph.laplacian())?;
        let lambda2 = spectrum.lambda2();
        let gamma = inputs.gamma.unwrap_or(lambda2);
        positive("gamma", gamma)?;
        let gamma_inf = if inputs.use_gamma_inf_bound {
            if gamma > lambda2 + crate::seminorm::GAMMA_SLACK {
                return Err(SeminormError::GammaOutOfRange { gamma, lambda2 }.into());
            }
            GammaInfinity::upper_bound(gamma, n)
        } else {
            gamma_infinity(&spectrum, gamma)?
        };

        let designs: Vec<AgentDesign> = (0..n)
            .map(|i| AgentDesign {
                degree: graph.neighbors(i).len(),
                delta: inputs.delta[i],
                tau_max: inputs.tau_max[i],
            })
            .collect();
        let omega_tilde = match omega_tilde(gamma, gamma_inf.value, inputs.levels, &designs) {
            Ok(w) => Some(w),
            Err(e) if inputs.omega.is_none() => return Err(e),
            Err(_) => None,
        };
        let omega = match (inputs.omega, omega_tilde) {
            (Some(w), _) => w,
            (None, Some(w)) => w.value,
            (None, None) => unreachable!("handled above"),
        };
        positive("omega", omega)?;

        let neighbors: Vec<Vec<usize>> = (0..n).map(|i| graph.neighbors(i).to_vec()).collect();
        let mut agents = Vec::with_capacity(n);
        for (i, a) in designs.iter().enumerate() {
            let nbrs: Vec<AgentDesign> = neighbors[i].iter().map(|&j| designs[j]).collect();
            let (xi, eta) = xi_eta(gamma, gamma_inf.value, inputs.levels, a);
            agents.push(AgentParams {
                degree: a.degree,
                delta: a.delta,
                tau_max: a.tau_max,
                tau_min_tilde: tau_min_tilde(omega, a, &nbrs)?,
                xi,
                eta,
            });
        }

        Ok(ProtocolParams {
            spectrum,
            lambda2,
            gamma,
            gamma_inf,
            e0: inputs.e0,
            omega,
            omega_tilde,
            levels: inputs.levels,
            dtilde,
            agents,
            neighbors,
        })
    }

    pub fn n_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn designs(&self) -> Vec<AgentDesign> {
        self.agents.iter().map(AgentParams::design).collect()
    }

    pub fn range(&self) -> QuantRange {
        QuantRange {
            gamma_inf: self.gamma_inf.value,
            e0: self.e0,
            omega: self.omega,
        }
    }

    /// `E(t)`.
    pub fn quant_range(&self, t: f64) -> f64 {
        self.range().at(t)
    }

    pub fn kappa(&self, omega: f64) -> f64 {
        kappa(omega, self.levels, &self.designs())
    }

    /// Consensus constant `Ω = 2Γ∞`.
    pub fn consensus_constant(&self) -> f64 {
        2.0 * self.gamma_inf.value
    }

    pub fn min_tau_min_tilde(&self) -> f64 {
        self.agents
            .iter()
            .map(|a| a.tau_min_tilde)
            .fold(f64::INFINITY, f64::min)
    }

    /// Assumption verdicts for these constants. `x0` adds the initial-bound
    /// check when initial states are known.
    pub fn validate(&self, graph: &Graph, x0: Option<&[f64]>) -> DesignReport {
        let designs = self.designs();
        let mut verdicts = vec![Verdict::new(
            "A1",
            "graph is connected",
            graph.is_connected(),
            format!("lambda2 = {:.6}", self.lambda2),
        )];
        if let Some(x0) = x0 {
            let dev = crate::seminorm::DeviationVector::new(x0);
            let worst = crate::seminorm::norm_inf(&dev.deviation);
            verdicts.push(Verdict::new(
                "A2",
                "max_i |x_i0 - ave(x0)| <= E0",
                worst <= self.e0,
                format!("max deviation {worst:.6}, E0 = {}", self.e0),
            ));
        }
        verdicts.push(Verdict::new(
            "A3",
            "dtilde >= max degree",
            self.dtilde as usize >= graph.max_degree(),
            format!("dtilde = {}, max degree = {}", self.dtilde, graph.max_degree()),
        ));
        verdicts.push(Verdict::new(
            "A4",
            "R is odd",
            self.levels % 2 == 1,
            format!("R = {}", self.levels),
        ));
        let bad = threshold_violations(self.gamma, self.gamma_inf.value, self.levels, &designs);
        verdicts.push(Verdict::new(
            "A5a",
            "delta_i + d_i/R < gamma/(2 Gamma_inf)",
            bad.is_empty(),
            if bad.is_empty() {
                format!("bound gamma/(2 Gamma_inf) = {:.6}", self.gamma / (2.0 * self.gamma_inf.value))
            } else {
                format!("violated by agents {:?}", one_based(&bad))
            },
        ));
        let short: Vec<usize> = self
            .agents
            .iter()
            .enumerate()
            .filter(|(_, a)| !(a.tau_min_tilde > 0.0 && a.tau_min_tilde <= a.tau_max))
            .map(|(i, _)| i)
            .collect();
        verdicts.push(Verdict::new(
            "A5b",
            "0 < tau_min_tilde_i <= tau_max_i",
            short.is_empty(),
            if short.is_empty() {
                format!("min tau_min_tilde = {:.6e}", self.min_tau_min_tilde())
            } else {
                format!("violated by agents {:?}", one_based(&short))
            },
        ));
        let (ok_c, detail_c) = match self.omega_tilde {
            Some(w) => (
                self.omega > 0.0 && self.omega <= w.value,
                format!("omega = {:.6}, omega_tilde = {:.6}", self.omega, w.value),
            ),
            None => (false, "omega_tilde undefined (A5a fails)".to_string()),
        };
        verdicts.push(Verdict::new("A5c", "0 < omega <= omega_tilde", ok_c, detail_c));

        DesignReport {
            n_agents: self.n_agents(),
            lambda2: self.lambda2,
            gamma: self.gamma,
            gamma_inf: self.gamma_inf.value,
            gamma_inf_t_star: self.gamma_inf.t_star,
            gamma_inf_bounds: crate::seminorm::gamma_infinity_bounds(self.n_agents()),
            e0: self.e0,
            omega: self.omega,
            omega_tilde: self.omega_tilde.map(|w| w.value),
            omega_tilde_agent: self.omega_tilde.map(|w| w.agent + 1),
            kappa_at_omega: self.kappa(self.omega),
            consensus_constant: self.consensus_constant(),
            levels: self.levels,
            dtilde: self.dtilde,
            alphabet_size: QuantIndex::alphabet_size(self.levels, self.dtilde),
            index_bits: QuantIndex::bits(self.levels, self.dtilde),
            min_feasible_levels: min_feasible_levels(self.gamma, self.gamma_inf.value, &designs).ok(),
            degrees: self.agents.iter().map(|a| a.degree).collect(),
            xi: self.agents.iter().map(|a| a.xi).collect(),
            eta: self.agents.iter().map(|a| a.eta).collect(),
            tau_min_tilde: self.agents.iter().map(|a| a.tau_min_tilde).collect(),
            feasible: verdicts.iter().all(|v| v.pass),
            verdicts,
            error: None,
        }
    }
}

fn one_based(ids: &[usize]) -> Vec<usize> {
    ids.iter().map(|i| i + 1).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub id: &'static str,
    pub condition: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    fn new(id: &'static str, condition: &'static str, pass: bool, detail: String) -> Self {
        Verdict {
            id,
            condition,
            pass,
            detail,
        }
    }
}

/// Every design constant together with per-assumption verdicts.
/// Non-finite numbers serialize as `null`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignReport {
    pub n_agents: usize,
    pub lambda2: f64,
    pub gamma: f64,
    pub gamma_inf: f64,
    pub gamma_inf_t_star: f64,
    pub gamma_inf_bounds: (f64, f64),
    pub e0: f64,
    pub omega: f64,
    pub omega_tilde: Option<f64>,
    pub omega_tilde_agent: Option<usize>,
    pub kappa_at_omega: f64,
    pub consensus_constant: f64,
    pub levels: u32,
    pub dtilde: u32,
    pub alphabet_size: u64,
    pub index_bits: u32,
    pub min_feasible_levels: Option<u32>,
    pub degrees: Vec<usize>,
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
    pub tau_min_tilde: Vec<f64>,
    pub verdicts: Vec<Verdict>,
    pub feasible: bool,
    /// Set when the constants could not be formed at all.
    pub error: Option<String>,
}

/// Builds a report even when [`ProtocolParams::new`] fails, so that every
/// violated condition is listed.
pub fn assess(graph: &Graph, inputs: &DesignInputs, x0: Option<&[f64]>) -> DesignReport {
    match ProtocolParams::new(graph, inputs) {
        Ok(p) => p.validate(graph, x0),
        Err(e) => failed_report(graph, inputs, &e),
    }
}

fn failed_report(graph: &Graph, inputs: &DesignInputs, err: &ParamsError) -> DesignReport {
    let n = graph.n_vertices();
    let connected = graph.is_connected();
    let mut verdicts = vec![Verdict::new("A1", "graph is connected", connected, String::new())];
    verdicts.push(Verdict::new(
        "A3",
        "dtilde >= max degree",
        inputs.dtilde.is_none_or(|d| d as usize >= graph.max_degree()),
        format!("max degree = {}", graph.max_degree()),
    ));
    verdicts.push(Verdict::new(
        "A4",
        "R is odd",
        inputs.levels % 2 == 1,
        format!("R = {}", inputs.levels),
    ));
    let mut lambda2 = f64::NAN;
    let mut gamma_inf = f64::NAN;
    let mut min_levels = None;
    if let Ok(spec) = eigendecompose(&graph.laplacian()) {
        lambda2 = spec.lambda2();
        let gamma = inputs.gamma.unwrap_or(lambda2);
        if connected {
            if let Ok(gi) = gamma_infinity(&spec, gamma) {
                gamma_inf = if inputs.use_gamma_inf_bound { n as f64 - 1.0 } else { gi.value };
                if inputs.delta.len() == n && inputs.tau_max.len() == n {
                    let designs: Vec<AgentDesign> = (0..n)
                        .map(|i| AgentDesign {
                            degree: graph.neighbors(i).len(),
                            delta: inputs.delta[i],
                            tau_max: inputs.tau_max[i],
                        })
                        .collect();
                    let bad = threshold_violations(gamma, gamma_inf, inputs.levels, &designs);
                    verdicts.push(Verdict::new(
                        "A5a",
                        "delta_i + d_i/R < gamma/(2 Gamma_inf)",
                        bad.is_empty(),
                        format!("violated by agents {:?}", one_based(&bad)),
                    ));
                    min_levels = min_feasible_levels(gamma, gamma_inf, &designs).ok();
                }
            }
        }
    }
    DesignReport {
        n_agents: n,
        lambda2,
        gamma: inputs.gamma.unwrap_or(lambda2),
        gamma_inf,
        gamma_inf_t_star: f64::NAN,
        gamma_inf_bounds: crate::seminorm::gamma_infinity_bounds(n),
        e0: inputs.e0,
        omega: inputs.omega.unwrap_or(f64::NAN),
        omega_tilde: None,
        omega_tilde_agent: None,
        kappa_at_omega: f64::NAN,
        consensus_constant: 2.0 * gamma_inf,
        levels: inputs.levels,
        dtilde: inputs.dtilde.unwrap_or(graph.max_degree() as u32),
        alphabet_size: QuantIndex::alphabet_size(inputs.levels.max(1), inputs.dtilde.unwrap_or(graph.max_degree() as u32)),
        index_bits: QuantIndex::bits(inputs.levels.max(1), inputs.dtilde.unwrap_or(graph.max_degree() as u32)),
        min_feasible_levels: min_levels,
        degrees: graph.degrees(),
        xi: Vec::new(),
        eta: Vec::new(),
        tau_min_tilde: Vec::new(),
        verdicts,
        feasible: false,
        error: Some(err.to_string()),
    }
}

/// Inputs of the six-agent reference example.
pub fn reference_inputs() -> DesignInputs {
    let hub = |i: usize| i == 0 || i == 5;
    DesignInputs {
        e0: 1.0,
        gamma: None,
        omega: None,
        levels: 19,
        dtilde: Some(3),
        delta: (0..6).map(|i| if hub(i) { 0.04 } else { 0.09 }).collect(),
        tau_max: (0..6).map(|i| if hub(i) { 1.0 } else { 1.5 }).collect(),
        use_gamma_inf_bound: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> (Graph, ProtocolParams) {
        let g = Graph::reference_six();
        let p = ProtocolParams::new(&g, &reference_inputs()).unwrap();
        (g, p)
    }

    #[test]
    fn quant_range_examples() {
        let (_, p) = reference();
        let r = QuantRange {
            gamma_inf: 5.0 / 3.0,
            e0: 1.0,
            omega: 0.2145,
        };
        assert!((r.at(0.0) - 10.0 / 3.0).abs() < 1e-15);
        assert!((r.at(16.0) - 10.0 / 3.0 * (-3.432f64).exp()).abs() < 1e-12);
        assert!((r.at(16.0) - 0.10774).abs() < 1e-5);
        assert!((r.at(2.5) / r.at(1.0) - (-0.2145f64 * 1.5).exp()).abs() < 1e-14);
        assert!((p.quant_range(0.0) - 2.0 * p.gamma_inf.value).abs() < 1e-15);
    }

    #[test]
    fn kappa_examples() {
        let single = [AgentDesign {
            degree: 2,
            delta: 0.1,
            tau_max: 0.0,
        }];
        assert!((kappa(0.7, 10, &single) - 0.3).abs() < 1e-15);
        let (_, p) = reference();
        let at = p.kappa(0.2145);
        let hub = 0.04 + 3.0 * 0.2145f64.exp() / 19.0;
        let other = 0.09 + 2.0 * (0.2145f64 * 1.5).exp() / 19.0;
        assert_eq!(at, hub.max(other));
        assert!((at - 0.235670).abs() < 1e-6);
        // equality in the decay condition at ω̃
        let w = p.omega_tilde.unwrap().value;
        assert!((p.gamma - 2.0 * p.gamma_inf.value * p.kappa(w) - w).abs() < 1e-9);
    }

    #[test]
    fn reference_constants() {
        let (g, p) = reference();
        assert!((p.lambda2 - 1.0).abs() < 1e-9);
        assert!((p.gamma_inf.value - 5.0 / 3.0).abs() < 1e-3);
        let w = p.omega_tilde.unwrap();
        assert!((w.value - 0.2145).abs() < 5e-4);
        assert_eq!(p.omega, w.value);
        for i in [0, 5] {
            assert!((p.agents[i].tau_min_tilde - 2.192e-3).abs() < 1e-6);
        }
        for i in 1..5 {
            assert!((p.agents[i].tau_min_tilde - 8.574e-3).abs() < 1e-6);
        }
        assert_eq!(
            min_feasible_levels(p.gamma, p.gamma_inf.value, &p.designs()).unwrap(),
            13
        );
        let report = p.validate(&g, Some(&(1..=6).map(|i| (i as f64).sin()).collect::<Vec<_>>()));
        assert!(report.feasible, "{:?}", report.verdicts);
        assert_eq!(report.alphabet_size, 55);
    }

    #[test]
    fn omega_tilde_fixed_point() {
        let (_, p) = reference();
        let w = p.omega_tilde.unwrap();
        let a = &p.agents[w.agent];
        let resid = w.value - (a.eta - a.xi * (w.value * a.tau_max).exp());
        assert!(resid.abs() <= 1e-10);
        for b in &p.agents {
            assert!(w.value <= b.eta - b.xi * (w.value * b.tau_max).exp() + 1e-12);
        }
    }

    #[test]
    fn omega_tilde_boundary_and_limit() {
        // δ + d/R = γ/(2Γ∞) exactly is infeasible
        let edge = [AgentDesign {
            degree: 1,
            delta: 0.25,
            tau_max: 1.0,
        }];
        assert!(matches!(
            omega_tilde(1.0, 1.0, 4, &edge),
            Err(ParamsError::Infeasible { .. })
        ));
        let near = [AgentDesign {
            degree: 1,
            delta: 0.25 - 1e-9,
            tau_max: 1.0,
        }];
        let w = omega_tilde(1.0, 1.0, 4, &near).unwrap().value;
        assert!(w > 0.0 && w < 1e-8);
        // R → ∞: ω̃ → γ − 2Γ∞δ
        let one = [AgentDesign {
            degree: 1,
            delta: 0.1,
            tau_max: 0.5,
        }];
        let w = omega_tilde(1.0, 1.0, 1_000_001, &one).unwrap().value;
        assert!((w - 0.8).abs() < 1e-5);
    }

    #[test]
    fn tau_min_tilde_residual() {
        let (_, p) = reference();
        for (i, a) in p.agents.iter().enumerate() {
            let denom = (a.degree * a.degree) as f64
                + p.neighbors[i]
                    .iter()
                    .map(|&j| p.agents[j].degree as f64 * (p.omega * p.agents[j].tau_max).exp())
                    .sum::<f64>();
            let t = a.tau_min_tilde;
            assert!((t * denom - a.delta * (-p.omega * t).exp()).abs() <= 1e-12);
        }
        let lone = AgentDesign {
            degree: 1,
            delta: 1e-300,
            tau_max: 1.0,
        };
        let t = tau_min_tilde(0.5, &lone, &[lone]).unwrap();
        assert!(t > 0.0 && t < 1e-299);
    }

    #[test]
    fn min_levels_examples() {
        let a = [AgentDesign {
            degree: 1,
            delta: 0.0,
            tau_max: 1.0,
        }];
        assert_eq!(min_feasible_levels(2.0, 1.0, &a).unwrap(), 3);
        let b = [AgentDesign {
            degree: 1,
            delta: 0.3,
            tau_max: 1.0,
        }];
        // bound 0.5: R = 5 hits it exactly and is rejected
        assert_eq!(min_feasible_levels(1.0, 1.0, &b).unwrap(), 7);
        let c = [AgentDesign {
            degree: 1,
            delta: 0.5,
            tau_max: 1.0,
        }];
        assert!(matches!(
            min_feasible_levels(1.0, 1.0, &c),
            Err(ParamsError::NoFeasibleLevels { .. })
        ));
    }

    #[test]
    fn validate_flags_violations() {
        let g = Graph::reference_six();
        let mut inputs = reference_inputs();
        let w = ProtocolParams::new(&g, &inputs).unwrap().omega_tilde.unwrap().value;
        inputs.omega = Some(w + 0.01);
        let r = assess(&g, &inputs, None);
        assert!(!r.feasible);
        let a5c = r.verdicts.iter().find(|v| v.id == "A5c").unwrap();
        assert!(!a5c.pass);

        let split = Graph::new(4, &[(0, 1), (2, 3)]).unwrap();
        let inputs = DesignInputs {
            e0: 1.0,
            gamma: None,
            omega: None,
            levels: 19,
            dtilde: None,
            delta: vec![0.01; 4],
            tau_max: vec![1.0; 4],
            use_gamma_inf_bound: false,
        };
        let r = assess(&split, &inputs, None);
        assert!(!r.feasible);
        assert!(!r.verdicts.iter().find(|v| v.id == "A1").unwrap().pass);
    }

    #[test]
    fn bound_flag_uses_size() {
        let g = Graph::reference_six();
        let mut inputs = reference_inputs();
        inputs.use_gamma_inf_bound = true;
        inputs.delta = vec![0.01; 6];
        inputs.levels = 101;
        let p = ProtocolParams::new(&g, &inputs).unwrap();
        assert_eq!(p.gamma_inf.value, 5.0);
    }
}
