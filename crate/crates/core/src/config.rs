//! JSON run configuration.
//!
//! ```json
//! {
//!   "graph": { "n": 6, "edges": [[1, 2], [2, 4]] },
//!   "initial": { "type": "sine" },
//!   "e0": 1.0,
//!   "levels": 19,
//!   "dtilde": 3,
//!   "delta": [0.04, 0.09],
//!   "tau_max": [1.0, 1.5],
//!   "horizon": 16.0
//! }
//! ```
//!
//! Vertex ids are 1-based. `gamma`, `omega` and `dtilde` default to `λ₂`,
//! `ω̃` and the maximum degree. `initial` is one of
//! `{"type": "explicit", "values": [...]}`, `{"type": "sine"}`
//! (`x_i0 = sin(i)`) or `{"type": "uniform", "seed": n}` (uniform on
//! `[−E0/2, E0/2]`).

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Graph, GraphError};
use crate::params::DesignInputs;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: line {line}, column {column}: {msg}")]
    Syntax {
        path: PathBuf,
        line: usize,
        column: usize,
        msg: String,
    },
    #[error("field `{field}`: {msg}")]
    Invalid { field: String, msg: String },
    #[error("field `graph`: {0}")]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphConfig {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    Explicit { values: Vec<f64> },
    Sine,
    Uniform {
        #[serde(default)]
        seed: u64,
    },
}

fn default_horizon() -> f64 {
    16.0
}

fn default_grid_dt() -> f64 {
    1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub graph: GraphConfig,
    pub initial: InitialConfig,
    pub e0: f64,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub omega: Option<f64>,
    pub levels: u32,
    #[serde(default)]
    pub dtilde: Option<u32>,
    pub delta: Vec<f64>,
    pub tau_max: Vec<f64>,
    #[serde(default)]
    pub use_gamma_inf_bound: bool,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_grid_dt")]
    pub grid_dt: f64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn invalid(field: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        msg: msg.into(),
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| ConfigError::Syntax {
            path: path.to_path_buf(),
            line: e.line(),
            column: e.column(),
            msg: e.to_string(),
        })?;
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<(), ConfigError> {
        let n = self.graph.n;
        if self.levels.is_multiple_of(2) {
            return Err(invalid(
                "levels",
                format!("R = {} must be odd (R = 2 R0 + 1)", self.levels),
            ));
        }
        for (name, list) in [("delta", &self.delta), ("tau_max", &self.tau_max)] {
            if list.len() != n {
                return Err(invalid(name, format!("expected {n} entries, got {}", list.len())));
            }
            if let Some(v) = list.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
                return Err(invalid(name, format!("entries must be positive, got {v}")));
            }
        }
        if !(self.e0 > 0.0 && self.e0.is_finite()) {
            return Err(invalid("e0", format!("must be positive, got {}", self.e0)));
        }
        for (name, v) in [("gamma", self.gamma), ("omega", self.omega)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(invalid(name, format!("must be positive, got {v}")));
                }
            }
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(invalid("horizon", format!("must be >= 0, got {}", self.horizon)));
        }
        if !(self.grid_dt > 0.0 && self.grid_dt.is_finite()) {
            return Err(invalid("grid_dt", format!("must be positive, got {}", self.grid_dt)));
        }
        if let InitialConfig::Explicit { values } = &self.initial {
            if values.len() != n {
                return Err(invalid(
                    "initial.values",
                    format!("expected {n} entries, got {}", values.len()),
                ));
            }
        }
        self.build_graph()?;
        Ok(())
    }

    pub fn build_graph(&self) -> Result<Graph, ConfigError> {
        let edges: Vec<(usize, usize)> = self.graph.edges.iter().map(|e| (e[0], e[1])).collect();
        Ok(Graph::from_one_based(self.graph.n, &edges)?)
    }

    pub fn design_inputs(&self) -> DesignInputs {
        DesignInputs {
            e0: self.e0,
            gamma: self.gamma,
            omega: self.omega,
            levels: self.levels,
            dtilde: self.dtilde,
            delta: self.delta.clone(),
            tau_max: self.tau_max.clone(),
            use_gamma_inf_bound: self.use_gamma_inf_bound,
        }
    }

    /// Initial states; `seed` overrides the configured seed of a uniform draw.
    pub fn initial_states(&self, seed: Option<u64>) -> Vec<f64> {
        let n = self.graph.n;
        match &self.initial {
            InitialConfig::Explicit { values } => values.clone(),
            InitialConfig::Sine => (1..=n).map(|i| (i as f64).sin()).collect(),
            InitialConfig::Uniform { seed: base } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(*base));
                let half = 0.5 * self.e0;
                (0..n).map(|_| rng.gen_range(-half..=half)).collect()
            }
        }
    }

    /// The six-agent reference configuration.
    pub fn reference() -> Self {
        let inputs = crate::params::reference_inputs();
        RunConfig {
            graph: GraphConfig {
                n: 6,
                edges: vec![[1, 2], [2, 4], [4, 6], [6, 5], [5, 3], [3, 1], [1, 6]],
            },
            initial: InitialConfig::Sine,
            e0: inputs.e0,
            gamma: None,
            omega: None,
            levels: inputs.levels,
            dtilde: inputs.dtilde,
            delta: inputs.delta,
            tau_max: inputs.tau_max,
            use_gamma_inf_bound: false,
            horizon: 16.0,
            grid_dt: 1e-3,
            output_dir: None,
        }
    }
}
