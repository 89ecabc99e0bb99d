//! Quantized self-triggered consensus for first-order agents on undirected
//! graphs: protocol design, exact event-driven simulation, and invariant
//! checks.
//!
//! ```
//! use qtrig::graph::Graph;
//! use qtrig::params::{reference_inputs, ProtocolParams};
//! use qtrig::sim::{run, RunOptions};
//!
//! let g = Graph::reference_six();
//! let p = ProtocolParams::new(&g, &reference_inputs()).unwrap();
//! let x0: Vec<f64> = (1..=6).map(|i| (i as f64).sin()).collect();
//! let out = run(&g, &p, &x0, RunOptions { horizon: 2.0, ..Default::default() }).unwrap();
//! assert!(out.ledger.len() > 1);
//! ```

pub mod check;
pub mod config;
pub mod graph;
pub mod lambert;
pub mod params;
pub mod quantizer;
pub mod report;
pub mod seminorm;
pub mod sim;
pub mod spectral;
pub mod trigger;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error("infeasible design: {0}")]
    Params(#[from] params::ParamsError),
    #[error("infeasible design: {0}")]
    Infeasible(String),
    #[error("runtime assertion failed: {0}")]
    Sim(#[from] sim::SimError),
    #[error("{0}")]
    Check(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit status: 2 infeasible design, 3 runtime assertion,
    /// 4 parse error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 4,
            Error::Params(_) | Error::Infeasible(_) => 2,
            Error::Sim(_) | Error::Check(_) => 3,
            Error::Io(_) => 1,
        }
    }
}
