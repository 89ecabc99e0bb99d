//! CSV and JSON exports of a run.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::quantizer::QuantIndex;
use crate::sim::{spread, RunOutput};

/// Aggregate figures of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub n_agents: usize,
    pub horizon: f64,
    pub ledger_events: usize,
    pub samples_per_agent: Vec<usize>,
    pub min_inter_event: Vec<Option<f64>>,
    pub max_inter_event: Vec<Option<f64>>,
    pub tau_min_tilde: Vec<f64>,
    pub tau_max: Vec<f64>,
    pub initial_max_gap: f64,
    pub final_states: Vec<f64>,
    pub final_max_gap: f64,
    pub envelope_at_horizon: f64,
    pub omega: f64,
    pub gamma_inf: f64,
    pub alphabet_size: u64,
    pub index_bits: u32,
}

pub fn summarize(out: &RunOutput) -> RunSummary {
    let p = &out.params;
    let n = p.n_agents();
    let t_end = out.horizon();
    let x_end = out.trajectory.state_at(t_end).expect("horizon is in range");
    let x_0 = out.trajectory.state_at(0.0).expect("0 is in range");
    let gaps: Vec<Vec<f64>> = (0..n).map(|i| out.inter_event_times(i)).collect();
    RunSummary {
        n_agents: n,
        horizon: t_end,
        ledger_events: out.ledger.len(),
        samples_per_agent: out.samples.iter().map(Vec::len).collect(),
        min_inter_event: gaps
            .iter()
            .map(|g| g.iter().copied().reduce(f64::min))
            .collect(),
        max_inter_event: gaps
            .iter()
            .map(|g| g.iter().copied().reduce(f64::max))
            .collect(),
        tau_min_tilde: p.agents.iter().map(|a| a.tau_min_tilde).collect(),
        tau_max: p.agents.iter().map(|a| a.tau_max).collect(),
        initial_max_gap: spread(&x_0),
        final_max_gap: spread(&x_end),
        final_states: x_end,
        envelope_at_horizon: p.quant_range(t_end),
        omega: p.omega,
        gamma_inf: p.gamma_inf.value,
        alphabet_size: QuantIndex::alphabet_size(p.levels, p.dtilde),
        index_bits: QuantIndex::bits(p.levels, p.dtilde),
    }
}

fn create(path: &Path) -> io::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn columns(w: &mut impl Write, first: &str, prefixes: &[&str], n: usize) -> io::Result<()> {
    write!(w, "{first}")?;
    for p in prefixes {
        for i in 1..=n {
            write!(w, ",{p}{i}")?;
        }
    }
    Ok(())
}

fn header(w: &mut impl Write, first: &str, prefixes: &[&str], n: usize) -> io::Result<()> {
    columns(w, first, prefixes, n)?;
    writeln!(w)
}

/// `t,x1..xN,u1..uN` on the export grid plus every event time.
pub fn write_trajectory(out: &RunOutput, dt: f64, path: &Path) -> io::Result<()> {
    let n = out.trajectory.n_agents();
    let mut w = create(path)?;
    header(&mut w, "t", &["x", "u"], n)?;
    for t in out.export_times(dt) {
        write!(w, "{t}")?;
        for i in 0..n {
            write!(w, ",{}", out.trajectory.agent_state(i, t))?;
        }
        for i in 0..n {
            write!(w, ",{}", out.trajectory.agent_input(i, t))?;
        }
        writeln!(w)?;
    }
    w.flush()
}

/// `agent,k,t_k,q_index,recompute_count`, ordered by time then agent.
pub fn write_events(out: &RunOutput, path: &Path) -> io::Result<()> {
    let mut rows: Vec<_> = out.samples.iter().flatten().collect();
    rows.sort_by(|a, b| a.t_k.total_cmp(&b.t_k).then(a.agent.cmp(&b.agent)));
    let mut w = create(path)?;
    writeln!(w, "agent,k,t_k,q_index,recompute_count")?;
    for s in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            s.agent + 1,
            s.k,
            s.t_k,
            s.q_index,
            s.recompute_count
        )?;
    }
    w.flush()
}

/// `ell,t_ell,I_ell` with the triggering set joined by `;`.
pub fn write_ledger(out: &RunOutput, path: &Path) -> io::Result<()> {
    let mut w = create(path)?;
    writeln!(w, "ell,t_ell,I_ell")?;
    for e in out.ledger.entries() {
        let ids: Vec<String> = e.triggered.iter().map(|i| (i + 1).to_string()).collect();
        writeln!(w, "{},{},{}", e.ell, e.t, ids.join(";"))?;
    }
    w.flush()
}

/// Every candidate computation: `agent,k,p,t_ell_p,a,b,c,candidate,branch`.
pub fn write_candidates(out: &RunOutput, path: &Path) -> io::Result<()> {
    let mut w = create(path)?;
    writeln!(w, "agent,k,p,t_ell_p,a,b,c,candidate,branch")?;
    for r in &out.audit {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.agent + 1,
            r.k,
            r.p,
            r.t_ell_p,
            r.a,
            r.b,
            r.c,
            r.candidate,
            r.branch.as_str()
        )?;
    }
    w.flush()
}

/// State trajectories for plotting: `t,x1..xN,ave,envelope`.
pub fn write_plot_trajectories(out: &RunOutput, dt: f64, path: &Path) -> io::Result<()> {
    let n = out.trajectory.n_agents();
    let mut w = create(path)?;
    columns(&mut w, "t", &["x"], n)?;
    writeln!(w, ",ave,envelope")?;
    for t in out.trajectory.export_times(dt, &[]) {
        write!(w, "{t}")?;
        let mut sum = 0.0;
        for i in 0..n {
            let x = out.trajectory.agent_state(i, t);
            sum += x;
            write!(w, ",{x}")?;
        }
        writeln!(w, ",{},{}", sum / n as f64, out.params.quant_range(t))?;
    }
    w.flush()
}

/// Sampling raster for plotting: one `agent,t` row per sampling instant.
pub fn write_plot_raster(out: &RunOutput, path: &Path) -> io::Result<()> {
    let mut w = create(path)?;
    writeln!(w, "agent,t")?;
    for (i, list) in out.samples.iter().enumerate() {
        for s in list {
            writeln!(w, "{},{}", i + 1, s.t_k)?;
        }
    }
    w.flush()
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> io::Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()
}

/// Writes the standard set of run files into `dir`.
pub fn write_run(out: &RunOutput, dt: f64, dir: &Path, plot_data: bool) -> io::Result<RunSummary> {
    std::fs::create_dir_all(dir)?;
    write_trajectory(out, dt, &dir.join("trajectory.csv"))?;
    write_events(out, &dir.join("events.csv"))?;
    write_ledger(out, &dir.join("ledger.csv"))?;
    write_candidates(out, &dir.join("candidates.csv"))?;
    let summary = summarize(out);
    write_json(&summary, &dir.join("summary.json"))?;
    if plot_data {
        write_plot_trajectories(out, dt, &dir.join("plot_trajectories.csv"))?;
        write_plot_raster(out, &dir.join("plot_sampling_raster.csv"))?;
    }
    Ok(summary)
}
