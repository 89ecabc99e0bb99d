use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qtrig::check::run_checks;
use qtrig::config::{InitialConfig, RunConfig};
use qtrig::params::{assess, ProtocolParams};
use qtrig::report::{write_json, write_run};
use qtrig::sim::{run, RunOptions};
use qtrig::Error;

#[derive(Parser)]
#[command(name = "qtrig", version, about = "Quantized self-triggered consensus: design, simulate, check")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute design constants and assumption verdicts.
    Design(Common),
    /// Run the closed loop and export trajectories, events and the ledger.
    Simulate(Common),
    /// Run the invariant suites against the configuration.
    Check(Common),
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory (defaults to the config's output_dir, then ".").
    #[arg(long, env = "QTRIG_OUT")]
    out: Option<PathBuf>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    grid_dt: Option<f64>,
    /// Seed for random initial states and the check suites.
    #[arg(long)]
    seed: Option<u64>,
    /// Simulate even when the design verdicts fail.
    #[arg(long)]
    force: bool,
    /// Also write plot-ready trajectory and sampling-raster CSVs.
    #[arg(long)]
    emit_plot_data: bool,
    /// Run this many consecutive seeds in parallel (uniform initial states).
    #[arg(long)]
    sweep: Option<u64>,
}

struct Loaded {
    cfg: RunConfig,
    out_dir: PathBuf,
    horizon: f64,
    grid_dt: f64,
}

fn load(c: &Common) -> Result<Loaded, Error> {
    let cfg = RunConfig::load(&c.config)?;
    let out_dir = c
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    let horizon = c.horizon.unwrap_or(cfg.horizon);
    let grid_dt = c.grid_dt.unwrap_or(cfg.grid_dt);
    if !(horizon >= 0.0 && horizon.is_finite()) || !(grid_dt > 0.0 && grid_dt.is_finite()) {
        return Err(qtrig::config::ConfigError::Invalid {
            field: "horizon/grid_dt".into(),
            msg: "horizon must be >= 0 and grid_dt > 0".into(),
        }
        .into());
    }
    Ok(Loaded {
        cfg,
        out_dir,
        horizon,
        grid_dt,
    })
}

fn design(c: &Common) -> Result<(), Error> {
    let l = load(c)?;
    let graph = l.cfg.build_graph()?;
    let x0 = l.cfg.initial_states(c.seed);
    let report = assess(&graph, &l.cfg.design_inputs(), Some(&x0));
    std::fs::create_dir_all(&l.out_dir)?;
    let path = l.out_dir.join("design.json");
    write_json(&report, &path)?;
    println!("lambda2      {:.6}", report.lambda2);
    println!("gamma_inf    {:.6}", report.gamma_inf);
    match report.omega_tilde {
        Some(w) => println!("omega_tilde  {w:.6}"),
        None => println!("omega_tilde  undefined"),
    }
    if let Some(r) = report.min_feasible_levels {
        println!("min odd R    {r}");
    }
    for v in &report.verdicts {
        println!("{:<4} {}  {}  {}", v.id, if v.pass { "pass" } else { "FAIL" }, v.condition, v.detail);
    }
    println!("report       {}", path.display());
    if report.feasible {
        Ok(())
    } else {
        Err(Error::Infeasible(
            report
                .error
                .clone()
                .unwrap_or_else(|| "one or more assumptions fail".into()),
        ))
    }
}

fn simulate_one(
    l: &Loaded,
    graph: &qtrig::graph::Graph,
    params: &ProtocolParams,
    seed: Option<u64>,
    dir: &Path,
    plot: bool,
) -> Result<(), Error> {
    let x0 = l.cfg.initial_states(seed);
    let opts = RunOptions {
        horizon: l.horizon,
        grid_dt: l.grid_dt,
        check: true,
    };
    let out = run(graph, params, &x0, opts)?;
    let s = write_run(&out, l.grid_dt, dir, plot)?;
    println!(
        "{}: {} events, final max gap {:.6e} (E(T) = {:.6e})",
        dir.display(),
        s.ledger_events,
        s.final_max_gap,
        s.envelope_at_horizon
    );
    Ok(())
}

fn simulate(c: &Common) -> Result<(), Error> {
    let l = load(c)?;
    let graph = l.cfg.build_graph()?;
    let inputs = l.cfg.design_inputs();
    let params = ProtocolParams::new(&graph, &inputs)?;
    let x0 = l.cfg.initial_states(c.seed);
    let report = params.validate(&graph, Some(&x0));
    if !report.feasible && !c.force {
        let failed: Vec<&str> = report.verdicts.iter().filter(|v| !v.pass).map(|v| v.id).collect();
        return Err(Error::Infeasible(format!(
            "assumptions {failed:?} fail (use --force to run anyway)"
        )));
    }
    match c.sweep {
        None | Some(0) => simulate_one(&l, &graph, &params, c.seed, &l.out_dir, c.emit_plot_data),
        Some(k) => {
            if !matches!(l.cfg.initial, InitialConfig::Uniform { .. }) {
                eprintln!("note: --sweep varies only uniform initial states");
            }
            let base = c.seed.unwrap_or(match l.cfg.initial {
                InitialConfig::Uniform { seed } => seed,
                _ => 0,
            });
            let results: Vec<Result<(), Error>> = std::thread::scope(|scope| {
                let handles: Vec<_> = (base..base + k)
                    .map(|seed| {
                        let (l, graph, params) = (&l, &graph, &params);
                        let dir = l.out_dir.join(format!("seed-{seed}"));
                        scope.spawn(move || {
                            simulate_one(l, graph, params, Some(seed), &dir, c.emit_plot_data)
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("sweep worker panicked"))
                    .collect()
            });
            results.into_iter().collect()
        }
    }
}

fn check(c: &Common) -> Result<(), Error> {
    let l = load(c)?;
    let graph = l.cfg.build_graph()?;
    let inputs = l.cfg.design_inputs();
    let x0 = l.cfg.initial_states(c.seed);
    let params = ProtocolParams::new(&graph, &inputs)?;
    let feasible = params.validate(&graph, Some(&x0)).feasible;
    let report = run_checks(&graph, &params, &x0, l.horizon.min(5.0), c.seed.unwrap_or(0), feasible);
    std::fs::create_dir_all(&l.out_dir)?;
    write_json(&report, &l.out_dir.join("check.json"))?;
    for s in &report.suites {
        println!("{:<16} {}  ({} cases) {}", s.name, if s.pass { "pass" } else { "FAIL" }, s.cases, s.detail);
    }
    if !feasible {
        println!("design verdicts fail; envelope failures are expected");
        return Err(Error::Infeasible("design verdicts fail".into()));
    }
    if report.all_pass {
        Ok(())
    } else {
        Err(Error::Check("one or more suites fail".into()))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Design(c) => design(c),
        Command::Simulate(c) => simulate(c),
        Command::Check(c) => check(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
