use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use zzsim::config::RunConfig;
use zzsim::report::{cmd_moving, cmd_oracle_check, cmd_plan, cmd_simulate, cmd_sweep, render_report, write_config};
use zzsim::tn::PLAN_CACHE_ENV;

#[derive(Parser)]
#[command(name = "zzsim", version, about = "Exact logical channels of a surface-17 memory under ZZ crosstalk")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration; defaults apply to every missing field.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.directory`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for split contraction.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Planner seed; also the first circuit seed of `oracle-check`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Plan-cache directory.
    #[arg(long, global = true, env = PLAN_CACHE_ENV)]
    plan_cache: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Logical channel of one memory experiment.
    Simulate,
    /// Plan the contraction only and report width and cost.
    Plan,
    /// One run per crosstalk strength in `sweep.k_values`.
    Sweep,
    /// Moving inaccuracy for `moving.pair` over `moving.t1_grid`.
    Moving,
    /// Compare tensor-network contraction with the dense simulator on
    /// random circuits.
    OracleCheck {
        #[arg(long, default_value_t = 50)]
        count: usize,
        #[arg(long, default_value_t = 8)]
        max_qubits: usize,
    },
    /// Print the effective configuration as TOML.
    Config,
}

fn load(cli: &Cli) -> Result<RunConfig, String> {
    let mut c = match &cli.config {
        Some(p) => RunConfig::load(p).map_err(|e| e.to_string())?,
        None => RunConfig::default(),
    };
    if let Some(o) = &cli.out {
        c.output.directory = o.clone();
    }
    if let Some(w) = cli.workers {
        c.engine.workers = w;
    }
    if let Some(s) = cli.seed {
        c.engine.budget.seed = s;
    }
    if cli.plan_cache.is_some() {
        c.engine.plan_cache = cli.plan_cache.clone();
    }
    c.validate().map_err(|e| e.to_string())?;
    Ok(c)
}

fn run(cli: &Cli) -> Result<bool, String> {
    let config = load(cli)?;
    let err = |e: zzsim::report::ReportError| e.to_string();
    let written = match &cli.command {
        Command::Config => {
            print!("{}", config.to_toml().map_err(|e| e.to_string())?);
            return Ok(true);
        }
        Command::Simulate => {
            let (report, files) = cmd_simulate(&config).map_err(err)?;
            print!("{}", render_report(&report));
            files
        }
        Command::Plan => {
            let (r, files) = cmd_plan(&config).map_err(err)?;
            println!(
                "width {} (subtask width {}, {} split indices), estimated cost {:.3e}, {:.1} s{}",
                r.plan.width,
                r.plan.subtask_width,
                r.plan.split_edges,
                r.plan.estimated_cost,
                r.plan.seconds,
                if r.plan.cached { ", cached" } else { "" }
            );
            files
        }
        Command::Sweep => {
            let (points, files) = cmd_sweep(&config).map_err(err)?;
            for p in &points {
                println!("kt {:.6}  p_bit {:.4e}  p_phase {:.4e}  p_y {:.4e}", p.kt_region, p.p_bit, p.p_phase, p.p_y);
            }
            files
        }
        Command::Moving => {
            let (rows, files) = cmd_moving(&config).map_err(err)?;
            for r in &rows {
                println!("T1 {} ns  inaccuracy {:.3e}", r.t1, r.inaccuracy);
            }
            files
        }
        Command::OracleCheck { count, max_qubits } => {
            let (r, files) = cmd_oracle_check(&config, *count, *max_qubits, cli.seed.unwrap_or(0)).map_err(err)?;
            println!("{} circuits, max-abs difference {:.3e}, {}", r.cases.len(), r.max_abs_diff, if r.passed { "PASS" } else { "FAIL" });
            if !r.passed {
                return Ok(false);
            }
            files
        }
    };
    write_config(&config, &config.output.directory).map_err(err)?;
    for f in written {
        eprintln!("wrote {}", f.display());
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
