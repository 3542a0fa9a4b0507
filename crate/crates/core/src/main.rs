use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use netcap::capacity::{
    estimate_dagger, simulate_lemma2, threshold_sweep, xie_guo_constant, Lemma2Mode, DEFAULT_DAGGER_HORIZON,
    DEFAULT_OMEGA_GRID,
};
use netcap::graph::GraphSpec;
use netcap::harness::{parse_range, run_experiment, write_run, ExperimentConfig};
use netcap::{Error, Result};

#[derive(Parser)]
#[command(name = "netcap", version, about = "Feedback capacity experiments for nonlinear network dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Directory for trajectory.csv, summary.json and certificate.json.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one closed-loop experiment.
    Simulate(RunArgs),
    /// Run the configured controller against the adaptive adversarial plant.
    Adversary {
        #[command(flatten)]
        run: RunArgs,
        /// Slope bound B (at least 4/sharp).
        #[arg(long)]
        slope: Option<f64>,
    },
    /// Capacity constants and recursions.
    Capacity(CapacityArgs),
    /// Sweep the plant slope L over a grid.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Grid `start:end:step`.
        #[arg(long = "L", value_name = "A:B:STEP")]
        l: String,
        #[arg(long, default_value_t = 1)]
        trials: usize,
        /// Use the adversarial plant where L ≥ 4/sharp.
        #[arg(long)]
        adversary: bool,
    },
}

#[derive(Args)]
#[group(id = "what", required = true, multiple = false)]
struct CapacityWhat {
    /// Print the constant 3/2 + √2 and its minimiser.
    #[arg(long)]
    xie_guo: bool,
    /// Estimate the dagger capacity of a graph.
    #[arg(long)]
    dagger: bool,
    /// Iterate the scalar recursion at gain --m.
    #[arg(long)]
    lemma2: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Equality,
    Symmetric,
    Slack,
}

#[derive(Args)]
struct CapacityArgs {
    #[command(flatten)]
    what: CapacityWhat,
    /// Graph shorthand such as `cycle:5`, `path:4`, `selfloop:3`.
    #[arg(long)]
    graph: Option<String>,
    /// Read the graph from an experiment configuration instead.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    horizon: Option<usize>,
    /// Bisection bracket `low:high` for --dagger.
    #[arg(long)]
    bracket: Option<String>,
    #[arg(long)]
    m: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    omega: f64,
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    #[arg(long, value_enum, default_value = "equality")]
    mode: ModeArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn load(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(h) = args.horizon {
        cfg.horizon = h;
    }
    if let Some(s) = args.seed {
        cfg.seed = Some(s);
    }
    Ok(cfg)
}

fn print_json(v: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn simulate(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<()> {
    let run = run_experiment(cfg)?;
    if let Some(dir) = out {
        write_run(&run, dir)?;
    }
    print_json(&run.summary)
}

fn capacity(a: &CapacityArgs) -> Result<()> {
    if a.what.xie_guo {
        let (v, xi) = xie_guo_constant();
        println!("{v:.15}");
        println!("minimizer {xi:.15}");
        return Ok(());
    }
    if a.what.dagger {
        let spec = match (&a.graph, &a.config) {
            (Some(s), None) => GraphSpec::parse_shorthand(s)?,
            (None, Some(p)) => ExperimentConfig::load(p)?.graph,
            _ => return Err(Error::Config("--dagger needs exactly one of --graph or --config".into())),
        };
        let g = spec.build()?;
        let bracket = a
            .bracket
            .as_deref()
            .map(|s| {
                s.split_once(':')
                    .and_then(|(l, h)| Some((l.trim().parse().ok()?, h.trim().parse().ok()?)))
                    .ok_or_else(|| Error::Config(format!("bracket `{s}` must look like low:high")))
            })
            .transpose()?;
        let est = estimate_dagger(&g, bracket, a.horizon.unwrap_or(DEFAULT_DAGGER_HORIZON), &DEFAULT_OMEGA_GRID)?;
        return print_json(&est);
    }
    let m = a.m.ok_or_else(|| Error::Config("--lemma2 needs --m".into()))?;
    let mode = match a.mode {
        ModeArg::Equality => Lemma2Mode::Equality,
        ModeArg::Symmetric => Lemma2Mode::Symmetric,
        ModeArg::Slack => Lemma2Mode::SeededSlack { seed: a.seed },
    };
    let horizon = a.horizon.unwrap_or(100_000);
    let run = simulate_lemma2(m, a.omega, a.rho, mode, horizon)?;
    print_json(&json!({
        "m": m,
        "omega": a.omega,
        "rho": a.rho,
        "mode": mode,
        "horizon": horizon,
        "verdict": run.verdict,
        "overflowed": run.overflowed,
        "final_partial_sum": run.partial_sums.last(),
    }))
}

fn sweep(run: &RunArgs, l: &str, trials: usize, adversary: bool) -> Result<()> {
    let cfg = load(run)?;
    cfg.validate()?;
    let ls = parse_range(l)?;
    let report = threshold_sweep(&cfg, &ls, trials, adversary)?;
    println!("{:>10}  {:<16}  {:>12}  {:>12}", "L", "verdict", "sup_state", "bound");
    for p in &report.points {
        let verdict = match (p.stabilized, p.diverged) {
            (true, _) => "stabilized",
            (false, true) => "diverged",
            _ => "horizon_reached",
        };
        let bound = p.bound.map_or("-".to_string(), |b| format!("{b:.6e}"));
        let tag = if p.adversary { " (adversary)" } else { "" };
        println!("{:>10.4}  {:<16}  {:>12.6e}  {:>12}{tag}", p.l, verdict, p.sup_state, bound);
    }
    if let Some(dir) = &run.out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("sweep.json"), serde_json::to_string_pretty(&report)?)?;
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => simulate(&load(&args)?, args.out.as_deref()),
        Command::Adversary { run, slope } => {
            let mut cfg = load(&run)?;
            let mut adv = cfg.adversary.take().unwrap_or_default();
            if slope.is_some() {
                adv.slope = slope;
            }
            cfg.adversary = Some(adv);
            simulate(&cfg, run.out.as_deref())
        }
        Command::Capacity(a) => capacity(&a),
        Command::Sweep { run, l, trials, adversary } => sweep(&run, &l, trials, adversary),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
