use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;

use trotter_lab::experiments::{
    parse_n_list, resolve_potential_spec, run, Command, ExperimentSpec, Format, MatrixFamily,
};
use trotter_lab::Error;

#[derive(Parser)]
#[command(name = "trotter-lab", version, about = "Trotter product formula experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sweep R_n over an n-list, fit the rate and check Hölder bounds.
    Rates(Opts),
    /// Floor of R_{2^m} for the fat Cantor indicator.
    Cantor(Opts),
    /// Symbol norm vs. sandwich vs. test-function oracle.
    Oracle(Opts),
    /// Lie product formula for seeded matrix pairs.
    Lie(Opts),
    /// Strong residuals next to operator-norm errors.
    Strong(Opts),
}

#[derive(Args)]
struct Opts {
    /// Compact spec (e.g. `weier:beta=0.5,levels=12`) or a JSON spec file.
    #[arg(long)]
    potential: Option<String>,
    #[arg(long)]
    depth: Option<u32>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    levels: Option<u32>,
    /// `a..b` (powers of two) or a comma list.
    #[arg(long)]
    n: Option<String>,
    /// Grid resolution of L^p([0, 1]).
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    /// Number of τ-grid points j / N.
    #[arg(long = "tau-grid")]
    tau_grid: Option<usize>,
    /// Single τ for `strong` and `lie`.
    #[arg(long)]
    tau: Option<f64>,
    /// Coarse grid size of the sup search.
    #[arg(long)]
    grid: Option<usize>,
    /// Refinement levels of the sup search.
    #[arg(long)]
    refine: Option<usize>,
    /// Maximum evaluations per sup search.
    #[arg(long)]
    budget: Option<u64>,
    /// Random test functions (oracle) or matrix pairs (lie).
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Matrix family for `lie`: random, nilpotent, diagonal, zero.
    #[arg(long)]
    matrices: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: String,
}

fn build_spec(command: Command, o: &Opts) -> Result<(ExperimentSpec, Format), Error> {
    let mut spec = ExperimentSpec::new(command);
    if let Some(text) = &o.potential {
        spec.potential = Some(resolve_potential_spec(text)?);
    } else if command == Command::Cantor && o.depth.is_some() {
        spec.potential = Some(trotter_lab::PotentialSpec::CantorIndicator { depth: 3 });
    }
    spec.potential = spec
        .potential
        .map(|p| p.with_overrides(o.depth, o.beta, o.levels));
    if let Some(text) = &o.n {
        spec.ns = Some(parse_n_list(text)?);
    }
    if let Some(v) = o.m {
        spec.resolution = v;
    }
    if let Some(v) = o.p {
        spec.p = v;
    }
    if let Some(v) = o.tau_grid {
        spec.tau_grid = v;
    }
    spec.tau = o.tau;
    if let Some(v) = o.grid {
        spec.search.coarse_grid = v;
    }
    if let Some(v) = o.refine {
        spec.search.refine_levels = v;
    }
    if let Some(v) = o.budget {
        spec.search.max_evaluations = v;
    }
    if let Some(v) = o.trials {
        spec.trials = v;
    }
    if let Some(v) = o.seed {
        spec.seed = v;
    }
    if let Some(text) = &o.matrices {
        spec.matrices = text.parse::<MatrixFamily>()?;
    }
    if let Some(v) = o.dim {
        spec.dim = v;
    }
    Ok((spec, o.format.parse()?))
}

fn configure_threads() {
    if let Some(k) = std::env::var("TROTTER_LAB_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&k| k > 0)
    {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            error!("could not size the thread pool: {e}");
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::BudgetExceeded { .. } => 3,
        Error::Io(_) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    configure_threads();
    let cli = Cli::parse();
    let (command, opts) = match &cli.command {
        Cmd::Rates(o) => (Command::Rates, o),
        Cmd::Cantor(o) => (Command::Cantor, o),
        Cmd::Oracle(o) => (Command::Oracle, o),
        Cmd::Lie(o) => (Command::Lie, o),
        Cmd::Strong(o) => (Command::Strong, o),
    };

    let result = build_spec(command, opts).and_then(|(spec, format)| {
        let report = run(&spec)?;
        let text = report.render(format)?;
        match &opts.output {
            Some(path) => std::fs::write(path, text)?,
            None => print!("{text}"),
        }
        Ok(report.partial)
    });
    match result {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => {
            error!("search budget exhausted; the report is partial");
            ExitCode::from(3)
        }
        Err(e) => {
            error!("{e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
