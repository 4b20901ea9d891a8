//! `multiferro`: experiment configs in, CSV and JSON artifacts out.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use multiferro::SpinFamily;

use config::{parse_family, parse_list, ExperimentConfig, ModelFlags};
use error::CliError;

#[derive(Clone, Debug)]
struct List(Vec<f64>);

fn list(s: &str) -> Result<List, String> {
    parse_list(s).map(List)
}

#[derive(Parser, Debug)]
#[command(name = "multiferro", version, about = "Multipartite mean-field ferromagnets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON experiment config; flags below override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Agreement tolerance for cross-checks.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    nu: Option<usize>,
    /// Comma-separated party fractions.
    #[arg(long, global = true, value_parser = list, allow_hyphen_values = true)]
    alpha: Option<List>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    beta: Option<f64>,
    /// Comma-separated external fields.
    #[arg(long, global = true, value_parser = list, allow_hyphen_values = true)]
    h: Option<List>,
    /// Spin law for every party: rademacher, uniform, three_point:<q>, or JSON.
    #[arg(long, global = true, value_parser = parse_family)]
    family: Option<SpinFamily>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Critical inverse temperature, and optionally the tripartite surface.
    BetaC {
        /// Grid points per axis for the tripartite surface over (alpha1, alpha2).
        #[arg(long)]
        surface: Option<usize>,
    },
    /// All stationary points of the self-consistency system.
    Solve {
        #[arg(long)]
        per_axis: Option<usize>,
    },
    /// Equilibrium pressure with its cross-checks.
    Pressure {
        /// Counterterm of the variational formula.
        #[arg(long)]
        c: Option<f64>,
    },
    /// Critical lines, regimes along line 1, and line intersections.
    PhaseDiagram {
        #[arg(long)]
        h2_max: Option<f64>,
        #[arg(long)]
        h2_points: Option<usize>,
    },
    /// Marginal pressure profiles on line 1.
    Landscape {
        /// Comma-separated h2 values.
        #[arg(long, value_parser = list, allow_hyphen_values = true)]
        h2: Option<List>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// The three critical fields and the first-order jump.
    CriticalFields,
    /// Exact finite-size fluctuation suite.
    Fluctuations {
        /// Comma-separated total sizes.
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
    },
    /// The acceptance battery.
    Verify {
        /// Comma-separated criterion numbers (default: all).
        #[arg(long, value_delimiter = ',')]
        only: Option<Vec<u8>>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let flags = ModelFlags {
        nu: cli.nu,
        alpha: cli.alpha.map(|l| l.0),
        beta: cli.beta,
        h: cli.h.map(|l| l.0),
        family: cli.family,
    };
    let mut cfg = ExperimentConfig::load(cli.config.as_deref())?;
    match &cli.command {
        Command::BetaC { surface } => cfg.surface_points = surface.or(cfg.surface_points),
        Command::Solve { per_axis } => cfg.per_axis = per_axis.or(cfg.per_axis),
        Command::Pressure { c } => cfg.c = c.or(cfg.c),
        Command::PhaseDiagram { h2_max, h2_points } => {
            cfg.h2_max = h2_max.or(cfg.h2_max);
            cfg.h2_points = h2_points.or(cfg.h2_points);
        }
        Command::Landscape { h2, points } => {
            if let Some(l) = h2 {
                cfg.h2_values = Some(l.0.clone());
            }
            cfg.profile_points = points.or(cfg.profile_points);
        }
        Command::CriticalFields => {}
        Command::Fluctuations { sizes } => {
            if let Some(s) = sizes {
                cfg.sizes = Some(s.clone());
            }
        }
        Command::Verify { only } => {
            if let Some(o) = only {
                cfg.criteria = Some(o.clone());
            }
        }
    }
    let cfg = cfg.resolve(&flags, cli.tol)?;
    let out = cli.out.as_path();
    match cli.command {
        Command::BetaC { .. } => commands::beta_c(&cfg, out),
        Command::Solve { .. } => commands::solve(&cfg, out),
        Command::Pressure { .. } => commands::pressure(&cfg, out),
        Command::PhaseDiagram { .. } => commands::phase_diagram(&cfg, out),
        Command::Landscape { .. } => commands::landscape(&cfg, out),
        Command::CriticalFields => commands::fields(&cfg, out),
        Command::Fluctuations { .. } => commands::fluctuations(&cfg, out),
        Command::Verify { .. } => commands::verify(&cfg, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
