//! Command-line front end. Every command computes its artifacts in memory
//! first and only then writes them, so a failed run leaves the output
//! directory untouched.

mod artifacts;
mod commands;
mod reproduce;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::analyses::AnalysisError;
use crate::engine::{SimError, SolverConfig};
use crate::extract::ExtractError;
use crate::netlist::Diagnostic;

pub use artifacts::{Artifact, ArtifactSet, Format, Manifest};
pub use reproduce::FIGURE_IDS;

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "OTFTSIM_OUT";

#[derive(Debug, Parser)]
#[command(name = "otftsim", version, about = "Stretchable OTFT characterization and circuit simulation")]
#[command(after_help = "Solver settings are given as --solver.<key>=<value>, e.g. --solver.lte_tol=1e-3.\n\
Keys: abstol reltol vntol gmin damping max_newton_iters method lte_tol min_step max_step adaptive.\n\n\
Exit codes: 0 success, 1 usage, 2 input or schema error, 3 numerical failure.")]
pub struct Cli {
    #[command(flatten)]
    pub run: RunArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Output directory.
    #[arg(long, global = true, env = OUT_ENV, default_value = "otftsim-out")]
    pub out: PathBuf,
    /// Seed for stochastic analyses; overrides any `.mc` seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Solver override KEY=VALUE (also written --solver.KEY=VALUE).
    #[arg(long = "solver", global = true, value_name = "KEY=VALUE")]
    pub solver: Vec<String>,
    /// Artifact formats to emit.
    #[arg(long, global = true, value_delimiter = ',', default_value = "csv,manifest")]
    pub format: Vec<Format>,
    /// Run independent jobs sequentially.
    #[arg(long, global = true)]
    pub sequential: bool,
    /// More progress output on stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Figures of merit for every device in measurement CSVs.
    Extract {
        #[arg(required = true)]
        csv: Vec<PathBuf>,
        /// Histogram bins of the batch summary.
        #[arg(long, default_value_t = crate::extract::DEFAULT_BINS)]
        bins: usize,
    },
    /// Compact-model cards fitted to each device's sweeps.
    Fit {
        #[arg(required = true)]
        csv: Vec<PathBuf>,
        /// Fixed threshold voltage, V. Default: the device's √ID estimate.
        #[arg(long, allow_hyphen_values = true, conflicts_with = "free_vth")]
        vth: Option<f64>,
        /// Fit the threshold voltage as a sixth parameter.
        #[arg(long)]
        free_vth: bool,
    },
    /// Runs every analysis directive of a netlist in file order.
    Sim {
        netlist: PathBuf,
        /// Node measured by `.tran` oscillation and `.mc` analyses.
        #[arg(long, default_value = "out")]
        probe: String,
    },
    /// Regenerates a figure-analogue dataset from the bundled fixtures.
    Reproduce {
        /// One of: fig4f fig4h fig5d fig5e fig5g fig5m supp9 supp10.
        id: String,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {message}")]
    Input { path: String, message: String },
    #[error("{path}: netlist has errors")]
    Netlist { path: String, diagnostics: Vec<Diagnostic> },
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("{0}")]
    Failed(String),
    #[error("writing {path}: {source}")]
    Output {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Sim(SimError::Config(_)) => 1,
            CliError::Input { .. } | CliError::Netlist { .. } | CliError::Output { .. } => 2,
            CliError::Extract(e) => match e {
                ExtractError::Schema(_) | ExtractError::Row { .. } | ExtractError::Csv(_) | ExtractError::Io(_) => 2,
                ExtractError::Precondition(_) => 2,
                _ => 3,
            },
            CliError::Sim(SimError::InvalidCircuit(_)) => 2,
            CliError::Analysis(AnalysisError::Sim(SimError::InvalidCircuit(_))) => 2,
            CliError::Sim(_) | CliError::Analysis(_) | CliError::Failed(_) => 3,
        }
    }
}

/// Resolved run settings shared by all commands.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub solver: SolverConfig,
    pub overrides: Vec<(String, String)>,
    pub formats: Vec<Format>,
    pub exec: crate::par::Exec,
    pub verbosity: u8,
}

impl RunConfig {
    pub fn from_args(a: &RunArgs) -> Result<Self, CliError> {
        let mut solver = SolverConfig::default();
        let mut overrides = Vec::new();
        for kv in &a.solver {
            let (k, v) =
                kv.split_once('=').ok_or_else(|| CliError::Usage(format!("--solver expects KEY=VALUE, got '{kv}'")))?;
            solver.set(k.trim(), v.trim())?;
            overrides.push((k.trim().to_string(), v.trim().to_string()));
        }
        let exec = if a.sequential { crate::par::Exec::Sequential } else { crate::par::Exec::Parallel };
        Ok(Self {
            out: a.out.clone(),
            seed: a.seed,
            solver,
            overrides,
            formats: a.format.clone(),
            exec,
            verbosity: a.verbose,
        })
    }

    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }

    pub(crate) fn note(&self, msg: impl AsRef<str>) {
        if self.verbosity > 0 {
            eprintln!("{}", msg.as_ref());
        }
    }
}

/// Rewrites `--solver.KEY=VALUE` and `--solver.KEY VALUE` into the
/// `--solver KEY=VALUE` form clap understands.
pub fn normalize_args<I: IntoIterator<Item = OsString>>(args: I) -> Vec<OsString> {
    let mut out = Vec::new();
    let mut it = args.into_iter().peekable();
    while let Some(a) = it.next() {
        let Some(rest) = a.to_str().and_then(|s| s.strip_prefix("--solver.")) else {
            out.push(a);
            continue;
        };
        let kv = if rest.contains('=') {
            rest.to_string()
        } else {
            let v = it.next().map(|v| v.to_string_lossy().into_owned()).unwrap_or_default();
            format!("{rest}={v}")
        };
        out.push("--solver".into());
        out.push(kv.into());
    }
    out
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I: IntoIterator<Item = OsString>>(args: I) -> i32 {
    let cli = match Cli::try_parse_from(normalize_args(args)) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(written) => {
            for p in written {
                println!("{}", p.display());
            }
            0
        }
        Err(e) => {
            report(&e);
            e.exit_code()
        }
    }
}

fn report(e: &CliError) {
    match e {
        CliError::Netlist { path, diagnostics } => {
            for d in diagnostics {
                eprintln!("{path}:{d}");
            }
        }
        other => eprintln!("error: {other}"),
    }
}

/// Runs a parsed command line, returning the paths written.
pub fn execute(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let cfg = RunConfig::from_args(&cli.run)?;
    let set = match &cli.command {
        Command::Extract { csv, bins } => commands::extract(csv, *bins, &cfg)?,
        Command::Fit { csv, vth, free_vth } => commands::fit(csv, *vth, *free_vth, &cfg)?,
        Command::Sim { netlist, probe } => commands::sim(netlist, probe, &cfg)?,
        Command::Reproduce { id } => reproduce::reproduce(id, &cfg)?,
    };
    set.finish(&cfg)
}
