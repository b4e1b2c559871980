use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use crnsim::experiments::{self, OutputFormat, RunnerOptions, SchemeConfig, SchemeId};
use crnsim::Result;

/// Runs the PU/SU cognitive-radio queueing experiments and writes CSV and
/// plot tables.
#[derive(Debug, Parser)]
#[command(name = "crnsim", version)]
struct Cli {
    /// Built-in scheme (A, B, C or D).
    #[arg(long, conflicts_with = "config")]
    scheme: Option<SchemeId>,
    /// Scenario file with `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reps: Option<usize>,
    /// Simulated seconds per replication.
    #[arg(long)]
    horizon: Option<f64>,
    /// Fraction of the horizon discarded as warmup.
    #[arg(long)]
    warmup: Option<f64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value = "csv")]
    format: OutputFormat,
    /// Dump the event trace of replication 0 of every grid point into `<out>/trace`.
    #[arg(long)]
    trace: bool,
    /// Worker threads (0 = all cores, 1 = serial).
    #[arg(long, default_value_t = 0)]
    parallel: usize,
}

fn scheme_from(cli: &Cli) -> Result<SchemeConfig> {
    let mut scheme = match (&cli.config, cli.scheme) {
        (Some(path), _) => experiments::load_config(path)?,
        (None, Some(id)) => SchemeConfig::builtin(id)?,
        (None, None) => return Err(crnsim::Error::NoScenario),
    };
    if let Some(seed) = cli.seed {
        scheme.seed = seed;
    }
    if let Some(reps) = cli.reps {
        scheme.reps = reps;
    }
    if let Some(h) = cli.horizon {
        scheme.horizon = h;
    }
    if let Some(w) = cli.warmup {
        scheme.warmup = w;
    }
    scheme.validate()?;
    Ok(scheme)
}

fn run(cli: &Cli) -> Result<bool> {
    let scheme = scheme_from(cli)?;
    let options = RunnerOptions {
        parallel: cli.parallel,
        trace_dir: cli.trace.then(|| cli.out.join("trace")),
    };
    let grid = scheme.grid().len();
    eprintln!(
        "scheme {}: {grid} grid points x {} reps, horizon {} s",
        scheme.id, scheme.reps, scheme.horizon
    );
    let result = experiments::run_scheme(&scheme, &options)?;
    let mut ok = true;
    for (point, err) in result.failures() {
        ok = false;
        eprintln!("grid point {} ({point:?}) failed: {err}", point.index);
    }
    let rows = experiments::rows(&result);
    for path in experiments::emit(&rows, cli.format, &cli.out)? {
        println!("{}", path.display());
    }
    Ok(ok)
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
