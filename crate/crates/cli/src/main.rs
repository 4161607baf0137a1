use std::path::PathBuf;
use std::process::ExitCode;

use cbe_bench::commands::{eoc, optimize, solve, EocConfig};
use cbe_bench::config::{
    merge, normalise_key, read_settings, AlphaMode, Method, RunConfig, Settings,
};
use cbe_bench::output::{fmt_num, write_json};
use cbe_bench::reproduce::{parse_ids, reproduce};
use cbe_bench::validate::{run_checks, verdict};
use cbe_bench::{CliError, CliResult};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "cbe-bench",
    version,
    about = "Collision-induced breakage benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one case with one method and write concentration and moment tables.
    Solve(RunArgs),
    /// Errors and convergence orders on doubling grids.
    Eoc(RunArgs),
    /// Regenerate figure and table data (`all` or figure ids).
    Reproduce {
        #[arg(required = true)]
        ids: Vec<String>,
        #[arg(long, default_value = "reproduce")]
        out: PathBuf,
    },
    /// Minimise the averaged squared residual over the HAM control parameter.
    OptimizeAlpha {
        #[command(flatten)]
        run: RunArgs,
        /// Collocation nodes per axis (default: the series order).
        #[arg(long)]
        colloc: Option<usize>,
    },
    /// Run the oracle and invariant checks.
    Validate {
        /// Also write the report as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, hide = true, default_value_t = 1.0)]
        oracle_scale: f64,
    },
}

/// Flags mirroring the config-file keys. Values stay strings here and are
/// parsed once the file and the flags have been merged.
#[derive(Args)]
struct RunArgs {
    /// Flat key=value settings file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    case: Option<String>,
    /// fvm, ham or ahpm (eoc: a comma list or `all`).
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    order: Option<String>,
    /// Cell count (eoc: a doubling comma list).
    #[arg(long)]
    cells: Option<String>,
    /// uniform or geometric.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    eps_min: Option<String>,
    /// `auto` or a value in [-1, 0).
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
    #[arg(long)]
    rmax: Option<String>,
    #[arg(long)]
    tend: Option<String>,
    /// Comma-separated output times.
    #[arg(long)]
    times: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn settings(&self) -> CliResult<Settings> {
        let file = match &self.config {
            Some(path) => read_settings(path)?,
            None => Settings::new(),
        };
        let flags = [
            ("case", self.case.clone()),
            ("method", self.method.clone()),
            ("order", self.order.clone()),
            ("cells", self.cells.clone()),
            ("grid", self.grid.clone()),
            ("eps_min", self.eps_min.clone()),
            ("alpha", self.alpha.clone()),
            ("rmax", self.rmax.clone()),
            ("tend", self.tend.clone()),
            ("times", self.times.clone()),
            ("out", self.out.as_ref().map(|p| p.display().to_string())),
        ];
        let cli = flags
            .into_iter()
            .filter_map(|(k, v)| v.map(|v| (normalise_key(k), v)))
            .collect();
        Ok(merge(file, cli))
    }
}

fn execute(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Solve(args) => {
            let s = args.settings()?;
            let cfg = RunConfig::from_settings(&s)?;
            let done = solve(&cfg)?;
            if let (Some(a), Some(v)) = (done.record.alpha_star, done.record.averaged_residual) {
                let label = if cfg.alpha == AlphaMode::Auto {
                    "alpha*"
                } else {
                    "alpha"
                };
                println!("{label} = {}  A({label}) = {}", fmt_num(a), fmt_num(v));
            }
            println!("wrote {}", done.out.display());
        }
        Command::Eoc(args) => {
            let s = args.settings()?;
            let cfg = EocConfig::from_settings(&s)?;
            for r in eoc(&cfg)? {
                for row in &r.rows {
                    let order = row.eoc.map(fmt_num).unwrap_or_else(|| "-".into());
                    println!(
                        "{:5} {:5} {:>6} {:>20} {:>14}",
                        r.case_id,
                        r.method,
                        row.cells,
                        fmt_num(row.error),
                        order
                    );
                }
            }
            println!("wrote {}", cfg.run.out.join("eoc.csv").display());
        }
        Command::Reproduce { ids, out } => {
            for dir in reproduce(&parse_ids(&ids)?, &out)? {
                println!("wrote {}", dir.display());
            }
        }
        Command::OptimizeAlpha { run, colloc } => {
            let mut s = run.settings()?;
            s.insert("method".into(), Method::Ham.name().into());
            let cfg = RunConfig::from_settings(&s)?;
            let opt = optimize(&cfg, colloc)?;
            println!(
                "alpha* = {}  A(alpha*) = {}",
                fmt_num(opt.alpha),
                fmt_num(opt.value)
            );
        }
        Command::Validate {
            report,
            oracle_scale,
        } => {
            if !(oracle_scale.is_finite() && oracle_scale > 0.0) {
                return Err(CliError::Config(format!(
                    "oracle scale must be positive, got {oracle_scale}"
                )));
            }
            let checks = run_checks(oracle_scale)?;
            for c in &checks {
                let tag = if c.passed { "PASS" } else { "FAIL" };
                println!(
                    "{tag} {} value={} tol={}",
                    c.name,
                    fmt_num(c.value),
                    fmt_num(c.tol)
                );
            }
            if let Some(path) = report {
                write_json(&path, &checks)?;
            }
            verdict(&checks)?;
            println!("all {} checks passed", checks.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
