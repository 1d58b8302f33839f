use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sbfem_cli::config::{parse_usize_list, ConfigOverrides, StudyConfig};
use sbfem_cli::error::{CliError, Result};
use sbfem_cli::{emit_csv, emit_plot_data, estimate_rates, run_study, verify};

/// Convergence studies for a semi-analytical solver of the Poisson problem
/// on circular sectors.
#[derive(Parser)]
#[command(name = "sbfem", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Run a convergence study and write CSV (and optionally plot data).
    Run(RunArgs),
    /// Run the property suites; exits nonzero on any violation.
    Verify,
}

#[derive(Args)]
struct RunArgs {
    /// Flat key=value config file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Problem id: test1 | test2 | test3 | test3-manufactured | custom.
    #[arg(long)]
    problem: Option<String>,
    /// Sector angle in radians (custom problem only).
    #[arg(long)]
    theta_max: Option<f64>,
    /// Wavenumber index of the custom harmonic mode.
    #[arg(long)]
    k: Option<usize>,
    /// Comma-separated polynomial orders, each in 1..=6.
    #[arg(long)]
    orders: Option<String>,
    /// Comma-separated element counts, strictly increasing.
    #[arg(long)]
    levels: Option<String>,
    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for two-column (h, error) plot files.
    #[arg(long)]
    plot_dir: Option<PathBuf>,
    /// Radial grading depth of the error quadrature.
    #[arg(long)]
    quad_levels: Option<usize>,
    /// Gauss points per quadrature cell in both directions.
    #[arg(long)]
    quad_points: Option<usize>,
}

impl RunArgs {
    fn into_config(self) -> Result<StudyConfig> {
        let mut layered = ConfigOverrides::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
            layered = ConfigOverrides::parse_file(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        }
        let flags = ConfigOverrides {
            problem: self.problem,
            theta_max: self.theta_max,
            k: self.k,
            orders: self.orders.map(|s| parse_usize_list("orders", &s)).transpose()?,
            levels: self.levels.map(|s| parse_usize_list("levels", &s)).transpose()?,
            quad_levels: self.quad_levels,
            quad_points: self.quad_points,
            out: self.out,
            plot_dir: self.plot_dir,
        };
        StudyConfig::build(layered.merge(flags))
    }
}

fn run_command(args: RunArgs) -> Result<()> {
    let config = args.into_config()?;
    let outcome = run_study(&config);

    // Partial results are flushed before any failure is reported.
    emit_csv(&outcome.records, &config.out)?;
    println!(
        "wrote {} record(s) to {}",
        outcome.records.len(),
        config.out.display()
    );
    if let Some(dir) = &config.plot_dir {
        let written = emit_plot_data(&outcome.records, dir)?;
        println!("wrote {} plot file(s) to {}", written.len(), dir.display());
    }

    if config.levels.len() >= 2 && !outcome.records.is_empty() {
        match estimate_rates(&outcome.records) {
            Ok(fits) => {
                for fit in fits {
                    println!(
                        "{} p={} {:>7}: rate {:+.3} (R^2 {:.6}, {} levels)",
                        fit.problem,
                        fit.p,
                        fit.norm.file_tag(),
                        fit.slope,
                        fit.r_squared,
                        fit.points
                    );
                }
            }
            Err(e) => println!("rate fit skipped: {e}"),
        }
    }

    match outcome.failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn verify_command() -> Result<()> {
    let results = verify::run_all()?;
    let mut failed = Vec::new();
    for suite in &results {
        let status = if suite.passed { "PASS" } else { "FAIL" };
        println!("{:<26} {} ({})", suite.name, status, suite.detail);
        if !suite.passed {
            failed.push(suite.name);
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Property(format!("suites failed: {}", failed.join(", "))))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are not configuration errors.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run(args) => run_command(args),
        Command::Verify => verify_command(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
