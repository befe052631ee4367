//! `catsim`: closed-form decoherence of three coupled cat states.

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use commands::{Outcome, Run};
use config::RunConfig;
use error::CliError;
use output::OutDir;

const WORKERS_ENV: &str = "CATSIM_WORKERS";

#[derive(Parser, Debug)]
#[command(name = "catsim", version, about = "Spontaneous decoherence of three coupled cat states")]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Times as `a,b,c` or `start:end:step`.
    #[arg(long = "t", global = true, value_name = "LIST|RANGE", allow_hyphen_values = true)]
    times: Option<String>,
    #[arg(long, global = true, value_enum)]
    particle: Option<ParticleArg>,
    /// Quadrature nodes per integrated axis for the command being run.
    #[arg(long, global = true, value_name = "N")]
    grid: Option<usize>,
    /// Fixed integration half-width instead of the adaptive rule.
    #[arg(long, global = true, value_name = "L")]
    extent: Option<f64>,
    /// Decoherence threshold on the visibility.
    #[arg(long, global = true, value_name = "THETA")]
    threshold: Option<f64>,
    #[arg(long, global = true)]
    emit_svg: bool,
    /// Run the expensive independent oracles during `verify`.
    #[arg(long, global = true)]
    oracle: bool,
    /// Print the default configuration and exit.
    #[arg(long)]
    print_defaults: bool,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Normal-mode basis.
    Eigen,
    /// Corner trajectories and crossing times.
    Classical,
    /// Reduced density profiles.
    Reduce,
    /// Visibility series, decoherence onsets and crossings.
    Report,
    /// Oracle comparisons; exit status 3 on any breach.
    Verify,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Self::Eigen => "eigen",
            Self::Classical => "classical",
            Self::Reduce => "reduce",
            Self::Report => "report",
            Self::Verify => "verify",
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum ParticleArg {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    #[value(name = "3")]
    Three,
    All,
}

impl ParticleArg {
    fn list(self) -> Vec<usize> {
        match self {
            Self::One => vec![1],
            Self::Two => vec![2],
            Self::Three => vec![3],
            Self::All => vec![1, 2, 3],
        }
    }
}

fn resolve(cli: &Cli, command: Command) -> Result<Run, CliError> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            config::parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        config.output.dir = out.display().to_string();
    }
    if let Some(n) = cli.grid {
        match command {
            Command::Report => config.quadrature.report_points = n,
            _ => config.quadrature.points = n,
        }
    }
    if let Some(l) = cli.extent {
        if !(l > 0.0) {
            return Err(CliError::Usage(format!("--extent must be positive, got {l}")));
        }
        config.quadrature.extent = Some(l);
    }
    if let Some(th) = cli.threshold {
        if !(th > 0.0 && th < 1.0) {
            return Err(CliError::Usage(format!("--threshold must lie in (0, 1), got {th}")));
        }
        config.thresholds.theta_dec = th;
    }
    config.output.emit_svg |= cli.emit_svg;
    config.output.run_oracle |= cli.oracle;
    let times = cli.times.as_deref().map(config::parse_times).transpose().map_err(CliError::Usage)?;
    if let Some(ts) = &times {
        if ts.is_empty() || ts.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(CliError::Usage("--t needs non-negative finite times".into()));
        }
    }
    Ok(Run {
        config,
        times,
        particles: cli.particle.unwrap_or(ParticleArg::All).list(),
        exec: catsim::Execution::default(),
    })
}

fn manifest(run: &Run, command: Command, outcome: &Outcome, out: &OutDir, workers: &str) -> String {
    let mut s = String::new();
    s.push_str(&format!("tool = catsim {}\n", env!("CARGO_PKG_VERSION")));
    s.push_str(&format!("command = {}\n", command.name()));
    s.push_str(&format!("workers = {workers}\n"));
    if let Some(ts) = &run.times {
        let list: Vec<String> = ts.iter().map(|t| t.to_string()).collect();
        s.push_str(&format!("times = {}\n", list.join(",")));
    }
    let ps: Vec<String> = run.particles.iter().map(|p| p.to_string()).collect();
    s.push_str(&format!("particles = {}\n", ps.join(",")));
    s.push_str("\n# results\n");
    for n in &outcome.notes {
        s.push_str(n);
        s.push('\n');
    }
    s.push_str("\n# files\n");
    for p in out.written() {
        s.push_str(&format!("{}\n", p.display()));
    }
    s.push_str("\n# resolved configuration\n");
    s.push_str(&config::render(&run.config));
    for rec in &outcome.oracles {
        s.push('\n');
        s.push_str(&rec.render());
    }
    s
}

fn configure_workers() -> Result<String, CliError> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| CliError::Usage(format!("{WORKERS_ENV} must be a positive integer, got '{v}'")))?;
            if !catsim::par::configure_workers(n) {
                eprintln!("note: {WORKERS_ENV} ignored, built without the parallel feature");
            }
            Ok(n.to_string())
        }
        Err(_) => Ok("default".into()),
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    if cli.print_defaults {
        print!("{}", config::render(&RunConfig::default()));
        return Ok(());
    }
    let Some(command) = cli.command else {
        return Err(CliError::Usage("no command given (eigen | classical | reduce | report | verify)".into()));
    };
    let workers = configure_workers()?;
    let run = resolve(&cli, command)?;
    let mut out = OutDir::create(&PathBuf::from(&run.config.output.dir))?;
    let result = match command {
        Command::Eigen => commands::eigen(&run, &mut out),
        Command::Classical => commands::classical(&run, &mut out),
        Command::Reduce => commands::reduce(&run, &mut out),
        Command::Report => commands::report(&run, &mut out),
        Command::Verify => commands::verify(&run, &mut out),
    };
    // Failed runs still leave a manifest behind, naming the error.
    let outcome = match &result {
        Ok(o) => o,
        Err(e) => &Outcome { notes: vec![format!("error = {e}")], ..Outcome::default() },
    };
    let body = manifest(&run, command, outcome, &out, &workers);
    out.text("manifest.txt", &body)?;
    let outcome = result?;
    if outcome.failures > 0 {
        return Err(CliError::Verification(outcome.failures));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
