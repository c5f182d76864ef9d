use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use epirisk_cli::config::{Config, Value};
use epirisk_cli::table::{Format, Table};
use epirisk_cli::{commands, CliError};

/// Epidemic-risk security investment games: analytic solver, equilibrium
/// analysis, and Monte Carlo validation.
#[derive(Parser)]
#[command(name = "epirisk", version, about)]
struct Cli {
    /// Configuration file (flat key-value text with sections).
    #[arg(long, global = true)]
    params: Option<PathBuf>,

    /// Output path (defaults to stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Output format.
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,

    /// Random seed (overrides run.seed).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Protection regime for poa-curve (overrides run.case).
    #[arg(long, global = true, value_enum)]
    case: Option<CaseArg>,

    /// Count unstable equilibria when picking the worst equilibrium.
    #[arg(long, global = true)]
    include_unstable: bool,

    /// Override any config value: --set section.key=value (repeatable;
    /// flags win over file values).
    #[arg(long = "set", global = true, value_name = "SECTION.KEY=VALUE")]
    sets: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum CaseArg {
    Strong,
    Weak,
    General,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the analytic fixed point over a gamma (or lambda-q) grid.
    LmfSolve,
    /// Nash equilibria, social optimum and price of anarchy.
    Equilibria,
    /// Equilibrium adoption branches over (q-, cost ratio) cells.
    AdoptionCurve,
    /// Price of anarchy versus cost ratio.
    PoaCurve,
    /// Simulation-versus-analytic validation (exit 1 on threshold failure).
    Validate,
    /// Tipping threshold and best-response trajectories around it.
    Tipping,
    /// Raw Monte Carlo epidemic run.
    Simulate,
    /// Generate a random graph as edge-list text.
    GenGraph,
}

fn build_config(cli: &Cli) -> Result<Config, CliError> {
    let mut cfg = match &cli.params {
        Some(path) => Config::parse_file(path)?,
        None => Config::default(),
    };
    for spec in &cli.sets {
        cfg.set(spec)?;
    }
    if let Some(seed) = cli.seed {
        cfg.set_value("run", "seed", Value::Number(seed as f64));
    }
    if let Some(case) = cli.case {
        let name = match case {
            CaseArg::Strong => "strong",
            CaseArg::Weak => "weak",
            CaseArg::General => "general",
        };
        cfg.set_value("run", "case", Value::Str(name.into()));
    }
    if cli.include_unstable {
        cfg.set_value("run", "include_unstable", Value::Bool(true));
    }
    if let Some(format) = cli.format {
        let name = match format {
            FormatArg::Csv => "csv",
            FormatArg::Json => "json",
        };
        cfg.set_value("output", "format", Value::Str(name.into()));
    }
    if let Some(out) = &cli.out {
        cfg.set_value("output", "path", Value::Str(out.display().to_string()));
    }
    Ok(cfg)
}

fn write_output(
    cfg: &Config,
    text_writer: impl FnOnce(&mut dyn Write) -> Result<(), CliError>,
) -> Result<(), CliError> {
    match cfg.str_opt("output", "path")? {
        Some(path) => {
            let mut file = std::fs::File::create(&path)
                .map_err(|e| CliError::Io(format!("cannot create {path}: {e}")))?;
            text_writer(&mut file)
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            text_writer(&mut lock)
        }
    }
}

fn emit_table(cfg: &Config, table: &Table) -> Result<(), CliError> {
    let name = cfg.str_or("output", "format", "csv")?;
    let format = Format::parse(&name)
        .ok_or_else(|| CliError::Config(format!("unknown output format '{name}'")))?;
    write_output(cfg, |w| table.write(format, w))
}

fn run(cli: &Cli) -> Result<i32, CliError> {
    let cfg = build_config(cli)?;
    match cli.command {
        Command::LmfSolve => emit_table(&cfg, &commands::lmf_solve(&cfg)?)?,
        Command::Equilibria => emit_table(&cfg, &commands::equilibria(&cfg)?)?,
        Command::AdoptionCurve => emit_table(&cfg, &commands::adoption_curve_cmd(&cfg)?)?,
        Command::PoaCurve => emit_table(&cfg, &commands::poa_curve(&cfg)?)?,
        Command::Tipping => emit_table(&cfg, &commands::tipping(&cfg)?)?,
        Command::Simulate => emit_table(&cfg, &commands::simulate(&cfg)?)?,
        Command::GenGraph => {
            let text = commands::gen_graph(&cfg)?;
            write_output(&cfg, |w| {
                w.write_all(text.as_bytes())
                    .map_err(|e| CliError::Io(e.to_string()))
            })?;
        }
        Command::Validate => {
            let (table, pass) = commands::validate(&cfg)?;
            emit_table(&cfg, &table)?;
            if !pass {
                eprintln!("validation thresholds not met");
                return Ok(1);
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            if !matches!(e, CliError::BrokenPipe) {
                eprintln!("{e}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
