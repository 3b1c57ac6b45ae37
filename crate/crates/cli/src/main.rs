use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use threewave::Method;
use threewave_cli::config::{
    InitialCondition, RecurrenceConfig, SolverConfig, SweepSpec, TimeGrid,
};
use threewave_cli::presets::{preset, preset_text};
use threewave_cli::{run, CliError, ConfigFile, ExperimentConfig, Format, Kind, RunOptions};

#[derive(Parser, Debug)]
#[command(
    name = "threewave",
    version,
    about = "Quantum and classical three-wave interaction experiments"
)]
struct Cli {
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Occupations and variance of <n1> along Psi(tau).
    Evolve(QuantumArgs),
    /// Per-state occupation probabilities along Psi(tau).
    Cascade(QuantumArgs),
    /// Exact <n1> against the linearized solution.
    LinearCompare(QuantumArgs),
    /// Eigenvalues, spacing diagnostic and eigen-weights.
    Spectrum(QuantumArgs),
    /// Return-fidelity recurrence time.
    Recurrence(RecurrenceArgs),
    /// Classical amplitude equations from given wave actions.
    Classical(ClassicalArgs),
    /// Cartesian sweep over subspaces and spread states.
    Sweep(SweepArgs),
    /// Run an embedded figure config (fig1..fig5).
    Preset(PresetArgs),
    /// Run every experiment in a TOML config file.
    Run(RunArgs),
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Comma-separated output formats: csv, json, svg.
    #[arg(long, value_delimiter = ',', default_value = "csv")]
    format: Vec<Format>,
    /// File stem for the outputs (defaults to the subcommand name).
    #[arg(long)]
    name: Option<String>,
}

#[derive(Args, Debug)]
struct GridArgs {
    #[arg(long, default_value_t = 0.2)]
    tau_max: f64,
    #[arg(long, default_value_t = 201)]
    points: usize,
    /// exact-eigen or rk4.
    #[arg(long, default_value = "exact-eigen")]
    method: Method,
    /// RK4 step override.
    #[arg(long)]
    dt: Option<f64>,
}

#[derive(Args, Debug)]
struct QuantumArgs {
    #[arg(long, allow_negative_numbers = true)]
    s2: i64,
    #[arg(long, allow_negative_numbers = true)]
    s3: i64,
    /// Center basis index of the initial spread state (default psi_0).
    #[arg(long)]
    m: Option<usize>,
    /// Geometric spread ratio around m.
    #[arg(long, requires = "m")]
    epsilon: Option<f64>,
    /// Write per-state probability columns (large subspaces produce d columns per row).
    #[arg(long)]
    probs: bool,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct RecurrenceArgs {
    #[command(flatten)]
    quantum: QuantumArgs,
    #[arg(long, default_value_t = 0.99)]
    threshold: f64,
    #[arg(long, default_value_t = 1.0)]
    horizon: f64,
}

#[derive(Args, Debug)]
struct ClassicalArgs {
    /// Initial wave actions I1,I2,I3.
    #[arg(long, value_delimiter = ',', required = true)]
    actions: Vec<f64>,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Comma-separated s2 values.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    s2: Vec<i64>,
    /// Comma-separated s3 values (default: s3 = s2).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    s3: Vec<i64>,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    m: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    epsilon: Vec<f64>,
    /// Largest dimension that still gets divergence and spacing columns.
    #[arg(long, default_value_t = 1201)]
    max_dim: usize,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct PresetArgs {
    name: String,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Print the embedded config instead of running it.
    #[arg(long)]
    show: bool,
}

#[derive(Args, Debug)]
struct RunArgs {
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn base(kind: Kind, default_name: &str, grid: &GridArgs, output: &OutputArgs) -> ExperimentConfig {
    let mut e = ExperimentConfig::new(output.name.as_deref().unwrap_or(default_name), kind, 0, 0);
    e.time = TimeGrid {
        tau_max: grid.tau_max,
        points: grid.points,
    };
    e.solver = SolverConfig {
        method: grid.method,
        dt: grid.dt,
        norm_check: None,
    };
    e.output.formats = output.format.clone();
    e
}

fn quantum(kind: Kind, name: &str, a: &QuantumArgs) -> ExperimentConfig {
    let mut e = base(kind, name, &a.grid, &a.output);
    e.s2 = Some(a.s2);
    e.s3 = Some(a.s3);
    e.initial = InitialCondition {
        m: a.m,
        epsilon: a.epsilon,
        ..InitialCondition::default()
    };
    e.output.probabilities = a.probs;
    e
}

fn build(cmd: Command) -> Result<(ConfigFile, PathBuf), CliError> {
    let (e, out) = match cmd {
        Command::Evolve(a) => (quantum(Kind::Evolve, "evolve", &a), a.output.out),
        Command::Cascade(a) => (quantum(Kind::Cascade, "cascade", &a), a.output.out),
        Command::LinearCompare(a) => (
            quantum(Kind::LinearCompare, "linear-compare", &a),
            a.output.out,
        ),
        Command::Spectrum(a) => (quantum(Kind::Spectrum, "spectrum", &a), a.output.out),
        Command::Recurrence(a) => {
            let mut e = quantum(Kind::Recurrence, "recurrence", &a.quantum);
            e.recurrence = Some(RecurrenceConfig {
                threshold: a.threshold,
                horizon: a.horizon,
            });
            (e, a.quantum.output.out)
        }
        Command::Classical(a) => {
            let mut e = base(Kind::Classical, "classical", &a.grid, &a.output);
            e.s2 = None;
            e.s3 = None;
            let [i1, i2, i3] = a.actions[..] else {
                return Err(CliError::usage(
                    "actions",
                    format!("expected 3 values, got {}", a.actions.len()),
                ));
            };
            e.initial.actions = Some([i1, i2, i3]);
            (e, a.output.out)
        }
        Command::Sweep(a) => {
            let mut e = base(Kind::Sweep, "sweep", &a.grid, &a.output);
            e.s2 = None;
            e.s3 = None;
            e.sweep = Some(SweepSpec {
                s2: a.s2,
                s3: a.s3,
                m: a.m,
                epsilon: a.epsilon,
                max_dim: a.max_dim,
            });
            (e, a.output.out)
        }
        Command::Preset(a) => return Ok((preset(&a.name)?, a.out)),
        Command::Run(a) => {
            let text =
                std::fs::read_to_string(&a.config).map_err(|e| CliError::io(&a.config, e))?;
            return Ok((ConfigFile::parse(&text)?, a.out));
        }
    };
    Ok((ConfigFile::single(e), out))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Command::Preset(p) = &cli.command {
        if p.show {
            return match preset_text(&p.name) {
                Ok(t) => {
                    print!("{t}");
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            };
        }
    }
    let opts = RunOptions { jobs: cli.jobs };
    let result = build(cli.command).and_then(|(cfg, out)| run(&cfg, &out, &opts).map(|o| (o, out)));
    match result {
        Ok((outcome, out)) => {
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            for a in &outcome.manifest.artifacts {
                println!("{}", out.join(&a.path).display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(e),
    }
}

fn fail(e: CliError) -> ExitCode {
    let class = match e {
        CliError::Usage { .. } => "usage error",
        CliError::Numerical { .. } => "numerical error",
        CliError::Io { .. } => "i/o error",
    };
    eprintln!("{class}: {e}");
    ExitCode::from(e.exit_code())
}
