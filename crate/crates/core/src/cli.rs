//! The `unseen` command line.
//!
//! Results go to stdout as one JSON document (or CSV with `--output csv`);
//! diagnostics go to stderr. Exit codes: 0 success, 1 a well-formed failure
//! (prediction failure status, failed validation, too few successful
//! replicates), 2 usage, format or I/O errors.
//!
//! Environment descriptors:
//!
//! ```text
//! uniform:K            K equiprobable species
//! geom:q[:eps]         geometric masses q(1-q)^(i-1), tail truncated below eps (default 1e-12)
//! zipf:gamma:K         masses proportional to i^-gamma, i = 1..K
//! file:PATH[:column]   one column (name or 0-based index, default 0) of a count table
//! ```

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::embedding::{self, default_cut_time, embedding_algorithm, Prediction};
use crate::environment::Environment;
use crate::error::{Error, Result};
use crate::estimators::good_turing;
use crate::io::{self, sig10, ColumnRef};
use crate::montecarlo::{Experiment, ExperimentReport};

#[derive(Debug, Parser)]
#[command(name = "unseen", version, about = "Predict the unsampled mass of an urn via Poissonization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Output {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ExperimentKind {
    Pivot,
    Coverage,
    Bias,
    FixedN,
    /// Coverage of the Esty baseline interval for the full-sample mass.
    Esty,
}

#[derive(Debug, clap::Args)]
struct PredictArgs {
    /// Cut time; defaults to n/2.
    #[arg(long)]
    t: Option<f64>,
    #[arg(long, default_value_t = embedding::DEFAULT_M)]
    m: u64,
    #[arg(long, default_value_t = embedding::DEFAULT_LEVEL)]
    level: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Output::Json)]
    output: Output,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Predict the uncovered mass of a sample file.
    Predict {
        #[arg(long)]
        sample: PathBuf,
        #[command(flatten)]
        args: PredictArgs,
    },
    /// Draw a sample from an environment, predict, and report the true U(t).
    Simulate {
        #[arg(long)]
        env: String,
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        args: PredictArgs,
    },
    /// Run a Monte Carlo validation experiment.
    Validate {
        #[arg(long)]
        env: String,
        #[arg(long, value_enum)]
        experiment: ExperimentKind,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 10_000)]
        reps: usize,
        /// Comma-separated cut times for `fixed-n`; defaults to n x {0.5, 0.8, 0.9, 1.0, 1.1}.
        #[arg(long, value_delimiter = ',')]
        t_grid: Vec<f64>,
        #[command(flatten)]
        args: PredictArgs,
    },
    /// Describe an environment: species count, entropy, top-10 masses.
    EnvInfo {
        #[arg(long)]
        env: String,
        #[arg(long, value_enum, default_value_t = Output::Json)]
        output: Output,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CliOutput {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl CliOutput {
    fn ok(stdout: String, success: bool) -> Self {
        CliOutput {
            code: if success { 0 } else { 1 },
            stdout,
            stderr: String::new(),
        }
    }

    fn error(code: i32, stderr: String) -> Self {
        CliOutput {
            code,
            stdout: String::new(),
            stderr,
        }
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Build an environment from a descriptor such as `zipf:1.5:1000`.
pub fn parse_env_spec(spec: &str) -> Result<Environment> {
    let Some(rest) = spec.strip_prefix("file:") else {
        return Environment::from_descriptor(spec);
    };
    let (path, column) = if Path::new(rest).is_file() {
        (rest, None)
    } else {
        match rest.rsplit_once(':') {
            Some((p, c)) if Path::new(p).is_file() => (p, Some(c)),
            _ => (rest, None),
        }
    };
    let table = io::read_count_table(&read_file(Path::new(path))?)?;
    let column = column.map(ColumnRef::from).unwrap_or(ColumnRef::Index(0));
    io::table_to_environment(&table, &column)
}

#[derive(Serialize)]
struct Simulation<'a> {
    env: &'a str,
    n: usize,
    seed: u64,
    /// Uncovered mass of the species seen by the cut time.
    #[serde(with = "sig10")]
    true_u: f64,
    /// Uncovered mass of the full sample.
    #[serde(with = "sig10")]
    true_u_full: f64,
    #[serde(with = "sig10")]
    good_turing: f64,
    prediction: &'a Prediction,
}

#[derive(Serialize)]
struct Mass<'a> {
    label: &'a str,
    #[serde(with = "sig10")]
    mass: f64,
}

#[derive(Serialize)]
struct EnvInfo<'a> {
    kind: String,
    species: usize,
    #[serde(with = "sig10")]
    entropy_nats: f64,
    top: Vec<Mass<'a>>,
}

fn render_prediction(p: &Prediction, output: Output) -> String {
    match output {
        Output::Json => io::write_prediction(p) + "\n",
        Output::Csv => io::prediction_csv(p),
    }
}

fn render_report(r: &ExperimentReport, output: Output) -> String {
    match output {
        Output::Json => io::write_report(r) + "\n",
        Output::Csv => io::report_csv(r),
    }
}

fn execute(command: Command) -> Result<CliOutput> {
    match command {
        Command::Predict { sample, args } => {
            let sample = io::read_sample(&read_file(&sample)?)?;
            let t = args.t.unwrap_or_else(|| default_cut_time(sample.len()));
            let p = embedding_algorithm(&sample, t, args.m, args.level, args.seed)?;
            Ok(CliOutput::ok(render_prediction(&p, args.output), p.status.is_ok()))
        }
        Command::Simulate { env: spec, n, args } => {
            let env = parse_env_spec(&spec)?;
            if n == 0 {
                return Err(Error::param("--n must be >= 1"));
            }
            let sample = env.draw_sample(n, args.seed);
            let t = args.t.unwrap_or_else(|| default_cut_time(n));
            let p = embedding_algorithm(&sample, t, args.m, args.level, args.seed)?;
            let true_u = env.uncovered_mass_of_prefix(&sample, p.subsample_size);
            let true_u_full = env.uncovered_mass_of_prefix(&sample, n);
            let text = match args.output {
                Output::Json => {
                    let sim = Simulation {
                        env: &spec,
                        n,
                        seed: args.seed,
                        true_u,
                        true_u_full,
                        good_turing: good_turing(&sample)?,
                        prediction: &p,
                    };
                    io::write_tagged(io::SIMULATION_SCHEMA, &sim) + "\n"
                }
                Output::Csv => {
                    let mut lines = io::prediction_csv(&p).lines().map(str::to_owned).collect::<Vec<_>>();
                    lines[0].push_str(",true_u");
                    lines[1].push_str(&format!(",{}", sig10::round(true_u)));
                    lines.join("\n") + "\n"
                }
            };
            Ok(CliOutput::ok(text, p.status.is_ok()))
        }
        Command::Validate {
            env: spec,
            experiment,
            n,
            reps,
            t_grid,
            args,
        } => {
            let env = parse_env_spec(&spec)?;
            let t = args.t.unwrap_or_else(|| default_cut_time(n));
            let exp = Experiment::new(&env, n, t, args.m, reps, args.seed).with_level(args.level);
            let report = match experiment {
                ExperimentKind::Pivot => exp.pivot_law(),
                ExperimentKind::Coverage => exp.coverage(),
                ExperimentKind::Bias => exp.bias(),
                ExperimentKind::Esty => exp.esty_coverage(),
                ExperimentKind::FixedN => {
                    let grid = if t_grid.is_empty() {
                        [0.5, 0.8, 0.9, 1.0, 1.1].iter().map(|f| f * n as f64).collect()
                    } else {
                        t_grid
                    };
                    exp.fixed_n_effect(&grid)
                }
            }?;
            Ok(CliOutput::ok(render_report(&report, args.output), report.pass))
        }
        Command::EnvInfo { env: spec, output } => {
            let env = parse_env_spec(&spec)?;
            let top = env.top_masses(10);
            let text = match output {
                Output::Json => {
                    let info = EnvInfo {
                        kind: env.kind().to_string(),
                        species: env.species_count(),
                        entropy_nats: env.entropy(),
                        top: top.iter().map(|&(label, mass)| Mass { label, mass }).collect(),
                    };
                    io::write_tagged(io::ENV_INFO_SCHEMA, &info) + "\n"
                }
                Output::Csv => {
                    let mut s = format!(
                        "kind,species,entropy_nats\n{},{},{}\n\nlabel,mass\n",
                        env.kind(),
                        env.species_count(),
                        sig10::round(env.entropy())
                    );
                    for (label, mass) in top {
                        s.push_str(&format!("{label},{}\n", sig10::round(mass)));
                    }
                    s
                }
            };
            Ok(CliOutput::ok(text, true))
        }
    }
}

/// Run the CLI on `argv` (including the program name).
pub fn run<I, T>(argv: I) -> CliOutput
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                CliOutput::error(2, text)
            } else {
                CliOutput::ok(text, true)
            };
        }
    };
    match execute(cli.command) {
        Ok(out) => out,
        Err(e @ Error::InsufficientData { .. }) => CliOutput::error(1, format!("error: {e}\n")),
        Err(e) => CliOutput::error(2, format!("error: {e}\n")),
    }
}
