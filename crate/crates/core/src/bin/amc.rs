//! Command-line front end.
//!
//! Exit codes: 0 success, 1 input error, 2 numerical failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DVector;

use amc_sim::apps::config::{Experiment, ExperimentConfig, MatrixSource};
use amc_sim::apps::dump::dump_output;
use amc_sim::apps::generate::{gram, regression, wishart};
use amc_sim::apps::matrix_io::{format_matrix, read_matrix};
use amc_sim::apps::{nn, validation};
use amc_sim::system::isa::{format_program, parse_program, Location};
use amc_sim::system::{run_program, MachineState, Value};
use amc_sim::Error;

#[derive(Parser, Debug)]
#[command(
    name = "amc",
    version,
    about = "RRAM analog matrix computing simulator"
)]
struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Report path; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    noise: Option<OnOff>,
    /// Weight resolution.
    #[arg(long, global = true, value_parser = ["4", "8"])]
    bits: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Kind {
    Mvm,
    Inv,
    Pinv,
    Egv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a solver validation experiment against the float oracle.
    Solve {
        kind: Kind,
        /// wishart(n), gram(n), regression(m,n) or file:<path>.
        #[arg(long)]
        matrix: Option<String>,
        #[arg(long)]
        trials: Option<usize>,
        /// EGV eigenvalue in problem units (default: power iteration).
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Neural-network commands.
    Nn {
        #[command(subcommand)]
        action: NnAction,
    },
    /// Run a small MVM program through the instruction set and dump the result.
    ProgramDemo,
    /// Run a program file.
    Run {
        program: PathBuf,
        /// Preload a buffer slot from a matrix file: `g:0=path`. A 1 x n file loads as a vector.
        #[arg(long = "load")]
        loads: Vec<String>,
    },
    /// Write a generated matrix in the matrix text format.
    Gen {
        /// wishart(n), gram(n) or regression(m,n).
        #[arg(long)]
        matrix: String,
        /// Regression only: where to write the response vector.
        #[arg(long)]
        rhs: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum NnAction {
    /// Classify MNIST images on the simulated macros.
    Infer {
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long)]
        images: Option<PathBuf>,
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Number of images, or `all`.
        #[arg(long)]
        n_images: Option<String>,
    },
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_numerical() { 2 } else { 1 },
            err: e.into(),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(err: anyhow::Error) -> Self {
        let code = match err.downcast_ref::<Error>() {
            Some(e) if e.is_numerical() => 2,
            _ => 1,
        };
        Failure { code, err }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}

fn experiment_of(cmd: &Command) -> Experiment {
    match cmd {
        Command::Solve {
            kind: Kind::Mvm, ..
        } => Experiment::Mvm,
        Command::Solve {
            kind: Kind::Inv, ..
        } => Experiment::Inv,
        Command::Solve {
            kind: Kind::Pinv, ..
        } => Experiment::Pinv,
        Command::Solve {
            kind: Kind::Egv, ..
        } => Experiment::Egv,
        Command::Nn { .. } => Experiment::NnInfer,
        Command::ProgramDemo | Command::Gen { .. } => Experiment::ProgramDemo,
        Command::Run { .. } => Experiment::Run,
    }
}

fn resolve(cli: &Cli) -> Result<ExperimentConfig, Failure> {
    let experiment = experiment_of(&cli.command);
    let mut cfg = ExperimentConfig::new(experiment);
    let mut seed_given = cli.seed.is_some();
    if let Some(path) = &cli.config {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        cfg.apply_text(&text)?;
        cfg.experiment = experiment;
        seed_given |= text.lines().any(|l| {
            l.split('#')
                .next()
                .unwrap_or("")
                .trim_start()
                .starts_with("seed")
        });
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(n) = cli.noise {
        cfg.noise = matches!(n, OnOff::On);
    }
    if let Some(b) = &cli.bits {
        cfg.set("bits", b)?;
    }
    match &cli.command {
        Command::Solve {
            matrix,
            trials,
            lambda,
            ..
        } => {
            if let Some(m) = matrix {
                cfg.matrix = Some(m.parse()?);
            }
            if let Some(t) = trials {
                cfg.trials = *t;
            }
            if lambda.is_some() {
                cfg.lambda = *lambda;
            }
        }
        Command::Nn {
            action:
                NnAction::Infer {
                    weights,
                    images,
                    labels,
                    n_images,
                },
        } => {
            if let Some(p) = weights {
                cfg.weights = p.clone();
            }
            if let Some(p) = images {
                cfg.images = p.clone();
            }
            if let Some(p) = labels {
                cfg.labels = p.clone();
            }
            if let Some(n) = n_images {
                cfg.set("n_images", n)?;
            }
        }
        Command::Gen { matrix, .. } => cfg.matrix = Some(matrix.parse()?),
        _ => {}
    }
    cfg.validate()?;
    let noisy = cfg.noise && !matches!(cli.command, Command::Gen { .. });
    if noisy && !seed_given {
        return Err(Error::Config(
            "a seed (--seed or `seed =` in the config) is required for noisy runs".into(),
        )
        .into());
    }
    Ok(cfg)
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn comment_block(cfg: &ExperimentConfig, title: &str) -> String {
    let mut s = format!("# {title}\n");
    for line in cfg.to_text().lines() {
        s.push_str("# ");
        s.push_str(line);
        s.push('\n');
    }
    s
}

fn parse_load(spec: &str) -> Result<(Location, Value), Failure> {
    let (loc, path) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("--load expects slot=path, got '{spec}'")))?;
    let loc: Location = loc.parse()?;
    let m = read_matrix(Path::new(path))?;
    let value = if m.nrows() == 1 {
        Value::Vector(DVector::from_iterator(m.ncols(), m.iter().copied()))
    } else {
        Value::Matrix(m)
    };
    Ok((loc, value))
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let cfg = resolve(&cli)?;
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Solve { .. } => {
            let report = validation::run_validation(&cfg)?;
            emit(out, &report.to_csv())?;
            for t in report.trials.iter().filter(|t| t.failure.is_some()) {
                eprintln!(
                    "trial {}: {}",
                    t.trial,
                    t.failure.as_deref().unwrap_or_default()
                );
            }
            Ok(if report.any_numerical_failure() { 2 } else { 0 })
        }
        Command::Nn { .. } => {
            let report = nn::nn_infer(&cfg)?;
            emit(out, &report.to_csv())?;
            eprintln!(
                "analog {:.4}  float {:.4}  quantized {:.4}  ({} images)",
                report.analog_accuracy(),
                report.float_accuracy(),
                report.quantized_accuracy(),
                report.labels.len()
            );
            Ok(0)
        }
        Command::ProgramDemo => {
            let (state, program) = amc_sim::apps::validation::program_demo(&cfg)?;
            let mut text = comment_block(&cfg, "program demo");
            for line in format_program(&program).lines() {
                text.push_str("# > ");
                text.push_str(line);
                text.push('\n');
            }
            text.push_str(&dump_output(&state));
            emit(out, &text)?;
            Ok(0)
        }
        Command::Run { program, loads } => {
            let text = std::fs::read_to_string(program)
                .with_context(|| format!("reading {}", program.display()))?;
            let prog = parse_program(&text)?;
            let mut state = MachineState::new(
                cfg.effective_device(),
                cfg.converter,
                cfg.effective_write_verify(),
                cfg.seed,
            )?;
            for l in loads {
                let (loc, v) = parse_load(l)?;
                state.load(loc, v);
            }
            run_program(&mut state, &prog)?;
            let mut report = comment_block(&cfg, &format!("run {}", program.display()));
            report.push_str(&dump_output(&state));
            emit(out, &report)?;
            Ok(0)
        }
        Command::Gen { rhs, .. } => {
            let seed = cfg.seed;
            let m = match cfg.matrix_source() {
                MatrixSource::Wishart(n) => wishart(n, seed)?,
                MatrixSource::Gram(n) => gram(n, seed)?,
                MatrixSource::Regression(m, n) => {
                    let r = regression(m, n, seed)?;
                    if let Some(p) = rhs {
                        let row = r.response.transpose();
                        std::fs::write(
                            p,
                            format_matrix(&nalgebra::DMatrix::from_row_slice(
                                1,
                                row.len(),
                                row.as_slice(),
                            )),
                        )
                        .with_context(|| format!("writing {}", p.display()))?;
                    }
                    r.design
                }
                MatrixSource::File(_) => {
                    return Err(Error::Config("gen needs a generator, not a file".into()).into())
                }
            };
            emit(out, &format_matrix(&m))?;
            Ok(0)
        }
    }
}
