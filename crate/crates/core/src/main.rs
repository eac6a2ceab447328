use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use ultranerve::pipeline::{self, bundle, dot, Overrides, PipelineConfig, PipelineError, Stage, CONFIG_ENV};
use ultranerve::spectrum::Exponents;

#[derive(Parser)]
#[command(name = "ultranerve", version, about = "Nerve expansions of finite ultrametric spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check that an input is a well-formed ultrametric.
    Validate {
        input: PathBuf,
        #[arg(long)]
        prime: Option<u32>,
    },
    /// Build the nerve expansion of an input and write its bundle.
    Expand {
        input: PathBuf,
        #[arg(long, env = CONFIG_ENV)]
        config: Option<PathBuf>,
        #[arg(long)]
        prime: Option<u32>,
        #[arg(long)]
        precision: Option<usize>,
        /// Threshold exponents: `auto`, one integer, or a comma list.
        #[arg(long, value_parser = parse_exponents, allow_hyphen_values = true)]
        k: Option<Exponents>,
        /// Comma list drawn from validate, round, expand, verify, shadow.
        #[arg(long, value_delimiter = ',')]
        stages: Option<Vec<Stage>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute the real shadow of a written bundle.
    Shadow {
        bundle: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Built-in demonstrations.
    Demo {
        #[command(subcommand)]
        demo: Demo,
    },
    /// Export a bundle to other formats.
    Export {
        #[command(subcommand)]
        format: Export,
    },
}

#[derive(Subcommand)]
enum Demo {
    /// The residues mod p^depth.
    Zp {
        #[arg(long)]
        prime: u32,
        #[arg(long)]
        depth: u32,
        #[arg(long, value_delimiter = ',')]
        subset: Option<Vec<u64>>,
        /// Directory for bundle.json; the bundle goes to stdout otherwise.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum Export {
    /// One DOT file per level.
    Dot {
        bundle: PathBuf,
        /// Defaults to the bundle's directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_exponents(s: &str) -> Result<Exponents, String> {
    let int = |t: &str| t.trim().parse::<i64>().map_err(|e| format!("{t:?}: {e}"));
    match s.trim() {
        "auto" => Ok(Exponents::Auto),
        t if t.contains(',') => t.split(',').map(int).collect::<Result<_, _>>().map(Exponents::List),
        t => int(t).map(Exponents::Constant),
    }
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("output serializes"));
}

fn failed(failures: &[String]) -> ExitCode {
    for f in failures {
        eprintln!("failed: {f}");
    }
    ExitCode::from(1)
}

fn execute(command: Command) -> Result<ExitCode> {
    match command {
        Command::Validate { input, prime } => {
            let report = pipeline::validate(&input, prime)?;
            print_json(&report);
            if report.ultrametric {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(failed(&report.violations[..1]))
            }
        }
        Command::Expand { input, config, prime, precision, k, stages, out } => {
            let base = match &config {
                Some(path) => PipelineConfig::load(path)?,
                None => PipelineConfig::default(),
            };
            let config = base.with_overrides(Overrides { prime, precision, k, stages, out });
            let output = pipeline::run(&config, &input)?;
            let dir = config.out.clone().unwrap_or_else(|| PathBuf::from("out"));
            for file in output.write(&dir)? {
                println!("wrote {}", file.display());
            }
            if output.report.passed {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(failed(&output.report.failures))
            }
        }
        Command::Shadow { bundle, out } => {
            let shadow = pipeline::shadow_from_bundle(&bundle)?;
            std::fs::create_dir_all(&out).map_err(|e| PipelineError::io(&out, e))?;
            let mut written = vec![pipeline::write_file(&out.join("shadow.json"), &bundle::to_text(&shadow.bundle))?];
            if let Some(csv) = &shadow.csv {
                written.push(pipeline::write_file(&out.join("theta.csv"), csv)?);
            }
            for file in written {
                println!("wrote {}", file.display());
            }
            if shadow.failures.is_empty() {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(failed(&shadow.failures))
            }
        }
        Command::Demo { demo: Demo::Zp { prime, depth, subset, out } } => {
            let (value, passed) = pipeline::demo_zp(prime, depth, subset.as_deref())?;
            let text = bundle::to_text(&value);
            match out {
                Some(dir) => {
                    std::fs::create_dir_all(&dir).map_err(|e| PipelineError::io(&dir, e))?;
                    let file = pipeline::write_file(&dir.join("bundle.json"), &text)?;
                    println!("wrote {}", file.display());
                }
                None => print!("{text}"),
            }
            if passed {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(failed(&["residue checks".to_string()]))
            }
        }
        Command::Export { format: Export::Dot { bundle: path, out } } => {
            let parsed = bundle::read_bundle(&path)?;
            let dir = out.unwrap_or_else(|| path.parent().unwrap_or(Path::new(".")).to_path_buf());
            for file in dot::export_dot(&parsed, &dir).context("dot export")? {
                println!("wrote {}", file.display());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = err.downcast_ref::<PipelineError>().map_or(1, PipelineError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
