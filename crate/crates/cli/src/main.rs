//! `tbi`: invariants of principal torus bundles from a JSON description.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use tbi_core::commands;
use tbi_core::document::{read_file, resolve_tol, ExitStatus, FormDocument, InputDocument, ReportError};
use tbi_core::json;

#[derive(Debug, Parser)]
#[command(name = "tbi", version)]
#[command(about = "Holomorphic invariants of principal torus bundles over complex tori")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check shapes, the alternating property, both structures and the Riemann relation
    Validate {
        file: PathBuf,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Full cohomology report
    Invariants {
        file: PathBuf,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Print the components B', B" and the forbidden part of A
    Decompose {
        file: PathBuf,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Sample points (V, U) of the parameter variety of a tensor A
    Sample {
        file: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = 100)]
        max_attempts: usize,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Multiply, invert and commute two elements of the fundamental group
    ///
    /// Elements are `e<k>` (lift of the k-th basis vector), `f<k>` (k-th
    /// central generator) or `l1,..,l2d:g1,..,g2m`; indices start at 1.
    Group {
        file: PathBuf,
        #[arg(allow_hyphen_values = true)]
        g1: String,
        #[arg(allow_hyphen_values = true)]
        g2: String,
    },
    /// Emit a built-in input document
    Catalog {
        #[arg(value_parser = commands::CATALOG_NAMES)]
        name: String,
    },
    /// Kuranishi dimension and divisibility index for bundles over a curve
    Curve {
        #[arg(long)]
        genus: u64,
        #[arg(long)]
        fibre_dim: u64,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        chern: Option<Vec<i64>>,
    },
}

fn env_tol() -> Result<Option<f64>, ReportError> {
    match std::env::var("TBI_TOL") {
        Ok(s) => s
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|t| t.is_finite() && *t > 0.0)
            .map(Some)
            .ok_or_else(|| ReportError::Usage(format!("TBI_TOL must be a positive number, got '{s}'"))),
        Err(_) => Ok(None),
    }
}

fn check_flag(tol: Option<f64>) -> Result<Option<f64>, ReportError> {
    match tol {
        Some(t) if !(t.is_finite() && t > 0.0) => Err(ReportError::Usage(format!("--tol must be positive, got {t}"))),
        other => Ok(other),
    }
}

fn load(file: &Path, tol: Option<f64>) -> Result<(InputDocument, f64)> {
    let flag = check_flag(tol)?;
    let doc = InputDocument::load(file)?;
    let tol = resolve_tol(flag, doc.tol, env_tol()?);
    Ok((doc, tol))
}

fn emit<T: Serialize>(value: &T) -> Result<()> {
    print!("{}", json::to_string(value).context("serializing output")?);
    Ok(())
}

fn run(cli: Cli) -> Result<ExitStatus> {
    match cli.command {
        Command::Validate { file, tol } => {
            let (doc, tol) = load(&file, tol)?;
            let (_, v) = commands::validate(&doc, tol)?;
            println!(
                "ok: m={} d={} tol={:e} V ratio {:.3e} U ratio {:.3e} Riemann residual {:.3e}",
                v.m, v.d, v.tol, v.base_ratio, v.fibre_ratio, v.riemann.relative
            );
            Ok(ExitStatus::Ok)
        }
        Command::Invariants { file, tol, format } => {
            let (doc, tol) = load(&file, tol)?;
            let report = commands::invariants(&doc, tol)?;
            match format {
                Format::Json => emit(&report)?,
                Format::Table => print!("{}", commands::render_table(&report)),
            }
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            if report.consistency.is_empty() {
                Ok(ExitStatus::Ok)
            } else {
                Err(ReportError::Inconsistent(report.consistency).into())
            }
        }
        Command::Decompose { file, tol } => {
            let (doc, tol) = load(&file, tol)?;
            emit(&commands::decompose(&doc, tol)?)?;
            Ok(ExitStatus::Ok)
        }
        Command::Sample {
            file,
            seed,
            count,
            max_attempts,
            tol,
        } => {
            let tol = resolve_tol(check_flag(tol)?, None, env_tol()?);
            let form = FormDocument::parse(&read_file(&file)?)?;
            let report = commands::sample(&form, seed, count, max_attempts, tol)?;
            emit(&report)?;
            if report.found == report.count {
                Ok(ExitStatus::Ok)
            } else {
                eprintln!("error: {} of {} trials found no point", report.count - report.found, report.count);
                Ok(ExitStatus::RiemannFails)
            }
        }
        Command::Group { file, g1, g2 } => {
            let form = FormDocument::parse(&read_file(&file)?)?;
            emit(&commands::group(&form, &g1, &g2)?)?;
            Ok(ExitStatus::Ok)
        }
        Command::Catalog { name } => {
            emit(&commands::catalog(&name)?)?;
            Ok(ExitStatus::Ok)
        }
        Command::Curve {
            genus,
            fibre_dim,
            chern,
        } => {
            emit(&commands::curve(genus, fibre_dim, chern.as_deref())?)?;
            Ok(ExitStatus::Ok)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { ExitStatus::Parse.code() as u8 } else { 0 });
        }
    };
    match run(cli) {
        Ok(status) => ExitCode::from(status.code() as u8),
        Err(err) => {
            let status = err
                .downcast_ref::<ReportError>()
                .map_or(ExitStatus::Parse, ReportError::exit_status);
            eprintln!("error: {err:#}");
            ExitCode::from(status.code() as u8)
        }
    }
}
