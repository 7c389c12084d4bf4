use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use elastic_cgo::config::ExperimentConfig;
use elastic_cgo::error::{Error, Result};
use elastic_cgo::field_io::{read_bundle, read_fields, write_bundle, write_fields};
use elastic_cgo::pipeline;
use elastic_cgo::recon::ReconDiagnostics;
use elastic_cgo::verify::{cmd_verify_cgo, cmd_verify_identities, VerifyReport};

/// Overrides the output directory when `--out` is not given.
const OUT_ENV: &str = "ELASTIC_CGO_OUT";

#[derive(Parser)]
#[command(
    name = "elastic-cgo",
    version,
    about = "Linearized inversion of transversely isotropic elastic perturbations"
)]
struct Cli {
    /// JSON experiment configuration; defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Overrides the configuration seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Navier residuals of every pair family.
    VerifyCgo,
    /// Closed forms, expansions and algebraic identities.
    VerifyIdentities,
    /// Synthesize the data bundle and truth fields from the phantom.
    Forward,
    /// Reconstruct fields from a data bundle.
    Reconstruct {
        /// Defaults to `bundle.jsonl` in the output directory.
        #[arg(long)]
        bundle: Option<PathBuf>,
    },
    /// Compare reconstructed fields with truth.
    Report {
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        fields: PathBuf,
        /// Diagnostics written by `reconstruct`, for the stage residuals.
        #[arg(long)]
        diagnostics: Option<PathBuf>,
    },
}

/// Outcome of a command that ran to completion.
enum Outcome {
    Pass,
    CheckFailed,
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(v)? + "\n")?;
    Ok(())
}

fn verdict(report: &VerifyReport, path: &Path) -> Result<Outcome> {
    write_json(path, report)?;
    for c in &report.checks {
        println!(
            "{} {} ({:.3e} vs {:.1e}) [{}]",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.deviation,
            c.tolerance,
            c.anchor
        );
    }
    if report.skipped_evanescent > 0 {
        println!("skipped {} evanescent nodes", report.skipped_evanescent);
    }
    Ok(if report.pass {
        Outcome::Pass
    } else {
        Outcome::CheckFailed
    })
}

fn run(cli: Cli) -> Result<Outcome> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = cli.out.clone().or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from)) {
        cfg.out_dir = out;
    }
    cfg.validate()?;
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(Error::Config("--workers must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    let out = cfg.out_dir.clone();
    std::fs::create_dir_all(&out)?;
    match cli.command {
        Command::VerifyCgo => verdict(&cmd_verify_cgo(&cfg)?, &out.join("verify_cgo.json")),
        Command::VerifyIdentities => verdict(&cmd_verify_identities(&cfg)?, &out.join("verify_identities.json")),
        Command::Forward => {
            let data = pipeline::forward(&cfg)?;
            write_bundle(&out.join("bundle.jsonl"), &data)?;
            write_fields(&out.join("truth.json"), &pipeline::truth_fields(&cfg)?)?;
            let failed = data.iter().filter(|d| !d.ok).count();
            println!("{} pair values, {failed} failed", data.len());
            Ok(if failed == 0 {
                Outcome::Pass
            } else {
                Outcome::CheckFailed
            })
        }
        Command::Reconstruct { bundle } => {
            let data = read_bundle(&bundle.unwrap_or_else(|| out.join("bundle.jsonl")))?;
            let rec = pipeline::reconstruct_bundle(&cfg, &data)?;
            write_fields(&out.join("fields.json"), &pipeline::reconstruction_fields(&rec)?)?;
            write_json(&out.join("diagnostics.json"), &rec.diagnostics)?;
            let d = &rec.diagnostics;
            println!(
                "{} of {} nodes solved, {} flagged, masked fraction {:.3}",
                d.nodes_solved, d.nodes_planned, d.flagged_nodes, d.masked_fraction
            );
            Ok(if d.low_confidence {
                Outcome::CheckFailed
            } else {
                Outcome::Pass
            })
        }
        Command::Report {
            truth,
            fields,
            diagnostics,
        } => {
            let diag: Option<ReconDiagnostics> = match diagnostics {
                Some(p) => Some(serde_json::from_str(&std::fs::read_to_string(p)?)?),
                None => None,
            };
            let rep = pipeline::report(&read_fields(&truth)?, &read_fields(&fields)?, diag)?;
            write_json(&out.join("report.json"), &rep)?;
            let csv = rep.to_csv();
            std::fs::write(out.join("report.csv"), &csv)?;
            print!("{csv}");
            Ok(Outcome::Pass)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::CheckFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Json(_) | Error::Io(_) | Error::Mismatch(_) | Error::InvalidBackground(_) => {
                    ExitCode::from(2)
                }
                _ => ExitCode::from(1),
            }
        }
    }
}
