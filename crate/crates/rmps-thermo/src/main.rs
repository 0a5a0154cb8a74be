//! `rmps-thermo` — batch experiments over random matrix product states.
//!
//! Usage:
//!   rmps-thermo <subcommand> --config <path> [--seed S] [--workers W] [--out DIR]
//!
//! Subcommands: moments-check, trace, variance-scan, magnetization, thermal.
//! Exit codes: 0 success, 2 config error, 3 numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;

use rmps_thermo::config::{ExperimentConfig, ExperimentKind};
use rmps_thermo::parallel::default_workers;
use rmps_thermo::run::{execute, RunOptions};
use rmps_thermo::{config_err, CliResult};

const USAGE: &str = "usage: rmps-thermo <moments-check|trace|variance-scan|magnetization|thermal> \
--config <path> [--seed S] [--workers W] [--out DIR]";

struct Args {
    kind: ExperimentKind,
    config_path: PathBuf,
    seed: Option<u64>,
    workers: Option<usize>,
    out: PathBuf,
}

fn parse_args(argv: &[String]) -> CliResult<Args> {
    if argv.is_empty() {
        return Err(config_err(USAGE));
    }
    let kind = ExperimentKind::from_str(&argv[0])
        .ok_or_else(|| config_err(format!("unknown subcommand '{}'\n{USAGE}", argv[0])))?;
    let mut config_path = None;
    let mut seed = None;
    let mut workers = None;
    let mut out = PathBuf::from("out");
    let mut i = 1;
    while i < argv.len() {
        let take_value = |i: usize| -> CliResult<&String> {
            argv.get(i + 1)
                .ok_or_else(|| config_err(format!("{} needs a value\n{USAGE}", argv[i])))
        };
        match argv[i].as_str() {
            "--config" => {
                config_path = Some(PathBuf::from(take_value(i)?));
                i += 2;
            }
            "--seed" => {
                seed = Some(
                    take_value(i)?
                        .parse::<u64>()
                        .map_err(|e| config_err(format!("bad --seed: {e}")))?,
                );
                i += 2;
            }
            "--workers" => {
                workers = Some(
                    take_value(i)?
                        .parse::<usize>()
                        .map_err(|e| config_err(format!("bad --workers: {e}")))?,
                );
                i += 2;
            }
            "--out" => {
                out = PathBuf::from(take_value(i)?);
                i += 2;
            }
            other => {
                return Err(config_err(format!("unknown flag '{other}'\n{USAGE}")));
            }
        }
    }
    let config_path =
        config_path.ok_or_else(|| config_err(format!("--config is required\n{USAGE}")))?;
    Ok(Args {
        kind,
        config_path,
        seed,
        workers,
        out,
    })
}

fn main_inner(argv: &[String]) -> CliResult<()> {
    let args = parse_args(argv)?;
    let text = std::fs::read_to_string(&args.config_path)
        .map_err(|e| config_err(format!("cannot read {}: {e}", args.config_path.display())))?;
    let mut config = ExperimentConfig::parse(&text)?;
    if config.experiment != args.kind {
        return Err(config_err(format!(
            "subcommand '{}' does not match config experiment '{}'",
            args.kind.as_str(),
            config.experiment.as_str()
        )));
    }
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    let opts = RunOptions {
        out_root: args.out,
        workers: args.workers.unwrap_or_else(default_workers).max(1),
    };
    let dir = execute(&config, &opts)?;
    println!("wrote {}", dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    match main_inner(&argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rmps-thermo: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
