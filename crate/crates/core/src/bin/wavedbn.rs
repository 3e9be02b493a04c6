//! Command-line front end.
//!
//! Subcommands: train, eval, bench, decompose, inspect.
//! Exit codes: 0 success, 1 validation error, 2 I/O error, 3 numerical
//! failure.

use std::path::PathBuf;
use std::process::ExitCode;
use wavedbn::config::RunConfig;
use wavedbn::runner::{self, RunError};

const USAGE: &str = "\
wavedbn - sub-band DBN ensemble image classifier

USAGE:
    wavedbn train      --config PATH [--seed N] [--workers N] [--data PATH] [--out DIR]
    wavedbn eval       --model PATH --config PATH [--data PATH]
    wavedbn bench      --config PATH [--seed N] [--workers N] [--data PATH] [--out DIR]
    wavedbn decompose  --data IMAGE.pgm --out DIR [--filter haar|db4]
    wavedbn inspect    --model PATH
    wavedbn --print-defaults

FLAGS:
    --config PATH      run configuration file (see --print-defaults)
    --model PATH       model file produced by `train`
    --data PATH        dataset directory / input image (overrides the config)
    --out DIR          output directory (overrides the config)
    --seed N           master seed (overrides the config)
    --workers N        parallel DBN trainings; 0 = all cores, 1 = sequential
    --filter NAME      wavelet for `decompose` (default haar)
    --print-defaults   print the annotated default configuration and exit
    --help             print this help
";

#[derive(Debug, Default)]
struct Flags {
    config: Option<PathBuf>,
    model: Option<PathBuf>,
    data: Option<PathBuf>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    workers: Option<usize>,
    filter: Option<String>,
    print_defaults: bool,
    help: bool,
}

fn parse_flags(args: &[String]) -> Result<Flags, String> {
    let mut flags = Flags::default();
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let mut value_for = |name: &str| -> Result<String, String> {
            it.next()
                .cloned()
                .ok_or_else(|| format!("{name} requires a value"))
        };
        match arg.as_str() {
            "--config" => flags.config = Some(PathBuf::from(value_for("--config")?)),
            "--model" => flags.model = Some(PathBuf::from(value_for("--model")?)),
            "--data" => flags.data = Some(PathBuf::from(value_for("--data")?)),
            "--out" => flags.out = Some(PathBuf::from(value_for("--out")?)),
            "--seed" => {
                let v = value_for("--seed")?;
                flags.seed = Some(v.parse().map_err(|_| format!("invalid --seed {v:?}"))?);
            }
            "--workers" => {
                let v = value_for("--workers")?;
                flags.workers = Some(v.parse().map_err(|_| format!("invalid --workers {v:?}"))?);
            }
            "--filter" => flags.filter = Some(value_for("--filter")?),
            "--print-defaults" => flags.print_defaults = true,
            "--help" | "-h" => flags.help = true,
            other => return Err(format!("unknown flag {other:?}")),
        }
    }
    Ok(flags)
}

/// Loads the config named by --config and applies flag overrides.
fn load_config(flags: &Flags) -> Result<RunConfig, RunError> {
    let path = flags
        .config
        .as_ref()
        .ok_or_else(|| RunError::Validation("--config is required".into()))?;
    let mut cfg = RunConfig::from_file(path)?;
    if let Some(seed) = flags.seed {
        cfg.seed = seed;
    }
    if let Some(workers) = flags.workers {
        cfg.workers = workers;
    }
    if let Some(data) = &flags.data {
        match cfg.dataset_kind {
            wavedbn::config::DatasetKind::Usps => {
                return Err(RunError::Validation(
                    "--data cannot override usps file paths; set them in the config".into(),
                ))
            }
            _ => cfg.data_path = Some(data.clone()),
        }
    }
    if let Some(out) = &flags.out {
        cfg.out_dir = out.clone();
    }
    Ok(cfg)
}

fn require_model(flags: &Flags) -> Result<PathBuf, RunError> {
    flags
        .model
        .clone()
        .ok_or_else(|| RunError::Validation("--model is required".into()))
}

fn run(subcommand: &str, flags: &Flags) -> Result<(), RunError> {
    match subcommand {
        "train" => {
            let cfg = load_config(flags)?;
            let outcome = runner::run_train(&cfg)?;
            print!("{}", outcome.report.to_table());
            println!("model   written to {}", outcome.model_path.display());
            println!("reports written to {}", outcome.report_kv_path.display());
            Ok(())
        }
        "eval" => {
            let model = require_model(flags)?;
            let cfg = load_config(flags)?;
            let outcome = runner::run_eval(&model, &cfg)?;
            print!("{}", outcome.to_text());
            Ok(())
        }
        "bench" => {
            let cfg = load_config(flags)?;
            let outcome = runner::run_bench(&cfg)?;
            print!("{}", outcome.to_text());
            Ok(())
        }
        "decompose" => {
            let image = flags
                .data
                .clone()
                .ok_or_else(|| RunError::Validation("--data IMAGE.pgm is required".into()))?;
            let out = flags
                .out
                .clone()
                .ok_or_else(|| RunError::Validation("--out DIR is required".into()))?;
            let filter = flags.filter.as_deref().unwrap_or("haar");
            let outcome = runner::run_decompose(&image, filter, &out)?;
            for line in &outcome.band_lines {
                println!("{line}");
            }
            println!("wrote {} sub-band images to {}", outcome.files.len(), out.display());
            Ok(())
        }
        "inspect" => {
            let model = require_model(flags)?;
            print!("{}", runner::run_inspect(&model)?);
            Ok(())
        }
        other => Err(RunError::Validation(format!(
            "unknown subcommand {other:?} (train | eval | bench | decompose | inspect)"
        ))),
    }
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.is_empty() {
        eprint!("{USAGE}");
        return ExitCode::from(1);
    }

    let (subcommand, rest): (Option<&str>, &[String]) = if args[0].starts_with('-') {
        (None, &args[..])
    } else {
        (Some(args[0].as_str()), &args[1..])
    };

    let flags = match parse_flags(rest) {
        Ok(f) => f,
        Err(msg) => {
            eprintln!("error: {msg}");
            eprint!("{USAGE}");
            return ExitCode::from(1);
        }
    };
    if flags.help {
        print!("{USAGE}");
        return ExitCode::SUCCESS;
    }
    if flags.print_defaults {
        print!("{}", RunConfig::default_text());
        return ExitCode::SUCCESS;
    }
    let Some(subcommand) = subcommand else {
        eprint!("{USAGE}");
        return ExitCode::from(1);
    };

    match run(subcommand, &flags) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
