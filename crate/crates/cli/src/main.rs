mod args;
mod commands;
mod output;

use std::ffi::OsString;
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches};

use args::Cli;
use output::CliError;

const UNITS: &str = "Lengths are in flat-metric units of the input; angles are in radians.";

fn main() -> ExitCode {
    ExitCode::from(run(std::env::args_os().collect()))
}

fn run(argv: Vec<OsString>) -> u8 {
    match try_run(argv) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.code
        }
    }
}

fn try_run(argv: Vec<OsString>) -> Result<(), CliError> {
    let argv = apply_config(argv)?;
    let command = Cli::command().mut_subcommands(|c| c.after_help(UNITS));
    let matches = match command.try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return Ok(());
            }
            eprint!("{}", e.render());
            let text = e.to_string();
            let first = text.lines().next().unwrap_or_default();
            return Err(CliError::usage(first.trim_start_matches("error: ")));
        }
    };
    let cli = Cli::from_arg_matches(&matches).map_err(|e| CliError::usage(e.to_string()))?;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::runtime("ThreadPool", e.to_string()))?;
    }
    commands::dispatch(cli.command, cli.seed)
}

/// Splice flags from a `--config` JSON file in right after the subcommand,
/// so that flags given on the command line override them.
///
/// Top-level scalar keys apply to every subcommand; an object keyed by a
/// subcommand name applies only to that subcommand.
fn apply_config(mut argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let mut path = None;
    for (i, a) in argv.iter().enumerate() {
        let s = a.to_string_lossy();
        if let Some(p) = s.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else if s == "--config" {
            path = argv.get(i + 1).map(|p| p.to_string_lossy().into_owned());
        }
    }
    let Some(path) = path else { return Ok(argv) };
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::usage(format!("config {path}: {e}")))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("config {path}: {e}")))?;
    let serde_json::Value::Object(map) = value else {
        return Err(CliError::usage(format!("config {path}: expected a JSON object")));
    };
    let names: Vec<String> = Cli::command().get_subcommands().map(|c| c.get_name().to_string()).collect();
    let Some(pos) = argv.iter().position(|a| names.iter().any(|n| a == n.as_str())) else { return Ok(argv) };
    let sub = argv[pos].to_string_lossy().into_owned();
    let mut flags = Vec::new();
    for (key, v) in &map {
        match v {
            serde_json::Value::Object(inner) if *key == sub => {
                for (k, v) in inner {
                    push_flag(&mut flags, k, v)?;
                }
            }
            serde_json::Value::Object(_) => {}
            _ => push_flag(&mut flags, key, v)?,
        }
    }
    argv.splice(pos + 1..pos + 1, flags);
    Ok(argv)
}

fn push_flag(flags: &mut Vec<OsString>, key: &str, v: &serde_json::Value) -> Result<(), CliError> {
    use serde_json::Value;
    let name = format!("--{}", key.replace('_', "-"));
    let scalar = |v: &Value| match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        _ => Err(CliError::usage(format!("config key '{key}' has an unsupported value"))),
    };
    match v {
        Value::Bool(true) => flags.push(name.into()),
        Value::Bool(false) | Value::Null => {}
        Value::Array(items) => {
            let parts: Vec<String> = items.iter().map(scalar).collect::<Result<_, _>>()?;
            flags.push(name.into());
            flags.push(parts.join(",").into());
        }
        other => {
            flags.push(name.into());
            flags.push(scalar(other)?.into());
        }
    }
    Ok(())
}
