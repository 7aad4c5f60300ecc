use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::args::{Format, OutputArgs};

/// CSV schema version line written before every header.
pub const CSV_VERSION: &str = "# flattrace-v1";

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub kind: String,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError { code: 2, kind: "BadArguments".into(), message: message.into() }
    }

    pub fn runtime(kind: &str, message: impl Into<String>) -> Self {
        CliError { code: 1, kind: kind.into(), message: message.into() }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self.kind, "message": self.message, "exit_code": self.code }).to_string()
    }
}

impl From<flattrace::Error> for CliError {
    fn from(e: flattrace::Error) -> Self {
        use flattrace::Error as E;
        // Errors about the user's input exit with 2; failures of the computation itself with 1.
        let code = match e {
            E::FlipLimitExceeded { .. }
            | E::SearchBudgetExceeded { .. }
            | E::NoReturn { .. }
            | E::AllDirectionsSingular { .. }
            | E::DegenerateSegment
            | E::DegenerateTriangle => 1,
            _ => 2,
        };
        CliError { code, kind: e.kind().into(), message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::runtime("Io", e.to_string())
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

pub fn json_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output types serialize");
    s.push('\n');
    s
}

pub fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut buf = format!("{CSV_VERSION}\n").into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(header).expect("in-memory write");
        for r in rows {
            w.write_record(&r).expect("in-memory write");
        }
        w.flush().expect("in-memory write");
    }
    String::from_utf8(buf).expect("CSV of numbers is UTF-8")
}

pub fn num_row<const N: usize>(values: [f64; N]) -> Vec<String> {
    values.iter().map(|v| v.to_string()).collect()
}

pub fn write_text(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

/// Write `json` or `csv` according to the requested format.
pub fn emit(out: &OutputArgs, default: Format, json: impl FnOnce() -> String, csv: Option<String>) -> Result<(), CliError> {
    let text = match (out.format.unwrap_or(default), csv) {
        (Format::Csv, Some(c)) => c,
        (Format::Csv, None) => return Err(CliError::usage("this subcommand has no CSV output")),
        (Format::Json, _) => json(),
    };
    write_text(out.output.as_deref(), &text)
}
