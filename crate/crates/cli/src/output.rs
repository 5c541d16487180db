//! Output files, CSV formatting and run manifests.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::error::CliError;

/// Written next to every output file as `<out>.manifest.json`.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: Value,
    pub seed: Option<u64>,
    pub artifact_version: String,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new<P: Serialize>(command: &str, parameters: &P, seed: Option<u64>) -> Self {
        Self {
            command: command.to_string(),
            parameters: serde_json::to_value(parameters).unwrap_or(Value::Null),
            seed,
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        }
    }
}

/// The main artifact of a command and an optional summary.
pub struct Output {
    pub body: String,
    /// Printed to stdout when the body goes to a file, to stderr otherwise.
    pub summary: Option<String>,
}

impl Output {
    pub fn json<T: Serialize>(value: &T) -> Self {
        Self {
            body: to_json(value),
            summary: None,
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

/// 17 significant digits, locale independent.
pub fn csv_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// A CSV table with `prefix` columns followed by `x1..xn`.
pub fn csv_table<'a, I>(prefix: &[&str], n: usize, rows: I) -> String
where
    I: IntoIterator<Item = (Vec<String>, &'a [f64])>,
{
    let mut s = String::new();
    let mut header: Vec<String> = prefix.iter().map(|p| p.to_string()).collect();
    header.extend((1..=n).map(|i| format!("x{i}")));
    s.push_str(&header.join(","));
    s.push('\n');
    for (cells, x) in rows {
        let mut line = cells;
        line.extend(x.iter().map(|v| csv_float(*v)));
        let _ = writeln!(s, "{}", line.join(","));
    }
    s
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

/// Writes the body to `out` (with its manifest) or to stdout.
pub fn emit(output: &Output, out: Option<&Path>, manifest: &RunManifest) -> Result<(), CliError> {
    match out {
        Some(path) => {
            write_file(path, &output.body)?;
            write_file(&manifest_path(path), &to_json(manifest))?;
            if let Some(s) = &output.summary {
                print!("{s}");
            }
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(output.body.as_bytes())
                .map_err(|e| CliError::Io(PathBuf::from("<stdout>"), e))?;
            if let Some(s) = &output.summary {
                eprint!("{s}");
            }
        }
    }
    Ok(())
}
