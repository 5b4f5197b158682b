//! Long-format CSV for experiment tables.
//!
//! Layout: `#`-prefixed `key=value` metadata lines, then the header
//! `sweep_value,setting,metric,value,replication`, then one line per row
//! sorted by (sweep_value, setting, metric, replication). Floats use
//! 17 significant digits in scientific notation, which round-trips every
//! `f64`. Lines end in `\n`.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use designlab::experiments::{ExperimentTable, Metric, Row};
use designlab::Setting;

use crate::error::CliError;

pub const HEADER: &str = "sweep_value,setting,metric,value,replication";

pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn to_csv_string(table: &ExperimentTable) -> String {
    let mut sorted = table.clone();
    sorted.sort();
    let mut out = String::with_capacity(64 * (sorted.len() + sorted.metadata.len() + 1));
    for (k, v) in &sorted.metadata {
        let _ = writeln!(out, "# {}={}", sanitize(k), sanitize(v));
    }
    out.push_str(HEADER);
    out.push('\n');
    for r in &sorted.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            format_float(r.sweep_value),
            r.setting.as_str(),
            r.metric.as_str(),
            format_float(r.value),
            r.replication
        );
    }
    out
}

fn sanitize(s: &str) -> String {
    s.replace(['\n', '\r'], " ")
}

/// Writes `contents` to `path` through a temporary sibling file and a rename,
/// so a failed run never leaves a truncated file behind.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("output");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut file = fs::File::create(&tmp).map_err(io)?;
    if let Err(e) = file.write_all(contents).and_then(|_| file.sync_all()) {
        let _ = fs::remove_file(&tmp);
        return Err(io(e));
    }
    drop(file);
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io(e)
    })
}

pub fn write_csv(table: &ExperimentTable, path: &Path) -> Result<(), CliError> {
    write_atomic(path, to_csv_string(table).as_bytes())
}

pub fn parse_csv(text: &str) -> Result<ExperimentTable, CliError> {
    let mut table = ExperimentTable::default();
    let mut saw_header = false;
    for (lineno, line) in text.lines().enumerate() {
        let bad = |msg: String| CliError::Parse {
            line: lineno + 1,
            message: msg,
        };
        if !saw_header {
            if let Some(meta) = line.strip_prefix("# ") {
                let (k, v) = meta
                    .split_once('=')
                    .ok_or_else(|| bad(format!("metadata line without `=`: {line}")))?;
                table.metadata.push((k.to_string(), v.to_string()));
                continue;
            }
            if line == HEADER {
                saw_header = true;
                continue;
            }
            return Err(bad(format!("expected metadata or header, got `{line}`")));
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(bad(format!("expected 5 fields, got {}", fields.len())));
        }
        let float = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("bad number `{s}`: {e}")));
        table.rows.push(Row {
            sweep_value: float(fields[0])?,
            setting: fields[1].parse::<Setting>().map_err(|e| bad(e.to_string()))?,
            metric: fields[2].parse::<Metric>().map_err(|e| bad(e.to_string()))?,
            value: float(fields[3])?,
            replication: fields[4]
                .parse::<u32>()
                .map_err(|e| bad(format!("bad replication `{}`: {e}", fields[4])))?,
        });
    }
    if !saw_header {
        return Err(CliError::Parse {
            line: text.lines().count(),
            message: "missing header".into(),
        });
    }
    Ok(table)
}

pub fn read_csv(path: &Path) -> Result<ExperimentTable, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_csv(&text)
}
