//! Writing artifact bundles to disk. Every file is written to a temporary
//! name in its destination directory and renamed into place.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use chainswitch_core::experiment::{ArtifactBundle, Cell, Comparison, NamedFit, OutputFormat, Table};

pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let mut f = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
    f.write_all(contents)?;
    f.sync_all()?;
    drop(f);
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

fn number(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.14e}")
    }
}

fn text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn table_csv(table: &Table) -> String {
    let mut out = String::new();
    out.push_str(&table.columns.iter().map(|c| text(c)).collect::<Vec<_>>().join(","));
    out.push('\n');
    for row in &table.rows {
        let cells: Vec<String> = row
            .iter()
            .map(|c| match c {
                Cell::Int(i) => i.to_string(),
                Cell::Num(v) => number(*v),
                Cell::Text(s) => text(s),
            })
            .collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

#[derive(Serialize)]
struct Summary<'a> {
    name: &'a str,
    passed: bool,
    metadata: &'a std::collections::BTreeMap<String, String>,
    fits: &'a [NamedFit],
    comparisons: &'a [Comparison],
    tables: Vec<&'a str>,
}

/// Writes `bundle` under `root` and returns the path written.
///
/// CSV: one file per table plus `summary.json` in `root/<name>/`.
/// JSON: the whole bundle as `root/<name>.json`.
pub fn write_bundle(bundle: &ArtifactBundle, root: &Path, format: OutputFormat) -> Result<PathBuf> {
    match format {
        OutputFormat::Json => {
            let path = root.join(format!("{}.json", bundle.name));
            let body = serde_json::to_string_pretty(bundle)?;
            write_atomic(&path, body.as_bytes())?;
            Ok(path)
        }
        OutputFormat::Csv => {
            let dir = root.join(&bundle.name);
            for t in &bundle.tables {
                write_atomic(&dir.join(format!("{}.csv", t.name)), table_csv(t).as_bytes())?;
            }
            let summary = Summary {
                name: &bundle.name,
                passed: bundle.passed(),
                metadata: &bundle.metadata,
                fits: &bundle.fits,
                comparisons: &bundle.comparisons,
                tables: bundle.tables.iter().map(|t| t.name.as_str()).collect(),
            };
            write_atomic(&dir.join("summary.json"), serde_json::to_string_pretty(&summary)?.as_bytes())?;
            Ok(dir)
        }
    }
}
