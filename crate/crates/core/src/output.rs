// SPDX-License-Identifier: Apache-2.0

//! On-disk forms of an [`AnalysisResult`].
//!
//! TSV: one `<relation>.tsv` file per relation, one sorted row per line.
//! JSON: one `result.json` object mapping relation names to arrays of
//! tuples, each tuple an array of canonical term strings.

use std::fs;
use std::io;
use std::path::Path;

use serde_json::{Map, Value};
use thiserror::Error;

use crate::result::{AnalysisResult, RelationName};

pub const JSON_FILE: &str = "result.json";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Format {
    #[default]
    Tsv,
    Json,
}

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("malformed result: {0}")]
    Malformed(String),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> OutputError + '_ {
    move |source| OutputError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn tsv_file_name(rel: RelationName) -> String {
    format!("{rel}.tsv")
}

pub fn render_tsv(result: &AnalysisResult, rel: RelationName) -> String {
    let mut out = String::new();
    for row in result.rows(rel) {
        out.push_str(row);
        out.push('\n');
    }
    out
}

pub fn render_json(result: &AnalysisResult) -> String {
    let mut doc = Map::new();
    for rel in RelationName::ALL {
        let tuples = result
            .tuples(rel)
            .map(|t| Value::Array(t.into_iter().map(|c| Value::String(c.to_string())).collect()))
            .collect();
        doc.insert(rel.as_str().to_string(), Value::Array(tuples));
    }
    let mut s = serde_json::to_string_pretty(&Value::Object(doc)).expect("json");
    s.push('\n');
    s
}

/// All relations as `relation<TAB>row` lines, relations in fixed order.
pub fn render_flat(result: &AnalysisResult) -> String {
    let mut out = String::new();
    for rel in RelationName::ALL {
        for row in result.rows(rel) {
            out.push_str(rel.as_str());
            out.push('\t');
            out.push_str(row);
            out.push('\n');
        }
    }
    out
}

pub fn write_result(result: &AnalysisResult, dir: &Path, format: Format) -> Result<(), OutputError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    match format {
        Format::Tsv => {
            for rel in RelationName::ALL {
                let path = dir.join(tsv_file_name(rel));
                fs::write(&path, render_tsv(result, rel)).map_err(io_err(&path))?;
            }
        }
        Format::Json => {
            let path = dir.join(JSON_FILE);
            fs::write(&path, render_json(result)).map_err(io_err(&path))?;
        }
    }
    Ok(())
}

fn check_row(rel: RelationName, row: &str) -> Result<(), OutputError> {
    let cells = row.split('\t').count();
    if cells != rel.arity() {
        return Err(OutputError::Malformed(format!(
            "{rel}: expected {} columns, found {cells} in {row:?}",
            rel.arity()
        )));
    }
    Ok(())
}

pub fn parse_tsv(rel: RelationName, text: &str) -> Result<Vec<String>, OutputError> {
    text.lines()
        .filter(|l| !l.is_empty())
        .map(|l| check_row(rel, l).map(|_| l.to_string()))
        .collect()
}

pub fn read_tsv_dir(dir: &Path) -> Result<AnalysisResult, OutputError> {
    let mut rows = Vec::new();
    for rel in RelationName::ALL {
        let path = dir.join(tsv_file_name(rel));
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        rows.push((rel, parse_tsv(rel, &text)?));
    }
    Ok(AnalysisResult::from_rows(rows))
}

pub fn parse_json(text: &str) -> Result<AnalysisResult, OutputError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| OutputError::Malformed(e.to_string()))?;
    let obj = doc
        .as_object()
        .ok_or_else(|| OutputError::Malformed("expected an object".into()))?;
    let mut rows = Vec::new();
    for (name, tuples) in obj {
        let rel = RelationName::parse(name)
            .ok_or_else(|| OutputError::Malformed(format!("unknown relation {name}")))?;
        let tuples = tuples
            .as_array()
            .ok_or_else(|| OutputError::Malformed(format!("{name}: expected an array")))?;
        let mut v = Vec::new();
        for t in tuples {
            let cells: Option<Vec<&str>> = t
                .as_array()
                .and_then(|cs| cs.iter().map(Value::as_str).collect());
            let cells =
                cells.ok_or_else(|| OutputError::Malformed(format!("{name}: bad tuple {t}")))?;
            let row = cells.join("\t");
            check_row(rel, &row)?;
            v.push(row);
        }
        rows.push((rel, v));
    }
    Ok(AnalysisResult::from_rows(rows))
}

pub fn read_result(dir: &Path, format: Format) -> Result<AnalysisResult, OutputError> {
    match format {
        Format::Tsv => read_tsv_dir(dir),
        Format::Json => {
            let path = dir.join(JSON_FILE);
            parse_json(&fs::read_to_string(&path).map_err(io_err(&path))?)
        }
    }
}
