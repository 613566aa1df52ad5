//! CSV study tables.
//!
//! Two layouts are accepted, told apart by the header line alone:
//!
//! ```text
//! id,tp,fn,fp,tn                               (2×2 counts)
//! id,y_sens,y_spec,var_sens,var_spec           (logit summaries)
//! ```
//!
//! Numbers use `.` as the decimal separator regardless of locale.

use std::io::{Read, Write};

use dta_core::study::DEFAULT_CONTINUITY_CORRECTION;
use dta_core::{summarize_counts, Dataset, Study};
use thiserror::Error;

pub const COUNT_HEADER: [&str; 5] = ["id", "tp", "fn", "fp", "tn"];
pub const SUMMARY_HEADER: [&str; 5] = ["id", "y_sens", "y_spec", "var_sens", "var_spec"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountRow {
    pub id: String,
    pub tp: u64,
    pub fn_: u64,
    pub fp: u64,
    pub tn: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub id: String,
    pub y_sens: f64,
    pub y_spec: f64,
    pub var_sens: f64,
    pub var_spec: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InputTable {
    Counts(Vec<CountRow>),
    Summary(Vec<SummaryRow>),
}

#[derive(Debug, Error)]
pub enum InputError {
    #[error("empty input: no header line")]
    Empty,
    #[error("unrecognized header `{0}`; expected `id,tp,fn,fp,tn` or `id,y_sens,y_spec,var_sens,var_spec`")]
    Header(String),
    /// `row` counts data rows from 1; `line` is the physical line.
    #[error("row {row} (line {line}): {reason}")]
    Row { row: usize, line: u64, reason: String },
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
}

impl InputTable {
    pub fn len(&self) -> usize {
        match self {
            InputTable::Counts(r) => r.len(),
            InputTable::Summary(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Logit summaries of every row; counts go through the 0.5 continuity
    /// correction when a cell is zero.
    pub fn to_dataset(&self) -> Result<Dataset, InputError> {
        let studies = match self {
            InputTable::Counts(rows) => rows
                .iter()
                .enumerate()
                .map(|(i, r)| count_study(r).map_err(|reason| row_error(i, None, reason)))
                .collect::<Result<Vec<_>, _>>()?,
            InputTable::Summary(rows) => rows
                .iter()
                .enumerate()
                .map(|(i, r)| summary_study(r).map_err(|reason| row_error(i, None, reason)))
                .collect::<Result<Vec<_>, _>>()?,
        };
        Ok(Dataset::new(studies))
    }
}

fn row_error(index: usize, line: Option<u64>, reason: String) -> InputError {
    // header occupies line 1 when positions are unknown
    InputError::Row { row: index + 1, line: line.unwrap_or(index as u64 + 2), reason }
}

fn count_study(r: &CountRow) -> Result<Study, String> {
    summarize_counts(r.id.clone(), r.tp, r.fn_, r.fp, r.tn, DEFAULT_CONTINUITY_CORRECTION)
        .map_err(|e| e.to_string())
}

fn summary_study(r: &SummaryRow) -> Result<Study, String> {
    for (name, v) in [("var_sens", r.var_sens), ("var_spec", r.var_spec)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(format!("{name} = {v} must be a positive finite number"));
        }
    }
    Study::new(r.id.clone(), r.y_sens, r.y_spec, r.var_sens, r.var_spec).map_err(|e| e.to_string())
}

fn parse_count(field: &str, name: &str) -> Result<u64, String> {
    field.parse().map_err(|_| format!("{name} = `{field}` is not a non-negative integer"))
}

fn parse_real(field: &str, name: &str) -> Result<f64, String> {
    let v: f64 = field.parse().map_err(|_| format!("{name} = `{field}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{name} = `{field}` is not finite"))
    }
}

/// Reads and validates a whole table.
pub fn parse<R: Read>(reader: R) -> Result<InputTable, InputError> {
    let mut rdr =
        csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        None => return Err(InputError::Empty),
        Some(h) => h?,
    };
    let names: Vec<&str> = header.iter().collect();
    let counts = if names == COUNT_HEADER {
        true
    } else if names == SUMMARY_HEADER {
        false
    } else {
        return Err(InputError::Header(names.join(",")));
    };

    let mut count_rows = Vec::new();
    let mut summary_rows = Vec::new();
    for (i, rec) in records.enumerate() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line());
        let fail = |reason: String| row_error(i, line, reason);
        if rec.len() != 5 {
            return Err(fail(format!("expected 5 fields, found {}", rec.len())));
        }
        let id = rec[0].to_string();
        if id.is_empty() {
            return Err(fail("empty id".into()));
        }
        if counts {
            let row = CountRow {
                id,
                tp: parse_count(&rec[1], "tp").map_err(fail)?,
                fn_: parse_count(&rec[2], "fn").map_err(fail)?,
                fp: parse_count(&rec[3], "fp").map_err(fail)?,
                tn: parse_count(&rec[4], "tn").map_err(fail)?,
            };
            count_study(&row).map_err(fail)?;
            count_rows.push(row);
        } else {
            let row = SummaryRow {
                id,
                y_sens: parse_real(&rec[1], "y_sens").map_err(fail)?,
                y_spec: parse_real(&rec[2], "y_spec").map_err(fail)?,
                var_sens: parse_real(&rec[3], "var_sens").map_err(fail)?,
                var_spec: parse_real(&rec[4], "var_spec").map_err(fail)?,
            };
            summary_study(&row).map_err(fail)?;
            summary_rows.push(row);
        }
    }
    Ok(if counts { InputTable::Counts(count_rows) } else { InputTable::Summary(summary_rows) })
}

pub fn parse_str(text: &str) -> Result<InputTable, InputError> {
    parse(text.as_bytes())
}

/// Writes the table in its own layout. Reals use the shortest decimal form
/// that parses back to the same value.
pub fn emit<W: Write>(table: &InputTable, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    match table {
        InputTable::Counts(rows) => {
            w.write_record(COUNT_HEADER)?;
            for r in rows {
                w.write_record([
                    r.id.clone(),
                    r.tp.to_string(),
                    r.fn_.to_string(),
                    r.fp.to_string(),
                    r.tn.to_string(),
                ])?;
            }
        }
        InputTable::Summary(rows) => {
            w.write_record(SUMMARY_HEADER)?;
            for r in rows {
                w.write_record([
                    r.id.clone(),
                    r.y_sens.to_string(),
                    r.y_spec.to_string(),
                    r.var_sens.to_string(),
                    r.var_spec.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn emit_string(table: &InputTable) -> String {
    let mut buf = Vec::new();
    emit(table, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("ids were valid UTF-8")
}
