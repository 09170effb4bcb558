//! Rendering of result tables. Every command builds its tables completely
//! before anything is written, so row order never depends on evaluation order.

use std::fmt::Write as _;
use std::path::Path;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Table,
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    /// Shown as `<0.001` in the human table when small.
    PValue(f64),
    /// Shown in scientific notation in the human table.
    Sci(f64),
    Text(String),
}

impl Cell {
    fn human(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:.4}"),
            Cell::PValue(p) if *p < 1e-3 => "<0.001".into(),
            Cell::PValue(p) => format!("{p:.3}"),
            Cell::Sci(v) => format!("{v:.3e}"),
            Cell::Text(s) => s.clone(),
        }
    }

    fn exact(&self) -> String {
        match self {
            Cell::Num(v) | Cell::PValue(v) | Cell::Sci(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) | Cell::PValue(v) | Cell::Sci(v) => {
                serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number)
            }
            Cell::Text(s) => Value::from(s.as_str()),
        }
    }

    fn is_text(&self) -> bool {
        matches!(self, Cell::Text(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// Key used in CSV and JSON output.
    pub name: String,
    /// Heading line for the human-readable table.
    pub title: Option<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table {
            name: name.into(),
            title: None,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

pub fn render(tables: &[Table], format: Format) -> Result<String> {
    match format {
        Format::Table => Ok(render_human(tables)),
        Format::Csv => render_csv(tables),
        Format::Json => render_json(tables),
    }
}

fn render_human(tables: &[Table]) -> String {
    let mut out = String::new();
    for (k, t) in tables.iter().enumerate() {
        if k > 0 {
            out.push('\n');
        }
        if let Some(title) = &t.title {
            let _ = writeln!(out, "{title}");
        }
        let cells: Vec<Vec<String>> = t
            .rows
            .iter()
            .map(|r| r.iter().map(Cell::human).collect())
            .collect();
        let widths: Vec<usize> = (0..t.columns.len())
            .map(|j| {
                cells
                    .iter()
                    .map(|r| r[j].len())
                    .chain([t.columns[j].len()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let left: Vec<bool> = (0..t.columns.len())
            .map(|j| t.rows.first().is_some_and(|r| r[j].is_text()))
            .collect();
        let line = |fields: &[String]| {
            let parts: Vec<String> = fields
                .iter()
                .enumerate()
                .map(|(j, f)| {
                    if left[j] {
                        format!("{f:<w$}", w = widths[j])
                    } else {
                        format!("{f:>w$}", w = widths[j])
                    }
                })
                .collect();
            parts.join("  ").trim_end().to_string()
        };
        let _ = writeln!(out, "{}", line(&t.columns));
        for r in &cells {
            let _ = writeln!(out, "{}", line(r));
        }
    }
    out
}

fn render_csv(tables: &[Table]) -> Result<String> {
    let multi = tables.len() > 1;
    let mut w = csv::Writer::from_writer(Vec::new());
    let encode = |e: csv::Error| CliError::Encode(e.to_string());
    let mut header_written = false;
    for t in tables {
        if !header_written {
            let mut header: Vec<&str> = Vec::new();
            if multi {
                header.push("table");
            }
            header.extend(t.columns.iter().map(String::as_str));
            w.write_record(&header).map_err(encode)?;
            header_written = true;
        } else if t.columns != tables[0].columns {
            return Err(CliError::Encode(
                "tables with different columns cannot share one CSV".into(),
            ));
        }
        for r in &t.rows {
            let mut fields: Vec<String> = Vec::new();
            if multi {
                fields.push(t.name.clone());
            }
            fields.extend(r.iter().map(Cell::exact));
            w.write_record(&fields).map_err(encode)?;
        }
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Encode(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Encode(e.to_string()))
}

fn render_json(tables: &[Table]) -> Result<String> {
    let rows = |t: &Table| -> Value {
        Value::Array(
            t.rows
                .iter()
                .map(|r| {
                    Value::Object(
                        t.columns
                            .iter()
                            .cloned()
                            .zip(r.iter().map(Cell::json))
                            .collect::<Map<_, _>>(),
                    )
                })
                .collect(),
        )
    };
    let value = match tables {
        [single] => rows(single),
        many => Value::Object(many.iter().map(|t| (t.name.clone(), rows(t))).collect()),
    };
    let mut s =
        serde_json::to_string_pretty(&value).map_err(|e| CliError::Encode(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Writes to `path`, or to standard output when absent.
pub fn write_output(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| CliError::Write {
            path: p.to_path_buf(),
            source,
        }),
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|source| CliError::Write {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new("effects", &["profile", "nde", "p"]);
        t.push(vec![
            Cell::Text("male".into()),
            Cell::Num(0.5),
            Cell::PValue(1e-5),
        ]);
        t.push(vec![
            Cell::Text("female".into()),
            Cell::Num(f64::NAN),
            Cell::PValue(0.25),
        ]);
        t
    }

    #[test]
    fn csv_keeps_full_precision() {
        let mut t = Table::new("x", &["v"]);
        t.push(vec![Cell::Num(0.1 + 0.2)]);
        assert_eq!(
            render(&[t], Format::Csv).unwrap(),
            "v\n0.30000000000000004\n"
        );
    }

    #[test]
    fn json_preserves_column_order_and_nulls() {
        let s = render(&[sample()], Format::Json).unwrap();
        let first = s.find("\"profile\"").unwrap();
        assert!(
            first < s.find("\"nde\"").unwrap()
                && s.find("\"nde\"").unwrap() < s.find("\"p\"").unwrap()
        );
        assert!(s.contains("null"));
    }

    #[test]
    fn human_table_abbreviates_small_p_values() {
        let s = render(&[sample()], Format::Table).unwrap();
        assert!(s.contains("<0.001"));
        assert!(s.contains("0.250"));
    }

    #[test]
    fn multiple_tables_get_a_table_column() {
        let (a, mut b) = (sample(), sample());
        b.name = "other".into();
        let s = render(&[a, b], Format::Csv).unwrap();
        assert!(s.starts_with("table,profile,nde,p\n"));
        assert_eq!(s.lines().filter(|l| l.starts_with("other,")).count(), 2);
    }
}
