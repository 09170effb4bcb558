//! Observational records `(Y, M, X, C)` and their CSV form.

use std::io::{Read, Write};
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::design::Variables;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub outcome: bool,
    pub mediator: bool,
    pub exposure: f64,
    /// Values in the order of [`Dataset::covariate_names`].
    pub covariates: Vec<f64>,
}

/// Maps CSV header names onto the analysis roles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnMap {
    pub outcome: String,
    pub mediator: String,
    pub exposure: String,
    #[serde(default)]
    pub covariates: Vec<String>,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            outcome: "Y".into(),
            mediator: "M".into(),
            exposure: "X".into(),
            covariates: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    covariate_names: Vec<String>,
    records: Vec<Record>,
}

/// A dataset row seen through the [`Variables`] interface.
#[derive(Debug, Clone, Copy)]
pub struct RowView<'a> {
    names: &'a [String],
    record: &'a Record,
}

impl Variables for RowView<'_> {
    fn exposure(&self) -> f64 {
        self.record.exposure
    }
    fn mediator(&self) -> Option<f64> {
        Some(if self.record.mediator { 1.0 } else { 0.0 })
    }
    fn covariate(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.record.covariates[i])
    }
}

impl Dataset {
    pub fn new(covariate_names: Vec<String>, records: Vec<Record>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::InvalidData("dataset has no rows".into()));
        }
        for (i, r) in records.iter().enumerate() {
            if r.covariates.len() != covariate_names.len() {
                return Err(Error::Ingestion {
                    row: i + 1,
                    message: format!(
                        "expected {} covariates, found {}",
                        covariate_names.len(),
                        r.covariates.len()
                    ),
                });
            }
            if !r.exposure.is_finite() || r.covariates.iter().any(|v| !v.is_finite()) {
                return Err(Error::Ingestion {
                    row: i + 1,
                    message: "non-finite value".into(),
                });
            }
        }
        Ok(Dataset {
            covariate_names,
            records,
        })
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn rows(&self) -> impl Iterator<Item = RowView<'_>> + '_ {
        self.records.iter().map(move |record| RowView {
            names: &self.covariate_names,
            record,
        })
    }

    pub fn covariate_column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.covariate_names.iter().position(|n| n == name)?;
        Some(self.records.iter().map(|r| r.covariates[i]).collect())
    }

    pub fn exposure_range(&self) -> (f64, f64) {
        self.records
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                (lo.min(r.exposure), hi.max(r.exposure))
            })
    }

    pub fn from_csv_path(path: impl AsRef<Path>, columns: &ColumnMap) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_csv_reader(file, columns)
    }

    /// Parses CSV with a header row. Rows with an empty or `NA` field in a
    /// mapped column are dropped with a warning; anything else that fails to
    /// parse is an error carrying the 1-based data row number.
    pub fn from_csv_reader(reader: impl Read, columns: &ColumnMap) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        let index = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::InvalidData(format!("column `{name}` not found in header")))
        };
        let yi = index(&columns.outcome)?;
        let mi = index(&columns.mediator)?;
        let xi = index(&columns.exposure)?;
        let ci = columns
            .covariates
            .iter()
            .map(|c| index(c))
            .collect::<Result<Vec<_>>>()?;

        let mut records = Vec::new();
        let mut dropped = 0usize;
        for (n, row) in rdr.records().enumerate() {
            let row_no = n + 1;
            let row = row?;
            let wanted = [yi, mi, xi].into_iter().chain(ci.iter().copied());
            if wanted
                .map(|i| row.get(i).unwrap_or(""))
                .any(|v| v.is_empty() || v.eq_ignore_ascii_case("na"))
            {
                dropped += 1;
                continue;
            }
            let real = |i: usize, name: &str| -> Result<f64> {
                let raw = row.get(i).unwrap_or("");
                let v: f64 = raw.parse().map_err(|_| Error::Ingestion {
                    row: row_no,
                    message: format!("`{raw}` in column `{name}` is not a number"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Ingestion {
                        row: row_no,
                        message: format!("non-finite value in column `{name}`"),
                    });
                }
                Ok(v)
            };
            let binary = |i: usize, name: &str| -> Result<bool> {
                match real(i, name)? {
                    0.0 => Ok(false),
                    1.0 => Ok(true),
                    v => Err(Error::Ingestion {
                        row: row_no,
                        message: format!("column `{name}` must be 0 or 1, found {v}"),
                    }),
                }
            };
            records.push(Record {
                outcome: binary(yi, &columns.outcome)?,
                mediator: binary(mi, &columns.mediator)?,
                exposure: real(xi, &columns.exposure)?,
                covariates: ci
                    .iter()
                    .zip(&columns.covariates)
                    .map(|(&i, name)| real(i, name))
                    .collect::<Result<_>>()?,
            });
        }
        if dropped > 0 {
            warn!("dropped {dropped} row(s) with missing values");
        }
        Dataset::new(columns.covariates.clone(), records)
    }

    /// Writes the dataset with the header given by `columns`.
    pub fn write_csv(&self, writer: impl Write, columns: &ColumnMap) -> Result<()> {
        if columns.covariates != self.covariate_names {
            return Err(Error::InvalidData(
                "column map covariates do not match the dataset".into(),
            ));
        }
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec![
            columns.outcome.clone(),
            columns.mediator.clone(),
            columns.exposure.clone(),
        ];
        header.extend(columns.covariates.iter().cloned());
        w.write_record(&header)?;
        for r in &self.records {
            let mut fields = vec![
                u8::from(r.outcome).to_string(),
                u8::from(r.mediator).to_string(),
                r.exposure.to_string(),
            ];
            fields.extend(r.covariates.iter().map(|v| v.to_string()));
            w.write_record(&fields)?;
        }
        w.flush().map_err(|source| Error::Io {
            path: "<csv writer>".into(),
            source,
        })?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn columns() -> ColumnMap {
        ColumnMap {
            covariates: vec!["BMI".into()],
            ..ColumnMap::default()
        }
    }

    #[test]
    fn reads_and_writes_csv() {
        let src = "Y,M,X,BMI\n0,1,10,25.5\n1,0,20.5,30\n";
        let d = Dataset::from_csv_reader(src.as_bytes(), &columns()).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.records()[1].exposure, 20.5);
        let mut out = Vec::new();
        d.write_csv(&mut out, &columns()).unwrap();
        let back = Dataset::from_csv_reader(out.as_slice(), &columns()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn rejects_non_binary_with_row_context() {
        let src = "Y,M,X,BMI\n0,1,10,25\n2,0,20,30\n";
        match Dataset::from_csv_reader(src.as_bytes(), &columns()) {
            Err(Error::Ingestion { row, message }) => {
                assert_eq!(row, 2);
                assert!(message.contains("`Y`"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn drops_rows_with_missing_values() {
        let src = "Y,M,X,BMI\n0,1,10,\n1,0,20,NA\n1,1,5,22\n";
        let d = Dataset::from_csv_reader(src.as_bytes(), &columns()).unwrap();
        assert_eq!(d.len(), 1);
    }

    #[test]
    fn empty_file_and_missing_columns_fail() {
        assert!(Dataset::from_csv_reader("Y,M,X,BMI\n".as_bytes(), &columns()).is_err());
        assert!(Dataset::from_csv_reader("".as_bytes(), &columns()).is_err());
        assert!(Dataset::from_csv_reader("Y,M,BMI\n0,1,2\n".as_bytes(), &columns()).is_err());
    }
}
