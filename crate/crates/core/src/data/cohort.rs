use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::schema::{CohortSchema, TECHNIQUE_CONVERSION, TECHNIQUE_LAPAROSCOPIC, TIME, EVENT, TREATMENT};
use crate::error::{invalid, Error, Result};

/// Validated cohort records, stored row-major in file column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cohort {
    schema: CohortSchema,
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
}

/// What `load_cohort` discarded.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    pub rows_read: usize,
    pub dropped_missing: usize,
    pub dropped_conversion: usize,
}

fn is_missing(field: &str) -> bool {
    let f = field.trim();
    f.is_empty() || f.eq_ignore_ascii_case("na")
}

impl Cohort {
    /// Builds a cohort, validating every value. Conversion rows are kept;
    /// `load_cohort` is where they are filtered.
    pub fn new(schema: CohortSchema, columns: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        for (j, c) in columns.iter().enumerate() {
            if schema.get(c).is_none() {
                return Err(Error::Schema(format!("unknown column `{c}`")));
            }
            if columns[..j].contains(c) {
                return Err(Error::Schema(format!("duplicate column `{c}`")));
            }
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != columns.len() {
                return Err(Error::DimensionMismatch {
                    context: "cohort row",
                    expected: columns.len(),
                    got: row.len(),
                });
            }
            for (c, &v) in columns.iter().zip(row) {
                if let Some(message) = schema.get(c).expect("checked").violation(v) {
                    return Err(Error::Record {
                        row: i + 1,
                        column: c.clone(),
                        message,
                    });
                }
            }
        }
        Ok(Self {
            schema,
            columns,
            rows,
        })
    }

    pub fn schema(&self) -> &CohortSchema {
        &self.schema
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| invalid(format!("cohort has no column `{name}`")))
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let j = self.column_index(name)?;
        Ok(self.rows.iter().map(|r| r[j]).collect())
    }

    /// `Z`: 1 laparoscopic, 0 open. Fails if a conversion row is present.
    pub fn treatment(&self) -> Result<Vec<f64>> {
        let z = self.column(TREATMENT)?;
        if let Some(i) = z.iter().position(|&t| t == TECHNIQUE_CONVERSION) {
            return Err(Error::Record {
                row: i + 1,
                column: TREATMENT.into(),
                message: "conversion rows are not part of the two-arm comparison".into(),
            });
        }
        Ok(z.into_iter().map(|t| f64::from(t == TECHNIQUE_LAPAROSCOPIC)).collect())
    }

    pub fn survival_time(&self) -> Result<Vec<f64>> {
        self.column(TIME)
    }

    pub fn event(&self) -> Result<Vec<f64>> {
        self.column(EVENT)
    }

    /// Rows restricted to the given indices, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let rows = indices
            .iter()
            .map(|&i| {
                self.rows
                    .get(i)
                    .cloned()
                    .ok_or_else(|| invalid(format!("row index {i} out of range")))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            schema: self.schema.clone(),
            columns: self.columns.clone(),
            rows,
        })
    }
}

/// Reads a cohort CSV, validating against `schema`.
///
/// Rows with an empty or `NA` field are dropped (listwise deletion), as are
/// conversion rows of the technique column. Unknown columns, unparsable
/// numbers and out-of-range values are errors naming the 1-based data row.
pub fn read_cohort<R: Read>(reader: R, schema: &CohortSchema) -> Result<(Cohort, LoadReport)> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let columns: Vec<String> = csv.headers()?.iter().map(str::to_string).collect();
    for c in &columns {
        if schema.get(c).is_none() {
            return Err(Error::Schema(format!("unknown column `{c}`")));
        }
    }
    let technique = columns.iter().position(|c| c == TREATMENT);
    let mut report = LoadReport::default();
    let mut rows = Vec::new();
    for (i, rec) in csv.records().enumerate() {
        let rec = rec?;
        let row_no = i + 1;
        report.rows_read += 1;
        if rec.len() != columns.len() {
            return Err(Error::Record {
                row: row_no,
                column: String::new(),
                message: format!("expected {} fields, found {}", columns.len(), rec.len()),
            });
        }
        if rec.iter().any(is_missing) {
            report.dropped_missing += 1;
            continue;
        }
        let mut row = Vec::with_capacity(columns.len());
        for (c, field) in columns.iter().zip(rec.iter()) {
            let v: f64 = field.parse().map_err(|_| Error::Record {
                row: row_no,
                column: c.clone(),
                message: format!("`{field}` is not a number"),
            })?;
            if let Some(message) = schema.get(c).expect("checked").violation(v) {
                return Err(Error::Record {
                    row: row_no,
                    column: c.clone(),
                    message,
                });
            }
            row.push(v);
        }
        if technique.is_some_and(|j| row[j] == TECHNIQUE_CONVERSION) {
            report.dropped_conversion += 1;
            continue;
        }
        rows.push(row);
    }
    Ok((
        Cohort {
            schema: schema.clone(),
            columns,
            rows,
        },
        report,
    ))
}

pub fn load_cohort(path: impl AsRef<Path>, schema: &CohortSchema) -> Result<(Cohort, LoadReport)> {
    read_cohort(std::fs::File::open(path)?, schema)
}

/// Writes the cohort as CSV. Values use the shortest exact decimal form, so
/// reading the file back reproduces every value bit for bit.
pub fn write_cohort<W: Write>(cohort: &Cohort, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(&cohort.columns)?;
    for row in &cohort.rows {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_cohort(cohort: &Cohort, path: impl AsRef<Path>) -> Result<()> {
    write_cohort(cohort, std::fs::File::create(path)?)
}
