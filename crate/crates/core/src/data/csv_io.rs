//! CSV ingestion and serialization.
//!
//! Layout: `company_id`, `year`, features, targets. Empty cells and the
//! literal `NA` are missing markers; they are accepted for features only.

use std::io::{Read, Write};
use std::path::Path;

use crate::data::schema::{FeatureKind, FeatureSchema, TargetSpec};
use crate::data::table::{DataTable, Row, TargetValue, Value};
use crate::error::{Error, Result};

pub const MISSING_TOKEN: &str = "NA";

fn is_missing(cell: &str) -> bool {
    cell.is_empty() || cell == MISSING_TOKEN
}

pub fn load_csv(path: impl AsRef<Path>, schema: &FeatureSchema) -> Result<DataTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema)
}

/// Loads a table for prediction: when none of the target columns are
/// present the table is built against `schema.without_targets()`.
pub fn load_csv_for_inference(path: impl AsRef<Path>, schema: &FeatureSchema) -> Result<DataTable> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let has_targets = schema
        .target_columns
        .iter()
        .any(|(name, _)| headers.iter().any(|h| h == name));
    if has_targets {
        load_csv(path, schema)
    } else {
        load_csv(path, &schema.without_targets())
    }
}

pub fn read_csv<R: Read>(input: R, schema: &FeatureSchema) -> Result<DataTable> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let headers = reader.headers()?.clone();
    let locate = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("missing column `{name}`")))
    };
    let company_col = locate(&schema.company_column)?;
    let year_col = locate(&schema.year_column)?;
    let feature_cols = schema
        .feature_names
        .iter()
        .map(|n| locate(n))
        .collect::<Result<Vec<_>>>()?;
    let target_cols = schema
        .target_columns
        .iter()
        .map(|(n, _)| locate(n))
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let row_no = r + 1;
        let cell = |c: usize| record.get(c).unwrap_or("");

        let company = cell(company_col).to_string();
        if is_missing(&company) {
            return Err(Error::Integrity(format!("row {row_no}: missing company id")));
        }
        let year_cell = cell(year_col);
        let year = year_cell.trim().parse::<i32>().map_err(|e| Error::Parse {
            row: row_no,
            column: schema.year_column.clone(),
            message: format!("`{year_cell}`: {e}"),
        })?;

        let mut features = Vec::with_capacity(feature_cols.len());
        for (j, &c) in feature_cols.iter().enumerate() {
            let raw = cell(c);
            let value = if is_missing(raw) {
                Value::Missing
            } else {
                match schema.feature_kinds[j] {
                    FeatureKind::Numerical => Value::Num(parse_number(raw, row_no, &schema.feature_names[j])?),
                    FeatureKind::Categorical => Value::Cat(raw.to_string()),
                }
            };
            features.push(value);
        }

        let mut targets = Vec::with_capacity(target_cols.len());
        for (&c, (name, spec)) in target_cols.iter().zip(&schema.target_columns) {
            let raw = cell(c);
            if is_missing(raw) {
                return Err(Error::Integrity(format!(
                    "row {row_no}: missing value for target `{name}`"
                )));
            }
            targets.push(match spec {
                TargetSpec::Continuous { .. } => TargetValue::Num(parse_number(raw, row_no, name)?),
                TargetSpec::Categorical { .. } => TargetValue::Label(raw.to_string()),
            });
        }

        rows.push(Row {
            company,
            year,
            features,
            targets,
        });
    }
    DataTable::new(schema.clone(), rows)
}

fn parse_number(raw: &str, row: usize, column: &str) -> Result<f64> {
    match raw.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(v) => Err(Error::Parse {
            row,
            column: column.to_string(),
            message: format!("non-finite value {v}"),
        }),
        Err(e) => Err(Error::Parse {
            row,
            column: column.to_string(),
            message: format!("`{raw}`: {e}"),
        }),
    }
}

pub fn write_csv<W: Write>(table: &DataTable, output: W) -> Result<()> {
    let schema = table.schema();
    let mut writer = csv::Writer::from_writer(output);
    let header = [schema.company_column.as_str(), schema.year_column.as_str()]
        .into_iter()
        .chain(schema.feature_names.iter().map(String::as_str))
        .chain(schema.target_columns.iter().map(|(n, _)| n.as_str()));
    writer.write_record(header)?;
    let mut record: Vec<String> = Vec::new();
    for row in table.rows() {
        record.clear();
        record.push(row.company.clone());
        record.push(row.year.to_string());
        for value in &row.features {
            record.push(match value {
                Value::Num(v) => format!("{v}"),
                Value::Cat(s) => s.clone(),
                Value::Missing => String::new(),
            });
        }
        for value in &row.targets {
            record.push(match value {
                TargetValue::Num(v) => format!("{v}"),
                TargetValue::Label(s) => s.clone(),
            });
        }
        writer.write_record(&record)?;
    }
    writer.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub fn save_csv(table: &DataTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(table, std::io::BufWriter::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> FeatureSchema {
        FeatureSchema::new(
            vec![
                ("revenue".into(), FeatureKind::Numerical),
                ("industry".into(), FeatureKind::Categorical),
            ],
            vec![("esg".into(), TargetSpec::score())],
        )
        .unwrap()
    }

    #[test]
    fn loads_complete_rows() {
        let csv = "company_id,year,revenue,industry,esg\n\
                   Acme,2002,1.5,Energy,40\n\
                   Acme,2003,2.5,Energy,42.5\n\
                   Beta,2002,-3,\"Tech, Hardware\",77\n";
        let t = read_csv(csv.as_bytes(), &schema()).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.missing_count(), 0);
        assert_eq!(t.rows()[2].features[1], Value::Cat("Tech, Hardware".into()));
        assert_eq!(t.continuous_target("esg").unwrap(), vec![40.0, 42.5, 77.0]);
    }

    #[test]
    fn na_and_empty_are_missing() {
        let csv = "company_id,year,revenue,industry,esg\nAcme,2002,NA,,40\n";
        let t = read_csv(csv.as_bytes(), &schema()).unwrap();
        assert_eq!(t.rows()[0].features, vec![Value::Missing, Value::Missing]);
    }

    #[test]
    fn columns_in_any_order() {
        let csv = "esg,industry,year,company_id,revenue\n40,Energy,2002,Acme,1\n";
        let t = read_csv(csv.as_bytes(), &schema()).unwrap();
        assert_eq!(t.rows()[0].features[0], Value::Num(1.0));
    }

    #[test]
    fn duplicate_company_year_is_integrity_error() {
        let csv = "company_id,year,revenue,industry,esg\nAcme,2002,1,E,40\nAcme,2002,2,E,41\n";
        let err = read_csv(csv.as_bytes(), &schema()).unwrap_err();
        assert!(matches!(err, Error::Integrity(_)), "{err}");
    }

    #[test]
    fn missing_column_is_named() {
        let csv = "company_id,year,industry,esg\nAcme,2002,E,40\n";
        let err = read_csv(csv.as_bytes(), &schema()).unwrap_err();
        match err {
            Error::Schema(msg) => assert!(msg.contains("revenue")),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn bad_number_reports_position() {
        let csv = "company_id,year,revenue,industry,esg\nAcme,2002,1,E,40\nBeta,2002,abc,E,40\n";
        match read_csv(csv.as_bytes(), &schema()).unwrap_err() {
            Error::Parse { row, column, .. } => {
                assert_eq!(row, 2);
                assert_eq!(column, "revenue");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn target_out_of_range_and_missing_rejected() {
        let csv = "company_id,year,revenue,industry,esg\nAcme,2002,1,E,101\n";
        assert!(matches!(read_csv(csv.as_bytes(), &schema()), Err(Error::Integrity(_))));
        let csv = "company_id,year,revenue,industry,esg\nAcme,2002,1,E,NA\n";
        assert!(matches!(read_csv(csv.as_bytes(), &schema()), Err(Error::Integrity(_))));
    }
}
