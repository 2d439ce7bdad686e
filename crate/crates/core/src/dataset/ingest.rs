use std::path::Path;

use super::schema::{FeatureKind, RawRecord, RecordSchema};
use crate::error::{Error, Result};

/// Reads a header-first CSV file into raw records.
///
/// Columns outside the schema are ignored; the target column is optional.
pub fn load_csv(path: impl AsRef<Path>, schema: &RecordSchema) -> Result<Vec<RawRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema)
}

pub fn read_csv<R: std::io::Read>(reader: R, schema: &RecordSchema) -> Result<Vec<RawRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| csv_error(e, 1))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect::<Vec<_>>();

    for f in &schema.features {
        if !headers.contains(&f.name) {
            return Err(Error::Schema(format!(
                "missing required column `{}`",
                f.name
            )));
        }
    }
    let wanted: Vec<Option<&str>> = headers
        .iter()
        .map(|h| (schema.feature(h).is_some() || *h == schema.target.name).then_some(h.as_str()))
        .collect();

    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        let row = row.map_err(|e| csv_error(e, line))?;
        let line = row.position().map(|p| p.line()).unwrap_or(line);
        let mut record = RawRecord::new();
        for (cell, column) in row.iter().zip(&wanted) {
            let Some(column) = column else { continue };
            let cell = cell.trim();
            let value = (!cell.is_empty()).then(|| cell.to_string());
            if let (Some(v), Some(spec)) = (&value, schema.feature(column)) {
                if spec.kind == FeatureKind::Numeric
                    && v.parse::<f64>().map_or(true, |x| !x.is_finite())
                {
                    return Err(Error::Parse {
                        line,
                        column: Some(column.to_string()),
                        message: format!("`{v}` is not a number"),
                    });
                }
            }
            record.set(column, value);
        }
        out.push(record);
    }
    Ok(out)
}

fn csv_error(err: csv::Error, fallback_line: u64) -> Error {
    let line = err.position().map(|p| p.line()).unwrap_or(fallback_line);
    let message = match err.kind() {
        csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => format!("expected {expected_len} fields, found {len}"),
        _ => err.to_string(),
    };
    Error::Parse {
        line,
        column: None,
        message,
    }
}

/// Writes records with one column per schema feature followed by the target.
pub fn write_csv(
    path: impl AsRef<Path>,
    records: &[RawRecord],
    schema: &RecordSchema,
) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut wtr = csv::Writer::from_writer(std::io::BufWriter::new(file));
    let columns: Vec<&str> = schema
        .features
        .iter()
        .map(|f| f.name.as_str())
        .chain(std::iter::once(schema.target.name.as_str()))
        .collect();
    let io = |e: csv::Error| Error::io(path, std::io::Error::other(e));
    wtr.write_record(&columns).map_err(io)?;
    for r in records {
        wtr.write_record(columns.iter().map(|c| r.get(c).unwrap_or("")))
            .map_err(io)?;
    }
    wtr.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header(schema: &RecordSchema) -> String {
        let mut cols: Vec<&str> = schema.features.iter().map(|f| f.name.as_str()).collect();
        cols.push("hospitalization");
        cols.join(",")
    }

    const ROW: &str = "4,0.5,Male,Normal,Normal,Normal,0-258days,Unknown,PPV23,Oral,0-9days,Deltoid muscle of upper arm,Yes";

    #[test]
    fn header_only_gives_no_records() {
        let schema = RecordSchema::default();
        let text = format!("{}\n", header(&schema));
        assert!(read_csv(text.as_bytes(), &schema).unwrap().is_empty());
    }

    #[test]
    fn reads_records_and_blank_cells() {
        let schema = RecordSchema::default();
        let blank = ROW.replacen("Male", "", 1);
        let text = format!("{}\n{ROW}\n{blank}\n", header(&schema));
        let recs = read_csv(text.as_bytes(), &schema).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].get("gender"), Some("Male"));
        assert_eq!(recs[1].get("gender"), None);
        assert_eq!(recs[0].get("hospitalization"), Some("Yes"));
    }

    #[test]
    fn missing_column_is_a_schema_error() {
        let schema = RecordSchema::default();
        let text = header(&schema).replace("gender,", "");
        match read_csv(text.as_bytes(), &schema) {
            Err(Error::Schema(m)) => assert!(m.contains("gender")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn wrong_field_count_reports_line() {
        let schema = RecordSchema::default();
        let text = format!("{}\n{ROW}\n4,0.5,Male\n", header(&schema));
        match read_csv(text.as_bytes(), &schema) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unparseable_numeric_names_line_and_column() {
        let schema = RecordSchema::default();
        let bad = ROW.replacen("0.5", "abc", 1);
        let text = format!("{}\n{ROW}\n{bad}\n", header(&schema));
        match read_csv(text.as_bytes(), &schema) {
            Err(Error::Parse { line, column, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(column.as_deref(), Some("vaccination_dose"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn write_then_read() {
        let schema = RecordSchema::default();
        let text = format!("{}\n{ROW}\n", header(&schema));
        let recs = read_csv(text.as_bytes(), &schema).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        write_csv(&path, &recs, &schema).unwrap();
        assert_eq!(load_csv(&path, &schema).unwrap(), recs);
    }
}
