use std::fs::File;
use std::io::Read;
use std::path::Path;

use super::schema::{ColumnKind, Schema};
use crate::error::DataError;

/// Rows of text cells in schema column order. `None` marks a missing cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Option<String>>>,
    pub n_missing_rows: usize,
}

impl RawTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row_has_missing(&self, row: usize) -> bool {
        self.rows[row].iter().any(Option::is_none)
    }
}

/// Reads a comma-separated file whose header names the schema columns in any
/// order.
pub fn parse_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<RawTable, DataError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_reader(file, schema)
}

pub fn parse_reader<R: Read>(reader: R, schema: &Schema) -> Result<RawTable, DataError> {
    read_table(reader, schema, true)
}

/// Like [`parse_reader`] but tolerates a header without the target column;
/// used for scoring unlabeled records.
pub fn parse_unlabeled_reader<R: Read>(reader: R, schema: &Schema) -> Result<RawTable, DataError> {
    read_table(reader, schema, false)
}

/// Trims whitespace and the single quotes that ARFF exports leave around
/// values containing spaces.
pub(crate) fn normalize_cell(cell: &str, missing_token: &str) -> Option<String> {
    let mut v = cell.trim();
    if v.len() >= 2 && v.starts_with('\'') && v.ends_with('\'') {
        v = v[1..v.len() - 1].trim();
    }
    if v.is_empty() || v == missing_token {
        None
    } else {
        Some(v.to_string())
    }
}

fn read_table<R: Read>(
    reader: R,
    schema: &Schema,
    require_target: bool,
) -> Result<RawTable, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();

    let header_record = match records.next() {
        Some(r) => r?,
        None => {
            return Err(DataError::HeaderMismatch {
                missing: schema.columns().iter().map(|c| c.name.clone()).collect(),
                unexpected: Vec::new(),
            })
        }
    };
    let file_header: Vec<String> = header_record
        .iter()
        .map(|h| h.trim().trim_start_matches('\u{feff}').to_string())
        .collect();

    // position in file for each schema column
    let mut source: Vec<Option<usize>> = vec![None; schema.len()];
    let mut unexpected = Vec::new();
    for (file_idx, name) in file_header.iter().enumerate() {
        match schema.columns().iter().position(|c| c.matches(name)) {
            Some(ci) if source[ci].is_none() => source[ci] = Some(file_idx),
            _ => unexpected.push(name.clone()),
        }
    }
    let missing: Vec<String> = schema
        .columns()
        .iter()
        .zip(&source)
        .filter(|(c, s)| s.is_none() && (require_target || c.kind != ColumnKind::Target))
        .map(|(c, _)| c.name.clone())
        .collect();
    if !missing.is_empty() || !unexpected.is_empty() {
        return Err(DataError::HeaderMismatch {
            missing,
            unexpected,
        });
    }

    let mut rows = Vec::new();
    let mut n_missing_rows = 0;
    for record in records {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record.get(0).is_some_and(|c| c.trim().is_empty()) {
            continue;
        }
        if record.len() != file_header.len() {
            return Err(DataError::CellCount {
                line,
                expected: file_header.len(),
                found: record.len(),
            });
        }
        let row: Vec<Option<String>> = source
            .iter()
            .map(|s| s.and_then(|i| normalize_cell(&record[i], schema.missing_token())))
            .collect();
        let target = schema.target_index();
        let has_missing = row.iter().enumerate().any(|(i, c)| {
            c.is_none() && (require_target || i != target || source[target].is_some())
        });
        if has_missing {
            n_missing_rows += 1;
        }
        rows.push(row);
    }

    Ok(RawTable {
        header: schema.columns().iter().map(|c| c.name.clone()).collect(),
        rows,
        n_missing_rows,
    })
}
