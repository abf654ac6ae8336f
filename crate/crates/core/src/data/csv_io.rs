use std::collections::HashMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use super::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;

/// Which CSV column carries the class label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LabelColumn {
    /// 0-based column index.
    Index(usize),
    /// Header name; requires a header row.
    Name(String),
    /// The final column of every row.
    Last,
}

impl LabelColumn {
    /// Integers select by index, `last` the final column, anything else by
    /// header name.
    pub fn parse(s: &str) -> Self {
        match s.trim() {
            "last" => LabelColumn::Last,
            t => match t.parse::<usize>() {
                Ok(i) => LabelColumn::Index(i),
                Err(_) => LabelColumn::Name(t.to_string()),
            },
        }
    }
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Reads a comma-separated table. Labels are remapped to `0..K` in order of
/// first appearance; feature columns keep their file order.
pub fn load_csv<T: Scalar>(path: &Path, label_column: &LabelColumn, has_header: bool) -> Result<Dataset<T>> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_reader(file);

    let label_idx = match label_column {
        LabelColumn::Last => None,
        LabelColumn::Index(i) => Some(*i),
        LabelColumn::Name(name) => {
            if !has_header {
                return Err(parse_err(path, 1, "label column given by name but file has no header"));
            }
            let headers = reader.headers().map_err(|e| parse_err(path, 1, e.to_string()))?;
            Some(
                headers
                    .iter()
                    .position(|h| h == name)
                    .ok_or_else(|| parse_err(path, 1, format!("no column named {name:?}")))?,
            )
        }
    };

    let mut values: Vec<T> = Vec::new();
    let mut labels = Vec::new();
    let mut class_ids: HashMap<String, usize> = HashMap::new();
    let mut class_names = Vec::new();
    let mut width = None;
    for (n, record) in reader.records().enumerate() {
        let line = n + 1 + usize::from(has_header);
        let record = record.map_err(|e| parse_err(path, line, e.to_string()))?;
        let label_idx = label_idx.unwrap_or(record.len().saturating_sub(1));
        if label_idx >= record.len() {
            return Err(parse_err(
                path,
                line,
                format!("label column {label_idx} outside {} columns", record.len()),
            ));
        }
        width.get_or_insert(record.len() - 1);
        for (j, cell) in record.iter().enumerate() {
            if j == label_idx {
                let next = class_ids.len();
                let id = *class_ids.entry(cell.to_string()).or_insert_with(|| {
                    class_names.push(cell.to_string());
                    next
                });
                labels.push(id);
            } else {
                let v: T = cell
                    .parse()
                    .map_err(|_| parse_err(path, line, format!("non-numeric feature {cell:?} in column {j}")))?;
                if !v.is_finite() {
                    return Err(parse_err(path, line, format!("non-finite feature in column {j}")));
                }
                values.push(v);
            }
        }
    }
    if labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let cols = width.unwrap_or(0);
    if cols == 0 {
        return Err(parse_err(path, 1, "no feature columns"));
    }
    if class_names.len() < 2 {
        return Err(Error::SingleClass(class_names.len()));
    }
    let features = DenseMatrix::new(labels.len(), cols, values)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Dataset::with_class_names(name, features, labels, class_names)
}

/// Reads an all-numeric table with no label column.
pub fn load_features<T: Scalar>(path: &Path, has_header: bool) -> Result<DenseMatrix<T>> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut values: Vec<T> = Vec::new();
    let mut rows = 0;
    let mut cols = 0;
    for (n, record) in reader.records().enumerate() {
        let line = n + 1 + usize::from(has_header);
        let record = record.map_err(|e| parse_err(path, line, e.to_string()))?;
        cols = record.len();
        for (j, cell) in record.iter().enumerate() {
            let v: T = cell
                .parse()
                .map_err(|_| parse_err(path, line, format!("non-numeric feature {cell:?} in column {j}")))?;
            if !v.is_finite() {
                return Err(parse_err(path, line, format!("non-finite feature in column {j}")));
            }
            values.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::EmptyDataset);
    }
    DenseMatrix::new(rows, cols, values)
}

/// Writes features followed by the class name in the last column. Values use
/// the shortest representation that parses back to the same number.
pub fn write_csv<T: Scalar>(path: &Path, ds: &Dataset<T>, header: bool) -> Result<()> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = String::new();
    if header {
        let mut cols: Vec<String> = (0..ds.feature_count()).map(|j| format!("x{j}")).collect();
        cols.push("label".into());
        out.push_str(&cols.join(","));
        out.push('\n');
    }
    for (i, &l) in ds.labels().iter().enumerate() {
        for v in ds.features().row(i) {
            out.push_str(&v.to_string());
            out.push(',');
        }
        out.push_str(&ds.class_names()[l]);
        out.push('\n');
    }
    File::create(path).and_then(|mut f| f.write_all(out.as_bytes())).map_err(io)
}
