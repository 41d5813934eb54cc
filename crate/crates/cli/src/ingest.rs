//! CSV input and output.
//!
//! Input files are comma-separated UTF-8 with a mandatory header. Coordinates
//! live in columns `x0, x1, ...` (contiguous from `x0`), targets in `y`.

use std::fs;
use std::path::Path;

use rkhs_radon::json::format_f64;
use rkhs_radon::{Dataset, Matrix, Point};

use crate::error::{CliError, Result};

struct Table {
    coord_cols: Vec<usize>,
    target_col: Option<usize>,
    rows: Vec<csv::StringRecord>,
}

fn read_table(path: &Path) -> Result<Table> {
    let text = fs::read_to_string(path).map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    if text.trim().is_empty() {
        return Err(CliError::input(format!("{}: empty file", path.display())));
    }
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| CliError::input(format!("{}: bad header: {e}", path.display())))?.clone();
    let find = |name: &str| header.iter().position(|h| h == name);

    let mut coord_cols = Vec::new();
    while let Some(c) = find(&format!("x{}", coord_cols.len())) {
        coord_cols.push(c);
    }
    let rows = reader
        .records()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    Ok(Table { coord_cols, target_col: find("y"), rows })
}

fn cell(path: &Path, record: &csv::StringRecord, row: usize, col: usize, name: &str) -> Result<f64> {
    let raw = record.get(col).unwrap_or("");
    raw.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
        CliError::input(format!("{}: non-numeric value {raw:?} in row {row}, column {name:?}", path.display()))
    })
}

fn points_of(path: &Path, table: &Table) -> Result<Vec<Point>> {
    if table.coord_cols.is_empty() {
        return Err(CliError::input(format!("{}: missing column \"x0\"", path.display())));
    }
    table
        .rows
        .iter()
        .enumerate()
        .map(|(r, rec)| {
            let coords = table
                .coord_cols
                .iter()
                .enumerate()
                .map(|(j, &c)| cell(path, rec, r + 1, c, &format!("x{j}")))
                .collect::<Result<Vec<f64>>>()?;
            Point::new(coords).map_err(|e| CliError::input(format!("{}: row {}: {e}", path.display(), r + 1)))
        })
        .collect()
}

/// Reads a training set: columns x0..x{d-1} and y, rows in file order.
pub fn ingest_csv(path: &Path) -> Result<Dataset> {
    let table = read_table(path)?;
    let target_col =
        table.target_col.ok_or_else(|| CliError::input(format!("{}: missing column \"y\"", path.display())))?;
    let points = points_of(path, &table)?;
    if points.is_empty() {
        return Err(CliError::input(format!("{}: no data rows", path.display())));
    }
    let targets = table
        .rows
        .iter()
        .enumerate()
        .map(|(r, rec)| cell(path, rec, r + 1, target_col, "y"))
        .collect::<Result<Vec<f64>>>()?;
    Dataset::new(points, targets).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

/// Reads query points from columns x0..x{d-1}; any `y` column is ignored.
pub fn ingest_points(path: &Path) -> Result<Vec<Point>> {
    let table = read_table(path)?;
    let points = points_of(path, &table)?;
    if points.is_empty() {
        return Err(CliError::input(format!("{}: no data rows", path.display())));
    }
    Ok(points)
}

/// `x0,...,yhat` rows.
pub fn predictions_csv(points: &[Point], predictions: &[f64]) -> String {
    let d = points.first().map_or(0, Point::dim);
    let mut out: Vec<String> = (0..d).map(|j| format!("x{j}")).collect();
    out.push("yhat".into());
    let mut text = out.join(",");
    text.push('\n');
    for (p, y) in points.iter().zip(predictions) {
        let mut line: Vec<String> = p.coords().iter().map(|&v| format_f64(v)).collect();
        line.push(format_f64(*y));
        text.push_str(&line.join(","));
        text.push('\n');
    }
    text
}

/// One sample per row under a header of coordinate labels.
pub fn samples_csv(labels: &[String], samples: &Matrix) -> String {
    let mut text = labels.join(",");
    text.push('\n');
    for i in 0..samples.nrows() {
        let line: Vec<String> = samples.row(i).iter().map(|&v| format_f64(v)).collect();
        text.push_str(&line.join(","));
        text.push('\n');
    }
    text
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn single_row() {
        let f = file("x0,y\n1,2\n");
        let d = ingest_csv(f.path()).unwrap();
        assert_eq!(d.points()[0].coords(), &[1.0]);
        assert_eq!(d.targets(), &[2.0]);
    }

    #[test]
    fn missing_y() {
        let f = file("x0,x1\n1,2\n");
        let err = ingest_csv(f.path()).unwrap_err().to_string();
        assert!(err.contains("\"y\""), "{err}");
    }

    #[test]
    fn two_dims_in_order() {
        let f = file("y,x1,x0\n1,0.5,3\n2,1.5,4\n3,2.5,5\n");
        let d = ingest_csv(f.path()).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.points()[0].coords(), &[3.0, 0.5]);
        assert_eq!(d.points()[2].coords(), &[5.0, 2.5]);
        assert_eq!(d.targets(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn non_numeric_reports_position() {
        let f = file("x0,y\n1,2\n3,abc\n");
        let err = ingest_csv(f.path()).unwrap_err().to_string();
        assert!(err.contains("row 2") && err.contains("\"y\""), "{err}");
        let f = file("x0,y\n1,nan\n");
        assert!(ingest_csv(f.path()).is_err());
    }

    #[test]
    fn empty_inputs() {
        assert!(ingest_csv(file("").path()).is_err());
        assert!(ingest_csv(file("x0,y\n").path()).is_err());
        assert!(ingest_csv(file("y\n1\n").path()).is_err());
        assert!(ingest_csv(Path::new("/nonexistent/file.csv")).is_err());
    }

    #[test]
    fn output_formats() {
        let pts = vec![Point::new(vec![0.5]).unwrap()];
        assert_eq!(predictions_csv(&pts, &[0.25]), "x0,yhat\n5.0000000000000000e-1,2.5000000000000000e-1\n");
    }
}
