//! CSV, TSV and image I/O.
//!
//! Data files are comma separated with one observation per row and an
//! optional header, detected by a non-numeric first row. Numbers are
//! written with 17 significant digits so that reloading is exact.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::crossval::RiskCurve;
use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::harness::genes::LabeledData;
use crate::harness::sim::SimResult;
use crate::matcore::SymMatrix;
use crate::support::SupportMask;

/// Relative asymmetry tolerated when loading a symmetric matrix.
pub const SYMMETRY_TOLERANCE: f64 = 1e-9;

/// Which column of a labelled file holds the class labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Index(usize),
    Name(String),
}

impl FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.to_string()),
        })
    }
}

/// Raw text cells with the file line of every row.
struct Grid {
    cells: Vec<Vec<String>>,
    lines: Vec<usize>,
    transposed: bool,
}

impl Grid {
    fn read(path: &Path, transpose: bool) -> Result<Grid> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| csv_error(path, e))?;
        let mut cells: Vec<Vec<String>> = Vec::new();
        let mut lines = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| csv_error(path, e))?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            if record.iter().all(str::is_empty) {
                continue;
            }
            let row: Vec<String> = record.iter().map(str::to_string).collect();
            if let Some(first) = cells.first() {
                if row.len() != first.len() {
                    return Err(Error::Parse {
                        path: path.into(),
                        line,
                        message: format!("expected {} fields, found {}", first.len(), row.len()),
                    });
                }
            }
            cells.push(row);
            lines.push(line);
        }
        if cells.is_empty() {
            return Err(Error::Parse {
                path: path.into(),
                line: 0,
                message: "file contains no data".into(),
            });
        }
        if transpose {
            let width = cells[0].len();
            cells = (0..width).map(|c| cells.iter().map(|r| r[c].clone()).collect()).collect();
        }
        Ok(Grid {
            cells,
            lines,
            transposed: transpose,
        })
    }

    /// File line of cell `(r, c)`.
    fn line(&self, r: usize, c: usize) -> usize {
        if self.transposed {
            self.lines[c]
        } else {
            self.lines[r]
        }
    }

    fn first_row_is_header(&self, skip: Option<usize>) -> bool {
        self.cells[0]
            .iter()
            .enumerate()
            .any(|(c, v)| Some(c) != skip && v.parse::<f64>().is_err())
    }

    fn number(&self, path: &Path, r: usize, c: usize) -> Result<f64> {
        let text = &self.cells[r][c];
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            Ok(_) => Err(self.parse_error(path, r, c, format!("non-finite value {text:?}"))),
            Err(_) => Err(self.parse_error(path, r, c, format!("not a number: {text:?}"))),
        }
    }

    fn parse_error(&self, path: &Path, r: usize, c: usize, message: String) -> Error {
        Error::Parse {
            path: path.into(),
            line: self.line(r, c),
            message: format!("field {}: {message}", c + 1),
        }
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        other => Error::Parse {
            path: path.into(),
            line,
            message: format!("{other:?}"),
        },
    }
}

fn data_from_grid(path: &Path, grid: &Grid, start: usize, skip: Option<usize>) -> Result<DataMatrix> {
    let rows = grid.cells.len() - start;
    let width = grid.cells[0].len() - usize::from(skip.is_some());
    let mut values = Vec::with_capacity(rows * width);
    for r in start..grid.cells.len() {
        for c in 0..grid.cells[r].len() {
            if Some(c) != skip {
                values.push(grid.number(path, r, c)?);
            }
        }
    }
    DataMatrix::new(rows, width, values)
}

/// Loads an `n × p` numeric table.
pub fn load_matrix_csv(path: &Path) -> Result<DataMatrix> {
    load_matrix_csv_with(path, false)
}

/// As [`load_matrix_csv`]; with `transpose` the file is read as `p × n`.
pub fn load_matrix_csv_with(path: &Path, transpose: bool) -> Result<DataMatrix> {
    let grid = Grid::read(path, transpose)?;
    let start = usize::from(grid.first_row_is_header(None));
    data_from_grid(path, &grid, start, None)
}

/// Loads observations with a class-label column. With `transpose` the file
/// is read as variables × observations and the labels sit in a row.
pub fn load_labeled_csv(path: &Path, label: &LabelColumn, transpose: bool) -> Result<LabeledData> {
    let grid = Grid::read(path, transpose)?;
    let width = grid.cells[0].len();
    let (col, has_header) = match label {
        LabelColumn::Index(i) => (*i, grid.first_row_is_header(Some(*i))),
        LabelColumn::Name(name) => match grid.cells[0].iter().position(|h| h == name) {
            Some(i) => (i, true),
            None => {
                return Err(Error::Parse {
                    path: path.into(),
                    line: grid.line(0, 0),
                    message: format!("no column named {name:?}"),
                })
            }
        },
    };
    if col >= width {
        return Err(Error::Parameter(format!("label column {col} out of range for {width} columns")));
    }
    let start = usize::from(has_header);
    let labels = grid.cells[start..].iter().map(|r| r[col].clone()).collect();
    let data = data_from_grid(path, &grid, start, Some(col))?;
    let mut out = LabeledData::new(data, labels)?;
    if has_header {
        out.names = Some(
            grid.cells[0]
                .iter()
                .enumerate()
                .filter(|&(c, _)| c != col)
                .map(|(_, h)| h.clone())
                .collect(),
        );
    }
    Ok(out)
}

/// Loads a square matrix, checking symmetry to a relative
/// [`SYMMETRY_TOLERANCE`] and averaging mirrored entries.
pub fn load_sym_matrix_csv(path: &Path) -> Result<SymMatrix> {
    let x = load_matrix_csv(path)?;
    let p = x.p();
    if x.n() != p {
        return Err(Error::InvalidDimension(format!("expected a square matrix, got {}x{p}", x.n())));
    }
    let scale = x.as_slice().iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    for i in 0..p {
        for j in (i + 1)..p {
            let diff = (x.get(i, j) - x.get(j, i)).abs();
            if diff > SYMMETRY_TOLERANCE * scale {
                return Err(Error::NotSymmetric { row: i, col: j, diff });
            }
        }
    }
    SymMatrix::from_row_major(p, x.as_slice().to_vec())
}

fn join_row(values: impl Iterator<Item = f64>) -> String {
    let mut line = String::new();
    for (k, v) in values.enumerate() {
        if k > 0 {
            line.push(',');
        }
        write!(line, "{v:.16e}").unwrap();
    }
    line.push('\n');
    line
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn matrix_csv(a: &SymMatrix) -> String {
    (0..a.dim()).map(|i| join_row(a.row(i).iter().copied())).collect()
}

pub fn write_matrix_csv(path: &Path, a: &SymMatrix) -> Result<()> {
    write_text(path, &matrix_csv(a))
}

pub fn write_data_csv(path: &Path, x: &DataMatrix) -> Result<()> {
    let text: String = (0..x.n()).map(|k| join_row(x.row(k).iter().copied())).collect();
    write_text(path, &text)
}

pub fn write_mask_csv(path: &Path, mask: &SupportMask) -> Result<()> {
    write_text(path, &mask.to_csv())
}

pub fn write_risk_curve_csv(path: &Path, curve: &RiskCurve, value_name: &str) -> Result<()> {
    write_text(path, &curve.to_csv(value_name))
}

pub fn write_result_tsv(path: &Path, result: &SimResult) -> Result<()> {
    write_text(path, &result.to_tsv())
}

pub use crate::harness::heatmap::write_pgm;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> std::path::PathBuf {
        let path = dir.path().join(name);
        std::fs::write(&path, text).unwrap();
        path
    }

    #[test]
    fn data_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = RngStream::new(4, 0);
        let values: Vec<f64> = (0..35).map(|_| rng.next_normal() * 10f64.powi(rng.below(20) as i32 - 10)).collect();
        let x = DataMatrix::new(7, 5, values).unwrap();
        let path = dir.path().join("x.csv");
        write_data_csv(&path, &x).unwrap();
        assert_eq!(load_matrix_csv(&path).unwrap(), x);
    }

    #[test]
    fn header_detection_and_transpose() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(&dir, "h.csv", "a,b,c\n1,2,3\n4,5,6\n");
        let x = load_matrix_csv(&path).unwrap();
        assert_eq!((x.n(), x.p()), (2, 3));
        let t = load_matrix_csv_with(&write(&dir, "t.csv", "1,2,3\n4,5,6\n"), true).unwrap();
        assert_eq!((t.n(), t.p()), (3, 2));
        assert_eq!(t.row(2), &[3.0, 6.0]);
    }

    #[test]
    fn errors_name_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let ragged = write(&dir, "r.csv", "1,2\n3,4\n5\n");
        match load_matrix_csv(&ragged) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let nan = write(&dir, "n.csv", "1,2\n3,NaN\n");
        assert!(matches!(load_matrix_csv(&nan), Err(Error::Parse { line: 2, .. })));
        let text = write(&dir, "x.csv", "1,2\n3,4\n5,x\n");
        let err = load_matrix_csv(&text).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
        assert!(err.to_string().contains("x.csv:3"));
        assert!(matches!(load_matrix_csv(&dir.path().join("missing.csv")), Err(Error::Io { .. })));
    }

    #[test]
    fn labeled_loading() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(&dir, "l.csv", "g1,class,g2\n1.0,EWS,2.0\n3.0,BL,4.0\n5.0,EWS,6.0\n");
        let d = load_labeled_csv(&path, &"class".parse().unwrap(), false).unwrap();
        assert_eq!(d.labels, vec!["EWS", "BL", "EWS"]);
        assert_eq!(d.data.row(1), &[3.0, 4.0]);
        assert_eq!(d.names.as_deref(), Some(&["g1".to_string(), "g2".to_string()][..]));
        let by_index = load_labeled_csv(&path, &LabelColumn::Index(1), false).unwrap();
        assert_eq!(by_index, d);

        let plain = write(&dir, "p.csv", "a,1,2\nb,3,4\na,5,6\n");
        let d = load_labeled_csv(&plain, &LabelColumn::Index(0), false).unwrap();
        assert_eq!((d.data.n(), d.names), (3, None));
        assert!(load_labeled_csv(&plain, &LabelColumn::Name("nope".into()), false).is_err());

        let wide = write(&dir, "w.csv", "a,b,a\n1,3,5\n2,4,6\n");
        let d = load_labeled_csv(&wide, &LabelColumn::Index(0), true).unwrap();
        assert_eq!(d.labels, vec!["a", "b", "a"]);
        assert_eq!(d.data.row(2), &[5.0, 6.0]);
    }

    #[test]
    fn symmetric_matrix_loading() {
        let dir = tempfile::tempdir().unwrap();
        let a = SymMatrix::from_rows(&[vec![2.0, 0.1], vec![0.1, 1.0 / 3.0]]).unwrap();
        let path = dir.path().join("a.csv");
        write_matrix_csv(&path, &a).unwrap();
        assert_eq!(load_sym_matrix_csv(&path).unwrap(), a);
        let bad = write(&dir, "b.csv", "1,0.5\n0.4,1\n");
        assert!(matches!(load_sym_matrix_csv(&bad), Err(Error::NotSymmetric { .. })));
        let rect = write(&dir, "c.csv", "1,2,3\n4,5,6\n");
        assert!(load_sym_matrix_csv(&rect).is_err());
    }
}
