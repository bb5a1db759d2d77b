//! Matrix Market I/O (coordinate and array formats, real field).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{DenseOperator, Operator, SparseOperator};
use crate::{Error, Mat, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    SkewSymmetric,
}

/// Contents of a Matrix Market file.
#[derive(Debug, Clone)]
pub enum MatrixMarket {
    /// `rows × cols` with zero-based `(row, col, value)` triplets.
    Coordinate {
        rows: usize,
        cols: usize,
        entries: Vec<(usize, usize, f64)>,
    },
    Array(Mat),
}

impl MatrixMarket {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            MatrixMarket::Coordinate { rows, cols, .. } => (*rows, *cols),
            MatrixMarket::Array(m) => m.shape(),
        }
    }

    pub fn to_dense(&self) -> Mat {
        match self {
            MatrixMarket::Coordinate { rows, cols, entries } => {
                let mut m = Mat::zeros(*rows, *cols);
                for &(i, j, v) in entries {
                    m[(i, j)] += v;
                }
                m
            }
            MatrixMarket::Array(m) => m.clone(),
        }
    }

    /// Square operator: sparse for coordinate files, dense for arrays.
    pub fn to_operator(&self) -> Result<Operator> {
        let (r, c) = self.shape();
        if r != c {
            return Err(Error::Dimension(format!("operator must be square, file holds {r}×{c}")));
        }
        match self {
            MatrixMarket::Coordinate { rows, entries, .. } => {
                Ok(SparseOperator::from_triplets(*rows, entries)?.shared())
            }
            MatrixMarket::Array(m) => DenseOperator::shared(m.clone()),
        }
    }
}

fn parse_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Parse(format!("line {line}: {msg}"))
}

pub fn parse_matrix_market(text: &str) -> Result<MatrixMarket> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::Parse("empty file".into()))?;
    let tokens: Vec<String> = header.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
    if tokens.len() < 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(parse_err(1, "missing %%MatrixMarket matrix header"));
    }
    let coordinate = match tokens[2].as_str() {
        "coordinate" => true,
        "array" => false,
        other => return Err(parse_err(1, format!("unknown format '{other}'"))),
    };
    let pattern = match tokens[3].as_str() {
        "real" | "double" | "integer" => false,
        "pattern" if coordinate => true,
        other => return Err(parse_err(1, format!("unsupported field '{other}'"))),
    };
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::SkewSymmetric,
        other => return Err(parse_err(1, format!("unsupported symmetry '{other}'"))),
    };

    let mut data = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (size_no, size_line) = data.next().ok_or_else(|| Error::Parse("missing size line".into()))?;
    let sizes: Vec<usize> = size_line
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| parse_err(size_no + 1, format!("bad size '{t}'"))))
        .collect::<Result<_>>()?;

    let parse_f = |no: usize, t: &str| -> Result<f64> {
        t.parse::<f64>().map_err(|_| parse_err(no + 1, format!("bad value '{t}'")))
    };

    if coordinate {
        if sizes.len() != 3 {
            return Err(parse_err(size_no + 1, "coordinate size line needs rows cols nnz"));
        }
        let (rows, cols, nnz) = (sizes[0], sizes[1], sizes[2]);
        let mut entries = Vec::with_capacity(nnz);
        let mut read = 0;
        for (no, line) in data.by_ref().take(nnz) {
            read += 1;
            let t: Vec<&str> = line.split_whitespace().collect();
            let need = if pattern { 2 } else { 3 };
            if t.len() < need {
                return Err(parse_err(no + 1, "too few fields"));
            }
            let i: usize = t[0].parse().map_err(|_| parse_err(no + 1, "bad row index"))?;
            let j: usize = t[1].parse().map_err(|_| parse_err(no + 1, "bad column index"))?;
            if i == 0 || j == 0 || i > rows || j > cols {
                return Err(parse_err(no + 1, format!("index ({i}, {j}) out of range")));
            }
            let v = if pattern { 1.0 } else { parse_f(no, t[2])? };
            entries.push((i - 1, j - 1, v));
            if i != j {
                match symmetry {
                    Symmetry::General => {}
                    Symmetry::Symmetric => entries.push((j - 1, i - 1, v)),
                    Symmetry::SkewSymmetric => entries.push((j - 1, i - 1, -v)),
                }
            }
        }
        if read < nnz {
            return Err(Error::Parse(format!("expected {nnz} entries, found {read}")));
        }
        Ok(MatrixMarket::Coordinate { rows, cols, entries })
    } else {
        if sizes.len() != 2 {
            return Err(parse_err(size_no + 1, "array size line needs rows cols"));
        }
        let (rows, cols) = (sizes[0], sizes[1]);
        let mut m = Mat::zeros(rows, cols);
        // Column-major; symmetric variants store the lower triangle only.
        let mut positions = Vec::new();
        for j in 0..cols {
            let start = if symmetry == Symmetry::General {
                0
            } else if symmetry == Symmetry::SkewSymmetric {
                j + 1
            } else {
                j
            };
            for i in start..rows {
                positions.push((i, j));
            }
        }
        let mut values = data.flat_map(|(no, l)| l.split_whitespace().map(move |t| (no, t)));
        for &(i, j) in &positions {
            let (no, t) = values
                .next()
                .ok_or_else(|| Error::Parse(format!("expected {} values", positions.len())))?;
            let v = parse_f(no, t)?;
            m[(i, j)] = v;
            if i != j {
                match symmetry {
                    Symmetry::General => {}
                    Symmetry::Symmetric => m[(j, i)] = v,
                    Symmetry::SkewSymmetric => m[(j, i)] = -v,
                }
            }
        }
        Ok(MatrixMarket::Array(m))
    }
}

pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<MatrixMarket> {
    parse_matrix_market(&fs::read_to_string(path)?)
}

/// Dense block in `array real general` format.
pub fn format_array(m: &Mat) -> String {
    let mut s = String::with_capacity(24 * m.len() + 64);
    s.push_str("%%MatrixMarket matrix array real general\n");
    let _ = writeln!(s, "{} {}", m.nrows(), m.ncols());
    for v in m.iter() {
        let _ = writeln!(s, "{v:.17e}");
    }
    s
}

pub fn write_matrix_market_array(path: impl AsRef<Path>, m: &Mat) -> Result<()> {
    fs::write(path, format_array(m))?;
    Ok(())
}
