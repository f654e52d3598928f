//! Matrix Market ingestion for the system triple.
//!
//! Both the `coordinate` and `array` variants are accepted, with `real` or
//! `integer` fields and `general` or `symmetric` storage (symmetric input is
//! expanded on read). A keeps its on-disk storage kind: `array` files load
//! dense, `coordinate` files load sparse. B and C are always densified.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::system::{AMatrix, CooMatrix, StateSpaceSystem};

#[derive(Clone, Debug)]
pub enum ParsedMatrix {
    Dense(DMatrix<f64>),
    Sparse(CooMatrix),
}

impl ParsedMatrix {
    pub fn nrows(&self) -> usize {
        match self {
            ParsedMatrix::Dense(m) => m.nrows(),
            ParsedMatrix::Sparse(m) => m.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            ParsedMatrix::Dense(m) => m.ncols(),
            ParsedMatrix::Sparse(m) => m.ncols(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            ParsedMatrix::Dense(m) => m.clone(),
            ParsedMatrix::Sparse(m) => m.to_dense(),
        }
    }
}

struct Header {
    coordinate: bool,
    symmetric: bool,
}

fn parse_error(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

fn parse_header(path: &Path, first: &str) -> Result<Header> {
    let tokens: Vec<String> = first.split_whitespace().map(str::to_lowercase).collect();
    if tokens.first().map(String::as_str) != Some("%%matrixmarket") {
        return Err(parse_error(path, 1, "missing %%MatrixMarket header"));
    }
    if tokens.len() != 5 {
        return Err(parse_error(
            path,
            1,
            format!("header needs 5 fields, found {}", tokens.len()),
        ));
    }
    if tokens[1] != "matrix" {
        return Err(parse_error(
            path,
            1,
            format!("unsupported object '{}', expected 'matrix'", tokens[1]),
        ));
    }
    let coordinate = match tokens[2].as_str() {
        "coordinate" => true,
        "array" => false,
        other => {
            return Err(parse_error(
                path,
                1,
                format!("unsupported format '{other}', expected 'coordinate' or 'array'"),
            ))
        }
    };
    match tokens[3].as_str() {
        "real" | "integer" => {}
        other => {
            return Err(Error::UnsupportedField {
                path: path.to_path_buf(),
                field: other.to_string(),
            })
        }
    }
    let symmetric = match tokens[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => {
            return Err(parse_error(
                path,
                1,
                format!("unsupported symmetry '{other}', expected 'general' or 'symmetric'"),
            ))
        }
    };
    Ok(Header {
        coordinate,
        symmetric,
    })
}

fn parse_usize(path: &Path, line: usize, tok: &str, what: &str) -> Result<usize> {
    tok.parse()
        .map_err(|_| parse_error(path, line, format!("cannot parse {what} '{tok}'")))
}

fn parse_f64(path: &Path, line: usize, tok: &str) -> Result<f64> {
    tok.parse()
        .map_err(|_| parse_error(path, line, format!("cannot parse value '{tok}'")))
}

/// Reads one Matrix Market file. Errors carry the file path and 1-based line
/// number of the offending content.
pub fn read_matrix(path: &Path) -> Result<ParsedMatrix> {
    let text = fs::read_to_string(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));

    let (_, first) = lines
        .next()
        .ok_or_else(|| parse_error(path, 1, "empty file"))?;
    let header = parse_header(path, first)?;

    // comments and blank lines may precede the size line
    let (size_no, size_line) = lines
        .by_ref()
        .find(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('%'))
        .ok_or_else(|| parse_error(path, 1, "missing size line"))?;
    let size_tokens: Vec<&str> = size_line.split_whitespace().collect();

    if header.coordinate {
        if size_tokens.len() != 3 {
            return Err(parse_error(
                path,
                size_no,
                "coordinate size line needs 'rows cols nnz'",
            ));
        }
        let nrows = parse_usize(path, size_no, size_tokens[0], "row count")?;
        let ncols = parse_usize(path, size_no, size_tokens[1], "column count")?;
        let nnz = parse_usize(path, size_no, size_tokens[2], "entry count")?;
        if header.symmetric && nrows != ncols {
            return Err(parse_error(path, size_no, "symmetric matrix must be square"));
        }
        let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(nnz);
        let mut seen = 0usize;
        let mut last_line = size_no;
        for (no, l) in lines.by_ref() {
            let t = l.trim();
            if t.is_empty() || t.starts_with('%') {
                continue;
            }
            if seen == nnz {
                return Err(parse_error(path, no, "data after the declared entry count"));
            }
            last_line = no;
            let toks: Vec<&str> = t.split_whitespace().collect();
            if toks.len() != 3 {
                return Err(parse_error(path, no, "coordinate entry needs 'i j value'"));
            }
            let i = parse_usize(path, no, toks[0], "row index")?;
            let j = parse_usize(path, no, toks[1], "column index")?;
            let v = parse_f64(path, no, toks[2])?;
            if i == 0 || j == 0 || i > nrows || j > ncols {
                return Err(parse_error(
                    path,
                    no,
                    format!("index ({i}, {j}) outside the declared {nrows}×{ncols} shape"),
                ));
            }
            if header.symmetric && j > i {
                return Err(parse_error(
                    path,
                    no,
                    "symmetric storage admits only the lower triangle",
                ));
            }
            entries.push((i - 1, j - 1, v));
            if header.symmetric && i != j {
                entries.push((j - 1, i - 1, v));
            }
            seen += 1;
        }
        if seen < nnz {
            return Err(parse_error(
                path,
                last_line,
                format!("expected {nnz} entries, found {seen}"),
            ));
        }
        Ok(ParsedMatrix::Sparse(CooMatrix::new(nrows, ncols, entries)?))
    } else {
        if size_tokens.len() != 2 {
            return Err(parse_error(path, size_no, "array size line needs 'rows cols'"));
        }
        let nrows = parse_usize(path, size_no, size_tokens[0], "row count")?;
        let ncols = parse_usize(path, size_no, size_tokens[1], "column count")?;
        if header.symmetric && nrows != ncols {
            return Err(parse_error(path, size_no, "symmetric matrix must be square"));
        }
        let expected = if header.symmetric {
            nrows * (nrows + 1) / 2
        } else {
            nrows * ncols
        };
        let mut values: Vec<f64> = Vec::with_capacity(expected);
        let mut last_line = size_no;
        for (no, l) in lines.by_ref() {
            let t = l.trim();
            if t.is_empty() || t.starts_with('%') {
                continue;
            }
            last_line = no;
            for tok in t.split_whitespace() {
                if values.len() == expected {
                    return Err(parse_error(path, no, "data after the declared value count"));
                }
                values.push(parse_f64(path, no, tok)?);
            }
        }
        if values.len() < expected {
            return Err(parse_error(
                path,
                last_line,
                format!("expected {expected} values, found {}", values.len()),
            ));
        }
        // array data is column-major; symmetric files store the lower
        // triangle of each column
        let mut m = DMatrix::<f64>::zeros(nrows, ncols);
        if header.symmetric {
            let mut it = values.into_iter();
            for j in 0..ncols {
                for i in j..nrows {
                    let v = it.next().expect("length checked above");
                    m[(i, j)] = v;
                    m[(j, i)] = v;
                }
            }
        } else {
            let mut it = values.into_iter();
            for j in 0..ncols {
                for i in 0..nrows {
                    m[(i, j)] = it.next().expect("length checked above");
                }
            }
        }
        Ok(ParsedMatrix::Dense(m))
    }
}

/// Loads the triple (A, B, C) from three Matrix Market files. A keeps its
/// storage kind from the file; B and C are densified.
pub fn load_system(path_a: &Path, path_b: &Path, path_c: &Path) -> Result<StateSpaceSystem> {
    let a = read_matrix(path_a)?;
    let b = read_matrix(path_b)?;
    let c = read_matrix(path_c)?;
    let a = match a {
        ParsedMatrix::Dense(m) => AMatrix::Dense(m),
        ParsedMatrix::Sparse(m) => AMatrix::Sparse(m),
    };
    StateSpaceSystem::new(a, b.to_dense(), c.to_dense())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_file(dir: &tempfile::TempDir, name: &str, content: &str) -> std::path::PathBuf {
        let path = dir.path().join(name);
        let mut f = fs::File::create(&path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        path
    }

    #[test]
    fn scalar_triple_loads() {
        let dir = tempfile::tempdir().unwrap();
        let a = write_file(&dir, "a.mtx", "%%MatrixMarket matrix array real general\n1 1\n-1\n");
        let b = write_file(&dir, "b.mtx", "%%MatrixMarket matrix array real general\n1 1\n1\n");
        let c = write_file(&dir, "c.mtx", "%%MatrixMarket matrix array real general\n1 1\n1\n");
        let sys = load_system(&a, &b, &c).unwrap();
        assert_eq!((sys.n(), sys.m(), sys.p()), (1, 1, 1));
        assert!(!sys.is_sparse());
    }

    #[test]
    fn coordinate_stays_sparse_and_expands_symmetric() {
        let dir = tempfile::tempdir().unwrap();
        let a = write_file(
            &dir,
            "a.mtx",
            "%%MatrixMarket matrix coordinate real symmetric\n% tridiagonal\n3 3 5\n1 1 -2\n2 2 -2\n3 3 -2\n2 1 1\n3 2 1\n",
        );
        let m = read_matrix(&a).unwrap();
        let d = m.to_dense();
        assert!(matches!(m, ParsedMatrix::Sparse(_)));
        assert_eq!(d[(0, 1)], 1.0);
        assert_eq!(d[(1, 0)], 1.0);
        assert_eq!(d[(2, 2)], -2.0);
    }

    #[test]
    fn shape_bookkeeping() {
        let dir = tempfile::tempdir().unwrap();
        let a = write_file(
            &dir,
            "a.mtx",
            "%%MatrixMarket matrix array real general\n3 3\n-1\n0\n0\n0\n-1\n0\n0\n0\n-1\n",
        );
        let b = write_file(
            &dir,
            "b.mtx",
            "%%MatrixMarket matrix array real general\n3 2\n1\n0\n0\n0\n1\n0\n",
        );
        let c = write_file(
            &dir,
            "c.mtx",
            "%%MatrixMarket matrix array real general\n2 3\n1\n0\n0\n1\n0\n0\n",
        );
        let sys = load_system(&a, &b, &c).unwrap();
        assert_eq!((sys.n(), sys.m(), sys.p()), (3, 2, 2));
    }

    #[test]
    fn dimension_error_names_shapes() {
        let dir = tempfile::tempdir().unwrap();
        let a = write_file(
            &dir,
            "a.mtx",
            "%%MatrixMarket matrix array real general\n3 3\n-1\n0\n0\n0\n-1\n0\n0\n0\n-1\n",
        );
        let b = write_file(
            &dir,
            "b.mtx",
            "%%MatrixMarket matrix array real general\n4 1\n1\n0\n0\n0\n",
        );
        let c = write_file(
            &dir,
            "c.mtx",
            "%%MatrixMarket matrix array real general\n1 3\n1\n0\n0\n",
        );
        let err = load_system(&a, &b, &c).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("A: 3×3") && msg.contains("B: 4×1"), "{msg}");
    }

    #[test]
    fn complex_field_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let a = write_file(
            &dir,
            "a.mtx",
            "%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1.0 2.0\n",
        );
        assert!(matches!(
            read_matrix(&a),
            Err(Error::UnsupportedField { .. })
        ));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let a = write_file(
            &dir,
            "a.mtx",
            "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 -1\n2 3 5\n",
        );
        let msg = read_matrix(&a).unwrap_err().to_string();
        assert!(msg.contains(":4:"), "{msg}");
    }

    #[test]
    fn truncated_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let a = write_file(
            &dir,
            "a.mtx",
            "%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 -1\n",
        );
        let msg = read_matrix(&a).unwrap_err().to_string();
        assert!(msg.contains("expected 3 entries"), "{msg}");
    }

    #[test]
    fn integer_field_parses_as_real() {
        let dir = tempfile::tempdir().unwrap();
        let a = write_file(
            &dir,
            "a.mtx",
            "%%MatrixMarket matrix array integer general\n1 1\n-3\n",
        );
        assert_eq!(read_matrix(&a).unwrap().to_dense()[(0, 0)], -3.0);
    }
}
