//! Matrix Market exchange format: coordinate and array files, all fields and
//! symmetries of version 1.0.
//!
//! Symmetric, skew-symmetric and Hermitian coordinate files are expanded to
//! general storage on read. Values are written with 17 significant digits, so
//! a write/read cycle reproduces every `f64` exactly.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use log::warn;

use crate::error::{Error, Result};
use crate::numcore::{DenseMatrix, Scalar, SparseMatrix, ZERO};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmFormat {
    Coordinate,
    Array,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmField {
    Real,
    Complex,
    Integer,
    Pattern,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmSymmetry {
    General,
    Symmetric,
    SkewSymmetric,
    Hermitian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatrixMarketHeader {
    pub format: MmFormat,
    pub field: MmField,
    pub symmetry: MmSymmetry,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::MatrixMarket(msg.into())
}

impl FromStr for MatrixMarketHeader {
    type Err = Error;

    fn from_str(line: &str) -> Result<Self> {
        let tokens: Vec<String> = line.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
        if tokens.len() != 5 || tokens[0] != "%%matrixmarket" {
            return Err(bad(format!("malformed header line '{line}'")));
        }
        if tokens[1] != "matrix" {
            return Err(bad(format!("unsupported object '{}'", tokens[1])));
        }
        let format = match tokens[2].as_str() {
            "coordinate" => MmFormat::Coordinate,
            "array" => MmFormat::Array,
            f => return Err(bad(format!("unknown format '{f}'"))),
        };
        let field = match tokens[3].as_str() {
            "real" | "double" => MmField::Real,
            "complex" => MmField::Complex,
            "integer" => MmField::Integer,
            "pattern" => MmField::Pattern,
            f => return Err(bad(format!("unsupported field '{f}'"))),
        };
        let symmetry = match tokens[4].as_str() {
            "general" => MmSymmetry::General,
            "symmetric" => MmSymmetry::Symmetric,
            "skew-symmetric" => MmSymmetry::SkewSymmetric,
            "hermitian" => MmSymmetry::Hermitian,
            s => return Err(bad(format!("unknown symmetry '{s}'"))),
        };
        let header = Self { format, field, symmetry };
        header.validate()?;
        Ok(header)
    }
}

impl MatrixMarketHeader {
    pub fn validate(&self) -> Result<()> {
        if self.format == MmFormat::Array && self.field == MmField::Pattern {
            return Err(bad("pattern field is not allowed with array format"));
        }
        if self.symmetry == MmSymmetry::Hermitian && self.field != MmField::Complex {
            return Err(bad("hermitian symmetry requires the complex field"));
        }
        if self.symmetry == MmSymmetry::SkewSymmetric && self.field == MmField::Pattern {
            return Err(bad("skew-symmetric pattern matrices are not defined"));
        }
        Ok(())
    }
}

impl fmt::Display for MatrixMarketHeader {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let format = match self.format {
            MmFormat::Coordinate => "coordinate",
            MmFormat::Array => "array",
        };
        let field = match self.field {
            MmField::Real => "real",
            MmField::Complex => "complex",
            MmField::Integer => "integer",
            MmField::Pattern => "pattern",
        };
        let symmetry = match self.symmetry {
            MmSymmetry::General => "general",
            MmSymmetry::Symmetric => "symmetric",
            MmSymmetry::SkewSymmetric => "skew-symmetric",
            MmSymmetry::Hermitian => "hermitian",
        };
        write!(f, "%%MatrixMarket matrix {format} {field} {symmetry}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MmMatrix {
    Sparse(SparseMatrix),
    Dense(DenseMatrix),
}

impl MmMatrix {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            MmMatrix::Sparse(s) => (s.n_rows(), s.n_cols()),
            MmMatrix::Dense(d) => (d.rows(), d.cols()),
        }
    }

    pub fn into_sparse(self) -> SparseMatrix {
        match self {
            MmMatrix::Sparse(s) => s,
            MmMatrix::Dense(d) => SparseMatrix::from_dense(&d),
        }
    }

    pub fn into_dense(self) -> DenseMatrix {
        match self {
            MmMatrix::Sparse(s) => s.to_dense(),
            MmMatrix::Dense(d) => d,
        }
    }
}

/// A parsed file with both nonzero-count conventions.
#[derive(Debug, Clone, PartialEq)]
pub struct MmRead {
    pub header: MatrixMarketHeader,
    pub matrix: MmMatrix,
    /// Entries listed in the file.
    pub stored_entries: usize,
    /// Nonzero slots after symmetric expansion and duplicate summing.
    pub expanded_nnz: usize,
    pub duplicates: usize,
}

fn parse_num<T: FromStr>(tok: Option<&str>, what: &str, line_no: usize) -> Result<T> {
    let tok = tok.ok_or_else(|| bad(format!("line {line_no}: missing {what}")))?;
    tok.parse()
        .map_err(|_| bad(format!("line {line_no}: cannot parse {what} '{tok}'")))
}

fn parse_value<'a>(
    field: MmField,
    toks: &mut impl Iterator<Item = &'a str>,
    line_no: usize,
) -> Result<Scalar> {
    Ok(match field {
        MmField::Pattern => Scalar::new(1.0, 0.0),
        MmField::Real | MmField::Integer => Scalar::new(parse_num(toks.next(), "value", line_no)?, 0.0),
        MmField::Complex => Scalar::new(
            parse_num(toks.next(), "real part", line_no)?,
            parse_num(toks.next(), "imaginary part", line_no)?,
        ),
    })
}

/// Entry mirrored across the diagonal according to the symmetry.
fn mirror(symmetry: MmSymmetry, v: Scalar) -> Option<Scalar> {
    match symmetry {
        MmSymmetry::General => None,
        MmSymmetry::Symmetric => Some(v),
        MmSymmetry::SkewSymmetric => Some(-v),
        MmSymmetry::Hermitian => Some(v.conj()),
    }
}

pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<MmRead> {
    let path = path.as_ref();
    let file = File::open(path)?;
    read_matrix_market_from(BufReader::new(file))
}

pub fn read_matrix_market_from<R: BufRead>(reader: R) -> Result<MmRead> {
    let mut lines = reader.lines().enumerate();
    let header: MatrixMarketHeader = match lines.next() {
        Some((_, line)) => line?.parse()?,
        None => return Err(bad("empty file")),
    };

    let mut data_lines = lines.filter_map(|(no, line)| match line {
        Ok(l) => {
            let t = l.trim();
            (!t.is_empty() && !t.starts_with('%')).then(|| Ok((no + 1, t.to_string())))
        }
        Err(e) => Some(Err(e)),
    });

    let (size_no, size_line) = data_lines.next().ok_or_else(|| bad("missing size line"))??;
    let mut toks = size_line.split_whitespace();
    let rows: usize = parse_num(toks.next(), "row count", size_no)?;
    let cols: usize = parse_num(toks.next(), "column count", size_no)?;

    match header.format {
        MmFormat::Coordinate => {
            let stored: usize = parse_num(toks.next(), "entry count", size_no)?;
            if header.symmetry != MmSymmetry::General && rows != cols {
                return Err(bad("symmetric storage requires a square matrix"));
            }
            let mut trip = Vec::with_capacity(if header.symmetry == MmSymmetry::General { stored } else { 2 * stored });
            for _ in 0..stored {
                let (no, line) = data_lines.next().ok_or_else(|| bad("fewer entries than declared"))??;
                let mut t = line.split_whitespace();
                let i: usize = parse_num(t.next(), "row index", no)?;
                let j: usize = parse_num(t.next(), "column index", no)?;
                if i == 0 || j == 0 || i > rows || j > cols {
                    return Err(bad(format!("line {no}: index ({i}, {j}) outside {rows}x{cols}")));
                }
                let v = parse_value(header.field, &mut t, no)?;
                let (i, j) = (i - 1, j - 1);
                if header.symmetry == MmSymmetry::SkewSymmetric && i == j {
                    return Err(bad(format!("line {no}: diagonal entry in a skew-symmetric file")));
                }
                trip.push((i, j, v));
                if i != j {
                    if let Some(m) = mirror(header.symmetry, v) {
                        trip.push((j, i, m));
                    }
                }
            }
            let mut seen = HashSet::with_capacity(trip.len());
            let duplicates = trip.iter().filter(|(i, j, _)| !seen.insert((*i, *j))).count();
            if duplicates > 0 {
                warn!("Matrix Market file has {duplicates} duplicate entries; values are summed");
            }
            let matrix = SparseMatrix::from_triplets(rows, cols, trip)?;
            Ok(MmRead {
                header,
                expanded_nnz: matrix.nnz(),
                matrix: MmMatrix::Sparse(matrix),
                stored_entries: stored,
                duplicates,
            })
        }
        MmFormat::Array => {
            if header.symmetry != MmSymmetry::General && rows != cols {
                return Err(bad("symmetric storage requires a square matrix"));
            }
            let mut dense = DenseMatrix::zeros(rows, cols);
            let mut stored = 0;
            for j in 0..cols {
                let start = match header.symmetry {
                    MmSymmetry::General => 0,
                    MmSymmetry::SkewSymmetric => j + 1,
                    _ => j,
                };
                for i in start..rows {
                    let (no, line) = data_lines.next().ok_or_else(|| bad("fewer array entries than the size implies"))??;
                    let v = parse_value(header.field, &mut line.split_whitespace(), no)?;
                    stored += 1;
                    dense[(i, j)] = v;
                    if i != j {
                        if let Some(m) = mirror(header.symmetry, v) {
                            dense[(j, i)] = m;
                        }
                    }
                }
            }
            let expanded_nnz = dense.as_slice().iter().filter(|v| **v != ZERO).count();
            Ok(MmRead {
                header,
                matrix: MmMatrix::Dense(dense),
                stored_entries: stored,
                expanded_nnz,
                duplicates: 0,
            })
        }
    }
}

fn write_value<W: Write>(out: &mut W, field: MmField, v: Scalar) -> std::io::Result<()> {
    match field {
        MmField::Complex => write!(out, "{:.16e} {:.16e}", v.re, v.im),
        _ => write!(out, "{:.16e}", v.re),
    }
}

fn field_for(values: &[Scalar]) -> MmField {
    if values.iter().all(|v| v.im == 0.0) {
        MmField::Real
    } else {
        MmField::Complex
    }
}

/// Coordinate general file; the field is real when every imaginary part is zero.
pub fn write_sparse<W: Write>(mut out: W, a: &SparseMatrix) -> Result<()> {
    let header = MatrixMarketHeader {
        format: MmFormat::Coordinate,
        field: field_for(a.values()),
        symmetry: MmSymmetry::General,
    };
    writeln!(out, "{header}")?;
    writeln!(out, "{} {} {}", a.n_rows(), a.n_cols(), a.nnz())?;
    for (i, j, v) in a.triplets() {
        write!(out, "{} {} ", i + 1, j + 1)?;
        write_value(&mut out, header.field, v)?;
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

/// Array general file, column-major.
pub fn write_dense<W: Write>(mut out: W, a: &DenseMatrix) -> Result<()> {
    let header = MatrixMarketHeader {
        format: MmFormat::Array,
        field: field_for(a.as_slice()),
        symmetry: MmSymmetry::General,
    };
    writeln!(out, "{header}")?;
    writeln!(out, "{} {}", a.rows(), a.cols())?;
    for v in a.as_slice() {
        write_value(&mut out, header.field, *v)?;
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_matrix_market(path: impl AsRef<Path>, m: &MmMatrix) -> Result<()> {
    let out = BufWriter::new(File::create(path)?);
    match m {
        MmMatrix::Sparse(s) => write_sparse(out, s),
        MmMatrix::Dense(d) => write_dense(out, d),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn read_str(s: &str) -> Result<MmRead> {
        read_matrix_market_from(s.as_bytes())
    }

    fn r(x: f64) -> Scalar {
        Scalar::new(x, 0.0)
    }

    #[test]
    fn general_diagonal() {
        let m = read_str("%%MatrixMarket matrix coordinate real general\n% comment\n2 2 2\n1 1 5\n2 2 7\n").unwrap();
        let d = m.matrix.into_dense();
        assert_eq!(d, DenseMatrix::from_diagonal(&[r(5.0), r(7.0)]));
    }

    #[test]
    fn symmetric_expansion() {
        let m = read_str("%%MatrixMarket matrix coordinate real symmetric\n2 2 3\n2 1 3\n1 1 1\n2 2 1\n").unwrap();
        assert_eq!(m.stored_entries, 3);
        assert_eq!(m.expanded_nnz, 4);
        let d = m.matrix.into_dense();
        assert_eq!(d, DenseMatrix::from_fn(2, 2, |i, j| r(if i == j { 1.0 } else { 3.0 })));
        assert_eq!(d, d.transpose());
    }

    #[test]
    fn skew_and_hermitian() {
        let s = read_str("%%MatrixMarket matrix coordinate integer skew-symmetric\n3 3 1\n3 1 4\n").unwrap();
        let d = s.matrix.into_dense();
        assert_eq!(d[(2, 0)], r(4.0));
        assert_eq!(d[(0, 2)], r(-4.0));
        let h = read_str("%%MatrixMarket matrix coordinate complex hermitian\n2 2 2\n2 1 1 2\n1 1 3 0\n").unwrap();
        let d = h.matrix.into_dense();
        assert_eq!(d[(1, 0)], Scalar::new(1.0, 2.0));
        assert_eq!(d[(0, 1)], Scalar::new(1.0, -2.0));
    }

    #[test]
    fn pattern_entries_are_ones() {
        let m = read_str("%%MatrixMarket matrix coordinate pattern general\n2 3 2\n1 3\n2 1\n").unwrap();
        let s = m.matrix.into_sparse();
        assert_eq!(s.get(0, 2), Some(r(1.0)));
        assert_eq!((s.n_rows(), s.n_cols()), (2, 3));
    }

    #[test]
    fn duplicates_are_summed() {
        let m = read_str("%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 1\n1 1 2.5\n2 2 1\n").unwrap();
        assert_eq!(m.duplicates, 1);
        assert_eq!(m.matrix.into_sparse().get(0, 0), Some(r(3.5)));
    }

    #[test]
    fn malformed_inputs() {
        for text in [
            "",
            "%%MatrixMarket matrix coordinate real\n1 1 0\n",
            "%%MatrixMarket vector coordinate real general\n1 1 0\n",
            "%%MatrixMarket matrix array pattern general\n1 1\n",
            "%%MatrixMarket matrix coordinate real hermitian\n1 1 0\n",
            "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1\n",
            "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n",
            "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 x\n",
            "%%MatrixMarket matrix coordinate real skew-symmetric\n2 2 1\n1 1 1\n",
        ] {
            assert!(matches!(read_str(text), Err(Error::MatrixMarket(_))), "{text:?}");
        }
    }

    #[test]
    fn symmetric_array() {
        let m = read_str("%%MatrixMarket matrix array real symmetric\n2 2\n1\n2\n3\n").unwrap();
        assert_eq!(m.stored_entries, 3);
        let d = m.matrix.into_dense();
        assert_eq!(d[(0, 1)], r(2.0));
        assert_eq!(d[(1, 0)], r(2.0));
        assert_eq!(d[(1, 1)], r(3.0));
    }

    #[test]
    fn dense_complex_column_uses_array_complex() {
        let d = DenseMatrix::from_col_major(2, 1, vec![Scalar::new(1.0, -0.5), r(2.0)]).unwrap();
        let mut buf = Vec::new();
        write_dense(&mut buf, &d).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("%%MatrixMarket matrix array complex general\n2 1\n"));
        assert_eq!(read_str(&text).unwrap().matrix, MmMatrix::Dense(d));
    }

    #[test]
    fn empty_row_round_trip() {
        let s = SparseMatrix::from_triplets(3, 3, vec![(0, 0, r(1.0)), (2, 1, r(-2.0))]).unwrap();
        let mut buf = Vec::new();
        write_sparse(&mut buf, &s).unwrap();
        let back = read_str(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back.matrix, MmMatrix::Sparse(s));
    }

    #[test]
    fn file_round_trip() {
        let dir = std::env::temp_dir().join(format!("mmio-test-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("a.mtx");
        let s = SparseMatrix::from_triplets(2, 2, vec![(0, 1, Scalar::new(0.1, 1.0 / 3.0))]).unwrap();
        write_matrix_market(&path, &MmMatrix::Sparse(s.clone())).unwrap();
        assert_eq!(read_matrix_market(&path).unwrap().matrix, MmMatrix::Sparse(s));
        std::fs::remove_dir_all(&dir).unwrap();
    }

    proptest! {
        #[test]
        fn write_read_is_identity(
            entries in proptest::collection::vec((0usize..6, 0usize..5, -1e6f64..1e6, -1e3f64..1e3, any::<bool>()), 0..20)
        ) {
            let trip: Vec<_> = entries
                .iter()
                .map(|&(i, j, re, im, cplx)| (i, j, Scalar::new(re, if cplx { im } else { 0.0 })))
                .collect();
            let s = SparseMatrix::from_triplets(6, 5, trip).unwrap();
            let mut buf = Vec::new();
            write_sparse(&mut buf, &s).unwrap();
            let back = read_matrix_market_from(buf.as_slice()).unwrap();
            prop_assert_eq!(back.matrix, MmMatrix::Sparse(s.clone()));
            let mut buf = Vec::new();
            write_dense(&mut buf, &s.to_dense()).unwrap();
            let back = read_matrix_market_from(buf.as_slice()).unwrap();
            prop_assert_eq!(back.matrix, MmMatrix::Dense(s.to_dense()));
        }
    }
}
