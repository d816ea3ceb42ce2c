//! Dense text matrix format.
//!
//! The first non-comment line is `rows cols`; each following line holds one
//! whitespace-separated row. Lines whose first non-blank character is `#`
//! and blank lines are skipped. Entries are written with the shortest
//! decimal that parses back to the same `f64`, so files round-trip bitwise.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matlin::Matrix;

/// Non-comment lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let t = l.trim_start();
        (!t.is_empty() && !t.starts_with('#')).then_some((i + 1, l))
    })
}

/// Tokens of `line` with their 1-based columns.
fn tokens(line: &str) -> impl Iterator<Item = (usize, &str)> {
    let base = line.as_ptr() as usize;
    line.split_whitespace()
        .map(move |t| (line[..t.as_ptr() as usize - base].chars().count() + 1, t))
}

fn parse_dim(line: usize, col: usize, tok: &str) -> Result<usize> {
    tok.parse().map_err(|_| Error::Parse {
        line,
        col,
        msg: format!("expected a nonnegative integer dimension, found `{tok}`"),
    })
}

pub fn parse_matrix_text(text: &str) -> Result<Matrix> {
    let mut lines = content_lines(text);
    let (hline, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        col: 1,
        msg: "missing `rows cols` header".into(),
    })?;
    let htoks: Vec<_> = tokens(header).collect();
    if htoks.len() != 2 {
        let col = htoks.get(2).map_or(header.len() + 1, |t| t.0);
        return Err(Error::Parse {
            line: hline,
            col,
            msg: format!("header must be `rows cols`, found {} fields", htoks.len()),
        });
    }
    let rows = parse_dim(hline, htoks[0].0, htoks[0].1)?;
    let cols = parse_dim(hline, htoks[1].0, htoks[1].1)?;

    let mut data = Vec::with_capacity(rows.saturating_mul(cols).min(1 << 24));
    let mut seen = 0;
    let mut last_line = hline;
    for (ln, line) in lines {
        if seen == rows {
            return Err(Error::DimensionMismatch {
                line: ln,
                expected: rows,
                found: seen + 1,
            });
        }
        let mut found = 0;
        for (col, tok) in tokens(line) {
            let v: f64 = tok.parse().map_err(|_| Error::Parse {
                line: ln,
                col,
                msg: format!("invalid number `{tok}`"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line: ln,
                    col,
                    msg: format!("non-finite entry `{tok}`"),
                });
            }
            data.push(v);
            found += 1;
        }
        if found != cols {
            return Err(Error::DimensionMismatch {
                line: ln,
                expected: cols,
                found,
            });
        }
        seen += 1;
        last_line = ln;
    }
    if seen != rows {
        return Err(Error::DimensionMismatch {
            line: last_line + 1,
            expected: rows,
            found: seen,
        });
    }
    Matrix::new(rows, cols, data)
}

pub fn read_matrix_file(path: impl AsRef<Path>) -> Result<Matrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_matrix_text(&text)
}

pub fn format_matrix(m: &Matrix) -> String {
    let mut s = format!("{} {}\n", m.rows(), m.cols());
    for i in 0..m.rows() {
        for (j, v) in m.row(i).iter().enumerate() {
            if j > 0 {
                s.push(' ');
            }
            write!(s, "{v}").expect("writing to a String");
        }
        s.push('\n');
    }
    s
}

pub fn write_matrix_file(m: &Matrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_matrix(m)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
