//! The `QPROB1` text format.
//!
//! ```text
//! QPROB1 <n>
//! <row 1 of A: n reals>
//! ...
//! <row n of A>
//! <d: n reals>
//! <b: n reals>
//! ```
//!
//! Tokens are separated by ASCII whitespace. Trailing blank lines are ignored;
//! anything else after the `b` line is an error.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{QpError, Result};
use crate::problem::{DenseProblem, QuadraticProblem};

const MAGIC: &str = "QPROB1";

pub fn parse_qprob(text: &str, origin: &str) -> Result<DenseProblem> {
    let err = |line: usize, msg: String| QpError::Parse {
        path: origin.to_string(),
        line,
        msg,
    };

    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let mut head = header.split_ascii_whitespace();
    if head.next() != Some(MAGIC) {
        return Err(err(1, format!("expected header `{MAGIC} <n>`")));
    }
    let n: usize = head
        .next()
        .and_then(|t| t.parse().ok())
        .filter(|&n| n > 0)
        .ok_or_else(|| err(1, "dimension must be a positive integer".into()))?;
    if head.next().is_some() {
        return Err(err(1, "unexpected token after dimension".into()));
    }

    let mut read_row = |what: &str| -> Result<Vec<f64>> {
        let (no, line) = lines
            .next()
            .ok_or_else(|| err(text.lines().count() + 1, format!("missing {what} line")))?;
        let row = line
            .split_ascii_whitespace()
            .map(|t| match t.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(x),
                Ok(_) => Err(err(no, format!("non-finite value `{t}` in {what}"))),
                Err(_) => Err(err(no, format!("invalid number `{t}` in {what}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        if row.len() != n {
            return Err(err(no, format!("{what} has {} values, expected {n}", row.len())));
        }
        Ok(row)
    };

    let mut a = Vec::with_capacity(n * n);
    for r in 0..n {
        a.extend(read_row(&format!("row {} of A", r + 1))?);
    }
    let d = read_row("d")?;
    let b = read_row("b")?;

    if let Some((no, _)) = lines.find(|(_, l)| !l.trim().is_empty()) {
        return Err(err(no, "unexpected content after b".into()));
    }
    DenseProblem::new(n, a, d, b)
}

pub fn read_qprob(path: &Path) -> Result<DenseProblem> {
    let text = std::fs::read_to_string(path).map_err(|source| QpError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_qprob(&text, &path.display().to_string())
}

/// Serializes with round-trip precision.
pub fn write_qprob(problem: &DenseProblem) -> String {
    let n = problem.dim();
    let mut out = format!("{MAGIC} {n}\n");
    let mut push_row = |values: &mut dyn Iterator<Item = f64>| {
        let row: Vec<String> = values.map(|x| format!("{x:?}")).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    };
    for i in 0..n {
        push_row(&mut (0..n).map(|j| problem.a(i, j)));
    }
    push_row(&mut problem.d_vec().iter().copied());
    push_row(&mut problem.b_vec().iter().copied());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_small_file() {
        let p = parse_qprob("QPROB1 2\n1 2\n3 4\n0.5 0.5\n-1 -1\n\n", "t").unwrap();
        assert_eq!(p.a(1, 0), 3.0);
        assert_eq!(p.d_vec(), &[0.5, 0.5]);
        assert_eq!(p.b_vec(), &[-1.0, -1.0]);
    }

    fn line_of(e: QpError) -> usize {
        match e {
            QpError::Parse { line, .. } => line,
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn reports_offending_line() {
        assert_eq!(line_of(parse_qprob("QPROB1 2\n1 2\n3\n0 0\n0 0\n", "t").unwrap_err()), 3);
        assert_eq!(line_of(parse_qprob("QPROB1 2\n1 2\n3 4\n0 0\n", "t").unwrap_err()), 5);
        assert_eq!(line_of(parse_qprob("QPROB1 1\nnan\n0\n0\n", "t").unwrap_err()), 2);
        assert_eq!(line_of(parse_qprob("QPROB1 1\n1\ninf\n0\n", "t").unwrap_err()), 3);
        assert_eq!(line_of(parse_qprob("QPROB1 1\n1\n0\n0\n7\n", "t").unwrap_err()), 5);
        assert_eq!(line_of(parse_qprob("QPROB2 1\n1\n0\n0\n", "t").unwrap_err()), 1);
        assert_eq!(line_of(parse_qprob("QPROB1 0\n", "t").unwrap_err()), 1);
    }

    #[test]
    fn writer_output_parses_back() {
        let p = DenseProblem::new(2, vec![0.1, -2.5, 1e-300, 3.0], vec![1.0 / 3.0, 0.0], vec![-7.0, 2.0])
            .unwrap();
        assert_eq!(parse_qprob(&write_qprob(&p), "t").unwrap(), p);
    }
}
