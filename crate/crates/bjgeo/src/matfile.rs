//! Flat matrix files: a header line "m n field" followed by m rows of n
//! whitespace-separated scalars. Complex scalars are written a+bi with no
//! interior spaces. Real emission uses 17 significant digits, so
//! parse(emit(T)) reproduces T bit-exactly.

use std::path::Path;

use num_complex::Complex64;
use thiserror::Error;

use crate::field::Field;
use crate::operator::{OperatorError, OperatorMatrix};
use crate::tol;

#[derive(Debug, Error)]
pub enum MatFileError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}, column {col}: {msg}")]
    Parse {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("declared {declared_m}x{declared_n}, envelope is {max}x{max}", max = tol::MAX_DIM)]
    Dimension {
        declared_m: usize,
        declared_n: usize,
    },
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

fn err(line: usize, col: usize, msg: impl Into<String>) -> MatFileError {
    MatFileError::Parse {
        line,
        col,
        msg: msg.into(),
    }
}

/// Splits "a+bi" / "a-bi" at the sign that separates the two parts: the
/// last '+' or '-' that is not the leading sign and not an exponent sign.
fn parse_scalar(token: &str, line: usize, col: usize) -> Result<Complex64, MatFileError> {
    let bad = || err(line, col, format!("cannot parse scalar '{token}'"));
    if let Some(body) = token.strip_suffix(['i', 'I']) {
        let bytes = body.as_bytes();
        let mut split = None;
        for k in (1..bytes.len()).rev() {
            let c = bytes[k];
            if (c == b'+' || c == b'-') && !matches!(bytes[k - 1], b'e' | b'E') {
                split = Some(k);
                break;
            }
        }
        let (re_str, im_str) = match split {
            Some(k) => (&body[..k], &body[k..]),
            // A bare imaginary part like "2i" or "-1.5i".
            None => ("0", body),
        };
        let re: f64 = re_str.parse().map_err(|_| bad())?;
        let im: f64 = match im_str {
            "+" => 1.0,
            "-" => -1.0,
            s => s.parse().map_err(|_| bad())?,
        };
        if !re.is_finite() || !im.is_finite() {
            return Err(err(line, col, format!("non-finite scalar '{token}'")));
        }
        return Ok(Complex64::new(re, im));
    }
    let re: f64 = token.parse().map_err(|_| bad())?;
    if !re.is_finite() {
        return Err(err(line, col, format!("non-finite scalar '{token}'")));
    }
    Ok(Complex64::new(re, 0.0))
}

/// Tokens with their 1-based starting column.
fn tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (idx, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s + 1, &line[s..idx]));
            }
        } else if start.is_none() {
            start = Some(idx);
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &line[s..]));
    }
    out
}

pub fn parse_matrix_str(text: &str) -> Result<OperatorMatrix, MatFileError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());

    let (header_no, header) = lines.next().ok_or_else(|| err(1, 1, "empty file"))?;
    let head = tokens(header);
    if head.len() != 3 {
        return Err(err(header_no, 1, "header must be 'm n field'"));
    }
    let m: usize = head[0]
        .1
        .parse()
        .map_err(|_| err(header_no, head[0].0, "row count is not a number"))?;
    let n: usize = head[1]
        .1
        .parse()
        .map_err(|_| err(header_no, head[1].0, "column count is not a number"))?;
    let field = match head[2].1 {
        "real" => Field::Real,
        "complex" => Field::Complex,
        other => {
            return Err(err(
                header_no,
                head[2].0,
                format!("field must be 'real' or 'complex', got '{other}'"),
            ))
        }
    };
    if m == 0 || n == 0 || m > tol::MAX_DIM || n > tol::MAX_DIM {
        return Err(MatFileError::Dimension {
            declared_m: m,
            declared_n: n,
        });
    }

    let mut entries = Vec::with_capacity(m * n);
    for row in 0..m {
        let (line_no, line) = lines
            .next()
            .ok_or_else(|| err(header_no + row + 1, 1, format!("missing row {}", row + 1)))?;
        let toks = tokens(line);
        if toks.len() != n {
            let col = toks.get(n).map(|&(c, _)| c).unwrap_or(1);
            return Err(err(
                line_no,
                col,
                format!(
                    "row {} has {} scalars, header says {}",
                    row + 1,
                    toks.len(),
                    n
                ),
            ));
        }
        for (col, tok) in toks {
            let z = parse_scalar(tok, line_no, col)?;
            if field == Field::Real && z.im != 0.0 {
                return Err(err(line_no, col, "complex scalar in a real matrix"));
            }
            entries.push(z);
        }
    }
    if let Some((line_no, _)) = lines.next() {
        return Err(err(line_no, 1, "trailing data after the declared rows"));
    }
    Ok(OperatorMatrix::new(m, n, entries, field)?)
}

pub fn parse_matrix(path: &Path) -> Result<OperatorMatrix, MatFileError> {
    let text = std::fs::read_to_string(path).map_err(|source| MatFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_matrix_str(&text)
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) fn fmt_scalar(z: Complex64, field: Field) -> String {
    match field {
        Field::Real => fmt_f64(z.re),
        Field::Complex => {
            if z.im < 0.0 || z.im.is_sign_negative() {
                format!("{}-{}i", fmt_f64(z.re), fmt_f64(-z.im))
            } else {
                format!("{}+{}i", fmt_f64(z.re), fmt_f64(z.im))
            }
        }
    }
}

pub fn emit_matrix(t: &OperatorMatrix) -> String {
    let field_name = match t.field() {
        Field::Real => "real",
        Field::Complex => "complex",
    };
    let mut out = format!("{} {} {}\n", t.m(), t.n(), field_name);
    for i in 0..t.m() {
        let row: Vec<String> = (0..t.n())
            .map(|j| fmt_scalar(t.entry(i, j), t.field()))
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_real_row() {
        let t = parse_matrix_str("1 4 real\n0.5 0.5 0 0\n").unwrap();
        assert_eq!((t.m(), t.n()), (1, 4));
        assert_eq!(t.entry(0, 1), Complex64::new(0.5, 0.0));
    }

    #[test]
    fn parses_complex_matrix() {
        let t = parse_matrix_str("2 2 complex\n1+0i 0+1i\n0+0i 1+0i\n").unwrap();
        assert_eq!(t.field(), Field::Complex);
        assert_eq!(t.entry(0, 1), Complex64::new(0.0, 1.0));
        assert_eq!(t.entry(1, 1), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn column_mismatch_reports_position() {
        let e = parse_matrix_str("2 2 real\n1 0 3\n0 1\n").unwrap_err();
        match e {
            MatFileError::Parse { line, col, .. } => {
                assert_eq!(line, 2);
                assert_eq!(col, 5);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_non_finite_and_big() {
        assert!(matches!(
            parse_matrix_str("1 1 real\ninf\n"),
            Err(MatFileError::Parse { .. })
        ));
        assert!(matches!(
            parse_matrix_str("17 1 real\n"),
            Err(MatFileError::Dimension { .. })
        ));
    }

    #[test]
    fn rejects_complex_entry_in_real_file() {
        assert!(matches!(
            parse_matrix_str("1 1 real\n1+2i\n"),
            Err(MatFileError::Parse {
                line: 2,
                col: 1,
                ..
            })
        ));
    }

    #[test]
    fn negative_imaginary_and_exponent_signs() {
        let t = parse_matrix_str("1 2 complex\n1.5e-3-2e+1i -3i\n").unwrap();
        assert_eq!(t.entry(0, 0), Complex64::new(1.5e-3, -20.0));
        assert_eq!(t.entry(0, 1), Complex64::new(0.0, -3.0));
    }

    #[test]
    fn round_trip_is_exact() {
        let vals = [0.1, -1.0 / 3.0, 2f64.sqrt(), 1e-300, -0.0, 5.0e200];
        let rows: Vec<Vec<f64>> = vec![vals[..3].to_vec(), vals[3..].to_vec()];
        let t = OperatorMatrix::from_rows_real(&rows).unwrap();
        let back = parse_matrix_str(&emit_matrix(&t)).unwrap();
        for i in 0..2 {
            for j in 0..3 {
                assert_eq!(t.entry(i, j).re.to_bits(), back.entry(i, j).re.to_bits());
            }
        }

        let c = OperatorMatrix::from_rows_complex(&[vec![
            Complex64::new(1.0 / 3.0, -2f64.sqrt()),
            Complex64::new(-0.25, 0.125),
        ]])
        .unwrap();
        let back = parse_matrix_str(&emit_matrix(&c)).unwrap();
        for j in 0..2 {
            assert_eq!(c.entry(0, j), back.entry(0, j));
        }
    }
}
