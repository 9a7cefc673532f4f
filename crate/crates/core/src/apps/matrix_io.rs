//! Matrix text format: a `rows cols` line, then `rows * cols` row-major
//! whitespace-separated decimals.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub fn parse_matrix(text: &str) -> Result<DMatrix<f64>> {
    let mut tokens = text.split_whitespace();
    let mut dim = |what: &str| -> Result<usize> {
        tokens
            .next()
            .ok_or_else(|| Error::Parse(format!("missing {what}")))?
            .parse()
            .map_err(|_| Error::Parse(format!("bad {what}")))
    };
    let rows = dim("row count")?;
    let cols = dim("column count")?;
    let values: Vec<f64> = tokens
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number '{t}'")))
        })
        .collect::<Result<_>>()?;
    if values.len() != rows * cols {
        return Err(Error::Parse(format!(
            "{rows}x{cols} matrix needs {} values, found {}",
            rows * cols,
            values.len()
        )));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Parse(format!("non-finite value {v}")));
    }
    Ok(DMatrix::from_row_slice(rows, cols, &values))
}

/// Values are written with shortest round-trip formatting.
pub fn format_matrix(m: &DMatrix<f64>) -> String {
    let mut s = format!("{} {}\n", m.nrows(), m.ncols());
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        let _ = writeln!(s, "{}", line.join(" "));
    }
    s
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_matrix(&text)
}

pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    std::fs::write(path, format_matrix(m))
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn round_trip() {
        let m = dmatrix![1.0, -2.5e-7, 3.0; 0.1, 0.2, 1e300];
        assert_eq!(parse_matrix(&format_matrix(&m)).unwrap(), m);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse_matrix("2 2\n1 2 3").is_err());
        assert!(parse_matrix("1 1\nx").is_err());
        assert!(parse_matrix("").is_err());
        assert!(parse_matrix("1 1 NaN").is_err());
    }
}
