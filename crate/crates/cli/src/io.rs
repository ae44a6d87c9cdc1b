//! Plain CSV matrices: one row per line, comma separated, no header.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rnlmf::Matrix;

use crate::CliError;

pub fn read_matrix(path: &Path) -> Result<Matrix, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    parse_matrix(file).map_err(|msg| CliError::Io(format!("{}: {msg}", path.display())))
}

/// Parses CSV text into a matrix; errors name the offending line and column.
pub fn parse_matrix(input: impl std::io::Read) -> Result<Matrix, String> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| e.to_string())?;
        let line = record.position().map_or(rows + 1, |p| p.line() as usize);
        match cols {
            None => cols = Some(record.len()),
            Some(c) if c != record.len() => {
                return Err(format!("line {line}: expected {c} fields, found {}", record.len()));
            }
            _ => {}
        }
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| format!("line {line}, column {}: cannot parse {field:?} as a number", j + 1))?;
            values.push(v);
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| "no rows".to_string())?;
    Ok(Matrix::from_row_iterator(rows, cols, values))
}

pub fn write_matrix(path: &Path, m: &Matrix) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut out = BufWriter::new(file);
    format_matrix(&mut out, m).map_err(|e| CliError::io(path, e))
}

/// Writes every entry with 17 significant digits, enough to round-trip `f64`.
pub fn format_matrix(out: &mut impl Write, m: &Matrix) -> std::io::Result<()> {
    for row in m.row_iter() {
        let mut first = true;
        for v in row.iter() {
            if !first {
                out.write_all(b",")?;
            }
            write!(out, "{v:.16e}")?;
            first = false;
        }
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn read_labels(path: &Path) -> Result<Vec<usize>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim().parse().map_err(|_| {
                CliError::Io(format!("{}: line {}: {:?} is not a label", path.display(), i + 1, l.trim()))
            })
        })
        .collect()
}

pub fn write_labels(path: &Path, labels: &[usize]) -> Result<(), CliError> {
    let text: String = labels.iter().map(|l| format!("{l}\n")).collect();
    write_text(path, &text)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_small_matrix() {
        let m = parse_matrix("1,2\n3,4\n".as_bytes()).unwrap();
        assert_eq!(m, Matrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]));
    }

    #[test]
    fn ragged_rows_name_the_line() {
        let err = parse_matrix("1,2\n3\n".as_bytes()).unwrap_err();
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn bad_numbers_name_line_and_column() {
        let err = parse_matrix("1,2\n3,x\n".as_bytes()).unwrap_err();
        assert!(err.contains("line 2, column 2"), "{err}");
    }

    #[test]
    fn accepts_scientific_notation_and_spaces() {
        let m = parse_matrix("1e-3, -2.5E2\n".as_bytes()).unwrap();
        assert_eq!(m, Matrix::from_row_slice(1, 2, &[1e-3, -250.0]));
    }

    #[test]
    fn empty_input_is_rejected() {
        assert!(parse_matrix("".as_bytes()).is_err());
    }
}
