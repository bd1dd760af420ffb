//! Text input formats: one value per line, or comma-separated
//! value,frequency pairs. Lines starting with `#` and blank lines are
//! skipped. Decimal points only; no locale handling.

use std::path::Path;

use thiserror::Error;

use crate::dataset::{DataSet, DataSetError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Values,
    ValueFreq,
}

impl std::str::FromStr for InputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "values" => Ok(InputFormat::Values),
            "value-freq" => Ok(InputFormat::ValueFreq),
            other => Err(format!("unknown format '{other}', expected values or value-freq")),
        }
    }
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("input contains no data lines")]
    Empty,
    #[error(transparent)]
    Data(#[from] DataSetError),
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// Parses a `values` document: one decimal value per line.
pub fn parse_values(text: &str) -> Result<Vec<f64>, IoError> {
    let mut out = Vec::new();
    for (line, raw) in data_lines(text) {
        let v: f64 = raw.parse().map_err(|_| IoError::Parse {
            line,
            message: format!("not a decimal value: '{raw}'"),
        })?;
        out.push(v);
    }
    if out.is_empty() {
        return Err(IoError::Empty);
    }
    Ok(out)
}

/// Parses a `value-freq` document: `value,frequency` per line.
pub fn parse_value_freq(text: &str) -> Result<Vec<(f64, u64)>, IoError> {
    let mut out = Vec::new();
    for (line, raw) in data_lines(text) {
        let (vs, fs) = raw.split_once(',').ok_or_else(|| IoError::Parse {
            line,
            message: format!("expected value,frequency: '{raw}'"),
        })?;
        let v: f64 = vs.trim().parse().map_err(|_| IoError::Parse {
            line,
            message: format!("not a decimal value: '{vs}'"),
        })?;
        let f: u64 = fs.trim().parse().map_err(|_| IoError::Parse {
            line,
            message: format!("not a positive integer frequency: '{fs}'"),
        })?;
        if f == 0 {
            return Err(IoError::Parse {
                line,
                message: "frequency must be positive".into(),
            });
        }
        out.push((v, f));
    }
    if out.is_empty() {
        return Err(IoError::Empty);
    }
    Ok(out)
}

/// Reads a dataset from a file in the given format.
pub fn read_dataset(path: &Path, format: InputFormat) -> Result<DataSet, IoError> {
    let text = std::fs::read_to_string(path)?;
    let d = match format {
        InputFormat::Values => DataSet::from_values(&parse_values(&text)?)?,
        InputFormat::ValueFreq => DataSet::from_pairs(&parse_value_freq(&text)?)?,
    };
    Ok(d)
}

/// Writes a dataset as a `values` document, one entry per line in value
/// order, using shortest round-trip decimal formatting.
pub fn write_values(path: &Path, d: &DataSet) -> Result<(), IoError> {
    let mut out = String::new();
    for v in d.expand() {
        out.push_str(&format!("{v}\n"));
    }
    std::fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_values_with_comments() {
        let text = "# header\n1.5\n\n-2

# another
3e2
";
        let v = parse_values(text).unwrap();
        assert_eq!(v, vec![1.5, -2.0, 300.0]);
    }

    #[test]
    fn parses_value_freq() {
        let text = "1.5,3\n2.5, 4\n";
        let v = parse_value_freq(text).unwrap();
        assert_eq!(v, vec![(1.5, 3), (2.5, 4)]);
    }

    #[test]
    fn reports_line_numbers() {
        let err = parse_values("1.0\nbogus\n").unwrap_err();
        match err {
            IoError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_values("# only\n"), Err(IoError::Empty)));
        assert!(matches!(
            parse_value_freq("1.0,0\n"),
            Err(IoError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn round_trips_through_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.txt");
        let d = DataSet::from_values(&[2.0, 1.0, 1.0, 0.125]).unwrap();
        write_values(&path, &d).unwrap();
        let back = read_dataset(&path, InputFormat::Values).unwrap();
        assert_eq!(back, d);
    }
}
