use std::fmt;
use std::fs;
use std::path::Path;

#[derive(Debug)]
pub enum InputError {
    NotFound(String),
    Io(String),
    Parse { line: usize, message: String },
    Column(String),
}

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InputError::NotFound(p) => write!(f, "FileNotFound: {p}"),
            InputError::Io(m) => write!(f, "IO error: {m}"),
            InputError::Parse { line, message } => write!(f, "ParseError at line {line}: {message}"),
            InputError::Column(m) => write!(f, "column selection: {m}"),
        }
    }
}

impl std::error::Error for InputError {}

fn parse_value(text: &str, line: usize) -> Result<f64, InputError> {
    let v: f64 = text.trim().parse().map_err(|_| InputError::Parse {
        line,
        message: format!("{:?} is not a number", text.trim()),
    })?;
    if !v.is_finite() {
        return Err(InputError::Parse {
            line,
            message: format!("non-finite value {:?}", text.trim()),
        });
    }
    Ok(v)
}

/// One number per line; blank lines are skipped.
pub fn parse_lines(text: &str) -> Result<Vec<f64>, InputError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        if line.contains(',') {
            return Err(InputError::Parse {
                line: i + 1,
                message: "line holds several fields; pass --column to read CSV".into(),
            });
        }
        out.push(parse_value(line, i + 1)?);
    }
    Ok(out)
}

/// CSV with a header row; `column` is a header name or a 0-based index.
pub fn parse_csv_column(text: &str, column: &str) -> Result<Vec<f64>, InputError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| InputError::Parse { line: 1, message: e.to_string() })?
        .clone();
    let idx = match headers.iter().position(|h| h == column) {
        Some(i) => i,
        None => match column.parse::<usize>() {
            Ok(i) if i < headers.len() => i,
            _ => {
                return Err(InputError::Column(format!(
                    "no column {column:?}; available: {}",
                    headers.iter().collect::<Vec<_>>().join(", ")
                )))
            }
        },
    };
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| InputError::Parse {
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let field = record.get(idx).ok_or_else(|| InputError::Parse {
            line,
            message: format!("missing field {idx}"),
        })?;
        out.push(parse_value(field, line)?);
    }
    Ok(out)
}

pub fn read_values(path: &Path, column: Option<&str>) -> Result<Vec<f64>, InputError> {
    let text = fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => InputError::NotFound(path.display().to_string()),
        _ => InputError::Io(format!("{}: {e}", path.display())),
    })?;
    match column {
        Some(c) => parse_csv_column(&text, c),
        None => parse_lines(&text),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lines_with_blanks() {
        assert_eq!(parse_lines("1.5\n\n-2\n 3e1 \n").unwrap(), vec![1.5, -2.0, 30.0]);
    }

    #[test]
    fn bad_line_number() {
        match parse_lines("1\n2\nabc\n") {
            Err(InputError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        match parse_lines("1\nNaN\n") {
            Err(InputError::Parse { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("non-finite"));
            }
            other => panic!("{other:?}"),
        }
        assert!(parse_lines("inf\n").is_err());
    }

    #[test]
    fn csv_by_name_and_index() {
        let text = "id,x\n1,0.5\n2,-1.25\n";
        assert_eq!(parse_csv_column(text, "x").unwrap(), vec![0.5, -1.25]);
        assert_eq!(parse_csv_column(text, "1").unwrap(), vec![0.5, -1.25]);
        assert!(matches!(parse_csv_column(text, "y"), Err(InputError::Column(_))));
        match parse_csv_column("x\n1\nfoo\n", "x") {
            Err(InputError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }
}
