use std::io::Read;
use std::path::Path;

use anyhow::Context;

use crate::Failure;

/// Reads a dataset: one value per line, or a single-column CSV whose first
/// row may be a header. `-` reads standard input.
pub fn read_dataset(path: &Path) -> Result<Vec<f64>, Failure> {
    let mut text = String::new();
    if path.as_os_str() == "-" {
        std::io::stdin()
            .read_to_string(&mut text)
            .context("reading standard input")
            .map_err(Failure::usage)?;
    } else {
        text = std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))
            .map_err(Failure::usage)?;
    }
    parse_dataset(&text)
}

pub fn parse_dataset(text: &str) -> Result<Vec<f64>, Failure> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut values = Vec::new();
    let mut first = true;
    for record in reader.records() {
        let record = record.map_err(|e| Failure::data(format!("malformed input: {e}")))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() != 1 {
            return Err(Failure::data(format!(
                "line {line}: expected a single column, found {} fields",
                record.len()
            )));
        }
        let field = &record[0];
        match field.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            Ok(_) => {
                return Err(Failure::data(format!(
                    "line {line}: `{field}` is not a finite number"
                )))
            }
            // a non-numeric first row is a header
            Err(_) if first => {}
            Err(_) => {
                return Err(Failure::data(format!(
                    "line {line}: `{field}` is not a number"
                )))
            }
        }
        first = false;
    }
    if values.is_empty() {
        return Err(Failure::data("the dataset contains no values".into()));
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_lines() {
        assert_eq!(
            parse_dataset("1\n2.5\n\n-3e2\n").unwrap(),
            vec![1.0, 2.5, -300.0]
        );
    }

    #[test]
    fn csv_with_header() {
        assert_eq!(parse_dataset("value\n1\n\"2\"\n").unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn errors_name_the_line() {
        let e = parse_dataset("1\n2\nabc\n").unwrap_err();
        assert_eq!(e.code, 3);
        assert!(e.message.contains("line 3"), "{}", e.message);
        let e = parse_dataset("1,2\n").unwrap_err();
        assert!(e.message.contains("line 1"));
        let e = parse_dataset("1\ninf\n").unwrap_err();
        assert!(e.message.contains("line 2"));
        assert!(parse_dataset("header\n").is_err());
    }
}
