//! Text formats shared by `run` and `plot`.

use std::fmt::Write as _;

pub const UNITS: &str = "units: lengths in 1/k0, times in 1/(c k0), frequencies and rates in c k0";

/// Comma-separated table with `#` header lines. The last header line names
/// the columns. Floats carry 17 significant digits.
pub fn csv(title: &str, notes: &[String], columns: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Vec<u8> {
    let mut out = String::new();
    writeln!(out, "# {title}").unwrap();
    writeln!(out, "# {UNITS}").unwrap();
    for n in notes {
        writeln!(out, "# {n}").unwrap();
    }
    writeln!(out, "# {}", columns.join(",")).unwrap();
    for row in rows {
        debug_assert_eq!(row.len(), columns.len());
        let mut first = true;
        for v in row {
            if !first {
                out.push(',');
            }
            first = false;
            // Drop the sign of negative zero.
            write!(out, "{:.16e}", v + 0.0).unwrap();
        }
        out.push('\n');
    }
    out.into_bytes()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

pub fn parse_csv(text: &str) -> Result<Table, String> {
    let mut columns = Vec::new();
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if let Some(h) = line.strip_prefix('#') {
            columns = h.trim().split(',').map(|s| s.trim().to_string()).collect();
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| format!("line {}: {e}", n + 1))?;
        if row.len() != columns.len() {
            return Err(format!("line {}: {} fields, expected {}", n + 1, row.len(), columns.len()));
        }
        rows.push(row);
    }
    Ok(Table { columns, rows })
}
