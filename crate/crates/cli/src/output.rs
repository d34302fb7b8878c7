//! Tab-separated tables with `#` header lines.
//!
//! ```text
//! # command=husimi
//! # config hbar=1
//! # grid a: log [0.5, 2] n=16
//! # convention husimi: ...
//! a	b	value
//! 5e-1	-1.5e0	3.1e-1
//! ```
//!
//! The first non-`#` line names the columns. Floats are written with `{:e}`,
//! which is the shortest representation that parses back to the same bits.

use std::fmt::Write as _;
use std::path::Path;

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { headers: Vec::new(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn header(&mut self, line: impl Into<String>) -> &mut Self {
        let line = line.into();
        debug_assert!(!line.contains('\n'));
        self.headers.push(line);
        self
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    /// Value of the first `# key=value` header with this key.
    pub fn header_value(&self, key: &str) -> Option<&str> {
        self.headers.iter().find_map(|h| h.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for h in &self.headers {
            let _ = writeln!(s, "# {h}");
        }
        let _ = writeln!(s, "{}", self.columns.join("\t"));
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| format!("{v:e}")).collect();
            let _ = writeln!(s, "{}", cells.join("\t"));
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        std::fs::write(path, self.render()).map_err(|e| CliError::Internal(format!("write {}: {e}", path.display())))
    }
}

pub fn parse_table(text: &str) -> Result<Table, CliError> {
    let bad = |m: String| CliError::Internal(format!("table parse: {m}"));
    let mut headers = Vec::new();
    let mut columns: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if let Some(h) = line.strip_prefix('#') {
            if columns.is_some() {
                return Err(bad(format!("line {}: header after data", i + 1)));
            }
            headers.push(h.strip_prefix(' ').unwrap_or(h).to_string());
            continue;
        }
        match &columns {
            None => columns = Some(line.split('\t').map(str::to_string).collect()),
            Some(cols) => {
                let row: Vec<f64> = line
                    .split('\t')
                    .map(|c| c.parse::<f64>().map_err(|_| bad(format!("line {}: bad number '{c}'", i + 1))))
                    .collect::<Result<_, _>>()?;
                if row.len() != cols.len() {
                    return Err(bad(format!("line {}: {} cells for {} columns", i + 1, row.len(), cols.len())));
                }
                rows.push(row);
            }
        }
    }
    let columns = columns.ok_or_else(|| bad("no column line".into()))?;
    Ok(Table { headers, columns, rows })
}

pub fn read_table(path: &Path) -> Result<Table, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Internal(format!("read {}: {e}", path.display())))?;
    parse_table(&text)
}
