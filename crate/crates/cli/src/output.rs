use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

/// CSV table with a config-hash comment line and a header row.
pub struct Table {
    text: String,
    columns: usize,
}

impl Table {
    pub fn new(hash: &str, header: &[&str]) -> Self {
        let mut text = format!("# config-sha256: {hash}\n");
        text.push_str(&header.join(","));
        text.push('\n');
        Table {
            text,
            columns: header.len(),
        }
    }

    pub fn row(&mut self, cells: &[Cell]) {
        assert_eq!(cells.len(), self.columns, "row width");
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            match c {
                Cell::Num(x) => write!(self.text, "{}", x + 0.0).expect("string write"),
                Cell::Int(k) => write!(self.text, "{k}").expect("string write"),
                Cell::Text(s) => self.text.push_str(s),
                Cell::Empty => {}
            }
        }
        self.text.push('\n');
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        std::fs::write(path, &self.text)?;
        Ok(())
    }
}

pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Num)
    }
}

impl From<usize> for Cell {
    fn from(k: usize) -> Self {
        Cell::Int(k as u64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<String, CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Config(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, &text)?;
    Ok(text)
}

pub fn out_path(dir: &Path, name: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir)?;
    Ok(dir.join(name))
}

/// Short decimal form: `2.0` rather than `1.9999999999999998`.
pub fn short(x: f64) -> String {
    let s = format!("{x:.12}");
    let s = s.trim_end_matches('0');
    if s.ends_with('.') {
        format!("{s}0")
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_form() {
        assert_eq!(short(1.9999999999999998), "2.0");
        assert_eq!(short(1.5), "1.5");
        assert_eq!(short(-0.25), "-0.25");
    }

    #[test]
    fn table_layout() {
        let mut t = Table::new("abc", &["x", "y", "label"]);
        t.row(&[1.5.into(), None.into(), "R0".into()]);
        assert_eq!(t.text, "# config-sha256: abc\nx,y,label\n1.5,,R0\n");
    }
}
