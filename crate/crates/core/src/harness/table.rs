use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Suffix marking the standard-error column of an estimate.
pub const SE_SUFFIX: &str = "_se";
/// Significant digits written to CSV.
pub const SIGNIFICANT_DIGITS: usize = 12;

/// Rectangular numeric table with `key = value` metadata.
///
/// A column named `<name>_se` holds the standard error of column `<name>`,
/// which must exist. Missing values are `NaN` and written as empty cells.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
    metadata: Vec<(String, String)>,
}

impl ResultTable {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Result<Self> {
        let columns: Vec<String> = columns.into_iter().map(Into::into).collect();
        for (i, c) in columns.iter().enumerate() {
            if c.is_empty() || c.contains([',', '\n', '\r', '"']) {
                return Err(Error::invalid(format!("invalid column name {c:?}")));
            }
            if columns[..i].contains(c) {
                return Err(Error::invalid(format!("duplicate column '{c}'")));
            }
        }
        for c in &columns {
            if let Some(base) = c.strip_suffix(SE_SUFFIX) {
                if !columns.iter().any(|o| o == base) {
                    return Err(Error::invalid(format!("standard error column '{c}' has no estimate '{base}'")));
                }
            }
        }
        Ok(Self {
            columns,
            rows: Vec::new(),
            metadata: Vec::new(),
        })
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn metadata(&self) -> &[(String, String)] {
        &self.metadata
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    /// Pairs `(estimate, standard error)` columns by name.
    pub fn se_pairs(&self) -> Vec<(usize, usize)> {
        self.columns
            .iter()
            .enumerate()
            .filter_map(|(j, c)| {
                let base = c.strip_suffix(SE_SUFFIX)?;
                Some((self.column_index(base)?, j))
            })
            .collect()
    }

    pub fn push_row(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::invalid(format!(
                "row has {} values, table has {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn add_metadata(&mut self, key: impl Into<String>, value: impl ToString) -> Result<()> {
        let (key, value) = (key.into(), value.to_string());
        if key.contains(['=', '\n', '\r']) || key.trim().is_empty() || value.contains(['\n', '\r']) {
            return Err(Error::invalid(format!("invalid metadata entry {key:?} = {value:?}")));
        }
        self.metadata.push((key, value));
        Ok(())
    }

    /// Inserts `entries` ahead of the existing metadata.
    pub fn prepend_metadata(&mut self, entries: Vec<(String, String)>) -> Result<()> {
        let tail = std::mem::take(&mut self.metadata);
        for (k, v) in entries {
            self.add_metadata(k, v)?;
        }
        self.metadata.extend(tail);
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "# {k} = {v}");
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format_number(*v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut metadata = Vec::new();
        let mut table: Option<ResultTable> = None;
        for (no, line) in text.lines().enumerate() {
            if let Some(meta) = line.strip_prefix('#') {
                let (k, v) = meta
                    .split_once('=')
                    .ok_or_else(|| Error::invalid(format!("line {}: malformed metadata", no + 1)))?;
                metadata.push((k.trim().to_string(), v.trim().to_string()));
                continue;
            }
            match table.as_mut() {
                None => table = Some(ResultTable::new(line.split(','))?),
                Some(t) => {
                    let row = line
                        .split(',')
                        .map(|c| {
                            if c.is_empty() {
                                Ok(f64::NAN)
                            } else {
                                c.parse::<f64>()
                                    .map_err(|_| Error::invalid(format!("line {}: '{c}' is not a number", no + 1)))
                            }
                        })
                        .collect::<Result<Vec<_>>>()?;
                    t.push_row(row).map_err(|e| e.context(format!("line {}", no + 1)))?;
                }
            }
        }
        let mut t = table.ok_or_else(|| Error::invalid("CSV has no header"))?;
        t.metadata = metadata;
        Ok(t)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_csv(&text).map_err(|e| e.context(format!("reading {}", path.display())))
    }
}

/// Path of the per-run table written next to `path`: `a/b.csv` → `a/b.runs.csv`.
pub fn runs_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.runs.csv"))
}

/// Decimal rendering with [`SIGNIFICANT_DIGITS`] significant digits;
/// scientific notation outside `[1e-5, 1e12)`. `NaN` renders as an empty
/// string.
pub fn format_number(v: f64) -> String {
    if v.is_nan() {
        return String::new();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v);
    // Exponent after rounding to the target precision.
    let exp: i32 = sci[sci.find('e').expect("exponent") + 1..].parse().expect("integer exponent");
    if !(-5..12).contains(&exp) {
        let (mantissa, e) = sci.split_once('e').expect("exponent");
        return format!("{}e{e}", trim_zeros(mantissa));
    }
    let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{v:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn number_format() {
        assert_eq!(format_number(0.0), "0");
        assert_eq!(format_number(1.5), "1.5");
        assert_eq!(format_number(-2.0), "-2");
        assert_eq!(format_number(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_number(123456.789), "123456.789");
        assert_eq!(format_number(9.9999999999996), "10");
        assert_eq!(format_number(1e-7 / 3.0), "3.33333333333e-8");
        assert_eq!(format_number(2.5e15), "2.5e15");
        assert_eq!(format_number(f64::NAN), "");
    }

    #[test]
    fn empty_table_round_trip() {
        let mut t = ResultTable::new(["a", "a_se"]).unwrap();
        t.add_metadata("seed", 3).unwrap();
        assert_eq!(t.to_csv(), "# seed = 3\na,a_se\n");
        assert_eq!(ResultTable::from_csv(&t.to_csv()).unwrap(), t);
    }

    #[test]
    fn validation() {
        assert!(ResultTable::new(["a", "b_se"]).is_err());
        assert!(ResultTable::new(["a", "a"]).is_err());
        assert!(ResultTable::new(["a,b"]).is_err());
        let mut t = ResultTable::new(["x", "x_se", "y"]).unwrap();
        assert_eq!(t.se_pairs(), vec![(0, 1)]);
        assert!(t.push_row(vec![1.0]).is_err());
        assert!(t.add_metadata("a=b", 1).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let mut t = ResultTable::new(["x", "y"]).unwrap();
        t.push_row(vec![1.0, f64::NAN]).unwrap();
        t.write_csv(&path).unwrap();
        let back = ResultTable::read_csv(&path).unwrap();
        assert_eq!(back.rows()[0][0], 1.0);
        assert!(back.rows()[0][1].is_nan());
        assert_eq!(runs_path(&path), dir.path().join("t.runs.csv"));
        assert!(matches!(
            ResultTable::read_csv(&dir.path().join("missing.csv")),
            Err(Error::Io { .. })
        ));
    }

    proptest! {
        #[test]
        fn values_survive_at_twelve_digits(v in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            let s = format_number(v);
            let back: f64 = s.parse().unwrap();
            prop_assert_eq!(format_number(back), s.clone());
            let rel = if v == 0.0 { back.abs() } else { ((back - v) / v).abs() };
            prop_assert!(rel <= 5e-12, "{} -> {}", v, s);
        }

        #[test]
        fn column_count_matches_header(cols in 1usize..8, rows in proptest::collection::vec(proptest::collection::vec(-1e9f64..1e9, 8), 0..20)) {
            let names: Vec<String> = (0..cols).map(|i| format!("c{i}")).collect();
            let mut t = ResultTable::new(names).unwrap();
            for r in &rows {
                t.push_row(r[..cols].to_vec()).unwrap();
            }
            let csv = t.to_csv();
            for line in csv.lines() {
                prop_assert_eq!(line.split(',').count(), cols);
            }
            let back = ResultTable::from_csv(&csv).unwrap();
            prop_assert_eq!(back.rows().len(), rows.len());
            for (a, b) in back.rows().iter().zip(&rows) {
                for (x, y) in a.iter().zip(b) {
                    prop_assert_eq!(format_number(*x), format_number(*y));
                }
            }
        }
    }
}
