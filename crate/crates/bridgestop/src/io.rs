//! File formats: tabulated priors, path dumps, tables, reports and manifests.
//!
//! Tables are comma separated with a header row and 12 significant digits.

use std::fs;
use std::path::Path;

use bridgestop_core::priors::Prior;
use bridgestop_core::urn::UrnPolicy;

use crate::simulate::BridgePath;
use crate::{Error, Result};

/// `x` with 12 significant digits, fixed notation where that stays short.
pub fn fmt12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        // rounding may have produced one digit more than asked; harmless
        trim_fraction(&s)
    } else {
        let s = format!("{x:.11e}");
        let (mantissa, e) = s.split_once('e').unwrap();
        format!("{}e{e}", trim_fraction(mantissa))
    }
}

fn trim_fraction(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// A table with named columns, written as CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|&v| fmt12(v)))?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let header = r.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|f| parse_number(f, path))
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        Ok(Self { header, rows })
    }
}

fn parse_number(field: &str, path: &Path) -> Result<f64> {
    let field = field.trim();
    match field {
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => field
            .parse()
            .map_err(|_| Error::Config(format!("{}: not a number: {field:?}", path.display()))),
    }
}

/// Reads a two-column `(r, density)` CSV; a header row is optional.
pub fn load_tabulated_prior(path: &Path) -> Result<Prior> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut grid = Vec::new();
    let mut density = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec?;
        if rec.len() != 2 {
            return Err(Error::Config(format!(
                "{}: expected 2 columns, found {}",
                path.display(),
                rec.len()
            )));
        }
        let parsed: Option<(f64, f64)> = rec[0].parse().ok().zip(rec[1].parse().ok());
        match parsed {
            Some((r, d)) => {
                grid.push(r);
                density.push(d);
            }
            None if line == 0 => {} // header
            None => {
                return Err(Error::Config(format!(
                    "{}: unparsable row {}",
                    path.display(),
                    line + 1
                )))
            }
        }
    }
    Ok(Prior::tabulated(grid, density)?)
}

/// Writes paths in long format `(path, t, x)`.
pub fn write_paths(path: &Path, paths: &[BridgePath]) -> Result<()> {
    let mut table = Table::new(["path", "t", "x"]);
    for (i, p) in paths.iter().enumerate() {
        for (&t, &x) in p.times.iter().zip(&p.values) {
            table.push(vec![i as f64, t, x]);
        }
    }
    table.write(path)
}

/// Writes `(k, s, action, value)` for every reachable state.
pub fn write_policy(path: &Path, policy: &UrnPolicy) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["k", "s", "action", "value"])?;
    for (k, s, stop, value) in policy.states() {
        w.write_record([
            k.to_string(),
            s.to_string(),
            if stop { "stop" } else { "continue" }.to_string(),
            fmt12(value),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Ordered `key: value` lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    entries: Vec<(String, String)>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn text(&mut self, key: &str, value: impl Into<String>) -> &mut Self {
        self.entries.push((key.to_string(), value.into()));
        self
    }

    pub fn num(&mut self, key: &str, value: f64) -> &mut Self {
        self.text(key, fmt12(value))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("{k}: {v}\n"))
            .collect()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.render()).map_err(|e| Error::io(path, e))
    }

    /// Parses text produced by [`Report::render`].
    pub fn parse(text: &str) -> Self {
        let entries = text
            .lines()
            .filter_map(|l| l.split_once(": "))
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        Self { entries }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_digits() {
        assert_eq!(fmt12(0.5), "0.5");
        assert_eq!(fmt12(0.839_924_425_056_7), "0.839924425057");
        assert_eq!(fmt12(-2.0), "-2");
        assert_eq!(fmt12(1e-9), "1e-9");
        assert_eq!(fmt12(1.234_567_890_123_4e20), "1.23456789012e20");
        assert_eq!(fmt12(123_456.0), "123456");
        for x in [0.1839397205857, -3.3e-7, 7.25, 1e15 / 3.0] {
            let back: f64 = fmt12(x).parse().unwrap();
            assert!((back - x).abs() <= 1e-11 * x.abs(), "{x}");
        }
    }

    #[test]
    fn report_round_trip() {
        let mut r = Report::new();
        r.num("B", 0.839924).text("prior", "gamma");
        let back = Report::parse(&r.render());
        assert_eq!(back, r);
        assert_eq!(back.get("B"), Some("0.839924"));
    }

    #[test]
    fn prior_with_and_without_header() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        fs::write(&a, "r,density\n0.5,1\n1.0,1\n1.5,1\n").unwrap();
        fs::write(&b, "# uniform\n0.5, 1\n1.0, 1\n1.5, 1\n").unwrap();
        let pa = load_tabulated_prior(&a).unwrap();
        let pb = load_tabulated_prior(&b).unwrap();
        assert_eq!(pa, pb);
        assert!((pa.mean() - 1.0).abs() < 1e-12);
        fs::write(&b, "0.5,1\nx,1\n").unwrap();
        assert!(load_tabulated_prior(&b).is_err());
    }

    #[test]
    fn table_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        let mut t = Table::new(["x", "v"]);
        t.push(vec![0.1, 1.0 / 3.0]);
        t.push(vec![-2.0, f64::INFINITY]);
        t.write(&p).unwrap();
        let back = Table::read(&p).unwrap();
        assert_eq!(back.header, t.header);
        assert!((back.rows[0][1] - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(back.rows[1][1], f64::INFINITY);
    }
}
