//! Point-set input and tabular output.

use anyhow::{bail, Context, Result};
use serde_json::{Map, Value};
use std::io::Write;
use std::path::Path;

/// Coordinates named by the header of a points file.
#[derive(Clone, Debug, PartialEq)]
pub enum Points {
    Cartesian(Vec<[f64; 3]>),
    /// Columns in the order of the names passed to [`read_points`].
    Curvilinear(Vec<Vec<f64>>),
}

fn column(headers: &[String], name: &str) -> Option<usize> {
    headers.iter().position(|h| h == name)
}

/// Read a CSV point set with either `x,y,z` columns or the given
/// curvilinear columns. Extra columns are ignored.
pub fn read_points(path: &Path, curvilinear: &[&str]) -> Result<Points> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("{}: cannot open points file", path.display()))?;
    let headers: Vec<String> = rdr
        .headers()
        .with_context(|| format!("{}: cannot read header", path.display()))?
        .iter()
        .map(|h| h.to_ascii_lowercase())
        .collect();
    let cart: Option<Vec<usize>> = ["x", "y", "z"].iter().map(|n| column(&headers, n)).collect();
    let curv: Option<Vec<usize>> = if curvilinear.is_empty() {
        None
    } else {
        curvilinear.iter().map(|n| column(&headers, n)).collect()
    };
    let (cols, is_cart) = match (cart, curv) {
        (Some(c), _) => (c, true),
        (None, Some(c)) => (c, false),
        (None, None) => bail!(
            "{}: header must name columns x,y,z{}",
            path.display(),
            if curvilinear.is_empty() { String::new() } else { format!(" or {}", curvilinear.join(",")) }
        ),
    };
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.with_context(|| format!("{}: row {}", path.display(), i + 1))?;
        let vals = cols
            .iter()
            .map(|&c| {
                let cell = rec.get(c).unwrap_or("");
                cell.parse::<f64>()
                    .with_context(|| format!("{}: row {}, column `{}`: not a number: `{cell}`", path.display(), i + 1, headers[c]))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(vals);
    }
    if rows.is_empty() {
        bail!("{}: no points", path.display());
    }
    Ok(if is_cart {
        Points::Cartesian(rows.into_iter().map(|r| [r[0], r[1], r[2]]).collect())
    } else {
        Points::Curvilinear(rows)
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// Seventeen significant digits, enough to round-trip any double.
pub fn fmt17(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Rows with a fixed header, written as CSV or as a JSON array of objects.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Table {
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn render(&self, format: Format) -> Result<Vec<u8>> {
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&self.headers)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(|c| match c {
                        Cell::Num(v) => fmt17(*v),
                        Cell::Text(t) => t.clone(),
                    }))?;
                }
                Ok(w.into_inner()?)
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let obj: Map<String, Value> = self
                            .headers
                            .iter()
                            .zip(row)
                            .map(|(h, c)| {
                                let v = match c {
                                    Cell::Num(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
                                    Cell::Text(t) => Value::String(t.clone()),
                                };
                                (h.clone(), v)
                            })
                            .collect();
                        Value::Object(obj)
                    })
                    .collect();
                let mut s = serde_json::to_string_pretty(&rows)?;
                s.push('\n');
                Ok(s.into_bytes())
            }
        }
    }
}

/// Write to `path`, or to stdout when absent.
pub fn emit(bytes: &[u8], path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes).with_context(|| format!("{}: cannot write", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23] {
            let s = fmt17(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mantissa.chars().filter(|c| c.is_ascii_digit()).count(), 17);
        }
        assert_eq!(fmt17(f64::NAN), "NaN");
    }

    #[test]
    fn reads_either_header() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        std::fs::write(&a, "x, y, z\n1,2,3\n").unwrap();
        assert_eq!(read_points(&a, &["s1", "s2", "sigma"]).unwrap(), Points::Cartesian(vec![[1.0, 2.0, 3.0]]));
        let b = dir.path().join("b.csv");
        std::fs::write(&b, "sigma,s2,s1\n0.1,2,3\n").unwrap();
        assert_eq!(read_points(&b, &["s1", "s2", "sigma"]).unwrap(), Points::Curvilinear(vec![vec![3.0, 2.0, 0.1]]));
        let c = dir.path().join("c.csv");
        std::fs::write(&c, "u,v\n1,2\n").unwrap();
        assert!(read_points(&c, &["s1", "s2"]).is_err());
        assert!(read_points(&c, &[]).is_err());
        std::fs::write(&c, "x,y,z\n1,oops,2\n").unwrap();
        let e = read_points(&c, &["s1"]).unwrap_err().to_string();
        assert!(e.contains("row 1") && e.contains("`y`"), "{e}");
    }

    #[test]
    fn json_rows_keep_header_order() {
        let mut t = Table::new(&["b", "a"]);
        t.rows.push(vec![1.5.into(), "ok".into()]);
        let s = String::from_utf8(t.render(Format::Json).unwrap()).unwrap();
        assert!(s.find("\"b\"").unwrap() < s.find("\"a\"").unwrap(), "{s}");
        let c = String::from_utf8(t.render(Format::Csv).unwrap()).unwrap();
        assert_eq!(c, "b,a\n1.5000000000000000e0,ok\n");
    }
}
