//! Text serialisation of grid symbols.
//!
//! CSV: header `x,p,re,im`, one row per node, `x` varying slowest.
//! JSON: `{"grid": {...}, "values": [[re, im], ...]}` in the same order.

use std::io::{Read, Write};

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::{GridSymbol, PhaseGrid};
use crate::error::{Error, Result};

/// Round-trip-safe float formatting (17 significant digits).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv<W: Write>(sym: &GridSymbol, out: W) -> Result<()> {
    let g = sym.grid();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "p", "re", "im"])?;
    for i in 0..g.n_x {
        let x = fmt_f64(g.x(i));
        for j in 0..g.n_p {
            let v = sym.at(i, j);
            w.write_record([x.as_str(), &fmt_f64(g.p(j)), &fmt_f64(v.re), &fmt_f64(v.im)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a CSV symbol and reconstructs its grid from the node coordinates.
pub fn read_csv<R: Read>(input: R) -> Result<GridSymbol> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers()?.clone();
    let want = ["x", "p", "re", "im"];
    if headers.len() != 4 || headers.iter().zip(want).any(|(h, w)| h.trim() != w) {
        return Err(Error::Parse(format!("expected header x,p,re,im, found {:?}", headers)));
    }
    let mut rows: Vec<[f64; 4]> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let mut row = [0.0; 4];
        for (k, field) in rec.iter().enumerate().take(4) {
            row[k] = field
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", rows.len() + 2)))?;
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse("empty symbol file".into()));
    }
    let x0 = rows[0][0];
    let n_p = rows.iter().take_while(|r| r[0] == x0).count();
    if n_p == 0 || !rows.len().is_multiple_of(n_p) {
        return Err(Error::Parse("rows do not form a rectangular x-outer grid".into()));
    }
    let n_x = rows.len() / n_p;
    let p0 = rows[0][1];
    let grid = PhaseGrid::new(n_x, n_p, -x0, -p0)?;
    let tol = |h: f64| 1e-9 * h;
    let mut values = Array2::zeros((n_x, n_p));
    for (k, r) in rows.iter().enumerate() {
        let (i, j) = (k / n_p, k % n_p);
        if (r[0] - grid.x(i)).abs() > tol(grid.dx()) || (r[1] - grid.p(j)).abs() > tol(grid.dp()) {
            return Err(Error::Parse(format!(
                "node {k} at ({}, {}) is not on the uniform grid implied by the first row",
                r[0], r[1]
            )));
        }
        values[[i, j]] = Complex64::new(r[2], r[3]);
    }
    GridSymbol::new(grid, values)
}

#[derive(Serialize, Deserialize)]
struct JsonSymbol {
    grid: PhaseGrid,
    values: Vec<[f64; 2]>,
}

pub fn write_json<W: Write>(sym: &GridSymbol, mut out: W) -> Result<()> {
    let doc = JsonSymbol { grid: *sym.grid(), values: sym.values().iter().map(|v| [v.re, v.im]).collect() };
    serde_json::to_writer(&mut out, &doc)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn read_json<R: Read>(input: R) -> Result<GridSymbol> {
    let doc: JsonSymbol = serde_json::from_reader(input)?;
    let grid = PhaseGrid::new(doc.grid.n_x, doc.grid.n_p, doc.grid.x_max, doc.grid.p_max)?;
    if doc.values.len() != grid.len() {
        return Err(Error::Parse(format!("expected {} values, found {}", grid.len(), doc.values.len())));
    }
    let values = Array2::from_shape_vec(
        (grid.n_x, grid.n_p),
        doc.values.into_iter().map(|[re, im]| Complex64::new(re, im)).collect(),
    )
    .map_err(|e| Error::Parse(e.to_string()))?;
    GridSymbol::new(grid, values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn from_path(path: &std::path::Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "csv" => Some(Format::Csv),
            "json" => Some(Format::Json),
            _ => None,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

pub fn write_symbol<W: Write>(sym: &GridSymbol, format: Format, out: W) -> Result<()> {
    match format {
        Format::Csv => write_csv(sym, out),
        Format::Json => write_json(sym, out),
    }
}

pub fn read_symbol<R: Read>(format: Format, input: R) -> Result<GridSymbol> {
    match format {
        Format::Csv => read_csv(input),
        Format::Json => read_json(input),
    }
}

pub fn save(sym: &GridSymbol, path: &std::path::Path, format: Format) -> Result<()> {
    let f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_symbol(sym, format, f)
}

pub fn load(path: &std::path::Path) -> Result<GridSymbol> {
    let format = Format::from_path(path)
        .ok_or_else(|| Error::Parse(format!("cannot infer format of {}", path.display())))?;
    read_symbol(format, std::io::BufReader::new(std::fs::File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> GridSymbol {
        let g = PhaseGrid::new(8, 16, 1.5, 2.5).unwrap();
        GridSymbol::from_fn(g, |x, p| Complex64::new((x * 1.3).sin() + p, x * p / 3.0))
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let s = sample();
        let mut buf = Vec::new();
        write_csv(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x,p,re,im\n"));
        assert_eq!(text.lines().count(), 1 + 8 * 16);
        let back = read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.values(), s.values());
        assert!(back.grid().same_as(s.grid()));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let s = sample();
        let mut buf = Vec::new();
        write_json(&s, &mut buf).unwrap();
        let back = read_json(buf.as_slice()).unwrap();
        assert_eq!(back.values(), s.values());
        assert_eq!(back.grid(), s.grid());
    }

    #[test]
    fn bad_header_is_rejected() {
        let err = read_csv("a,b,c,d\n1,2,3,4\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse(_)));
    }

    #[test]
    fn ragged_csv_is_rejected() {
        let s = sample();
        let mut buf = Vec::new();
        write_csv(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let truncated: String = text.lines().take(20).map(|l| format!("{l}\n")).collect();
        assert!(read_csv(truncated.as_bytes()).is_err());
    }
}
