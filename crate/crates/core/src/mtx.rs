//! Matrix Market reading and writing. Values are written in shortest
//! round-trip exponent form so a reload reproduces every bit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

pub fn write_sparse(path: &Path, a: &CsrMatrix) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    let mut body = || -> std::io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(w, "{} {} {}", a.nrows(), a.ncols(), a.nnz())?;
        for (i, j, v) in a.triplets() {
            writeln!(w, "{} {} {:e}", i + 1, j + 1, v)?;
        }
        w.flush()
    };
    body().map_err(|e| Error::io(path, e))
}

pub fn write_dense(path: &Path, a: &DMatrix<f64>) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    let mut body = || -> std::io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix array real general")?;
        writeln!(w, "{} {}", a.nrows(), a.ncols())?;
        for v in a.iter() {
            writeln!(w, "{v:e}")?;
        }
        w.flush()
    };
    body().map_err(|e| Error::io(path, e))
}

struct Header {
    coordinate: bool,
    symmetric: bool,
}

fn parse_err(path: &Path, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        msg: msg.into(),
    }
}

fn read_lines(path: &Path) -> Result<(Header, Vec<String>)> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(f).lines();
    let banner = lines
        .next()
        .ok_or_else(|| parse_err(path, "empty file"))?
        .map_err(|e| Error::io(path, e))?;
    let tokens: Vec<String> = banner.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" || tokens[3] != "real" {
        return Err(parse_err(path, format!("unsupported banner '{banner}'")));
    }
    let coordinate = match tokens[2].as_str() {
        "coordinate" => true,
        "array" => false,
        other => return Err(parse_err(path, format!("unsupported format '{other}'"))),
    };
    let symmetric = match tokens[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(parse_err(path, format!("unsupported symmetry '{other}'"))),
    };
    let mut body = Vec::new();
    for line in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        let t = line.trim();
        if !t.is_empty() && !t.starts_with('%') {
            body.push(t.to_string());
        }
    }
    Ok((Header { coordinate, symmetric }, body))
}

fn numbers<T: std::str::FromStr>(path: &Path, line: &str, n: usize) -> Result<Vec<T>> {
    let v: Vec<T> = line
        .split_whitespace()
        .map(|s| s.parse::<T>().map_err(|_| parse_err(path, format!("bad number in '{line}'"))))
        .collect::<Result<_>>()?;
    if v.len() != n {
        return Err(parse_err(path, format!("expected {n} fields in '{line}'")));
    }
    Ok(v)
}

pub fn read_sparse(path: &Path) -> Result<CsrMatrix> {
    let (h, body) = read_lines(path)?;
    if !h.coordinate {
        return Ok(CsrMatrix::from_dense(&read_dense(path)?));
    }
    let size = body.first().ok_or_else(|| parse_err(path, "missing size line"))?;
    let s: Vec<usize> = numbers(path, size, 3)?;
    let (nrows, ncols, nnz) = (s[0], s[1], s[2]);
    if body.len() != nnz + 1 {
        return Err(parse_err(path, format!("expected {nnz} entries, found {}", body.len() - 1)));
    }
    let mut t = Vec::with_capacity(nnz);
    for line in &body[1..] {
        let mut it = line.split_whitespace();
        let mut idx = |name: &str, bound: usize| -> Result<usize> {
            let k: usize = it
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| parse_err(path, format!("bad {name} index in '{line}'")))?;
            if k == 0 || k > bound {
                return Err(parse_err(path, format!("{name} index {k} out of range")));
            }
            Ok(k - 1)
        };
        let i = idx("row", nrows)?;
        let j = idx("column", ncols)?;
        let v: f64 = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err(path, format!("bad value in '{line}'")))?;
        t.push((i, j, v));
        if h.symmetric && i != j {
            t.push((j, i, v));
        }
    }
    Ok(CsrMatrix::from_triplets(nrows, ncols, t))
}

pub fn read_dense(path: &Path) -> Result<DMatrix<f64>> {
    let (h, body) = read_lines(path)?;
    if h.coordinate {
        return Ok(read_sparse(path)?.to_dense());
    }
    let size = body.first().ok_or_else(|| parse_err(path, "missing size line"))?;
    let s: Vec<usize> = numbers(path, size, 2)?;
    let (nrows, ncols) = (s[0], s[1]);
    let expected = if h.symmetric { nrows * (nrows + 1) / 2 } else { nrows * ncols };
    if body.len() != expected + 1 {
        return Err(parse_err(path, format!("expected {expected} values, found {}", body.len() - 1)));
    }
    let vals: Vec<f64> = body[1..]
        .iter()
        .map(|l| l.parse::<f64>().map_err(|_| parse_err(path, format!("bad value '{l}'"))))
        .collect::<Result<_>>()?;
    if !h.symmetric {
        return Ok(DMatrix::from_column_slice(nrows, ncols, &vals));
    }
    let mut out = DMatrix::zeros(nrows, ncols);
    let mut k = 0;
    for j in 0..ncols {
        for i in j..nrows {
            out[(i, j)] = vals[k];
            out[(j, i)] = vals[k];
            k += 1;
        }
    }
    Ok(out)
}
