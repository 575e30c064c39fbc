//! Dense coordinate matrices and the shared embedding file format.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Similarity metric an embedding is meant to be read with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Euclidean,
    Cosine,
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Metric::Euclidean => write!(f, "euclidean"),
            Metric::Cosine => write!(f, "cosine"),
        }
    }
}

impl FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Metric> {
        match s {
            "euclidean" => Ok(Metric::Euclidean),
            "cosine" => Ok(Metric::Cosine),
            other => Err(Error::InvalidInput(format!("unknown metric {other:?}"))),
        }
    }
}

/// An `n x d` coordinate matrix tagged with its similarity metric.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    n: usize,
    d: usize,
    coords: Vec<f64>,
    metric: Metric,
}

impl Embedding {
    pub fn new(n: usize, d: usize, coords: Vec<f64>, metric: Metric) -> Result<Embedding> {
        if d == 0 {
            return Err(Error::InvalidInput("dimensionality must be >= 1".into()));
        }
        if coords.len() != n * d {
            return Err(Error::InvalidInput(format!(
                "expected {n}x{d} coordinates, got {}",
                coords.len()
            )));
        }
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("embedding coordinate".into()));
        }
        Ok(Embedding {
            n,
            d,
            coords,
            metric,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.coords[i * self.d..(i + 1) * self.d]
    }

    /// Population standard deviation of one column.
    pub fn column_std(&self, col: usize) -> f64 {
        let n = self.n as f64;
        let mean = (0..self.n).map(|i| self.row(i)[col]).sum::<f64>() / n;
        let var = (0..self.n)
            .map(|i| {
                let v = self.row(i)[col] - mean;
                v * v
            })
            .sum::<f64>()
            / n;
        var.sqrt()
    }

    /// Serializes as the shared embedding format: a header line
    /// `n d metric`, then one line of `d` decimal floats per node.
    pub fn to_file_string(&self) -> String {
        let mut out = String::with_capacity(self.n * self.d * 26 + 32);
        let _ = writeln!(out, "{} {} {}", self.n, self.d, self.metric);
        for i in 0..self.n {
            let row = self.row(i);
            for (k, v) in row.iter().enumerate() {
                if k > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "{v:.16e}");
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Embedding> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::InvalidInput("empty embedding file".into()))?;
        let mut toks = header.split_whitespace();
        let parse_err = |line: usize, msg: String| Error::Parse { line, msg };
        let n: usize = toks
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| parse_err(1, "bad node count in header".into()))?;
        let d: usize = toks
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| parse_err(1, "bad dimension in header".into()))?;
        let metric: Metric = toks
            .next()
            .ok_or_else(|| parse_err(1, "missing metric in header".into()))?
            .parse()?;
        let mut coords = Vec::with_capacity(n * d);
        let mut rows = 0;
        for (lineno, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut count = 0;
            for tok in line.split_whitespace() {
                let v: f64 = tok.parse().map_err(|_| {
                    parse_err(lineno + 1, format!("invalid coordinate {tok:?}"))
                })?;
                coords.push(v);
                count += 1;
            }
            if count != d {
                return Err(parse_err(
                    lineno + 1,
                    format!("expected {d} coordinates, got {count}"),
                ));
            }
            rows += 1;
        }
        if rows != n {
            return Err(Error::InvalidInput(format!(
                "header declares {n} rows, found {rows}"
            )));
        }
        Embedding::new(n, d, coords, metric)
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_file_string())?;
        Ok(())
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Embedding> {
        Embedding::parse(&std::fs::read_to_string(path)?)
    }
}
