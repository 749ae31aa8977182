//! Fingerprint kernels and the precomputed-kernel text format.
//!
//! ```text
//! kernel <jaccard|rbf> <-|gamma=<g>> <n>
//! # ids <id_1> ... <id_n>
//! <n rows of n values>
//! ```

use std::fmt;
use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;

use crate::textio::{join_f64, parse_floats, parse_tok, Records};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelKind {
    Jaccard,
    Rbf { gamma: f64 },
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelKind::Jaccard => write!(f, "jaccard -"),
            KernelKind::Rbf { gamma } => write!(f, "rbf gamma={}", crate::textio::fmt_f64(*gamma)),
        }
    }
}

fn same_length(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::InvalidData(format!("vector lengths differ: {} vs {}", x.len(), y.len())));
    }
    Ok(())
}

/// `Σ min(x, y) / Σ max(x, y)`; two all-zero vectors have similarity 1.
pub fn jaccard_kernel(x: &[f64], y: &[f64]) -> Result<f64> {
    same_length(x, y)?;
    if x.iter().chain(y).any(|&v| !(v >= 0.0)) {
        return Err(Error::InvalidData("jaccard kernel needs non-negative counts".into()));
    }
    let (mut lo, mut hi) = (0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        lo += a.min(b);
        hi += a.max(b);
    }
    Ok(if hi == 0.0 { 1.0 } else { lo / hi })
}

/// `exp(-gamma * ||x - y||^2)`.
pub fn rbf_kernel(x: &[f64], y: &[f64], gamma: f64) -> Result<f64> {
    same_length(x, y)?;
    if !(gamma > 0.0) {
        return Err(Error::InvalidData(format!("rbf gamma must be positive, got {gamma}")));
    }
    let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((-gamma * d2).exp())
}

impl KernelKind {
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        match *self {
            KernelKind::Jaccard => jaccard_kernel(x, y),
            KernelKind::Rbf { gamma } => rbf_kernel(x, y, gamma),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    pub kind: KernelKind,
    pub ids: Vec<String>,
    values: Vec<f64>,
}

impl KernelMatrix {
    /// Fills the upper triangle in parallel and mirrors it.
    pub fn compute(kind: KernelKind, ids: Vec<String>, vectors: &[Vec<f64>]) -> Result<Self> {
        let n = vectors.len();
        if ids.len() != n {
            return Err(Error::InvalidData("one id per vector is required".into()));
        }
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| (i..n).map(|j| kind.eval(&vectors[i], &vectors[j])).collect())
            .collect::<Result<_>>()?;
        let mut values = vec![0.0; n * n];
        for (i, row) in rows.into_iter().enumerate() {
            for (off, v) in row.into_iter().enumerate() {
                let j = i + off;
                values[i * n + j] = v;
                values[j * n + i] = v;
            }
        }
        Ok(KernelMatrix { kind, ids, values })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.len();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "kernel {} {}", self.kind, self.len()).unwrap();
        writeln!(out, "# ids {}", self.ids.join(" ")).unwrap();
        for i in 0..self.len() {
            writeln!(out, "{}", join_f64(self.row(i))).unwrap();
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let ids: Vec<String> = text
            .lines()
            .find_map(|l| l.trim().strip_prefix("# ids"))
            .map(|rest| rest.split_whitespace().map(str::to_owned).collect())
            .unwrap_or_default();
        let mut records = Records::new(text);
        let (line, toks) = records.expect("kernel")?;
        let kind = match (toks.first().copied(), toks.get(1).copied()) {
            (Some("jaccard"), _) => KernelKind::Jaccard,
            (Some("rbf"), Some(param)) => {
                let g = param
                    .strip_prefix("gamma=")
                    .ok_or_else(|| Error::ModelFormat(format!("line {line}: expected gamma=<value>")))?;
                KernelKind::Rbf {
                    gamma: parse_tok(Some(&g), line, "gamma")?,
                }
            }
            _ => return Err(Error::ModelFormat(format!("line {line}: unknown kernel"))),
        };
        let n: usize = parse_tok(toks.get(2), line, "matrix size")?;
        let ids = if ids.len() == n {
            ids
        } else {
            (0..n).map(|i| i.to_string()).collect()
        };
        let mut values = Vec::with_capacity(n * n);
        for _ in 0..n {
            let (line, toks) = records.next_tokens()?;
            values.extend(parse_floats(&toks, line, n)?);
        }
        Ok(KernelMatrix { kind, ids, values })
    }
}

pub fn export_kernel_matrix<W: Write>(matrix: &KernelMatrix, mut sink: W) -> Result<()> {
    sink.write_all(matrix.to_text().as_bytes())?;
    Ok(())
}
