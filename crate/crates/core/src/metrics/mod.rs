//! kNN-hypersphere precision / recall and the Frechet distance between
//! Gaussian fits of two feature sets.

mod embed;
mod fid;
mod knn;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::error::{Error, Result};

pub use embed::{Embedder, RandomProjection};
pub use fid::{fid, gaussian_stats, matrix_sqrt_psd, GaussianStats};
pub use knn::{knn_radius, membership, precision_recall};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Generated,
    Real,
}

/// `n` feature vectors of dimension `d`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    dim: usize,
    data: Vec<f64>,
    source: Source,
}

impl FeatureSet {
    pub fn new(dim: usize, data: Vec<f64>, source: Source) -> Result<Self> {
        if dim == 0 || !data.len().is_multiple_of(dim) {
            return Err(Error::shape(
                "feature_set",
                format!("{} values do not form rows of dimension {dim}", data.len()),
            ));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("feature_set", "non-finite feature value"));
        }
        Ok(FeatureSet { dim, data, source })
    }

    pub fn from_rows(rows: &[Vec<f64>], source: Source) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::shape("feature_set", "rows differ in length"));
        }
        FeatureSet::new(dim, rows.concat(), source)
    }

    /// Text with a first line `n d` followed by `n` rows of `d` numbers.
    /// Errors name the offending line.
    pub fn parse(text: &str, source: Source) -> Result<Self> {
        let bad = |line: usize, detail: String| Error::invalid("embedding_file", format!("line {line}: {detail}"));
        let mut tokens = text
            .lines()
            .enumerate()
            .flat_map(|(i, l)| l.split_whitespace().map(move |t| (i + 1, t)));
        let mut header = |what: &str| -> Result<usize> {
            match tokens.next() {
                Some((line, t)) => t.parse().map_err(|_| bad(line, format!("invalid {what} {t:?} in header"))),
                None => Err(bad(1, format!("missing {what} in header"))),
            }
        };
        let n = header("row count")?;
        let d = header("dimension")?;
        let mut data = Vec::with_capacity(n.saturating_mul(d).min(1 << 24));
        let mut last = 1;
        for (line, t) in tokens {
            last = line;
            if data.len() == n * d {
                return Err(bad(line, format!("header declares {n}x{d} values, found more")));
            }
            data.push(t.parse::<f64>().map_err(|_| bad(line, format!("invalid number {t:?}")))?);
        }
        if data.len() != n * d {
            return Err(bad(last, format!("header declares {n}x{d} values, found {}", data.len())));
        }
        FeatureSet::new(d, data, source)
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn source(&self) -> Source {
        self.source
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    /// First `n` rows.
    pub fn truncated(&self, n: usize) -> FeatureSet {
        FeatureSet {
            dim: self.dim,
            data: self.data[..n.min(self.len()) * self.dim].to_vec(),
            source: self.source,
        }
    }
}

/// Euclidean distance, accumulated in index order.
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        s += d * d;
    }
    num_traits::Float::sqrt(s)
}

/// Metric values with the settings that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub precision: f64,
    pub recall: f64,
    pub fid: f64,
    pub k: usize,
    pub embedder: String,
    pub n: usize,
    pub seed: u64,
    /// Further `key=value` lines identifying the run.
    pub fingerprint: Vec<(String, String)>,
}

impl Report {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "precision={:.16e}", self.precision);
        let _ = writeln!(s, "recall={:.16e}", self.recall);
        let _ = writeln!(s, "fid={:.16e}", self.fid);
        let _ = writeln!(s, "k={}", self.k);
        let _ = writeln!(s, "embedder={}", self.embedder);
        let _ = writeln!(s, "n={}", self.n);
        let _ = writeln!(s, "seed={}", self.seed);
        for (k, v) in &self.fingerprint {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }
}
