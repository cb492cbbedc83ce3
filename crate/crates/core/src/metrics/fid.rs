use alloc::format;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::FeatureSet;
use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-8;

/// Mean and covariance (divisor `n - 1`) of a feature set.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianStats {
    pub mu: DVector<f64>,
    pub cov: DMatrix<f64>,
}

pub fn gaussian_stats(set: &FeatureSet) -> Result<GaussianStats> {
    let (n, d) = (set.len(), set.dim());
    if n < 2 {
        return Err(Error::invalid("gaussian_stats", format!("need at least 2 vectors, got {n}")));
    }
    let mut mu = DVector::zeros(d);
    for row in set.rows() {
        for (m, v) in mu.iter_mut().zip(row) {
            *m += v;
        }
    }
    mu /= n as f64;
    let mut cov = DMatrix::zeros(d, d);
    for row in set.rows() {
        let centered = DVector::from_iterator(d, row.iter().zip(mu.iter()).map(|(v, m)| v - m));
        cov.ger(1.0, &centered, &centered, 1.0);
    }
    cov /= (n - 1) as f64;
    let cov = (&cov + cov.transpose()) * 0.5;
    Ok(GaussianStats { mu, cov })
}

/// Symmetric square root of a symmetric positive semi-definite matrix;
/// negative eigenvalues are treated as zero.
pub fn matrix_sqrt_psd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !m.is_square() {
        return Err(Error::shape("matrix_sqrt_psd", format!("{}x{} is not square", m.nrows(), m.ncols())));
    }
    let scale = m.amax().max(1.0);
    let asym = (m - m.transpose()).amax();
    if asym > SYMMETRY_TOL * scale {
        return Err(Error::invalid("matrix_sqrt_psd", format!("matrix is not symmetric (max deviation {asym:e})")));
    }
    let eig = SymmetricEigen::new(m.clone());
    let roots = eig.eigenvalues.map(|l| num_traits::Float::sqrt(l.max(0.0)));
    let v = &eig.eigenvectors;
    let s = v * DMatrix::from_diagonal(&roots) * v.transpose();
    Ok((&s + s.transpose()) * 0.5)
}

/// `|mu_r - mu_g|^2 + Tr(C_r + C_g - 2 (C_r C_g)^(1/2))`, with the trace of the
/// square root taken on the symmetric `C_r^(1/2) C_g C_r^(1/2)`.
pub fn fid(real: &GaussianStats, generated: &GaussianStats) -> Result<f64> {
    let d = real.mu.len();
    if generated.mu.len() != d || real.cov.shape() != (d, d) || generated.cov.shape() != (d, d) {
        return Err(Error::shape(
            "fid",
            format!("statistics of dimension {d} and {}", generated.mu.len()),
        ));
    }
    let root_r = matrix_sqrt_psd(&real.cov)?;
    let inner = &root_r * &generated.cov * &root_r;
    let inner = (&inner + inner.transpose()) * 0.5;
    let cross = matrix_sqrt_psd(&inner)?.trace();
    let mean_term = (&real.mu - &generated.mu).norm_squared();
    let traces = real.cov.trace() + generated.cov.trace();
    let value = mean_term + traces - 2.0 * cross;
    if value < 0.0 {
        // square roots of rank-deficient covariances lose about sqrt(eps) of their scale
        if value < -1e-6 * traces.max(1.0) {
            return Err(Error::invalid("fid", format!("negative distance {value:e}; covariances are not PSD")));
        }
        log::warn!("fid rounded to {value:e}; clamping to 0");
        return Ok(0.0);
    }
    Ok(value)
}
