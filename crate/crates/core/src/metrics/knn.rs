use alloc::format;
use alloc::vec::Vec;

use super::{distance, FeatureSet};
use crate::error::{Error, Result};

/// Distance from every vector to its `k`-th nearest other vector in the set.
pub fn knn_radius(set: &FeatureSet, k: usize) -> Result<Vec<f64>> {
    let n = set.len();
    if k == 0 || n <= k {
        return Err(Error::invalid(
            "knn_radius",
            format!("need k >= 1 and more than k = {k} vectors, got {n}"),
        ));
    }
    let mut dists = Vec::with_capacity(n - 1);
    Ok((0..n)
        .map(|i| {
            dists.clear();
            dists.extend((0..n).filter(|&j| j != i).map(|j| distance(set.row(i), set.row(j))));
            let (_, kth, _) = dists.select_nth_unstable_by(k - 1, f64::total_cmp);
            *kth
        })
        .collect())
}

/// Whether `phi` lies in the hypersphere of any member of `set`.
pub fn membership(phi: &[f64], set: &FeatureSet, radii: &[f64]) -> bool {
    set.rows().zip(radii).any(|(other, &r)| distance(phi, other) <= r)
}

/// `(precision, recall)`: the fraction of generated vectors inside the real
/// manifold and of real vectors inside the generated one.
pub fn precision_recall(generated: &FeatureSet, real: &FeatureSet, k: usize) -> Result<(f64, f64)> {
    if generated.dim() != real.dim() {
        return Err(Error::shape(
            "precision_recall",
            format!("feature dimensions {} and {}", generated.dim(), real.dim()),
        ));
    }
    let real_radii = knn_radius(real, k)?;
    let gen_radii = knn_radius(generated, k)?;
    let coverage = |of: &FeatureSet, set: &FeatureSet, radii: &[f64]| {
        of.rows().filter(|phi| membership(phi, set, radii)).count() as f64 / of.len() as f64
    };
    Ok((
        coverage(generated, real, &real_radii),
        coverage(real, generated, &gen_radii),
    ))
}
