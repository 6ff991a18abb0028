//! Physical-identity (P-ID) similarity.
//!
//! Each target exposes `M` feature vectors. Features are compared with a
//! rescaled cosine, weighted by how well each feature separates the fleet
//! (its prevalence), and combined per target pair as a weighted harmonic
//! mean. The harmonic mean lets a single badly matching feature pull the
//! pair's similarity down even when the other features agree.

use nalgebra::DMatrix;

use crate::{Error, Result};

/// Lower clamp of the per-feature similarity.
pub const SIMILARITY_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    /// `rows[k][m]` is feature `m` of target `k`.
    rows: Vec<Vec<Vec<f64>>>,
}

impl FeatureSet {
    pub fn new(rows: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        if let Some(first) = rows.first() {
            for (k, row) in rows.iter().enumerate() {
                if row.len() != first.len() {
                    return Err(Error::Dimension {
                        expected: first.len(),
                        got: row.len(),
                    });
                }
                for (m, f) in row.iter().enumerate() {
                    if f.len() != first[m].len() {
                        return Err(Error::DegenerateFeature(format!(
                            "target {k} feature {m} has length {}, expected {}",
                            f.len(),
                            first[m].len()
                        )));
                    }
                }
            }
        }
        Ok(Self { rows })
    }

    pub fn targets(&self) -> usize {
        self.rows.len()
    }

    pub fn features(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn get(&self, k: usize, m: usize) -> &[f64] {
        &self.rows[k][m]
    }

    /// Keeps only feature `m`.
    pub fn select(&self, m: usize) -> FeatureSet {
        FeatureSet {
            rows: self.rows.iter().map(|r| vec![r[m].clone()]).collect(),
        }
    }
}

/// `(1 + cos∠(a, b)) / 2`, clamped to `[SIMILARITY_FLOOR, 1]`.
pub fn feature_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            expected: a.len(),
            got: b.len(),
        });
    }
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(na > 0.0 && nb > 0.0) {
        return Err(Error::DegenerateFeature("zero-length feature vector".into()));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let cos = (dot / (na * nb)).clamp(-1.0, 1.0);
    Ok((0.5 * (1.0 + cos)).clamp(SIMILARITY_FLOOR, 1.0))
}

/// Mean norm of feature `m` over all targets of `features`.
pub fn magnitude_anchor(features: &FeatureSet, m: usize) -> f64 {
    let k = features.targets();
    if k == 0 {
        return 0.0;
    }
    (0..k)
        .map(|t| features.get(t, m).iter().map(|x| x * x).sum::<f64>().sqrt())
        .sum::<f64>()
        / k as f64
}

/// Appends `anchor` as an extra component. Comparing anchored vectors makes
/// the cosine react to magnitude as well as direction; with an anchor taken
/// from the features themselves (see [`magnitude_anchor`]) a common scaling
/// of the fleet still leaves every similarity unchanged.
pub fn anchored(v: &[f64], anchor: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(v.len() + 1);
    out.extend_from_slice(v);
    out.push(anchor);
    out
}

/// Pairwise similarities of feature `m` within one set.
fn within_set(features: &FeatureSet, m: usize) -> Result<DMatrix<f64>> {
    let k = features.targets();
    let mut c = DMatrix::from_element(k, k, 1.0);
    for i in 0..k {
        for j in (i + 1)..k {
            let s = feature_similarity(features.get(i, m), features.get(j, m))?;
            c[(i, j)] = s;
            c[(j, i)] = s;
        }
    }
    Ok(c)
}

fn distinguishability_from(c: &DMatrix<f64>, k: usize) -> f64 {
    let n = c.nrows();
    (0..n)
        .filter(|&j| j != k)
        .map(|j| {
            let rest: f64 = (0..n)
                .filter(|&q| q != j && q != k)
                .map(|q| 1.0 - c[(k, q)])
                .product();
            c[(k, j)] * rest
        })
        .sum()
}

/// `P_k(m) = Σ_{j≠k} C(pf_k, pf_j) Π_{q≠j,k} (1 − C(pf_k, pf_q))`.
pub fn distinguishability(k: usize, m: usize, features: &FeatureSet) -> Result<f64> {
    if features.targets() < 2 {
        return Err(Error::NotApplicable(
            "distinguishability needs at least two targets".into(),
        ));
    }
    if k >= features.targets() || m >= features.features() {
        return Err(Error::Dimension {
            expected: features.targets(),
            got: k,
        });
    }
    Ok(distinguishability_from(&within_set(features, m)?, k))
}

/// Prevalence weights `w′`: target-averaged distinguishability, normalized
/// to sum to one. Falls back to uniform weights when every raw weight is 0.
pub fn feature_weights(features: &FeatureSet) -> Result<Vec<f64>> {
    let k = features.targets();
    if k < 2 {
        return Err(Error::NotApplicable(
            "feature weights need at least two targets".into(),
        ));
    }
    let mut raw = Vec::with_capacity(features.features());
    for m in 0..features.features() {
        let c = within_set(features, m)?;
        raw.push((0..k).map(|t| distinguishability_from(&c, t)).sum::<f64>() / k as f64);
    }
    Ok(normalize_weights(&raw))
}

pub fn normalize_weights(raw: &[f64]) -> Vec<f64> {
    let total: f64 = raw.iter().sum();
    if total > 0.0 && total.is_finite() {
        raw.iter().map(|w| w / total).collect()
    } else {
        vec![1.0 / raw.len() as f64; raw.len()]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    /// `s[(i, j)]`: measured target `i` against predicted target `j`.
    pub s: DMatrix<f64>,
    pub weights: Vec<f64>,
}

/// Weighted harmonic-mean similarity with weights taken from `measured`.
pub fn similarity_matrix(measured: &FeatureSet, predicted: &FeatureSet) -> Result<SimilarityMatrix> {
    check_compatible(measured, predicted)?;
    let weights = if measured.targets() >= 2 {
        feature_weights(measured)?
    } else {
        vec![1.0 / measured.features() as f64; measured.features()]
    };
    similarity_matrix_weighted(measured, predicted, weights)
}

/// As [`similarity_matrix`] with caller-supplied normalized weights.
pub fn similarity_matrix_weighted(
    measured: &FeatureSet,
    predicted: &FeatureSet,
    weights: Vec<f64>,
) -> Result<SimilarityMatrix> {
    check_compatible(measured, predicted)?;
    similarity_from_fn(measured.targets(), weights, |i, j, m| {
        feature_similarity(measured.get(i, m), predicted.get(j, m))
    })
}

/// Harmonic-mean aggregation over an arbitrary per-feature similarity
/// `c(i, j, m)`, for features that depend on the pair being compared.
pub fn similarity_from_fn<F>(k: usize, weights: Vec<f64>, c: F) -> Result<SimilarityMatrix>
where
    F: Fn(usize, usize, usize) -> Result<f64>,
{
    let mut s = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            let mut inv = 0.0;
            for (m, w) in weights.iter().enumerate() {
                if *w > 0.0 {
                    inv += w / c(i, j, m)?.max(SIMILARITY_FLOOR);
                }
            }
            s[(i, j)] = 1.0 / inv;
        }
    }
    Ok(SimilarityMatrix { s, weights })
}

fn check_compatible(a: &FeatureSet, b: &FeatureSet) -> Result<()> {
    if a.targets() != b.targets() {
        return Err(Error::Dimension {
            expected: a.targets(),
            got: b.targets(),
        });
    }
    if a.features() != b.features() {
        return Err(Error::Dimension {
            expected: a.features(),
            got: b.features(),
        });
    }
    Ok(())
}
