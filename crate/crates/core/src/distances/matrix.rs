use rayon::prelude::*;

use super::{emd, gaussian_distance, DistanceKind, GroundMetric};
use crate::copula::{EmpiricalCopulaHistogram, GaussianCopulaModel};
use crate::error::{Error, Result};

pub const KL_REJECTION: &str =
    "kl is asymmetric and cannot fill a distance matrix; use jeffreys (its symmetrization) instead";

/// Symmetric, nonnegative, zero-diagonal dissimilarities with labels.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    labels: Vec<String>,
    values: Vec<f64>,
}

impl DistanceMatrix {
    /// Validates the invariants; row-major `values`.
    pub fn new(labels: Vec<String>, values: Vec<f64>) -> Result<Self> {
        let n = labels.len();
        if values.len() != n * n {
            return Err(Error::InvalidDistanceMatrix(format!(
                "{} labels but {} values",
                n,
                values.len()
            )));
        }
        for i in 0..n {
            if values[i * n + i] != 0.0 {
                return Err(Error::InvalidDistanceMatrix(format!(
                    "nonzero diagonal at {i}"
                )));
            }
            for j in 0..n {
                let v = values[i * n + j];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidDistanceMatrix(format!(
                        "entry ({i},{j}) = {v}"
                    )));
                }
                if v != values[j * n + i] {
                    return Err(Error::InvalidDistanceMatrix(format!(
                        "asymmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(DistanceMatrix { labels, values })
    }

    pub fn from_rows(labels: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        if rows.iter().any(|r| r.len() != labels.len()) {
            return Err(Error::InvalidDistanceMatrix("matrix is not square".into()));
        }
        Self::new(labels, rows.concat())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.labels.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.labels.len();
        &self.values[i * n..(i + 1) * n]
    }

    /// Same matrix with rows/columns reordered so that new index `k` is old
    /// index `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.len();
        let mut seen = vec![false; n];
        if perm.len() != n
            || perm
                .iter()
                .any(|&p| p >= n || std::mem::replace(&mut seen[p], true))
        {
            return Err(Error::InvalidInput("not a permutation".into()));
        }
        let labels = perm.iter().map(|&p| self.labels[p].clone()).collect();
        let mut values = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                values[a * n + b] = self.get(perm[a], perm[b]);
            }
        }
        Ok(DistanceMatrix { labels, values })
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(
            self.labels.clone(),
            self.values.iter().map(|v| v * c).collect(),
        )
    }

    /// Largest off-diagonal entry with its (row, column), row < column.
    pub fn argmax(&self) -> Option<(usize, usize, f64)> {
        let n = self.len();
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..n {
            for j in (i + 1)..n {
                let v = self.get(i, j);
                if best.is_none_or(|(_, _, b)| v > b) {
                    best = Some((i, j, v));
                }
            }
        }
        best
    }
}

/// What the pairwise distances are computed from.
#[derive(Debug, Clone, Copy)]
pub enum CopulaSummaries<'a> {
    Gaussian(&'a [GaussianCopulaModel]),
    Histograms {
        histograms: &'a [EmpiricalCopulaHistogram],
        ground: GroundMetric,
    },
}

impl CopulaSummaries<'_> {
    fn len(&self) -> usize {
        match self {
            CopulaSummaries::Gaussian(m) => m.len(),
            CopulaSummaries::Histograms { histograms, .. } => histograms.len(),
        }
    }
}

/// All pairwise distances, each unordered pair evaluated once. Pairs are
/// evaluated in parallel; the result depends only on the inputs.
pub fn pairwise_matrix(
    labels: &[String],
    items: CopulaSummaries<'_>,
    kind: DistanceKind,
) -> Result<DistanceMatrix> {
    let n = items.len();
    if labels.len() != n {
        return Err(Error::InvalidInput(format!(
            "{} labels for {n} objects",
            labels.len()
        )));
    }
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    if kind == DistanceKind::Kl {
        return Err(Error::UnsupportedKind(KL_REJECTION.into()));
    }
    match (&items, kind.uses_histograms()) {
        (CopulaSummaries::Gaussian(_), true) => {
            return Err(Error::UnsupportedKind(
                "emd needs empirical copula histograms, not fitted Gaussian models".into(),
            ))
        }
        (CopulaSummaries::Histograms { .. }, false) => {
            return Err(Error::UnsupportedKind(format!(
                "{kind} is a closed form between Gaussian copulas; histograms only support emd"
            )))
        }
        _ => {}
    }

    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let d = match items {
                CopulaSummaries::Gaussian(models) => gaussian_distance(
                    kind,
                    models[i].correlation.matrix(),
                    models[j].correlation.matrix(),
                ),
                CopulaSummaries::Histograms { histograms, ground } => {
                    emd(&histograms[i], &histograms[j], ground).map(|(d, _)| d)
                }
            };
            d.map_err(|e| Error::Pair {
                left: labels[i].clone(),
                right: labels[j].clone(),
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;

    let mut full = vec![0.0; n * n];
    for (&(i, j), v) in pairs.iter().zip(values) {
        full[i * n + j] = v;
        full[j * n + i] = v;
    }
    DistanceMatrix::new(labels.to_vec(), full)
}
