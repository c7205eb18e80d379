//! Reproduction pipelines: the closed-form distance table, sensitivity
//! sweeps over `(ρ₁, ρ₂)`, the six-copula benchmark and end-to-end
//! clustering.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::{cut, ward_linkage, Dendrogram, Partition};
use crate::copula::{
    empirical_copula_histogram, fit_gaussian_copula, pseudo_observations, sample_gaussian_copula,
    EmpiricalCopulaHistogram, FitMethod, GaussianCopulaModel, DEFAULT_BINS,
};
use crate::distances::{
    gaussian_distance, hellinger_squared, pairwise_matrix, CopulaSummaries, DistanceKind,
    DistanceMatrix, GroundMetric, KL_REJECTION,
};
use crate::error::{Error, Result};
use crate::linalg::SymMatrix;

pub const RHO_A: f64 = 0.5;
pub const RHO_B: f64 = 0.99;
pub const RHO_C: f64 = 0.9999;

pub const DEFAULT_RHOS: [f64; 6] = [0.1, 0.2, 0.6, 0.7, 0.99, 0.9999];
pub const DEFAULT_PER_CLUSTER: usize = 5;
pub const DEFAULT_LENGTH: usize = 2500;
pub const DEFAULT_SWEEP_HI: f64 = 0.995;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub kind: DistanceKind,
    pub d_ab: f64,
    pub d_bc: f64,
    /// `d_ab > d_bc`: the pair with mild dependence looks farther apart
    /// than the two strongly dependent ones.
    pub reversed: bool,
}

/// The six closed-form distances for the pairs `(R_A, R_B)` and `(R_B, R_C)`.
///
/// The Hellinger row reports the squared Hellinger distance `1 − BC`
/// (the f-divergence normalization), as in the published table.
pub fn table1_report() -> Vec<Table1Row> {
    let (a, b, c) = (
        SymMatrix::correlation_2x2(RHO_A),
        SymMatrix::correlation_2x2(RHO_B),
        SymMatrix::correlation_2x2(RHO_C),
    );
    DistanceKind::CLOSED_FORM
        .iter()
        .map(|&kind| {
            let eval = |x: &SymMatrix, y: &SymMatrix| match kind {
                DistanceKind::Hellinger => hellinger_squared(x, y),
                _ => gaussian_distance(kind, x, y),
            };
            let d_ab = eval(&a, &b).expect("fixtures are strictly positive definite");
            let d_bc = eval(&b, &c).expect("fixtures are strictly positive definite");
            Table1Row {
                kind,
                d_ab,
                d_bc,
                reversed: d_ab > d_bc,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub kind: DistanceKind,
    /// Uniform grid on `[0, hi]`.
    pub rhos: Vec<f64>,
    /// Row-major `G × G`; entry `(i, j)` is `D(R(ρᵢ), R(ρⱼ))`.
    pub values: Vec<f64>,
}

impl SweepGrid {
    pub fn size(&self) -> usize {
        self.rhos.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.rhos.len() + j]
    }
}

pub fn sweep(kind: DistanceKind, grid: usize, hi: f64) -> Result<SweepGrid> {
    if matches!(kind, DistanceKind::Emd | DistanceKind::Kl) {
        return Err(Error::UnsupportedKind(format!(
            "sweep needs a symmetric closed-form kind, got {kind}"
        )));
    }
    if grid < 2 {
        return Err(Error::InvalidInput(format!(
            "grid must be at least 2, got {grid}"
        )));
    }
    if !(hi > 0.0 && hi < 1.0) {
        return Err(Error::DomainError(format!(
            "upper correlation {hi} must lie in (0, 1)"
        )));
    }
    let rhos: Vec<f64> = (0..grid)
        .map(|i| hi * i as f64 / (grid - 1) as f64)
        .collect();
    let mats: Vec<SymMatrix> = rhos
        .iter()
        .map(|&r| SymMatrix::correlation_2x2(r))
        .collect();
    let upper: Vec<Vec<f64>> = (0..grid)
        .into_par_iter()
        .map(|i| {
            ((i + 1)..grid)
                .map(|j| gaussian_distance(kind, &mats[i], &mats[j]))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let mut values = vec![0.0; grid * grid];
    for (i, row) in upper.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            let j = i + 1 + off;
            values[i * grid + j] = v;
            values[j * grid + i] = v;
        }
    }
    Ok(SweepGrid { kind, rhos, values })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkObject {
    pub label: String,
    pub rho: f64,
    /// `T` rows of bivariate copula observations.
    pub series: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkDataset {
    pub objects: Vec<BenchmarkObject>,
    pub rhos: Vec<f64>,
    pub per_cluster: usize,
    pub length: usize,
    pub seed: u64,
}

/// FNV-1a, used because it is stable across platforms and releases.
fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

pub fn object_label(rho: f64, replicate: usize) -> String {
    format!("rho{rho}_{replicate:02}")
}

pub fn object_seed(seed: u64, label: &str) -> u64 {
    seed ^ fnv1a64(label.as_bytes())
}

pub fn generate_benchmark(
    rhos: &[f64],
    per_cluster: usize,
    length: usize,
    seed: u64,
) -> Result<BenchmarkDataset> {
    if rhos.is_empty() {
        return Err(Error::InvalidInput("no correlations given".into()));
    }
    if let Some(r) = rhos.iter().find(|r| !(r.abs() < 1.0)) {
        return Err(Error::DomainError(format!(
            "correlation {r} must lie in (-1, 1)"
        )));
    }
    if per_cluster < 1 {
        return Err(Error::InvalidInput("per_cluster must be at least 1".into()));
    }
    if length < 100 {
        return Err(Error::TooFewSamples {
            needed: 100,
            got: length,
        });
    }
    let specs: Vec<(String, f64)> = rhos
        .iter()
        .flat_map(|&rho| (0..per_cluster).map(move |rep| (object_label(rho, rep), rho)))
        .collect();
    let objects = specs
        .into_par_iter()
        .map(|(label, rho)| {
            let model = GaussianCopulaModel::bivariate(rho)?;
            let series = sample_gaussian_copula(&model, length, object_seed(seed, &label))?;
            Ok(BenchmarkObject { label, rho, series })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BenchmarkDataset {
        objects,
        rhos: rhos.to_vec(),
        per_cluster,
        length,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub kind: DistanceKind,
    pub fit: FitMethod,
    pub k: usize,
    pub bins: usize,
    pub ground: GroundMetric,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            kind: DistanceKind::W2,
            fit: FitMethod::NormalScores,
            k: 3,
            bins: DEFAULT_BINS,
            ground: GroundMetric::Euclidean,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub distances: DistanceMatrix,
    pub dendrogram: Dendrogram,
    pub partition: Partition,
}

fn tag(label: &str, e: Error) -> Error {
    Error::Object {
        label: label.to_string(),
        source: Box::new(e),
    }
}

/// Ranks → (Gaussian fit | histogram) → pairwise distances → Ward → cut.
pub fn run_pipeline_on(
    objects: &[(String, Vec<Vec<f64>>)],
    config: &PipelineConfig,
) -> Result<PipelineOutput> {
    let labels: Vec<String> = objects.iter().map(|(l, _)| l.clone()).collect();
    if config.k < 1 || config.k > objects.len() {
        return Err(Error::InvalidK {
            k: config.k,
            n: objects.len(),
        });
    }
    let distances = if config.kind.uses_histograms() {
        let hists: Vec<EmpiricalCopulaHistogram> = objects
            .par_iter()
            .map(|(label, series)| {
                pseudo_observations(series)
                    .and_then(|u| empirical_copula_histogram(&u, config.bins))
                    .map_err(|e| tag(label, e))
            })
            .collect::<Result<_>>()?;
        pairwise_matrix(
            &labels,
            CopulaSummaries::Histograms {
                histograms: &hists,
                ground: config.ground,
            },
            config.kind,
        )?
    } else {
        if config.kind == DistanceKind::Kl {
            // Fail before fitting anything.
            return Err(Error::UnsupportedKind(KL_REJECTION.into()));
        }
        let models: Vec<GaussianCopulaModel> = objects
            .par_iter()
            .map(|(label, series)| {
                pseudo_observations(series)
                    .and_then(|u| fit_gaussian_copula(&u, config.fit))
                    .map_err(|e| tag(label, e))
            })
            .collect::<Result<_>>()?;
        pairwise_matrix(&labels, CopulaSummaries::Gaussian(&models), config.kind)?
    };
    let dendrogram = ward_linkage(&distances)?;
    let partition = cut(&dendrogram, config.k)?;
    Ok(PipelineOutput {
        distances,
        dendrogram,
        partition,
    })
}

pub fn run_pipeline(data: &BenchmarkDataset, config: &PipelineConfig) -> Result<PipelineOutput> {
    let objects: Vec<(String, Vec<Vec<f64>>)> = data
        .objects
        .iter()
        .map(|o| (o.label.clone(), o.series.clone()))
        .collect();
    run_pipeline_on(&objects, config)
}

/// Groupings of the default correlations reported for Ward with k = 3.
pub fn expected_grouping(kind: DistanceKind) -> Option<Vec<Vec<f64>>> {
    match kind {
        DistanceKind::FisherRao => Some(vec![vec![0.1, 0.2, 0.6, 0.7], vec![0.99], vec![0.9999]]),
        DistanceKind::W2 => Some(vec![vec![0.1, 0.2], vec![0.6, 0.7], vec![0.99, 0.9999]]),
        _ => None,
    }
}

/// Ground-truth cluster ids for each object under a grouping of correlations.
pub fn grouping_labels(data: &BenchmarkDataset, grouping: &[Vec<f64>]) -> Result<Vec<usize>> {
    data.objects
        .iter()
        .map(|o| {
            grouping
                .iter()
                .position(|g| g.contains(&o.rho))
                .ok_or_else(|| {
                    Error::InvalidInput(format!("correlation {} not in grouping", o.rho))
                })
        })
        .collect()
}

/// Adjusted Rand index between two labelings of the same objects.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![0u64; ka * kb];
    for (&x, &y) in a.iter().zip(b) {
        table[x * kb + y] += 1;
    }
    let choose2 = |v: u64| (v * v.saturating_sub(1) / 2) as f64;
    let index: f64 = table.iter().map(|&v| choose2(v)).sum();
    let rows: f64 = (0..ka)
        .map(|i| choose2(table[i * kb..(i + 1) * kb].iter().sum()))
        .sum();
    let cols: f64 = (0..kb)
        .map(|j| choose2((0..ka).map(|i| table[i * kb + j]).sum()))
        .sum();
    let total = choose2(n as u64);
    let expected = rows * cols / total;
    let max = 0.5 * (rows + cols);
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}
