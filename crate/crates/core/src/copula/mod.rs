//! Copula data model.
//!
//! Data enter as a `T × d` series, are mapped to pseudo-observations by
//! per-column ranks (the empirical probability integral transform), and are
//! then summarized either parametrically by a [`GaussianCopulaModel`] or
//! nonparametrically by an [`EmpiricalCopulaHistogram`].

pub mod normal;
mod quadrature;
mod sampling;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, SymMatrix};

pub use normal::{std_normal_cdf, std_normal_pdf, std_normal_quantile};
pub use sampling::{sample_gaussian_copula, NormalStream, RNG_ALGORITHM};

/// Histograms never exceed this many cells.
pub const MAX_HISTOGRAM_CELLS: usize = 1 << 20;

/// Floor applied to eigenvalues when projecting onto valid correlation
/// matrices.
pub const PROJECTION_EIGEN_FLOOR: f64 = 1e-10;

pub const DEFAULT_BINS: usize = 16;

/// A correlation matrix: symmetric, unit diagonal, PSD.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix(SymMatrix);

impl CorrelationMatrix {
    pub fn new(m: SymMatrix) -> Result<Self> {
        let d = m.dim();
        if d < 2 {
            return Err(Error::InvalidMatrix(
                "correlation needs dimension ≥ 2".into(),
            ));
        }
        for i in 0..d {
            if m.get(i, i) != 1.0 {
                return Err(Error::InvalidMatrix(format!(
                    "diagonal entry {i} is {} (must be 1)",
                    m.get(i, i)
                )));
            }
            for j in 0..i {
                if m.get(i, j).abs() > 1.0 {
                    return Err(Error::InvalidMatrix(format!(
                        "entry ({i},{j}) = {} outside [-1, 1]",
                        m.get(i, j)
                    )));
                }
            }
        }
        let min = linalg::eigen_sym(&m)?.min_value();
        if min < -linalg::PSD_CLAMP_TOL {
            return Err(Error::NotPositiveSemidefinite(min));
        }
        Ok(CorrelationMatrix(m))
    }

    /// `[[1, rho], [rho, 1]]`.
    pub fn bivariate(rho: f64) -> Result<Self> {
        if !(rho.abs() <= 1.0) {
            return Err(Error::DomainError(format!(
                "correlation {rho} outside [-1, 1]"
            )));
        }
        Ok(CorrelationMatrix(SymMatrix::correlation_2x2(rho)))
    }

    /// Nearest valid correlation matrix in the simple clamp-and-rescale
    /// sense: eigenvalues floored at [`PROJECTION_EIGEN_FLOOR`], then the
    /// diagonal rescaled back to one.
    pub fn project(m: &SymMatrix) -> Result<Self> {
        let d = m.dim();
        let eig = linalg::eigen_sym(m)?;
        let clamped = eig.reconstruct_with(|l| l.max(PROJECTION_EIGEN_FLOOR));
        let scale: Vec<f64> = (0..d).map(|i| 1.0 / clamped.get(i, i).sqrt()).collect();
        let mut data = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                data[i * d + j] = if i == j {
                    1.0
                } else {
                    (clamped.get(i, j) * scale[i] * scale[j]).clamp(-1.0, 1.0)
                };
            }
        }
        let (sym, _) = SymMatrix::symmetrized(d, data)?;
        Ok(CorrelationMatrix(sym))
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0.get(i, j)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitMethod {
    /// Pearson correlation of the normal scores `Φ⁻¹(u)`.
    NormalScores,
    /// Pairwise Kendall τ mapped through `sin(πτ/2)`.
    KendallInversion,
    /// Parameters given directly, no estimation.
    Exact,
}

impl FitMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            FitMethod::NormalScores => "normal-scores",
            FitMethod::KendallInversion => "kendall-inversion",
            FitMethod::Exact => "exact",
        }
    }
}

impl fmt::Display for FitMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FitMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal-scores" | "normal" => Ok(FitMethod::NormalScores),
            "kendall-inversion" | "kendall" => Ok(FitMethod::KendallInversion),
            "exact" => Ok(FitMethod::Exact),
            other => Err(Error::InvalidInput(format!("unknown fit method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianCopulaModel {
    pub correlation: CorrelationMatrix,
    pub fit_method: FitMethod,
    pub sample_size: Option<usize>,
}

impl GaussianCopulaModel {
    pub fn exact(correlation: CorrelationMatrix) -> Self {
        GaussianCopulaModel {
            correlation,
            fit_method: FitMethod::Exact,
            sample_size: None,
        }
    }

    pub fn bivariate(rho: f64) -> Result<Self> {
        Ok(Self::exact(CorrelationMatrix::bivariate(rho)?))
    }

    pub fn dim(&self) -> usize {
        self.correlation.dim()
    }
}

/// Rank-transformed data in the open unit cube, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoObservations {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl PseudoObservations {
    /// Wraps values already in `(0, 1)`, e.g. draws from a copula sampler.
    pub fn from_unit_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let (r, c, data) = flatten(rows)?;
        if let Some(v) = data.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
            return Err(Error::InvalidInput(format!("value {v} outside (0, 1)")));
        }
        Ok(PseudoObservations {
            rows: r,
            cols: c,
            data,
        })
    }

    pub fn len(&self) -> usize {
        self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    pub fn dim(&self) -> usize {
        self.cols
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.cols..(t + 1) * self.cols]
    }

    pub fn get(&self, t: usize, j: usize) -> f64 {
        self.data[t * self.cols + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|t| self.get(t, j)).collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols)
    }
}

fn flatten(rows: &[Vec<f64>]) -> Result<(usize, usize, Vec<f64>)> {
    let cols = rows.first().map_or(0, Vec::len);
    if cols == 0 {
        return Err(Error::InvalidInput("series has no columns".into()));
    }
    if let Some((t, _)) = rows.iter().enumerate().find(|(_, r)| r.len() != cols) {
        return Err(Error::InvalidInput(format!(
            "row {t} has a different number of columns than row 0"
        )));
    }
    Ok((rows.len(), cols, rows.concat()))
}

/// Average ranks (1-based) of `values`.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // Positions start..end share the mean of ranks start+1..=end.
        let avg = (start + end + 1) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = avg;
        }
        start = end;
    }
    ranks
}

/// Maps each column to `rank / (T + 1)`, ties sharing their average rank.
pub fn pseudo_observations(series: &[Vec<f64>]) -> Result<PseudoObservations> {
    if series.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: series.len(),
        });
    }
    let (rows, cols, raw) = flatten(series)?;
    if let Some(v) = raw.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite value {v}")));
    }
    let denom = (rows + 1) as f64;
    let mut data = vec![0.0; rows * cols];
    for j in 0..cols {
        let col: Vec<f64> = (0..rows).map(|t| raw[t * cols + j]).collect();
        for (t, r) in average_ranks(&col).into_iter().enumerate() {
            data[t * cols + j] = r / denom;
        }
    }
    Ok(PseudoObservations { rows, cols, data })
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    sxy / (sxx * syy).sqrt()
}

/// Kendall's τ-b, counting all pairs.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    let (mut concordant, mut discordant) = (0i64, 0i64);
    let (mut ties_x, mut ties_y) = (0i64, 0i64);
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            match (dx == 0.0, dy == 0.0) {
                (true, true) => {}
                (true, false) => ties_x += 1,
                (false, true) => ties_y += 1,
                (false, false) => {
                    if (dx > 0.0) == (dy > 0.0) {
                        concordant += 1;
                    } else {
                        discordant += 1;
                    }
                }
            }
        }
    }
    let n1 = (concordant + discordant + ties_x) as f64;
    let n2 = (concordant + discordant + ties_y) as f64;
    (concordant - discordant) as f64 / (n1 * n2).sqrt()
}

/// Gaussian-copula correlation implied by Kendall's τ.
pub fn kendall_to_correlation(tau: f64) -> f64 {
    (std::f64::consts::FRAC_PI_2 * tau).sin()
}

pub fn fit_gaussian_copula(
    u: &PseudoObservations,
    method: FitMethod,
) -> Result<GaussianCopulaModel> {
    let t = u.len();
    if t < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: t });
    }
    let d = u.dim();
    if d < 2 {
        return Err(Error::InvalidInput("need at least two columns".into()));
    }
    let mut columns: Vec<Vec<f64>> = (0..d).map(|j| u.column(j)).collect();
    for (j, col) in columns.iter().enumerate() {
        if col.iter().all(|v| *v == col[0]) {
            return Err(Error::DegenerateInput(format!("column {j} is constant")));
        }
    }

    let pair: Box<dyn Fn(&[f64], &[f64]) -> f64> = match method {
        FitMethod::NormalScores => {
            for col in &mut columns {
                for v in col.iter_mut() {
                    *v = std_normal_quantile(*v)?;
                }
            }
            Box::new(pearson)
        }
        FitMethod::KendallInversion => Box::new(|x, y| kendall_to_correlation(kendall_tau(x, y))),
        FitMethod::Exact => {
            return Err(Error::InvalidInput(
                "`exact` is not an estimator; build the model directly".into(),
            ))
        }
    };

    let mut data = vec![0.0; d * d];
    for i in 0..d {
        data[i * d + i] = 1.0;
        for j in (i + 1)..d {
            let r = pair(&columns[i], &columns[j]);
            if !r.is_finite() {
                return Err(Error::DegenerateInput(format!(
                    "correlation of columns {i} and {j} is undefined"
                )));
            }
            data[i * d + j] = r;
            data[j * d + i] = r;
        }
    }
    let raw = SymMatrix::new(d, data)?;
    Ok(GaussianCopulaModel {
        correlation: CorrelationMatrix::project(&raw)?,
        fit_method: method,
        sample_size: Some(t),
    })
}

/// Gaussian copula density `|R|^{-1/2} exp(-½ zᵀ(R⁻¹ − I)z)`, `z = Φ⁻¹(u)`.
pub fn gaussian_copula_density(model: &GaussianCopulaModel, u: &[f64]) -> Result<f64> {
    let d = model.dim();
    if u.len() != d {
        return Err(Error::InvalidInput(format!(
            "point has {} coordinates, model has dimension {d}",
            u.len()
        )));
    }
    if let Some(&b) = u.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
        return Err(Error::BoundaryPoint(b));
    }
    let l = linalg::cholesky(model.correlation.matrix())?;
    let z: Vec<f64> = u
        .iter()
        .map(|&v| std_normal_quantile(v))
        .collect::<Result<_>>()?;
    // ‖L⁻¹z‖² = zᵀR⁻¹z
    let mut w = z.clone();
    for i in 0..d {
        let mut s = w[i];
        for k in 0..i {
            s -= l.get(i, k) * w[k];
        }
        w[i] = s / l.get(i, i);
    }
    let quad_inv: f64 = w.iter().map(|v| v * v).sum();
    let quad: f64 = z.iter().map(|v| v * v).sum();
    let half_log_det: f64 = (0..d).map(|i| l.get(i, i).ln()).sum();
    Ok((-half_log_det - 0.5 * (quad_inv - quad)).exp())
}

/// Normalized mass on a `B^d` grid over `[0,1]^d`. Flat index is row-major
/// with axis 0 most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCopulaHistogram {
    dim: usize,
    bins: usize,
    mass: Vec<f64>,
}

fn grid_cells(bins: usize, dim: usize) -> Result<usize> {
    if bins < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 bins per axis, got {bins}"
        )));
    }
    if dim == 0 {
        return Err(Error::InvalidInput(
            "histogram dimension must be ≥ 1".into(),
        ));
    }
    let too_large = Error::GridTooLarge {
        bins,
        dim,
        limit: MAX_HISTOGRAM_CELLS,
    };
    let cells = u32::try_from(dim)
        .ok()
        .and_then(|e| bins.checked_pow(e))
        .ok_or_else(|| too_large.clone())?;
    if cells > MAX_HISTOGRAM_CELLS {
        return Err(too_large);
    }
    Ok(cells)
}

impl EmpiricalCopulaHistogram {
    /// Validates nonnegativity and unit total (within 1e-9).
    pub fn from_mass(dim: usize, bins: usize, mass: Vec<f64>) -> Result<Self> {
        let cells = grid_cells(bins, dim)?;
        if mass.len() != cells {
            return Err(Error::InvalidInput(format!(
                "expected {cells} cells, got {}",
                mass.len()
            )));
        }
        if let Some(m) = mass.iter().find(|m| !(m.is_finite() && **m >= 0.0)) {
            return Err(Error::InvalidInput(format!("invalid cell mass {m}")));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!("total mass {total} is not 1")));
        }
        Ok(EmpiricalCopulaHistogram { dim, bins, mass })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bins_per_axis(&self) -> usize {
        self.bins
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn cell_count(&self) -> usize {
        self.mass.len()
    }

    pub fn flat_index(&self, cell: &[usize]) -> usize {
        cell.iter().fold(0, |acc, &k| acc * self.bins + k)
    }

    pub fn cell_of(&self, mut flat: usize) -> Vec<usize> {
        let mut cell = vec![0; self.dim];
        for axis in (0..self.dim).rev() {
            cell[axis] = flat % self.bins;
            flat /= self.bins;
        }
        cell
    }

    /// Bin center `((k + 0.5) / B)` on every axis.
    pub fn center(&self, flat: usize) -> Vec<f64> {
        let b = self.bins as f64;
        self.cell_of(flat)
            .into_iter()
            .map(|k| (k as f64 + 0.5) / b)
            .collect()
    }

    pub fn get(&self, cell: &[usize]) -> f64 {
        self.mass[self.flat_index(cell)]
    }

    /// Mass summed over every axis except `axis`.
    pub fn marginal(&self, axis: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.bins];
        for (flat, m) in self.mass.iter().enumerate() {
            out[self.cell_of(flat)[axis]] += m;
        }
        out
    }
}

pub fn empirical_copula_histogram(
    u: &PseudoObservations,
    bins: usize,
) -> Result<EmpiricalCopulaHistogram> {
    let d = u.dim();
    let cells = grid_cells(bins, d)?;
    if u.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let b = bins as f64;
    let mut counts = vec![0u64; cells];
    for row in u.rows() {
        let flat = row.iter().fold(0, |acc, &v| {
            acc * bins + ((v * b).floor().max(0.0) as usize).min(bins - 1)
        });
        counts[flat] += 1;
    }
    let n = u.len() as f64;
    Ok(EmpiricalCopulaHistogram {
        dim: d,
        bins,
        mass: counts.into_iter().map(|c| c as f64 / n).collect(),
    })
}

/// Discretized Fréchet-Hoeffding upper bound: mass `1/B` on each diagonal
/// cell `(k, …, k)`.
pub fn comonotone_histogram(bins: usize, dim: usize) -> Result<EmpiricalCopulaHistogram> {
    let cells = grid_cells(bins, dim)?;
    let mut h = EmpiricalCopulaHistogram {
        dim,
        bins,
        mass: vec![0.0; cells],
    };
    for k in 0..bins {
        let flat = h.flat_index(&vec![k; dim]);
        h.mass[flat] = 1.0 / bins as f64;
    }
    Ok(h)
}

/// Exact cell probabilities of a bivariate Gaussian copula on a `B × B` grid,
/// obtained by one-dimensional quadrature of the conditional normal CDF.
pub fn gaussian_copula_histogram(
    model: &GaussianCopulaModel,
    bins: usize,
) -> Result<EmpiricalCopulaHistogram> {
    if model.dim() != 2 {
        return Err(Error::InvalidInput(
            "cell-integrated Gaussian copula histograms are bivariate only".into(),
        ));
    }
    let rho = model.correlation.get(0, 1);
    if !(rho.abs() < 1.0) {
        return Err(Error::NotPositiveDefinite {
            row: 1,
            pivot: 1.0 - rho * rho,
        });
    }
    grid_cells(bins, 2)?;
    let mass = quadrature::bivariate_cell_masses(rho, bins)?;
    EmpiricalCopulaHistogram::from_mass(2, bins, mass)
}
