//! Distances between copulas.

mod closed_form;
mod emd;
mod matrix;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;

pub use closed_form::{
    bhattacharyya, fisher_rao, hellinger, hellinger_squared, jeffreys, kl, w2_gaussian,
};
pub use emd::{check_emd_grid, emd, Flow, GroundMetric, TransportPlan, MAX_EMD_CELLS};
pub use matrix::{pairwise_matrix, CopulaSummaries, DistanceMatrix, KL_REJECTION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistanceKind {
    FisherRao,
    Kl,
    Jeffreys,
    Hellinger,
    Bhattacharyya,
    W2,
    Emd,
}

impl DistanceKind {
    pub const CLOSED_FORM: [DistanceKind; 6] = [
        DistanceKind::FisherRao,
        DistanceKind::Kl,
        DistanceKind::Jeffreys,
        DistanceKind::Hellinger,
        DistanceKind::Bhattacharyya,
        DistanceKind::W2,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DistanceKind::FisherRao => "fisher-rao",
            DistanceKind::Kl => "kl",
            DistanceKind::Jeffreys => "jeffreys",
            DistanceKind::Hellinger => "hellinger",
            DistanceKind::Bhattacharyya => "bhattacharyya",
            DistanceKind::W2 => "w2",
            DistanceKind::Emd => "emd",
        }
    }

    pub fn is_symmetric(self) -> bool {
        self != DistanceKind::Kl
    }

    /// Kinds that satisfy the triangle inequality.
    pub fn is_metric(self) -> bool {
        matches!(
            self,
            DistanceKind::FisherRao
                | DistanceKind::Hellinger
                | DistanceKind::W2
                | DistanceKind::Emd
        )
    }

    pub fn uses_histograms(self) -> bool {
        self == DistanceKind::Emd
    }

    /// Kinds that need a density, hence fail on the singular boundary.
    pub fn is_divergence_family(self) -> bool {
        !matches!(self, DistanceKind::W2 | DistanceKind::Emd)
    }
}

impl fmt::Display for DistanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DistanceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "fisher-rao" => DistanceKind::FisherRao,
            "kl" => DistanceKind::Kl,
            "jeffreys" => DistanceKind::Jeffreys,
            "hellinger" => DistanceKind::Hellinger,
            "bhattacharyya" => DistanceKind::Bhattacharyya,
            "w2" => DistanceKind::W2,
            "emd" => DistanceKind::Emd,
            other => {
                return Err(Error::InvalidInput(format!(
                    "unknown distance kind `{other}`"
                )))
            }
        })
    }
}

/// Closed-form distance of the given kind between `N(0, s1)` and `N(0, s2)`.
pub fn gaussian_distance(kind: DistanceKind, s1: &SymMatrix, s2: &SymMatrix) -> Result<f64> {
    match kind {
        DistanceKind::FisherRao => fisher_rao(s1, s2),
        DistanceKind::Kl => kl(s1, s2),
        DistanceKind::Jeffreys => jeffreys(s1, s2),
        DistanceKind::Hellinger => hellinger(s1, s2),
        DistanceKind::Bhattacharyya => bhattacharyya(s1, s2),
        DistanceKind::W2 => w2_gaussian(s1, s2),
        DistanceKind::Emd => Err(Error::UnsupportedKind(
            "emd compares histograms, not correlation matrices".into(),
        )),
    }
}

/// Lower bound on the variance of a correlation estimate,
/// `(ρ−1)²(ρ+1)² / (3(ρ²+1))`.
pub fn cramer_rao_bound(rho: f64) -> Result<f64> {
    if !(rho.abs() < 1.0) {
        return Err(Error::DomainError(format!(
            "correlation {rho} must lie in (-1, 1)"
        )));
    }
    Ok((rho - 1.0).powi(2) * (rho + 1.0).powi(2) / (3.0 * (rho * rho + 1.0)))
}
