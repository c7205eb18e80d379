//! Distances between copulas and clustering of multivariate time series by
//! their dependence structure.
//!
//! The crate covers three layers:
//!
//! * [`copula`]: rank transform, Gaussian copula fitting/sampling/density and
//!   empirical copula histograms;
//! * [`distances`]: closed-form distances between Gaussian copulas
//!   (Fisher-Rao, KL, Jeffreys, Hellinger, Bhattacharyya, W₂) and the exact
//!   Earth Mover Distance between histograms;
//! * [`clustering`] and [`experiments`]: Ward clustering and the end-to-end
//!   pipeline.
//!
//! ```
//! use copula_distance::distances::{fisher_rao, w2_gaussian};
//! use copula_distance::linalg::SymMatrix;
//!
//! let a = SymMatrix::correlation_2x2(0.5);
//! let b = SymMatrix::correlation_2x2(0.99);
//! let c = SymMatrix::correlation_2x2(0.9999);
//! // Fisher-Rao puts the two strongly dependent copulas farther apart...
//! assert!(fisher_rao(&a, &b).unwrap() < fisher_rao(&b, &c).unwrap());
//! // ...while W₂ does not.
//! assert!(w2_gaussian(&a, &b).unwrap() > w2_gaussian(&b, &c).unwrap());
//! ```

// Negated float comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod clustering;
pub mod copula;
pub mod distances;
pub mod error;
pub mod experiments;
pub mod linalg;

pub use error::{Error, Result};
