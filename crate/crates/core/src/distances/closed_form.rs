//! Closed-form distances between `N(0, Σ₁)` and `N(0, Σ₂)`.
//!
//! The divergence family (Fisher-Rao, KL, Jeffreys, Hellinger,
//! Bhattacharyya) needs inverses or log-determinants and therefore fails with
//! [`Error::SingularMatrix`] once an argument reaches the boundary of the SPD
//! cone. W₂ only takes square roots and stays finite there.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::linalg::{self, SymMatrix};

fn same_dim(a: &SymMatrix, b: &SymMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::InvalidMatrix(format!(
            "dimension mismatch: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(())
}

/// Lexicographic order on entries, used to evaluate symmetric distances in a
/// canonical argument order so that `D(a, b)` and `D(b, a)` agree bitwise.
fn canonical<'a>(a: &'a SymMatrix, b: &'a SymMatrix) -> (&'a SymMatrix, &'a SymMatrix) {
    let ord = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| *o != Ordering::Equal)
        .unwrap_or(Ordering::Equal);
    if ord == Ordering::Greater {
        (b, a)
    } else {
        (a, b)
    }
}

/// Cholesky factor of an SPD argument, reporting the singular boundary as
/// `SingularMatrix`.
fn spd_factor(a: &SymMatrix) -> Result<linalg::Matrix> {
    linalg::spd_eigen(a)?;
    linalg::cholesky(a).map_err(|e| match e {
        Error::NotPositiveDefinite { pivot, .. } => Error::SingularMatrix(pivot),
        other => other,
    })
}

/// Spectrum of `Σ₁⁻¹Σ₂`, computed from the congruent symmetric matrix
/// `L⁻¹Σ₂L⁻ᵀ` with `Σ₁ = LLᵀ`.
fn relative_spectrum(s1: &SymMatrix, s2: &SymMatrix) -> Result<Vec<f64>> {
    same_dim(s1, s2)?;
    let l = spd_factor(s1)?;
    linalg::spd_eigen(s2)?;
    let pencil = linalg::whiten(&l, s2);
    Ok(linalg::eigen_sym(&pencil)?.values)
}

/// `√(½ Σ log² λᵢ)`, λᵢ the eigenvalues of `Σ₁⁻¹Σ₂`.
pub fn fisher_rao(s1: &SymMatrix, s2: &SymMatrix) -> Result<f64> {
    same_dim(s1, s2)?;
    if s1 == s2 {
        linalg::spd_eigen(s1)?;
        return Ok(0.0);
    }
    let (a, b) = canonical(s1, s2);
    let lambdas = relative_spectrum(a, b)?;
    if let Some(&l) = lambdas.iter().find(|l| !(**l > 0.0)) {
        return Err(Error::SingularMatrix(l));
    }
    let sum: f64 = lambdas.iter().map(|l| l.ln().powi(2)).sum();
    Ok((0.5 * sum).sqrt())
}

/// `KL(N(0,Σ₁) ‖ N(0,Σ₂)) = ½(log|Σ₂|/|Σ₁| − n + tr(Σ₂⁻¹Σ₁))`.
pub fn kl(s1: &SymMatrix, s2: &SymMatrix) -> Result<f64> {
    same_dim(s1, s2)?;
    let n = s1.dim() as f64;
    if s1 == s2 {
        linalg::spd_eigen(s1)?;
        return Ok(0.0);
    }
    let ld1 = linalg::log_det_spd(s1)?;
    let ld2 = linalg::log_det_spd(s2)?;
    let l2 = spd_factor(s2)?;
    let trace = linalg::whiten(&l2, s1).trace();
    Ok((0.5 * (ld2 - ld1 - n + trace)).max(0.0))
}

pub fn jeffreys(s1: &SymMatrix, s2: &SymMatrix) -> Result<f64> {
    Ok(kl(s1, s2)? + kl(s2, s1)?)
}

/// `(¼ log|Σ₁|, ¼ log|Σ₂|, ½ log|Σ|)` with `Σ = (Σ₁ + Σ₂)/2`.
fn quarter_log_dets(s1: &SymMatrix, s2: &SymMatrix) -> Result<(f64, f64, f64)> {
    same_dim(s1, s2)?;
    let ld1 = linalg::log_det_spd(s1)?;
    let ld2 = linalg::log_det_spd(s2)?;
    let mid = s1.add(s2).scale(0.5);
    let ld = linalg::log_det_spd(&mid)?;
    Ok((0.25 * ld1, 0.25 * ld2, 0.5 * ld))
}

/// Bhattacharyya coefficient `|Σ₁|^¼|Σ₂|^¼ / |Σ|^½`, in `(0, 1]`.
fn bhattacharyya_coefficient(s1: &SymMatrix, s2: &SymMatrix) -> Result<f64> {
    let (q1, q2, half) = quarter_log_dets(s1, s2)?;
    Ok(((q1 + q2) - half).exp().min(1.0))
}

/// Hellinger distance `√(1 − BC)`; a metric with values in `[0, 1]`.
pub fn hellinger(s1: &SymMatrix, s2: &SymMatrix) -> Result<f64> {
    Ok(hellinger_squared(s1, s2)?.sqrt())
}

/// Squared Hellinger distance `1 − BC`, the f-divergence form of Hellinger.
pub fn hellinger_squared(s1: &SymMatrix, s2: &SymMatrix) -> Result<f64> {
    Ok((1.0 - bhattacharyya_coefficient(s1, s2)?).max(0.0))
}

/// `½ log(|Σ| / √(|Σ₁||Σ₂|))`.
pub fn bhattacharyya(s1: &SymMatrix, s2: &SymMatrix) -> Result<f64> {
    let (q1, q2, half) = quarter_log_dets(s1, s2)?;
    Ok((half - (q1 + q2)).max(0.0))
}

fn require_psd(a: &SymMatrix) -> Result<()> {
    let min = linalg::eigen_sym(a)?.min_value();
    if min < -linalg::PSD_CLAMP_TOL {
        return Err(Error::NotPositiveSemidefinite(min));
    }
    Ok(())
}

/// `√(tr(Σ₁ + Σ₂ − 2(Σ₁^½ Σ₂ Σ₁^½)^½))`; defined for singular PSD inputs.
pub fn w2_gaussian(s1: &SymMatrix, s2: &SymMatrix) -> Result<f64> {
    same_dim(s1, s2)?;
    if s1 == s2 {
        require_psd(s1)?;
        return Ok(0.0);
    }
    let (a, b) = canonical(s1, s2);
    require_psd(b)?;
    let root_a = linalg::sqrt_psd(a)?;
    let cross = linalg::sqrt_psd(&root_a.sandwich(b))?;
    let arg = a.trace() + b.trace() - 2.0 * cross.trace();
    Ok(arg.max(0.0).sqrt())
}
