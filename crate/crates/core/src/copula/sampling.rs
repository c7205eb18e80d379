use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

use super::normal::{std_normal_cdf, std_normal_quantile};
use super::GaussianCopulaModel;
use crate::error::{Error, Result};
use crate::linalg;

/// Recorded in dataset metadata so runs can be reproduced elsewhere.
pub const RNG_ALGORITHM: &str = "chacha20 (rand_chacha, seed_from_u64); normals by inverse CDF";

/// Seeded stream of standard normal variates. Each variate consumes exactly
/// one 64-bit draw, so streams are reproducible across platforms.
pub struct NormalStream {
    rng: ChaCha20Rng,
}

impl NormalStream {
    pub fn new(seed: u64) -> Self {
        NormalStream {
            rng: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    /// Uniform in the open interval `(0, 1)` on a 2⁻⁵³ lattice.
    pub fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        std_normal_quantile(self.uniform()).expect("uniform draw lies in (0, 1)")
    }
}

/// `T` draws from the Gaussian copula: rows `Φ(L·z)` with `L = chol(R)`.
pub fn sample_gaussian_copula(
    model: &GaussianCopulaModel,
    t: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if t == 0 {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let r = model.correlation.matrix();
    let min = linalg::eigen_sym(r)?.min_value();
    if !(min > linalg::SINGULAR_EIGEN_TOL) {
        return Err(Error::NotPositiveDefinite {
            row: r.dim() - 1,
            pivot: min,
        });
    }
    let l = linalg::cholesky(r)?;
    let d = r.dim();
    let mut stream = NormalStream::new(seed);
    let mut z = vec![0.0; d];
    let mut out = Vec::with_capacity(t);
    for _ in 0..t {
        for v in z.iter_mut() {
            *v = stream.normal();
        }
        let row = (0..d)
            .map(|i| {
                let x: f64 = (0..=i).map(|k| l.get(i, k) * z[k]).sum();
                // Φ rounds to 1 beyond x ≈ 8.3; keep the open interval.
                std_normal_cdf(x).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
            })
            .collect();
        out.push(row);
    }
    Ok(out)
}
