//! Cell probabilities of a bivariate Gaussian copula.
//!
//! For a cell `[a, b] × [c, d]` in normal-score space,
//! `P = ∫_a^b φ(x) [Φ((d − ρx)/s) − Φ((c − ρx)/s)] dx` with `s = √(1 − ρ²)`,
//! evaluated by composite Gauss-Legendre with panels narrower than the
//! conditional spread `s`.

use super::normal::{std_normal_cdf, std_normal_pdf, std_normal_quantile};
use crate::error::Result;
use crate::linalg::{eigen_sym, SymMatrix};

const GL_ORDER: usize = 10;
/// Stand-in for ±∞ in normal-score space; mass beyond is below 1e-23.
const Z_LIMIT: f64 = 10.0;

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Golub-Welsch.
fn gauss_legendre(n: usize) -> Result<Vec<(f64, f64)>> {
    let mut data = vec![0.0; n * n];
    for k in 1..n {
        let kf = k as f64;
        let beta = kf / (4.0 * kf * kf - 1.0).sqrt();
        data[(k - 1) * n + k] = beta;
        data[k * n + k - 1] = beta;
    }
    let eig = eigen_sym(&SymMatrix::new(n, data)?)?;
    let mut rule: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.vectors.get(0, i);
            (eig.values[i], 2.0 * v0 * v0)
        })
        .collect();
    rule.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(rule)
}

/// Row-major `bins × bins` cell masses, axis 0 being the first variate.
pub(super) fn bivariate_cell_masses(rho: f64, bins: usize) -> Result<Vec<f64>> {
    let mut edges = Vec::with_capacity(bins + 1);
    edges.push(-Z_LIMIT);
    for k in 1..bins {
        edges.push(std_normal_quantile(k as f64 / bins as f64)?);
    }
    edges.push(Z_LIMIT);

    let s = (1.0 - rho * rho).sqrt();
    let panel = (s / 4.0).min(0.1);
    let rule = gauss_legendre(GL_ORDER)?;

    let mut mass = vec![0.0; bins * bins];
    let mut cond = vec![0.0; bins + 1];
    for i in 0..bins {
        let (lo, hi) = (edges[i], edges[i + 1]);
        let panels = ((hi - lo) / panel).ceil().max(1.0) as usize;
        let h = (hi - lo) / panels as f64;
        for p in 0..panels {
            let mid = lo + (p as f64 + 0.5) * h;
            for &(node, weight) in &rule {
                let x = mid + 0.5 * h * node;
                let w = 0.5 * h * weight * std_normal_pdf(x);
                cond[0] = 0.0;
                cond[bins] = 1.0;
                for j in 1..bins {
                    cond[j] = std_normal_cdf((edges[j] - rho * x) / s);
                }
                for j in 0..bins {
                    mass[i * bins + j] += w * (cond[j + 1] - cond[j]);
                }
            }
        }
    }
    let total: f64 = mass.iter().sum();
    for m in &mut mass {
        *m = (*m / total).max(0.0);
    }
    Ok(mass)
}
