//! Dense symmetric-matrix kernels.
//!
//! Dimensions here are small (two in every reproduction, capped at
//! [`MAX_DIM`]), so everything is stored densely in row-major order and the
//! eigensolver is plain cyclic Jacobi.

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 64;

/// Largest asymmetry `|a_ij - a_ji|` accepted by [`SymMatrix::new`].
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Eigenvalues at or below this are treated as zero by the SPD routines.
pub const SINGULAR_EIGEN_TOL: f64 = 1e-12;

/// Negative eigenvalues in `[-PSD_CLAMP_TOL, 0)` are rounding noise and get
/// clamped to zero by [`sqrt_psd`].
pub const PSD_CLAMP_TOL: f64 = 1e-12;

/// Smallest Cholesky pivot accepted.
pub const CHOLESKY_PIVOT_TOL: f64 = 1e-14;

const JACOBI_TOL: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 100;

/// A dense row-major matrix. Used for Cholesky factors and eigenvector bases,
/// which are not symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::InvalidMatrix("ragged rows".into()));
        }
        Ok(Matrix {
            rows: r,
            cols: c,
            data: rows.concat(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    /// Largest absolute entry of `self - other`.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// A symmetric matrix with finite entries. Stored in full so that element
/// access needs no index arithmetic beyond row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    /// Builds from row-major entries. Asymmetry up to [`SYMMETRY_TOL`] is
    /// averaged away; anything larger is rejected.
    pub fn new(dim: usize, entries: Vec<f64>) -> Result<Self> {
        let (m, asym) = Self::symmetrized(dim, entries)?;
        if asym > SYMMETRY_TOL {
            return Err(Error::InvalidMatrix(format!(
                "asymmetry {asym:e} exceeds {SYMMETRY_TOL:e}"
            )));
        }
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidMatrix("matrix is not square".into()));
        }
        Self::new(dim, rows.concat())
    }

    /// Replaces the matrix with `(A + Aᵀ)/2` and returns the largest
    /// asymmetry found. Used for products that are symmetric in exact
    /// arithmetic but not after rounding.
    pub fn symmetrized(dim: usize, mut entries: Vec<f64>) -> Result<(Self, f64)> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidMatrix(format!(
                "dimension {dim} outside 1..={MAX_DIM}"
            )));
        }
        if entries.len() != dim * dim {
            return Err(Error::InvalidMatrix(format!(
                "expected {} entries, got {}",
                dim * dim,
                entries.len()
            )));
        }
        if let Some(bad) = entries.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidMatrix(format!("non-finite entry {bad}")));
        }
        let mut asym = 0.0f64;
        for i in 0..dim {
            for j in (i + 1)..dim {
                let (a, b) = (entries[i * dim + j], entries[j * dim + i]);
                asym = asym.max((a - b).abs());
                let avg = 0.5 * (a + b);
                entries[i * dim + j] = avg;
                entries[j * dim + i] = avg;
            }
        }
        Ok((SymMatrix { dim, data: entries }, asym))
    }

    pub fn identity(dim: usize) -> Self {
        Self::diag(&vec![1.0; dim])
    }

    pub fn diag(values: &[f64]) -> Self {
        let dim = values.len();
        let mut data = vec![0.0; dim * dim];
        for (i, v) in values.iter().enumerate() {
            data[i * dim + i] = *v;
        }
        SymMatrix { dim, data }
    }

    /// The 2×2 matrix `[[1, rho], [rho, 1]]`.
    pub fn correlation_2x2(rho: f64) -> Self {
        SymMatrix {
            dim: 2,
            data: vec![1.0, rho, rho, 1.0],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix {
            rows: self.dim,
            cols: self.dim,
            data: self.data.clone(),
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// `tr(self · other)` without forming the product.
    pub fn trace_product(&self, other: &SymMatrix) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        assert_eq!(self.dim, other.dim);
        SymMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn scale(&self, c: f64) -> SymMatrix {
        SymMatrix {
            dim: self.dim,
            data: self.data.iter().map(|a| a * c).collect(),
        }
    }

    /// `self · middle · self`, symmetrized.
    pub fn sandwich(&self, middle: &SymMatrix) -> SymMatrix {
        let s = self.to_matrix();
        let prod = s.matmul(&middle.to_matrix()).matmul(&s);
        SymMatrix::symmetrized(self.dim, prod.data)
            .expect("product of finite symmetric matrices")
            .0
    }

    pub fn max_abs_diff(&self, other: &SymMatrix) -> f64 {
        self.to_matrix().max_abs_diff(&other.to_matrix())
    }

    fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    /// Sorted in descending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, in the order of `values`.
    pub vectors: Matrix,
}

impl EigenDecomposition {
    pub fn min_value(&self) -> f64 {
        *self.values.last().expect("non-empty spectrum")
    }

    /// `V · diag(f(λ)) · Vᵀ`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let n = self.values.len();
        let mapped: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let s: f64 = (0..n)
                    .map(|k| self.vectors.get(i, k) * mapped[k] * self.vectors.get(j, k))
                    .sum();
                data[i * n + j] = s;
                data[j * n + i] = s;
            }
        }
        SymMatrix { dim: n, data }
    }

    pub fn reconstruct(&self) -> SymMatrix {
        self.reconstruct_with(|l| l)
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
pub fn eigen_sym(a: &SymMatrix) -> Result<EigenDecomposition> {
    let n = a.dim;
    if a.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidMatrix("non-finite entry".into()));
    }
    let mut m = a.data.clone();
    let mut v = Matrix::identity(n);
    let tol = JACOBI_TOL * a.frobenius().max(1.0);

    let off_norm = |m: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[i * n + j] * m[i * n + j];
                }
            }
        }
        s.sqrt()
    };

    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_norm(&m) <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                    sign / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);

                m[p * n + p] -= t * apq;
                m[q * n + q] += t * apq;
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let g = m[r * n + p];
                    let h = m[r * n + q];
                    let new_rp = g - s * (h + g * tau);
                    let new_rq = h + s * (g - h * tau);
                    m[r * n + p] = new_rp;
                    m[p * n + r] = new_rp;
                    m[r * n + q] = new_rq;
                    m[q * n + r] = new_rq;
                }
                for r in 0..n {
                    let g = v.get(r, p);
                    let h = v.get(r, q);
                    v.set(r, p, g - s * (h + g * tau));
                    v.set(r, q, h + s * (g - h * tau));
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j * n + j].total_cmp(&m[i * n + i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| m[i * n + i]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        for r in 0..n {
            vectors.set(r, col, v.get(r, src));
        }
    }
    Ok(EigenDecomposition { values, vectors })
}

/// Lower-triangular `L` with `L·Lᵀ = a`.
pub fn cholesky(a: &SymMatrix) -> Result<Matrix> {
    let n = a.dim;
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut pivot = a.get(j, j);
        for k in 0..j {
            pivot -= l.get(j, k) * l.get(j, k);
        }
        if !(pivot > CHOLESKY_PIVOT_TOL) {
            return Err(Error::NotPositiveDefinite { row: j, pivot });
        }
        let d = pivot.sqrt();
        l.set(j, j, d);
        for i in (j + 1)..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k);
            }
            l.set(i, j, s / d);
        }
    }
    Ok(l)
}

/// Solves `L·x = b` in place for lower-triangular `L`.
fn forward_substitute(l: &Matrix, b: &mut [f64]) {
    for i in 0..l.rows() {
        let mut s = b[i];
        for k in 0..i {
            s -= l.get(i, k) * b[k];
        }
        b[i] = s / l.get(i, i);
    }
}

/// `L⁻¹ · a · L⁻ᵀ` for a lower-triangular factor `L`, symmetrized.
pub fn whiten(l: &Matrix, a: &SymMatrix) -> SymMatrix {
    let n = a.dim;
    // Columns of Y = L⁻¹ A.
    let mut y = Matrix::zeros(n, n);
    for j in 0..n {
        let mut col: Vec<f64> = (0..n).map(|i| a.get(i, j)).collect();
        forward_substitute(l, &mut col);
        for i in 0..n {
            y.set(i, j, col[i]);
        }
    }
    // Z = L⁻¹ Yᵀ, and Z = L⁻¹ A L⁻ᵀ since A is symmetric.
    let mut z = vec![0.0; n * n];
    for j in 0..n {
        let mut col: Vec<f64> = (0..n).map(|i| y.get(j, i)).collect();
        forward_substitute(l, &mut col);
        for i in 0..n {
            z[i * n + j] = col[i];
        }
    }
    SymMatrix::symmetrized(n, z)
        .expect("whitened matrix is finite")
        .0
}

/// Principal square root of a positive semidefinite matrix.
pub fn sqrt_psd(a: &SymMatrix) -> Result<SymMatrix> {
    let eig = eigen_sym(a)?;
    let min = eig.min_value();
    if min < -PSD_CLAMP_TOL {
        return Err(Error::NotPositiveSemidefinite(min));
    }
    Ok(eig.reconstruct_with(|l| l.max(0.0).sqrt()))
}

/// Determinant as the product of eigenvalues.
pub fn det_sym(a: &SymMatrix) -> Result<f64> {
    Ok(eigen_sym(a)?.values.iter().product())
}

/// `log |a|` for an SPD matrix; fails with `SingularMatrix` when the
/// smallest eigenvalue is at or below [`SINGULAR_EIGEN_TOL`].
pub fn log_det_spd(a: &SymMatrix) -> Result<f64> {
    let eig = spd_eigen(a)?;
    Ok(eig.values.iter().map(|l| l.ln()).sum())
}

/// Eigendecomposition that also enforces strict positive definiteness.
pub fn spd_eigen(a: &SymMatrix) -> Result<EigenDecomposition> {
    let eig = eigen_sym(a)?;
    let min = eig.min_value();
    if !(min > SINGULAR_EIGEN_TOL) {
        return Err(Error::SingularMatrix(min));
    }
    Ok(eig)
}

/// Inverse of an SPD matrix through its spectrum, followed by one
/// Newton-Schulz correction step.
pub fn inverse_spd(a: &SymMatrix) -> Result<SymMatrix> {
    let eig = spd_eigen(a)?;
    let x = eig.reconstruct_with(|l| 1.0 / l);
    // One refinement X ← X + X(I − AX), with the residual in doubled
    // precision; a plain residual is swamped by rounding at high condition.
    let n = a.dim;
    let mut r = Matrix::zeros(n, n);
    let mut col = vec![0.0; n];
    for j in 0..n {
        for (k, c) in col.iter_mut().enumerate() {
            *c = x.get(k, j);
        }
        for i in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            r.set(i, j, target - dot2(&a.data[i * n..(i + 1) * n], &col));
        }
    }
    let corr = x.to_matrix().matmul(&r);
    let refined: Vec<f64> = x
        .as_slice()
        .iter()
        .zip(corr.as_slice())
        .map(|(a, b)| a + b)
        .collect();
    Ok(SymMatrix::symmetrized(n, refined)?.0)
}

/// Dot product evaluated in twice the working precision.
pub(crate) fn dot2(x: &[f64], y: &[f64]) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for (a, b) in x.iter().zip(y) {
        let p = a * b;
        let pe = a.mul_add(*b, -p);
        let t = s + p;
        let z = t - s;
        let se = (s - (t - z)) + (p - z);
        s = t;
        c += pe + se;
    }
    s + c
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use proptest::test_runner::{Config, RngAlgorithm, RngSeed};

    fn fixed(cases: u32) -> Config {
        Config {
            cases,
            rng_algorithm: RngAlgorithm::ChaCha,
            rng_seed: RngSeed::Fixed(0x5eed),
            ..Config::default()
        }
    }

    fn sym_strategy(n: usize) -> impl Strategy<Value = SymMatrix> {
        prop::collection::vec(-1.0f64..1.0, n * n).prop_map(move |v| {
            let mut data = v;
            for i in 0..n {
                for j in 0..i {
                    data[i * n + j] = data[j * n + i];
                }
            }
            SymMatrix::new(n, data).unwrap()
        })
    }

    /// `B·Bᵀ / n` with entries of B in [-1, 1]; PSD by construction.
    fn psd_strategy(n: usize) -> impl Strategy<Value = SymMatrix> {
        prop::collection::vec(-1.0f64..1.0, n * n).prop_map(move |v| {
            let b = Matrix {
                rows: n,
                cols: n,
                data: v,
            };
            let p = b.matmul(&b.transpose());
            let scaled: Vec<f64> = p.data.iter().map(|x| x / n as f64).collect();
            SymMatrix::symmetrized(n, scaled).unwrap().0
        })
    }

    #[test]
    fn eigen_identity() {
        let e = eigen_sym(&SymMatrix::identity(3)).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn eigen_two_by_two_correlation() {
        let e = eigen_sym(&SymMatrix::correlation_2x2(0.5)).unwrap();
        assert!((e.values[0] - 1.5).abs() < 1e-15);
        assert!((e.values[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn eigen_rejects_non_finite() {
        let m = SymMatrix {
            dim: 2,
            data: vec![1.0, f64::NAN, f64::NAN, 1.0],
        };
        assert!(matches!(eigen_sym(&m), Err(Error::InvalidMatrix(_))));
        assert!(SymMatrix::new(2, vec![1.0, f64::INFINITY, f64::INFINITY, 1.0]).is_err());
    }

    #[test]
    fn new_rejects_asymmetry() {
        assert!(SymMatrix::new(2, vec![1.0, 0.5, 0.5 + 1e-9, 1.0]).is_err());
        let m = SymMatrix::new(2, vec![1.0, 0.5, 0.5 + 1e-13, 1.0]).unwrap();
        assert_eq!(m.get(0, 1), m.get(1, 0));
    }

    #[test]
    fn cholesky_cases() {
        let l = cholesky(&SymMatrix::identity(2)).unwrap();
        assert_eq!(l, Matrix::identity(2));

        let rho = 0.7;
        let l = cholesky(&SymMatrix::correlation_2x2(rho)).unwrap();
        assert!((l.get(0, 0) - 1.0).abs() < 1e-15);
        assert_eq!(l.get(0, 1), 0.0);
        assert!((l.get(1, 0) - rho).abs() < 1e-15);
        assert!((l.get(1, 1) - (1.0 - rho * rho).sqrt()).abs() < 1e-15);

        assert!(matches!(
            cholesky(&SymMatrix::correlation_2x2(1.0)),
            Err(Error::NotPositiveDefinite { row: 1, .. })
        ));
    }

    #[test]
    fn sqrt_psd_cases() {
        let s = sqrt_psd(&SymMatrix::diag(&[4.0, 9.0])).unwrap();
        assert!(s.max_abs_diff(&SymMatrix::diag(&[2.0, 3.0])) < 1e-15);
        let s = sqrt_psd(&SymMatrix::identity(3)).unwrap();
        assert!(s.max_abs_diff(&SymMatrix::identity(3)) < 1e-15);
        // Comonotone boundary: singular but PSD.
        let s = sqrt_psd(&SymMatrix::correlation_2x2(1.0)).unwrap();
        assert!(
            s.sandwich(&SymMatrix::identity(2))
                .max_abs_diff(&SymMatrix::correlation_2x2(1.0))
                < 1e-14
        );
        assert!(matches!(
            sqrt_psd(&SymMatrix::diag(&[1.0, -1e-6])),
            Err(Error::NotPositiveSemidefinite(_))
        ));
        assert!(sqrt_psd(&SymMatrix::diag(&[1.0, -1e-13])).is_ok());
    }

    #[test]
    fn det_cases() {
        assert!((det_sym(&SymMatrix::correlation_2x2(0.5)).unwrap() - 0.75).abs() < 1e-15);
        assert!((det_sym(&SymMatrix::correlation_2x2(0.99)).unwrap() - 0.0199).abs() < 1e-15);
        assert!((det_sym(&SymMatrix::identity(5)).unwrap() - 1.0).abs() < 1e-15);
        assert!(det_sym(&SymMatrix::correlation_2x2(0.5).scale(-1.0)).unwrap() > 0.0);
        assert!(det_sym(&SymMatrix::diag(&[2.0, -3.0])).unwrap() < 0.0);
    }

    #[test]
    fn inverse_cases() {
        let inv = inverse_spd(&SymMatrix::identity(3)).unwrap();
        assert!(inv.max_abs_diff(&SymMatrix::identity(3)) < 1e-15);

        let inv = inverse_spd(&SymMatrix::correlation_2x2(0.5)).unwrap();
        let expected = SymMatrix::new(2, vec![1.0, -0.5, -0.5, 1.0])
            .unwrap()
            .scale(1.0 / 0.75);
        assert!(inv.max_abs_diff(&expected) < 1e-14);

        let ones = SymMatrix::new(2, vec![1.0; 4]).unwrap();
        assert!(matches!(inverse_spd(&ones), Err(Error::SingularMatrix(_))));
    }

    #[test]
    fn inverse_ill_conditioned_residual() {
        // Condition numbers from 1e2 up to ~2e10. The residual is evaluated
        // in doubled precision so it measures the inverse, not the check.
        for k in 2..=10 {
            let rho = 1.0 - 10f64.powi(-k);
            let a = SymMatrix::correlation_2x2(rho);
            let inv = inverse_spd(&a).unwrap();
            let mut err = 0.0f64;
            for i in 0..2 {
                for j in 0..2 {
                    let row = [a.get(i, 0), a.get(i, 1)];
                    let col = [inv.get(0, j), inv.get(1, j)];
                    let target = if i == j { 1.0 } else { 0.0 };
                    err = err.max((dot2(&row, &col) - target).abs());
                }
            }
            assert!(err <= 1e-8, "k={k} residual {err:e}");
        }
    }

    #[test]
    fn whiten_matches_generalized_eigen() {
        let a = SymMatrix::correlation_2x2(0.5);
        let b = SymMatrix::correlation_2x2(0.99);
        let l = cholesky(&a).unwrap();
        let w = whiten(&l, &b);
        // Spectrum of A⁻¹B for 2×2 correlations: (1 ± ρ_b)/(1 ± ρ_a) pairs.
        let e = eigen_sym(&w).unwrap();
        let mut expected = [1.99f64 / 1.5, 0.01 / 0.5];
        expected.sort_by(|x, y| y.total_cmp(x));
        assert!((e.values[0] - expected[0]).abs() < 1e-13);
        assert!((e.values[1] - expected[1]).abs() < 1e-13);
    }

    proptest! {
        #![proptest_config(fixed(200))]

        #[test]
        fn eigen_reconstructs(a in (2usize..=6).prop_flat_map(sym_strategy)) {
            let e = eigen_sym(&a).unwrap();
            prop_assert!(e.reconstruct().max_abs_diff(&a) <= 1e-10);
            let vtv = e.vectors.transpose().matmul(&e.vectors);
            prop_assert!(vtv.max_abs_diff(&Matrix::identity(a.dim())) <= 1e-10);
            prop_assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
            let sum: f64 = e.values.iter().sum();
            prop_assert!((sum - a.trace()).abs() <= 1e-10);
        }

        #[test]
        fn two_by_two_spectrum(rho in -1.0f64..=1.0) {
            let e = eigen_sym(&SymMatrix::correlation_2x2(rho)).unwrap();
            let hi = 1.0 + rho.abs();
            let lo = 1.0 - rho.abs();
            prop_assert!((e.values[0] - hi).abs() <= 1e-12);
            prop_assert!((e.values[1] - lo).abs() <= 1e-12);
        }

        #[test]
        fn sqrt_squares_back(a in (2usize..=5).prop_flat_map(psd_strategy)) {
            let s = sqrt_psd(&a).unwrap();
            let sq = s.to_matrix().matmul(&s.to_matrix());
            prop_assert!(sq.max_abs_diff(&a.to_matrix()) <= 1e-10);
            prop_assert!(eigen_sym(&s).unwrap().min_value() >= -1e-12);
            // Fourth root, raised to the fourth power.
            let r = sqrt_psd(&s).unwrap().to_matrix();
            let r4 = r.matmul(&r).matmul(&r).matmul(&r);
            prop_assert!(r4.max_abs_diff(&a.to_matrix()) <= 1e-8);
        }

        #[test]
        fn cholesky_reconstructs(a in (2usize..=6).prop_flat_map(psd_strategy)) {
            let shifted = a.add(&SymMatrix::identity(a.dim()).scale(0.05));
            let l = cholesky(&shifted).unwrap();
            let llt = l.matmul(&l.transpose());
            prop_assert!(llt.max_abs_diff(&shifted.to_matrix()) <= 1e-12);
            prop_assert!((0..a.dim()).all(|i| l.get(i, i) > 0.0));
        }

        #[test]
        fn det_matches_elimination(a in (2usize..=5).prop_flat_map(sym_strategy)) {
            let d = det_sym(&a).unwrap();
            let reference = det_by_elimination(&a);
            prop_assert!((d - reference).abs() <= 1e-9 * (1.0 + reference.abs()));
        }
    }

    /// Determinant by Gaussian elimination with partial pivoting.
    fn det_by_elimination(a: &SymMatrix) -> f64 {
        let n = a.dim();
        let mut m: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| a.get(i, j)).collect())
            .collect();
        let mut det = 1.0;
        for c in 0..n {
            let p = (c..n)
                .max_by(|&x, &y| m[x][c].abs().total_cmp(&m[y][c].abs()))
                .unwrap();
            if m[p][c] == 0.0 {
                return 0.0;
            }
            if p != c {
                m.swap(p, c);
                det = -det;
            }
            det *= m[c][c];
            for r in (c + 1)..n {
                let f = m[r][c] / m[c][c];
                for k in c..n {
                    m[r][k] -= f * m[c][k];
                }
            }
        }
        det
    }

    #[test]
    fn cholesky_agrees_with_spectrum() {
        // Shifted random symmetric matrices; the shift keeps the smallest
        // eigenvalue away from zero so both routes decide unambiguously.
        let mut runner = proptest::test_runner::TestRunner::new(fixed(1000));
        let strat = (2usize..=5)
            .prop_flat_map(sym_strategy)
            .prop_flat_map(|a| (Just(a), -1.5f64..2.5));
        let mut checked = 0;
        for _ in 0..1000 {
            let (a, shift) =
                proptest::strategy::ValueTree::current(&strat.new_tree(&mut runner).unwrap());
            let m = a.add(&SymMatrix::identity(a.dim()).scale(shift));
            let min = eigen_sym(&m).unwrap().min_value();
            if min.abs() < 1e-6 {
                continue;
            }
            assert_eq!(cholesky(&m).is_ok(), min > 0.0, "min eigenvalue {min}");
            checked += 1;
        }
        assert!(checked > 900);
    }
}
