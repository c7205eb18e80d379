//! Shared fixtures, oracles and property suites for the integration tests.
#![allow(dead_code)]

use copula_distance::clustering::{cut, ward_linkage, Partition};
use copula_distance::copula::{
    empirical_copula_histogram, pseudo_observations, EmpiricalCopulaHistogram, PseudoObservations,
};
use copula_distance::distances::{
    bhattacharyya, emd, fisher_rao, hellinger, w2_gaussian, DistanceMatrix, GroundMetric,
};
use copula_distance::linalg::{cholesky, eigen_sym, sqrt_psd, Matrix, SymMatrix};
use minilp::{ComparisonOp, OptimizationDirection, Problem};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, RngSeed, TestCaseError, TestRunner};
use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

pub type SuiteResult = Result<(), String>;

pub fn runner(cases: u32, seed: u64) -> TestRunner {
    TestRunner::new(Config {
        cases,
        rng_algorithm: RngAlgorithm::ChaCha,
        rng_seed: RngSeed::Fixed(seed),
        failure_persistence: None,
        ..Config::default()
    })
}

fn finish(r: Result<(), proptest::test_runner::TestError<impl std::fmt::Debug>>) -> SuiteResult {
    r.map_err(|e| e.to_string())
}

/// Uniform in [0, 1).
pub fn unit(rng: &mut ChaCha20Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub fn gaussian(rng: &mut ChaCha20Rng) -> f64 {
    let u1 = unit(rng).max(1e-300);
    let u2 = unit(rng);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Random correlation matrix of dimension `dim` from a Wishart-like draw.
/// Some draws are pushed toward the boundary by a low-rank dominant term.
pub fn random_correlation(seed: u64, dim: usize) -> SymMatrix {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let cols = dim + 1;
    let g: Vec<f64> = (0..dim * cols).map(|_| gaussian(&mut rng)).collect();
    let spike = if unit(&mut rng) < 0.3 {
        20.0 * unit(&mut rng)
    } else {
        0.0
    };
    let v: Vec<f64> = (0..dim).map(|_| gaussian(&mut rng)).collect();
    let mut s = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..=i {
            let mut acc = spike * v[i] * v[j];
            for k in 0..cols {
                acc += g[i * cols + k] * g[j * cols + k];
            }
            s[i * dim + j] = acc;
            s[j * dim + i] = acc;
        }
    }
    let d: Vec<f64> = (0..dim).map(|i| s[i * dim + i].sqrt()).collect();
    let mut r = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..=i {
            let v = if i == j {
                1.0
            } else {
                s[i * dim + j] / (d[i] * d[j])
            };
            r[i * dim + j] = v;
            r[j * dim + i] = v;
        }
    }
    SymMatrix::new(dim, r).expect("symmetric by construction")
}

/// Random histogram with `bins^dim` cells, some of them empty.
pub fn random_histogram(seed: u64, bins: usize, dim: usize) -> EmpiricalCopulaHistogram {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let cells = bins.pow(dim as u32);
    let mut mass: Vec<f64> = (0..cells)
        .map(|_| {
            if unit(&mut rng) < 0.3 {
                0.0
            } else {
                unit(&mut rng)
            }
        })
        .collect();
    if mass.iter().all(|&m| m == 0.0) {
        mass[0] = 1.0;
    }
    let total: f64 = mass.iter().sum();
    mass.iter_mut().for_each(|m| *m /= total);
    EmpiricalCopulaHistogram::from_mass(dim, bins, mass).expect("valid histogram")
}

/// Transport problem solved by a generic simplex LP solver.
pub fn lp_emd(
    a: &EmpiricalCopulaHistogram,
    b: &EmpiricalCopulaHistogram,
    ground: GroundMetric,
) -> f64 {
    let n = a.cell_count();
    let m = b.cell_count();
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let mut vars = Vec::with_capacity(n * m);
    for i in 0..n {
        let ci = a.center(i);
        for j in 0..m {
            let cost = ground.distance(&ci, &b.center(j));
            vars.push(lp.add_var(cost, (0.0, f64::INFINITY)));
        }
    }
    // Sources as ≤ with a relative slack of 1e-12, so that rounding in the
    // two totals cannot make the equality system infeasible.
    for i in 0..n {
        let row: Vec<_> = (0..m).map(|j| (vars[i * m + j], 1.0)).collect();
        lp.add_constraint(
            &row[..],
            ComparisonOp::Le,
            a.mass()[i] * (1.0 + 1e-12) + 1e-15,
        );
    }
    for j in 0..m {
        let col: Vec<_> = (0..n).map(|i| (vars[i * m + j], 1.0)).collect();
        lp.add_constraint(&col[..], ComparisonOp::Eq, b.mass()[j]);
    }
    lp.solve().expect("transport LP is feasible").objective()
}

pub fn unit_series(seed: u64, t: usize, d: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    (0..t)
        .map(|_| (0..d).map(|_| gaussian(&mut rng)).collect())
        .collect()
}

fn euclidean_matrix(points: &[Vec<f64>]) -> DistanceMatrix {
    let n = points.len();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                v[i * n + j] = points[i]
                    .iter()
                    .zip(&points[j])
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt();
            }
        }
    }
    let labels = (0..n).map(|i| format!("p{i}")).collect();
    DistanceMatrix::new(labels, v).unwrap()
}

/// Random symmetric dissimilarities with distinct entries (no ties).
fn random_dissimilarities(seed: u64, n: usize) -> DistanceMatrix {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let x = 0.1 + unit(&mut rng);
            v[i * n + j] = x;
            v[j * n + i] = x;
        }
    }
    DistanceMatrix::new((0..n).map(|i| format!("o{i}")).collect(), v).unwrap()
}

/// Partition as a set of label sets, independent of ids and ordering.
fn blocks(labels: &[String], p: &Partition) -> Vec<Vec<String>> {
    let mut out: Vec<Vec<String>> = p
        .clusters()
        .into_iter()
        .map(|c| {
            let mut names: Vec<String> = c.into_iter().map(|i| labels[i].clone()).collect();
            names.sort();
            names
        })
        .collect();
    out.sort();
    out
}

// ---------------------------------------------------------------- suites

/// Nonnegativity, identity, symmetry, and the triangle inequality for the
/// metric kinds; the Bhattacharyya/Hellinger identity.
pub fn metric_axioms_suite(cases: u32) -> SuiteResult {
    let metrics: [(
        &str,
        fn(&SymMatrix, &SymMatrix) -> copula_distance::Result<f64>,
    ); 3] = [
        ("fisher-rao", fisher_rao),
        ("hellinger", hellinger),
        ("w2", w2_gaussian),
    ];
    let strat = (2usize..=4, any::<u64>(), any::<u64>(), any::<u64>());
    finish(runner(cases, 101).run(&strat, |(dim, s1, s2, s3)| {
        let a = random_correlation(s1, dim);
        let b = random_correlation(s2, dim);
        let c = random_correlation(s3, dim);
        for (name, f) in metrics {
            let ab = f(&a, &b).unwrap();
            let ba = f(&b, &a).unwrap();
            let bc = f(&b, &c).unwrap();
            let ac = f(&a, &c).unwrap();
            prop_assert!(ab >= 0.0 && ab.is_finite(), "{name} d = {ab}");
            prop_assert_eq!(f(&a, &a).unwrap(), 0.0, "{} identity", name);
            prop_assert!((ab - ba).abs() <= 1e-12, "{name} asymmetric: {ab} vs {ba}");
            prop_assert!(
                ac <= ab + bc + 1e-9 * (1.0 + ac),
                "{name} triangle: {ac} > {ab} + {bc}"
            );
        }
        let h = hellinger(&a, &b).unwrap();
        let bh = bhattacharyya(&a, &b).unwrap();
        prop_assert!(
            (bh + (1.0 - h * h).ln()).abs() <= 1e-10,
            "bhattacharyya {bh} vs hellinger {h}"
        );
        Ok(())
    }))
}

/// The same axioms for EMD on random histograms.
pub fn emd_axioms_suite(cases: u32) -> SuiteResult {
    let strat = (
        prop_oneof![Just((16usize, 1usize)), Just((4, 2)), Just((3, 2))],
        any::<u64>(),
        any::<u64>(),
        any::<u64>(),
    );
    finish(runner(cases, 103).run(&strat, |((bins, dim), s1, s2, s3)| {
        let a = random_histogram(s1, bins, dim);
        let b = random_histogram(s2, bins, dim);
        let c = random_histogram(s3, bins, dim);
        for g in [GroundMetric::Euclidean, GroundMetric::Manhattan] {
            let ab = emd(&a, &b, g).unwrap().0;
            let ba = emd(&b, &a, g).unwrap().0;
            let bc = emd(&b, &c, g).unwrap().0;
            let ac = emd(&a, &c, g).unwrap().0;
            prop_assert!(ab >= 0.0);
            prop_assert_eq!(emd(&a, &a, g).unwrap().0, 0.0);
            prop_assert!((ab - ba).abs() <= 1e-9, "emd asymmetric {ab} vs {ba}");
            prop_assert!(ac <= ab + bc + 1e-9, "emd triangle {ac} > {ab} + {bc}");
        }
        Ok(())
    }))
}

/// Eigen, Cholesky and square-root reconstruction bounds.
pub fn linalg_suite(cases: u32) -> SuiteResult {
    let strat = (2usize..=6, any::<u64>(), 0.0f64..1.0);
    finish(runner(cases, 107).run(&strat, |(dim, seed, jitter)| {
        let r = random_correlation(seed, dim);
        let e = eigen_sym(&r).unwrap();
        prop_assert!(e.reconstruct().max_abs_diff(&r) <= 1e-10);
        let vtv = e.vectors.transpose().matmul(&e.vectors);
        prop_assert!(vtv.max_abs_diff(&Matrix::identity(dim)) <= 1e-10);

        let shifted = r.add(&SymMatrix::identity(dim).scale(0.01 + jitter));
        let l = cholesky(&shifted).unwrap();
        prop_assert!(l.matmul(&l.transpose()).max_abs_diff(&shifted.to_matrix()) <= 1e-12);

        let s = sqrt_psd(&r).unwrap().to_matrix();
        prop_assert!(s.matmul(&s).max_abs_diff(&r.to_matrix()) <= 1e-10);
        Ok(())
    }))
}

/// Rank transform invariance under increasing maps and uniform histogram
/// marginals.
pub fn copula_suite(cases: u32) -> SuiteResult {
    let strat = (any::<u64>(), 20usize..200, 2usize..=3, 2usize..=6);
    finish(runner(cases, 109).run(&strat, |(seed, t, d, bins)| {
        let x = unit_series(seed, t, d);
        let y: Vec<Vec<f64>> = x
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .map(|(j, v)| match j % 3 {
                        0 => v.exp(),
                        1 => 3.0 * v + 7.0,
                        _ => v.powi(3) + v,
                    })
                    .collect()
            })
            .collect();
        let ux: PseudoObservations = pseudo_observations(&x).unwrap();
        let uy = pseudo_observations(&y).unwrap();
        prop_assert_eq!(&ux, &uy);

        // Bins that divide T get exactly uniform marginals.
        let h = empirical_copula_histogram(&ux, bins).unwrap();
        for axis in 0..d {
            let m = h.marginal(axis);
            for &p in &m {
                let expected_counts = (t as f64 / bins as f64).floor();
                prop_assert!(
                    (p * t as f64 - expected_counts).abs() <= 1.0 + 1e-9,
                    "marginal {p}"
                );
            }
            prop_assert!((m.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
        Ok(())
    }))
}

/// Permutation and scale equivariance; first merge agrees with brute force.
pub fn ward_suite(cases: u32) -> SuiteResult {
    let strat = (any::<u64>(), 2usize..=9, any::<u64>(), 0.01f64..100.0);
    finish(
        runner(cases, 113).run(&strat, |(seed, n, perm_seed, scale)| {
            let d = random_dissimilarities(seed, n);
            let t = ward_linkage(&d).unwrap();

            let mut perm: Vec<usize> = (0..n).collect();
            let mut rng = ChaCha20Rng::seed_from_u64(perm_seed);
            for i in (1..n).rev() {
                perm.swap(i, (rng.next_u64() % (i as u64 + 1)) as usize);
            }
            let dp = d.permuted(&perm).unwrap();
            let tp = ward_linkage(&dp).unwrap();
            let ds = d.scaled(scale).unwrap();
            let ts = ward_linkage(&ds).unwrap();
            for (a, b) in t.merges.iter().zip(&tp.merges) {
                prop_assert!((a.height - b.height).abs() <= 1e-12 * (1.0 + a.height));
                prop_assert_eq!(a.size, b.size);
            }
            for (a, b) in t.merges.iter().zip(&ts.merges) {
                prop_assert_eq!((a.left, a.right, a.size), (b.left, b.right, b.size));
                prop_assert!((a.height * scale - b.height).abs() <= 1e-10 * b.height.max(1.0));
            }
            for k in 1..=n {
                let p = cut(&t, k).map_err(|e| TestCaseError::fail(e.to_string()))?;
                let pp = cut(&tp, k).unwrap();
                prop_assert_eq!(
                    blocks(d.labels(), &p),
                    blocks(dp.labels(), &pp),
                    "k = {}",
                    k
                );
                prop_assert_eq!(p.clusters().len(), k);
            }

            // Brute force: the first merge is the closest pair.
            let mut best = (f64::INFINITY, 0, 0);
            for i in 0..n {
                for j in (i + 1)..n {
                    if d.get(i, j) < best.0 {
                        best = (d.get(i, j), i, j);
                    }
                }
            }
            prop_assert_eq!((t.merges[0].left, t.merges[0].right), (best.1, best.2));
            prop_assert_eq!(t.merges[0].height, best.0);
            Ok(())
        }),
    )
}

/// Small-N oracle: on Euclidean points with N ≤ 6, every merge matches a
/// brute-force search for the pair with least increase in within-cluster
/// sum of squares, and height² = 2·increase.
pub fn ward_oracle_suite(cases: u32) -> SuiteResult {
    let strat = prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 2), 2..=6);
    finish(runner(cases, 127).run(&strat, |pts| {
        let t = ward_linkage(&euclidean_matrix(&pts)).unwrap();
        let sse = |members: &[usize]| {
            let c: Vec<f64> = (0..2)
                .map(|k| members.iter().map(|&m| pts[m][k]).sum::<f64>() / members.len() as f64)
                .collect();
            members
                .iter()
                .map(|&m| (0..2).map(|k| (pts[m][k] - c[k]).powi(2)).sum::<f64>())
                .sum::<f64>()
        };
        let n = pts.len();
        let mut clusters: Vec<(usize, Vec<usize>)> = (0..n).map(|i| (i, vec![i])).collect();
        for (step, m) in t.merges.iter().enumerate() {
            let mut best = (f64::INFINITY, 0, 0);
            for a in 0..clusters.len() {
                for b in (a + 1)..clusters.len() {
                    let joined: Vec<usize> = clusters[a]
                        .1
                        .iter()
                        .chain(&clusters[b].1)
                        .copied()
                        .collect();
                    let inc = sse(&joined) - sse(&clusters[a].1) - sse(&clusters[b].1);
                    if inc < best.0 - 1e-12 {
                        best = (inc, a, b);
                    }
                }
            }
            let (inc, a, b) = best;
            prop_assert!(
                (m.height * m.height - 2.0 * inc).abs() <= 1e-9 * (1.0 + inc),
                "step {step}"
            );
            let joined: Vec<usize> = clusters[a]
                .1
                .iter()
                .chain(&clusters[b].1)
                .copied()
                .collect();
            clusters.remove(b);
            clusters[a] = (n + step, joined);
        }
        Ok(())
    }))
}

/// EMD against the LP oracle on random small instances. Returns the worst
/// absolute gap.
pub fn emd_lp_suite(instances: usize) -> Result<f64, String> {
    let shapes = [(16usize, 1usize), (4, 2), (3, 2), (2, 2), (8, 1), (2, 4)];
    let mut worst = 0.0f64;
    for k in 0..instances {
        let (bins, dim) = shapes[k % shapes.len()];
        let a = random_histogram(1000 + 2 * k as u64, bins, dim);
        let b = random_histogram(1001 + 2 * k as u64, bins, dim);
        let ground = if k % 2 == 0 {
            GroundMetric::Euclidean
        } else {
            GroundMetric::Manhattan
        };
        let (d, plan) = emd(&a, &b, ground).map_err(|e| e.to_string())?;
        let reference = lp_emd(&a, &b, ground);
        worst = worst.max((d - reference).abs());
        for (got, want) in plan.source_marginal(a.cell_count()).iter().zip(a.mass()) {
            if (got - want).abs() > 1e-12 {
                return Err(format!("instance {k}: source marginal {got} vs {want}"));
            }
        }
        for (got, want) in plan.target_marginal(b.cell_count()).iter().zip(b.mass()) {
            if (got - want).abs() > 1e-12 {
                return Err(format!("instance {k}: target marginal {got} vs {want}"));
            }
        }
    }
    Ok(worst)
}
