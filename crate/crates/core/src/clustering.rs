//! Ward agglomerative clustering on a precomputed dissimilarity matrix.
//!
//! Cluster dissimilarities are tracked as squared values and updated with
//! the Lance-Williams recurrence for Ward's method:
//!
//! ```text
//! d²(k, i∪j) = [(nᵢ+nₖ)d²(k,i) + (nⱼ+nₖ)d²(k,j) − nₖ d²(i,j)] / (nᵢ+nⱼ+nₖ)
//! ```
//!
//! Reported merge heights are the square roots. On Euclidean input this is
//! exactly Ward's minimum-variance criterion; on other metrics it is the
//! usual generalized Ward.

use serde::{Deserialize, Serialize};

use crate::distances::DistanceMatrix;
use crate::error::{Error, Result};

/// Height decreases larger than this set [`Dendrogram::non_monotone`].
const MONOTONE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

/// Leaves are `0..n`; the k-th merge creates node `n + k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub leaves: usize,
    pub merges: Vec<Merge>,
    /// Set when some merge height dropped below its predecessor by more
    /// than 1e-9, which generalized Ward can do on non-Euclidean input.
    pub non_monotone: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub assignment: Vec<usize>,
    pub k: usize,
}

impl Partition {
    /// Members of each cluster, in cluster-id order.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (leaf, &c) in self.assignment.iter().enumerate() {
            out[c].push(leaf);
        }
        out
    }
}

pub fn ward_linkage(d: &DistanceMatrix) -> Result<Dendrogram> {
    let n = d.len();
    if n < 2 {
        return Err(Error::InvalidDistanceMatrix(format!(
            "need at least 2 objects, got {n}"
        )));
    }
    for i in 0..n {
        if d.get(i, i) != 0.0 {
            return Err(Error::InvalidDistanceMatrix(format!(
                "nonzero diagonal at {i}"
            )));
        }
        for j in (i + 1)..n {
            let v = d.get(i, j);
            if !(v >= 0.0 && v.is_finite()) || v != d.get(j, i) {
                return Err(Error::InvalidDistanceMatrix(format!(
                    "bad entry at ({i},{j})"
                )));
            }
        }
    }

    // Slot s holds the active cluster that currently occupies it.
    let mut sq: Vec<f64> = (0..n * n)
        .map(|idx| d.get(idx / n, idx % n).powi(2))
        .collect();
    let mut node_id: Vec<usize> = (0..n).collect();
    let mut size = vec![1usize; n];
    let mut active = vec![true; n];
    let mut merges = Vec::with_capacity(n - 1);
    let mut non_monotone = false;
    let mut last_height = 0.0f64;

    for step in 0..(n - 1) {
        // (value, smaller node id, larger node id, slot a, slot b)
        let mut best: Option<(f64, usize, usize, usize, usize)> = None;
        for a in 0..n {
            if !active[a] {
                continue;
            }
            for b in (a + 1)..n {
                if !active[b] {
                    continue;
                }
                let v = sq[a * n + b];
                let (lo, hi) = if node_id[a] < node_id[b] {
                    (node_id[a], node_id[b])
                } else {
                    (node_id[b], node_id[a])
                };
                let better = match best {
                    None => true,
                    Some((bv, bl, bh, _, _)) => v < bv || (v == bv && (lo, hi) < (bl, bh)),
                };
                if better {
                    best = Some((v, lo, hi, a, b));
                }
            }
        }
        let (value, left, right, a, b) = best.expect("at least two active clusters");
        let (na, nb) = (size[a] as f64, size[b] as f64);
        for k in 0..n {
            if !active[k] || k == a || k == b {
                continue;
            }
            let nk = size[k] as f64;
            let updated = ((na + nk) * sq[k * n + a] + (nb + nk) * sq[k * n + b] - nk * value)
                / (na + nb + nk);
            let updated = updated.max(0.0);
            sq[k * n + a] = updated;
            sq[a * n + k] = updated;
        }
        active[b] = false;
        size[a] += size[b];
        node_id[a] = n + step;

        let height = value.max(0.0).sqrt();
        if height < last_height - MONOTONE_TOL {
            non_monotone = true;
        }
        last_height = last_height.max(height);
        merges.push(Merge {
            left,
            right,
            height,
            size: size[a],
        });
    }

    Ok(Dendrogram {
        leaves: n,
        merges,
        non_monotone,
    })
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Flat partition with `k` clusters: the last `k − 1` merges are undone.
/// Cluster ids follow the smallest leaf in each cluster.
pub fn cut(dendrogram: &Dendrogram, k: usize) -> Result<Partition> {
    let n = dendrogram.leaves;
    if k < 1 || k > n {
        return Err(Error::InvalidK { k, n });
    }
    let mut parent: Vec<usize> = (0..2 * n - 1).collect();
    for (step, m) in dendrogram.merges.iter().take(n - k).enumerate() {
        let node = n + step;
        let l = find(&mut parent, m.left);
        let r = find(&mut parent, m.right);
        parent[l] = node;
        parent[r] = node;
    }
    let mut root_to_cluster = std::collections::HashMap::new();
    let mut assignment = Vec::with_capacity(n);
    for leaf in 0..n {
        let root = find(&mut parent, leaf);
        let next = root_to_cluster.len();
        assignment.push(*root_to_cluster.entry(root).or_insert(next));
    }
    Ok(Partition { assignment, k })
}
