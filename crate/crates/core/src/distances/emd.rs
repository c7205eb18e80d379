//! Exact Earth Mover Distance between histograms on the same grid.
//!
//! The transportation problem is solved as a min-cost flow by successive
//! shortest paths. Dijkstra runs on reduced costs `c(u,v) + π(u) − π(v)`,
//! which stay nonnegative because potentials are advanced by the (truncated)
//! shortest-path distances after each search. The residual graph is the
//! complete bipartite graph of supply and demand cells plus a backward arc
//! for every positive flow.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::copula::EmpiricalCopulaHistogram;
use crate::error::{Error, Result};

/// Per-histogram cell limit for the dense solver.
pub const MAX_EMD_CELLS: usize = 1024;

/// Masses at or below this are treated as exhausted.
const MASS_EPS: f64 = 1e-15;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroundMetric {
    #[default]
    Euclidean,
    Manhattan,
}

impl GroundMetric {
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            GroundMetric::Euclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y).powi(2))
                .sum::<f64>()
                .sqrt(),
            GroundMetric::Manhattan => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GroundMetric::Euclidean => "euclidean",
            GroundMetric::Manhattan => "manhattan",
        }
    }
}

impl fmt::Display for GroundMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GroundMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(GroundMetric::Euclidean),
            "manhattan" => Ok(GroundMetric::Manhattan),
            other => Err(Error::InvalidInput(format!(
                "unknown ground metric `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Flow {
    /// Flat cell index in the source histogram.
    pub source: usize,
    /// Flat cell index in the target histogram.
    pub target: usize,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    pub flows: Vec<Flow>,
    pub cost: f64,
}

impl TransportPlan {
    pub fn len(&self) -> usize {
        self.flows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flows.is_empty()
    }

    /// Mass leaving each source cell.
    pub fn source_marginal(&self, cells: usize) -> Vec<f64> {
        let mut out = vec![0.0; cells];
        for f in &self.flows {
            out[f.source] += f.mass;
        }
        out
    }

    /// Mass arriving at each target cell.
    pub fn target_marginal(&self, cells: usize) -> Vec<f64> {
        let mut out = vec![0.0; cells];
        for f in &self.flows {
            out[f.target] += f.mass;
        }
        out
    }
}

pub fn check_emd_grid(bins: usize, dim: usize) -> Result<()> {
    let cells = u32::try_from(dim).ok().and_then(|e| bins.checked_pow(e));
    match cells {
        Some(c) if c <= MAX_EMD_CELLS => Ok(()),
        _ => Err(Error::GridTooLarge {
            bins,
            dim,
            limit: MAX_EMD_CELLS,
        }),
    }
}

fn normalized_support(h: &EmpiricalCopulaHistogram) -> Result<(Vec<usize>, Vec<f64>)> {
    let total: f64 = h.mass().iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::IncompatibleHistograms(format!(
            "total mass {total} differs from 1"
        )));
    }
    let (cells, mass) = h
        .mass()
        .iter()
        .enumerate()
        .filter(|(_, m)| **m > 0.0)
        .map(|(i, m)| (i, m / total))
        .unzip();
    Ok((cells, mass))
}

/// Optimal transport cost and plan between `h1` and `h2` under `ground`
/// distances between bin centers.
pub fn emd(
    h1: &EmpiricalCopulaHistogram,
    h2: &EmpiricalCopulaHistogram,
    ground: GroundMetric,
) -> Result<(f64, TransportPlan)> {
    if h1.dim() != h2.dim() || h1.bins_per_axis() != h2.bins_per_axis() {
        return Err(Error::IncompatibleHistograms(format!(
            "grids {}^{} and {}^{} differ",
            h1.bins_per_axis(),
            h1.dim(),
            h2.bins_per_axis(),
            h2.dim()
        )));
    }
    check_emd_grid(h1.bins_per_axis(), h1.dim())?;

    let (src_cells, mut supply) = normalized_support(h1)?;
    let (dst_cells, mut demand) = normalized_support(h2)?;
    let n = src_cells.len();
    let m = dst_cells.len();

    let src_centers: Vec<Vec<f64>> = src_cells.iter().map(|&c| h1.center(c)).collect();
    let dst_centers: Vec<Vec<f64>> = dst_cells.iter().map(|&c| h2.center(c)).collect();
    let mut cost = vec![0.0; n * m];
    for i in 0..n {
        for j in 0..m {
            cost[i * m + j] = ground.distance(&src_centers[i], &dst_centers[j]);
        }
    }
    let mut flow = vec![0.0; n * m];

    // Mass shared by a cell is moved in place at zero cost; with a metric
    // ground cost some optimal plan does this. Zero potentials remain valid.
    {
        let mut j = 0;
        for i in 0..n {
            while j < m && dst_cells[j] < src_cells[i] {
                j += 1;
            }
            if j < m && dst_cells[j] == src_cells[i] {
                let shared = supply[i].min(demand[j]);
                flow[i * m + j] = shared;
                supply[i] -= shared;
                demand[j] -= shared;
            }
        }
    }

    let total_nodes = n + m;
    let mut potential = vec![0.0; total_nodes];
    let mut dist = vec![f64::INFINITY; total_nodes];
    let mut parent = vec![usize::MAX; total_nodes];
    let mut done = vec![false; total_nodes];

    loop {
        if supply.iter().all(|s| *s <= MASS_EPS) || demand.iter().all(|d| *d <= MASS_EPS) {
            break;
        }
        dist.fill(f64::INFINITY);
        parent.fill(usize::MAX);
        done.fill(false);
        for i in 0..n {
            if supply[i] > MASS_EPS {
                dist[i] = 0.0;
            }
        }

        let mut target = None;
        loop {
            let mut u = usize::MAX;
            let mut best = f64::INFINITY;
            for (v, &d) in dist.iter().enumerate() {
                if !done[v] && d < best {
                    best = d;
                    u = v;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            if u >= n {
                let j = u - n;
                if demand[j] > MASS_EPS {
                    target = Some(u);
                    break;
                }
                // Backward arcs to sources currently shipping to this sink.
                for i in 0..n {
                    if done[i] || flow[i * m + j] <= 0.0 {
                        continue;
                    }
                    let reduced = (-cost[i * m + j] + potential[u] - potential[i]).max(0.0);
                    let cand = best + reduced;
                    if cand < dist[i] {
                        dist[i] = cand;
                        parent[i] = u;
                    }
                }
            } else {
                let i = u;
                for j in 0..m {
                    let v = n + j;
                    if done[v] {
                        continue;
                    }
                    let reduced = (cost[i * m + j] + potential[i] - potential[v]).max(0.0);
                    let cand = best + reduced;
                    if cand < dist[v] {
                        dist[v] = cand;
                        parent[v] = u;
                    }
                }
            }
        }

        let Some(t) = target else {
            break;
        };
        let reach = dist[t];
        for v in 0..total_nodes {
            potential[v] += dist[v].min(reach);
        }

        // Bottleneck along the path t ← … ← source.
        let mut delta = demand[t - n];
        let mut v = t;
        while parent[v] != usize::MAX {
            let p = parent[v];
            if p >= n {
                // Backward arc sink p → source v.
                delta = delta.min(flow[v * m + (p - n)]);
            }
            v = p;
        }
        let source = v;
        delta = delta.min(supply[source]);

        let mut v = t;
        while parent[v] != usize::MAX {
            let p = parent[v];
            if p < n {
                flow[p * m + (v - n)] += delta;
            } else {
                let f = &mut flow[v * m + (p - n)];
                *f = if *f == delta {
                    0.0
                } else {
                    (*f - delta).max(0.0)
                };
            }
            v = p;
        }
        supply[source] = if supply[source] == delta {
            0.0
        } else {
            supply[source] - delta
        };
        let d = &mut demand[t - n];
        *d = if *d == delta { 0.0 } else { *d - delta };
    }

    let mut flows = Vec::new();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..m {
            let f = flow[i * m + j];
            if f > 0.0 {
                total += f * cost[i * m + j];
                flows.push(Flow {
                    source: src_cells[i],
                    target: dst_cells[j],
                    mass: f,
                });
            }
        }
    }
    Ok((total, TransportPlan { flows, cost: total }))
}
