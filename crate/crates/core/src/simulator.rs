//! Planted-partition validation graphs and agreement scoring.
//!
//! A background `G(n, p)` gets two planted dense groups `C1` (`G(n1, p1)`)
//! and `C2` (`G(n2, p2)`). Edges inside a planted group weigh `U(0, 1)`,
//! all other edges `U(0, b)`.

use std::fmt;

use pathfinding::prelude::{kuhn_munkres, Matrix};
use rand::distributions::Open01;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::rng::{stream_rng, Stream};
use crate::spectral::{fiedler_vector, Clustering};

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    pub p: f64,
    pub n1: usize,
    pub n2: usize,
    pub p1: f64,
    pub p2: f64,
    pub b: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    /// The n = 335 reference instance.
    fn default() -> Self {
        SimConfig { n: 335, p: 0.1, n1: 50, n2: 60, p1: 0.7, p2: 0.7, b: 0.4, seed: 1 }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.n1 == 0 || self.n2 == 0 {
            return bad(format!("planted sizes must be positive, got n1={}, n2={}", self.n1, self.n2));
        }
        if self.n1 + self.n2 > self.n {
            return bad(format!("n1 + n2 = {} exceeds n = {}", self.n1 + self.n2, self.n));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return bad(format!("p = {} outside [0, 1]", self.p));
        }
        for (name, q) in [("p1", self.p1), ("p2", self.p2)] {
            if !(q > self.p && q <= 1.0) {
                return bad(format!("{name} = {q} must satisfy p < {name} <= 1 (p = {})", self.p));
            }
        }
        if !(self.b > 0.0 && self.b <= 0.5) {
            return bad(format!("b = {} must satisfy 0 < b <= 1/2", self.b));
        }
        Ok(())
    }

    /// `key=value` lines, one per parameter.
    pub fn to_key_values(&self) -> String {
        format!(
            "n={}\np={}\nn1={}\nn2={}\np1={}\np2={}\nb={}\nseed={}\n",
            self.n, self.p, self.n1, self.n2, self.p1, self.p2, self.b, self.seed
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Class {
    C1,
    C2,
    Background,
}

impl Class {
    pub fn label(self) -> usize {
        match self {
            Class::C1 => 0,
            Class::C2 => 1,
            Class::Background => 2,
        }
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Class::C1 => "C1",
            Class::C2 => "C2",
            Class::Background => "BG",
        })
    }
}

/// Planted membership of each vertex, indexed like the generated graph.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub membership: Vec<Class>,
}

impl GroundTruth {
    pub fn labels(&self) -> Vec<usize> {
        self.membership.iter().map(|c| c.label()).collect()
    }

    pub fn members(&self, class: Class) -> Vec<usize> {
        (0..self.membership.len()).filter(|&v| self.membership[v] == class).collect()
    }
}

/// Generates the weighted planted graph and its ground truth.
///
/// Pairs are visited in `(i, j)` order. Every pair draws against `p`; pairs
/// inside a planted group draw again against `p1`/`p2`, and the edge exists
/// if either draw succeeds. Vertex indices are then shuffled and vertices are
/// named by zero-padded index.
pub fn generate(config: &SimConfig) -> Result<(WeightedGraph, GroundTruth)> {
    config.validate()?;
    let n = config.n;
    let class_of = |v: usize| {
        if v < config.n1 {
            Class::C1
        } else if v < config.n1 + config.n2 {
            Class::C2
        } else {
            Class::Background
        }
    };

    let mut topo = stream_rng(config.seed, Stream::Topology, 0);
    let mut weights = stream_rng(config.seed, Stream::Weights, 0);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let (ci, cj) = (class_of(i), class_of(j));
            let mut exists = topo.gen::<f64>() < config.p;
            let planted = match (ci, cj) {
                (Class::C1, Class::C1) => Some(config.p1),
                (Class::C2, Class::C2) => Some(config.p2),
                _ => None,
            };
            if let Some(pp) = planted {
                exists |= topo.gen::<f64>() < pp;
            }
            if exists {
                let u: f64 = weights.sample(Open01);
                let w = if planted.is_some() { u } else { u * config.b };
                edges.push((i, j, w));
            }
        }
    }

    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut stream_rng(config.seed, Stream::Shuffle, 0));
    let width = n.saturating_sub(1).to_string().len();
    let vertices = (0..n).map(|v| format!("{v:0width$}")).collect();
    let mut membership = vec![Class::Background; n];
    for (old, &new) in perm.iter().enumerate() {
        membership[new] = class_of(old);
    }
    let graph = WeightedGraph::from_edges(vertices, edges.into_iter().map(|(i, j, w)| (perm[i], perm[j], w)))?;
    Ok((graph, GroundTruth { membership }))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Agreement {
    pub accuracy: f64,
    pub ari: f64,
}

/// Best-match accuracy and adjusted Rand index of a clustering against truth.
pub fn agreement(predicted: &Clustering, truth: &GroundTruth) -> Result<Agreement> {
    agreement_labels(&predicted.assignment, &truth.labels())
}

pub fn agreement_labels(predicted: &[usize], truth: &[usize]) -> Result<Agreement> {
    if predicted.len() != truth.len() {
        return Err(Error::Input(format!("predicted covers {} vertices, truth {}", predicted.len(), truth.len())));
    }
    let n = predicted.len();
    if n == 0 {
        return Ok(Agreement { accuracy: 1.0, ari: 1.0 });
    }
    let rows = predicted.iter().max().map_or(0, |m| m + 1);
    let cols = truth.iter().max().map_or(0, |m| m + 1);
    let side = rows.max(cols);
    let mut table = vec![vec![0i64; side]; side];
    for (&p, &t) in predicted.iter().zip(truth) {
        table[p][t] += 1;
    }
    let matrix = Matrix::from_rows(table.clone()).expect("square contingency table");
    let (matched, _) = kuhn_munkres(&matrix);
    let accuracy = matched as f64 / n as f64;

    let choose2 = |x: i64| (x * (x - 1) / 2) as f64;
    let index: f64 = table.iter().flatten().map(|&c| choose2(c)).sum();
    let row_sum: f64 = table.iter().map(|r| choose2(r.iter().sum())).sum();
    let col_sum: f64 = (0..side).map(|c| choose2(table.iter().map(|r| r[c]).sum())).sum();
    let total = choose2(n as i64);
    let expected = if total > 0.0 { row_sum * col_sum / total } else { 0.0 };
    let max_index = 0.5 * (row_sum + col_sum);
    let ari = if max_index == expected {
        // both partitions trivial (one block, or all singletons)
        if row_sum == col_sum {
            1.0
        } else {
            0.0
        }
    } else {
        (index - expected) / (max_index - expected)
    };
    Ok(Agreement { accuracy, ari })
}

/// Vertex order sorting the Fiedler vector ascending (ties by index).
/// `order[pos]` is the vertex placed at `pos`.
///
/// Entries are compared after scaling by `D^{-1/2}`, i.e. on the generalized
/// eigenvector of `(D - W) f = λ D f`. Scaling is per-vertex positive, so
/// signs are kept, and it makes the order monotone along paths.
pub fn reorder_by_fiedler(g: &WeightedGraph) -> Result<Vec<usize>> {
    let q = fiedler_vector(g)?;
    let f: Vec<f64> = q.iter().enumerate().map(|(u, x)| x / g.degree(u).sqrt()).collect();
    let mut order: Vec<usize> = (0..g.n()).collect();
    order.sort_by(|&a, &b| f[a].total_cmp(&f[b]).then(a.cmp(&b)));
    Ok(order)
}
