//! Partition quality and selection of the cluster count.
//!
//! Modularity sums over ordered vertex pairs, so each undirected edge counts
//! twice in both the intra-cluster sums and the total. MinMaxCut uses
//! undirected sums: `W(A)` counts each edge inside `A` once and
//! `W(A, Ā)` each crossing edge once.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{build_graph, FeatureBounds, PairStats, TermSet, WeightedGraph};
use crate::spectral::{Clustering, EigenSolver, Spectrum};

/// Scores of one partition.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionScore {
    pub k: usize,
    pub q: f64,
    /// `f64::INFINITY` when some cluster has no internal weight.
    pub minmaxcut: f64,
    /// `(W(A_t), W(A_t, Ā_t))` per cluster.
    pub per_cluster: Vec<(f64, f64)>,
}

fn check_cover(g: &WeightedGraph, p: &Clustering) -> Result<()> {
    if p.n() != g.n() {
        return Err(Error::Input(format!("partition covers {} vertices, graph has {}", p.n(), g.n())));
    }
    if let Some(&c) = p.assignment.iter().find(|&&c| c >= p.k) {
        return Err(Error::Input(format!("cluster label {c} out of range for k={}", p.k)));
    }
    Ok(())
}

/// Per-cluster undirected internal weight and cluster volume (sum of degrees).
fn cluster_sums(g: &WeightedGraph, p: &Clustering) -> (Vec<f64>, Vec<f64>) {
    let mut internal = vec![0.0; p.k];
    let mut volume = vec![0.0; p.k];
    for (u, v, w) in g.edges() {
        let (cu, cv) = (p.assignment[u], p.assignment[v]);
        volume[cu] += w;
        volume[cv] += w;
        if cu == cv {
            internal[cu] += w;
        }
    }
    (internal, volume)
}

/// Newman-Girvan modularity of `p` on `g`. Zero for a graph without edges.
pub fn modularity(g: &WeightedGraph, p: &Clustering) -> Result<f64> {
    check_cover(g, p)?;
    let (internal, volume) = cluster_sums(g, p);
    let total: f64 = 2.0 * g.edges().map(|e| e.2).sum::<f64>();
    if total == 0.0 {
        return Ok(0.0);
    }
    Ok(internal.iter().zip(&volume).map(|(&a, &v)| 2.0 * a / total - (v / total).powi(2)).sum())
}

/// `Σ_t W(A_t, Ā_t) / W(A_t)`; infinite when any `W(A_t)` is zero.
pub fn minmaxcut(g: &WeightedGraph, p: &Clustering) -> Result<f64> {
    Ok(score(g, p)?.minmaxcut)
}

pub fn score(g: &WeightedGraph, p: &Clustering) -> Result<PartitionScore> {
    let q = modularity(g, p)?;
    let (internal, volume) = cluster_sums(g, p);
    let per_cluster: Vec<(f64, f64)> =
        internal.iter().zip(&volume).map(|(&a, &v)| (a, (v - 2.0 * a).max(0.0))).collect();
    let minmaxcut = if per_cluster.iter().any(|&(a, _)| a == 0.0) {
        f64::INFINITY
    } else {
        per_cluster.iter().map(|&(a, cut)| cut / a).sum()
    };
    Ok(PartitionScore { k: p.k, q, minmaxcut, per_cluster })
}

#[derive(Debug, Clone)]
pub struct SweepEntry {
    pub score: PartitionScore,
    pub clustering: Clustering,
}

/// Clusterings and scores for each swept `k`, ascending.
#[derive(Debug, Clone)]
pub struct KSweepResult {
    pub entries: Vec<SweepEntry>,
    pub best_k: usize,
    pub seed: u64,
}

impl KSweepResult {
    pub fn best(&self) -> &SweepEntry {
        self.entry(self.best_k).expect("best_k is swept")
    }

    pub fn entry(&self, k: usize) -> Option<&SweepEntry> {
        self.entries.iter().find(|e| e.score.k == k)
    }

    pub fn best_q(&self) -> f64 {
        self.best().score.q
    }

    /// Whether the best partition clears `q_threshold`; below it the graph
    /// is reported as one group.
    pub fn is_significant(&self, q_threshold: f64) -> bool {
        self.best_q() >= q_threshold
    }
}

fn check_range(n: usize, k_min: usize, k_max: usize) -> Result<()> {
    if k_min < 2 || k_min > k_max || k_max > n {
        return Err(Error::Parameter(format!(
            "need 2 <= k_min <= k_max <= n, got k_min={k_min}, k_max={k_max}, n={n}"
        )));
    }
    Ok(())
}

/// Spectral clustering for every `k` in `k_min..=k_max`, picking the
/// modularity maximizer (smallest `k` on ties).
pub fn sweep_k(g: &WeightedGraph, k_min: usize, k_max: usize, seed: u64) -> Result<KSweepResult> {
    check_range(g.n(), k_min, k_max)?;
    let spectrum = Spectrum::compute(g, k_max, EigenSolver::Auto)?;
    sweep_spectrum(g, &spectrum, k_min, k_max, seed)
}

/// [`sweep_k`] reusing an existing decomposition with at least `k_max` pairs.
pub fn sweep_spectrum(
    g: &WeightedGraph,
    spectrum: &Spectrum,
    k_min: usize,
    k_max: usize,
    seed: u64,
) -> Result<KSweepResult> {
    check_range(g.n(), k_min, k_max)?;
    if spectrum.k_max() < k_max {
        return Err(Error::Parameter(format!(
            "decomposition holds {} eigenpairs, sweep needs {k_max}",
            spectrum.k_max()
        )));
    }
    // Each k draws from its own k-means stream, so evaluation order is free.
    let entries = (k_min..=k_max)
        .into_par_iter()
        .map(|k| {
            let clustering = spectrum.cluster(k, seed)?;
            let score = score(g, &clustering)?;
            Ok(SweepEntry { score, clustering })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best = &entries[0];
    for e in &entries[1..] {
        if e.score.q > best.score.q {
            best = e;
        }
    }
    let best_k = best.score.k;
    Ok(KSweepResult { entries, best_k, seed })
}

/// Drops zero-degree vertices. Returns the remaining graph and the indices
/// (into `g`) of both the kept and the dropped vertices.
pub fn without_isolated(g: &WeightedGraph) -> (WeightedGraph, Vec<usize>, Vec<usize>) {
    let isolated = g.isolated();
    if isolated.is_empty() {
        return (g.clone(), (0..g.n()).collect(), isolated);
    }
    let keep: Vec<usize> = (0..g.n()).filter(|u| isolated.binary_search(u).is_err()).collect();
    (g.subgraph(&keep), keep, isolated)
}

/// One ablation curve: the weighting used and its sweep.
#[derive(Debug, Clone)]
pub struct AblationCurve {
    pub terms: TermSet,
    pub graph: WeightedGraph,
    /// Traders of the pair graph left out of this curve's graph.
    pub isolated: Vec<String>,
    pub sweep: KSweepResult,
}

/// Sweeps `k` on the full weighting and on each single-term weighting.
///
/// Vertices left isolated by a weighting are dropped from that curve's
/// graph; `k_max` is clipped to each graph's order.
pub fn ablation_sweep(
    pairs: &[PairStats],
    bounds: &FeatureBounds,
    k_min: usize,
    k_max: usize,
    seed: u64,
) -> Result<Vec<AblationCurve>> {
    ablation_sweep_with(pairs, bounds, k_min, k_max, seed, false)
}

/// [`ablation_sweep`], optionally restricting each weighting's graph to its
/// largest connected component instead of failing on disconnection.
pub fn ablation_sweep_with(
    pairs: &[PairStats],
    bounds: &FeatureBounds,
    k_min: usize,
    k_max: usize,
    seed: u64,
    largest_component: bool,
) -> Result<Vec<AblationCurve>> {
    TermSet::ABLATION
        .iter()
        .map(|&terms| {
            let full = build_graph(pairs, bounds, terms)?;
            let (mut graph, _, dropped) = without_isolated(&full);
            let mut isolated: Vec<String> = dropped.iter().map(|&u| full.vertices()[u].clone()).collect();
            if largest_component {
                let comps = graph.components();
                if comps.len() > 1 {
                    let main = comps.iter().max_by_key(|c| c.len()).expect("non-empty").clone();
                    for c in comps.iter().filter(|c| **c != main) {
                        isolated.extend(c.iter().map(|&u| graph.vertices()[u].clone()));
                    }
                    graph = graph.subgraph(&main);
                }
            }
            isolated.sort();
            let sweep = sweep_k(&graph, k_min, k_max.min(graph.n()), seed)?;
            Ok(AblationCurve { terms, graph, isolated, sweep })
        })
        .collect()
}
