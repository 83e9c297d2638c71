//! End-to-end group detection on a weighted trader graph.
//!
//! Isolated vertices are set aside as unclustered. The rest must be
//! connected unless per-component mode is on, in which case each component
//! is swept on its own and labels are made globally unique.

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::quality::{modularity, sweep_spectrum, without_isolated, KSweepResult};
use crate::spectral::{check_connected, Clustering, EigenSolver, Spectrum};

pub const DEFAULT_K_MIN: usize = 2;
pub const DEFAULT_K_MAX_CAP: usize = 20;
pub const DEFAULT_Q_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct DetectOptions {
    pub k_min: usize,
    /// `None` selects `min(20, n - 1)`.
    pub k_max: Option<usize>,
    /// Sweep all the way to `k = n`.
    pub full_sweep: bool,
    pub seed: u64,
    pub q_threshold: f64,
    pub per_component: bool,
    pub solver: EigenSolver,
}

impl Default for DetectOptions {
    fn default() -> Self {
        DetectOptions {
            k_min: DEFAULT_K_MIN,
            k_max: None,
            full_sweep: false,
            seed: 0,
            q_threshold: DEFAULT_Q_THRESHOLD,
            per_component: false,
            solver: EigenSolver::Auto,
        }
    }
}

/// Result for one connected component.
#[derive(Debug, Clone)]
pub struct ComponentResult {
    /// Indices into the input graph.
    pub vertices: Vec<usize>,
    pub graph: WeightedGraph,
    /// `None` when the component is too small to sweep.
    pub spectrum: Option<Spectrum>,
    pub sweep: Option<KSweepResult>,
    /// The best partition cleared the modularity threshold.
    pub significant: bool,
    /// Final labels, local to this component.
    pub clustering: Clustering,
}

impl ComponentResult {
    pub fn chosen_k(&self) -> usize {
        self.clustering.k
    }
}

#[derive(Debug, Clone)]
pub struct Detection {
    /// Cluster per input vertex; `None` for isolated (unclustered) vertices.
    pub assignment: Vec<Option<usize>>,
    pub isolated: Vec<usize>,
    pub components: Vec<ComponentResult>,
    /// Modularity of the combined partition on the non-isolated graph.
    pub q: f64,
    pub warnings: Vec<String>,
}

impl Detection {
    pub fn significant(&self) -> bool {
        self.components.iter().any(|c| c.significant)
    }

    pub fn cluster_count(&self) -> usize {
        self.assignment.iter().flatten().max().map_or(0, |m| m + 1)
    }
}

fn resolve_k_max(n: usize, opts: &DetectOptions) -> Result<usize> {
    let default = if opts.full_sweep { n } else { DEFAULT_K_MAX_CAP.min(n.saturating_sub(1)) };
    match opts.k_max {
        None => Ok(default),
        Some(k) if k < opts.k_min => Err(Error::Parameter(format!("k_max={k} is below k_min={}", opts.k_min))),
        Some(k) => Ok(k.min(n)),
    }
}

fn detect_component(
    g: &WeightedGraph,
    opts: &DetectOptions,
    warnings: &mut Vec<String>,
) -> Result<(Option<Spectrum>, Option<KSweepResult>, bool, Clustering)> {
    let n = g.n();
    let k_max = resolve_k_max(n, opts)?;
    let single = Clustering { assignment: vec![0; n], k: 1, inertia: 0.0 };
    // Eigenvalues one past the sweep show the gap after the last swept k.
    let k_eig = (k_max + 1).min(n).max(1);
    let spectrum = Spectrum::compute(g, k_eig, opts.solver)?;
    if k_max < opts.k_min {
        warnings.push(format!("{n} vertices leave no k in [{}, {k_max}]; reported as one group", opts.k_min));
        return Ok((Some(spectrum), None, false, single));
    }
    let sweep = sweep_spectrum(g, &spectrum, opts.k_min, k_max, opts.seed)?;
    if sweep.is_significant(opts.q_threshold) {
        let clustering = sweep.best().clustering.clone();
        Ok((Some(spectrum), Some(sweep), true, clustering))
    } else {
        Ok((Some(spectrum), Some(sweep), false, single))
    }
}

/// Runs isolate removal, spectral sweeps and modularity selection.
pub fn detect(g: &WeightedGraph, opts: &DetectOptions) -> Result<Detection> {
    if opts.k_min < 2 {
        return Err(Error::Parameter(format!("k_min must be at least 2, got {}", opts.k_min)));
    }
    if !opts.q_threshold.is_finite() {
        return Err(Error::Parameter("q_threshold must be finite".into()));
    }
    let mut warnings = Vec::new();
    let (core, kept, isolated) = without_isolated(g);
    if !isolated.is_empty() {
        warnings.push(format!("{} isolated vertices left unclustered", isolated.len()));
    }
    if core.n() == 0 {
        return Err(Error::Input("graph has no edges".into()));
    }

    let parts: Vec<Vec<usize>> = if opts.per_component {
        core.components()
    } else {
        check_connected(&core)?;
        vec![(0..core.n()).collect()]
    };
    if parts.len() > 1 {
        warnings.push(format!("clustering {} components separately", parts.len()));
    }

    let mut assignment = vec![None; g.n()];
    let mut combined = vec![0usize; core.n()];
    let mut offset = 0;
    let mut components = Vec::with_capacity(parts.len());
    for part in parts {
        let sub = if part.len() == core.n() { core.clone() } else { core.subgraph(&part) };
        let (spectrum, sweep, significant, clustering) = detect_component(&sub, opts, &mut warnings)?;
        if let Some(s) = &spectrum {
            if !s.embedding.zero_rows.is_empty() {
                warnings.push(format!("{} zero rows in the spectral embedding", s.embedding.zero_rows.len()));
            }
        }
        for (local, &c) in part.iter().zip(&clustering.assignment) {
            combined[*local] = offset + c;
            assignment[kept[*local]] = Some(offset + c);
        }
        offset += clustering.k;
        components.push(ComponentResult {
            vertices: part.iter().map(|&v| kept[v]).collect(),
            graph: sub,
            spectrum,
            sweep,
            significant,
            clustering,
        });
    }
    let q = modularity(&core, &Clustering { assignment: combined, k: offset, inertia: 0.0 })?;
    Ok(Detection { assignment, isolated, components, q, warnings })
}
