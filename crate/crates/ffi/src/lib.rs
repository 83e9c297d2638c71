//! C ABI over `collusion-core`.
//!
//! Objects cross the boundary as opaque handles created by `*_new`/`*_from_*`
//! style constructors and released by the matching `*_free`. Every fallible
//! call returns a [`CollusionStatus`]; on failure the message is available
//! from [`collusion_last_error`] until the next failing call on the same
//! thread.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use collusion_core::graph::{aggregate_pairs, build_graph, feature_bounds, TermSet};
use collusion_core::ingest::{filter_window, parse_trades, Schema, WindowSpec};
use collusion_core::quality::KSweepResult;
use collusion_core::simulator::{agreement_labels, generate, GroundTruth, SimConfig};
use collusion_core::{minmaxcut, modularity, spectral_cluster, sweep_k, Clustering, Error, WeightedGraph};

/// Result of every fallible call. Values 2 to 4 match the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollusionStatus {
    Ok = 0,
    /// A required pointer was null or a string was not UTF-8.
    InvalidArgument = 1,
    /// Bad input data, parameters or configuration.
    Input = 2,
    /// Isolated vertex or disconnected graph.
    Degenerate = 3,
    /// Eigensolver or other numerical failure.
    Numeric = 4,
    /// A panic was caught at the boundary.
    Internal = 5,
}

/// Trader graph handle.
pub struct CollusionGraph {
    graph: WeightedGraph,
    names: Vec<CString>,
}

/// Cluster assignment handle.
pub struct CollusionClustering(Clustering);

/// Result of a sweep over cluster counts.
pub struct CollusionSweep(KSweepResult);

/// Planted-partition instance: a graph and its ground truth.
pub struct CollusionSimulation {
    graph: CollusionGraph,
    truth: GroundTruth,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> CollusionStatus {
    match err {
        Error::IsolatedVertex(_) | Error::Disconnected(_) => CollusionStatus::Degenerate,
        Error::Numeric(_) => CollusionStatus::Numeric,
        _ => CollusionStatus::Input,
    }
}

struct Fail(CollusionStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn invalid(msg: &str) -> Fail {
    Fail(CollusionStatus::InvalidArgument, msg.to_string())
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> CollusionStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CollusionStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            CollusionStatus::Internal
        }
    }
}

unsafe fn out_ptr<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| invalid(&format!("{name} is null")))
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| invalid(&format!("{name} is null")))
}

unsafe fn array<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(invalid(&format!("{name} is null")));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn string<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(invalid(&format!("{name} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid(&format!("{name} is not UTF-8")))
}

fn wrap_graph(graph: WeightedGraph) -> CollusionGraph {
    let names = graph.vertices().iter().map(|v| CString::new(v.replace('\0', " ")).unwrap_or_default()).collect();
    CollusionGraph { graph, names }
}

fn labels(raw: &[u32]) -> Vec<usize> {
    raw.iter().map(|&l| l as usize).collect()
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn collusion_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds a graph over `n_vertices` vertices named by zero-padded index.
/// Edge `e` joins `src[e]` and `dst[e]` with weight `weight[e]`.
#[no_mangle]
pub unsafe extern "C" fn collusion_graph_from_edges(
    n_vertices: usize,
    src: *const u32,
    dst: *const u32,
    weight: *const f64,
    n_edges: usize,
    out: *mut *mut CollusionGraph,
) -> CollusionStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let (s, d, w) = (array(src, n_edges, "src")?, array(dst, n_edges, "dst")?, array(weight, n_edges, "weight")?);
        let width = n_vertices.saturating_sub(1).to_string().len();
        let names = (0..n_vertices).map(|i| format!("{i:0width$}")).collect();
        let edges = (0..n_edges).map(|e| (s[e] as usize, d[e] as usize, w[e]));
        let g = WeightedGraph::from_edges(names, edges)?;
        *out = Box::into_raw(Box::new(wrap_graph(g)));
        Ok(())
    })
}

/// Reads an `i,j,weight` edge-list CSV.
#[no_mangle]
pub unsafe extern "C" fn collusion_graph_read_edge_list(
    path: *const c_char,
    out: *mut *mut CollusionGraph,
) -> CollusionStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let file = File::open(string(path, "path")?).map_err(Error::from)?;
        let g = WeightedGraph::read_edge_list(file, None)?;
        *out = Box::into_raw(Box::new(wrap_graph(g)));
        Ok(())
    })
}

/// Builds the trader graph of one stock over `[start, start + days)` from a
/// trade CSV with the default column names. `terms` is a subset of "tvpc".
#[no_mangle]
pub unsafe extern "C" fn collusion_graph_from_trades(
    path: *const c_char,
    stock: *const c_char,
    start: i64,
    days: f64,
    terms: *const c_char,
    out: *mut *mut CollusionGraph,
) -> CollusionStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let terms: TermSet = string(terms, "terms")?.parse()?;
        let file = File::open(string(path, "path")?).map_err(Error::from)?;
        let parsed = parse_trades(file, &Schema::default())?;
        let window = WindowSpec::from_days(string(stock, "stock")?, start, days)?;
        let trades = filter_window(&parsed.records, &window);
        let pairs = aggregate_pairs(&trades);
        let bounds = feature_bounds(&pairs)?;
        let g = build_graph(&pairs, &bounds, terms)?;
        *out = Box::into_raw(Box::new(wrap_graph(g)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn collusion_graph_free(g: *mut CollusionGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Vertex count, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn collusion_graph_vertex_count(g: *const CollusionGraph) -> usize {
    g.as_ref().map_or(0, |g| g.graph.n())
}

/// Edge count, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn collusion_graph_edge_count(g: *const CollusionGraph) -> usize {
    g.as_ref().map_or(0, |g| g.graph.edge_count())
}

/// Name of vertex `i`, owned by the graph. Null when out of range.
#[no_mangle]
pub unsafe extern "C" fn collusion_graph_vertex_name(g: *const CollusionGraph, i: usize) -> *const c_char {
    g.as_ref().and_then(|g| g.names.get(i)).map_or(ptr::null(), |c| c.as_ptr())
}

/// Weight between vertices `i` and `j`; 0 when absent or out of range.
#[no_mangle]
pub unsafe extern "C" fn collusion_graph_weight(g: *const CollusionGraph, i: usize, j: usize) -> f64 {
    match g.as_ref() {
        Some(g) if i < g.graph.n() && j < g.graph.n() => g.graph.weight(i, j),
        _ => 0.0,
    }
}

/// Generates a planted-partition instance.
#[no_mangle]
pub unsafe extern "C" fn collusion_simulate(
    n: usize,
    p: f64,
    n1: usize,
    n2: usize,
    p1: f64,
    p2: f64,
    b: f64,
    seed: u64,
    out: *mut *mut CollusionSimulation,
) -> CollusionStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let (g, truth) = generate(&SimConfig { n, p, n1, n2, p1, p2, b, seed })?;
        *out = Box::into_raw(Box::new(CollusionSimulation { graph: wrap_graph(g), truth }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn collusion_simulation_free(s: *mut CollusionSimulation) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// The simulated graph, owned by the simulation. Do not free it.
#[no_mangle]
pub unsafe extern "C" fn collusion_simulation_graph(s: *const CollusionSimulation) -> *const CollusionGraph {
    s.as_ref().map_or(ptr::null(), |s| &s.graph as *const _)
}

/// Copies planted labels (0 = first group, 1 = second, 2 = background) into
/// `labels`, which must hold the graph's vertex count.
#[no_mangle]
pub unsafe extern "C" fn collusion_simulation_truth(
    s: *const CollusionSimulation,
    labels: *mut u32,
    len: usize,
) -> CollusionStatus {
    guard(|| {
        let s = handle(s, "simulation")?;
        let n = s.truth.membership.len();
        if len < n || labels.is_null() {
            return Err(invalid(&format!("labels must hold {n} entries")));
        }
        let dst = slice::from_raw_parts_mut(labels, n);
        for (d, c) in dst.iter_mut().zip(&s.truth.membership) {
            *d = c.label() as u32;
        }
        Ok(())
    })
}

/// Spectral clustering into `k` groups.
#[no_mangle]
pub unsafe extern "C" fn collusion_spectral_cluster(
    g: *const CollusionGraph,
    k: usize,
    seed: u64,
    out: *mut *mut CollusionClustering,
) -> CollusionStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let c = spectral_cluster(&handle(g, "graph")?.graph, k, seed)?;
        *out = Box::into_raw(Box::new(CollusionClustering(c)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn collusion_clustering_free(c: *mut CollusionClustering) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Number of clusters, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn collusion_clustering_k(c: *const CollusionClustering) -> usize {
    c.as_ref().map_or(0, |c| c.0.k)
}

/// Copies the per-vertex cluster labels into `labels` (length >= n).
#[no_mangle]
pub unsafe extern "C" fn collusion_clustering_labels(
    c: *const CollusionClustering,
    labels: *mut u32,
    len: usize,
) -> CollusionStatus {
    guard(|| {
        let c = &handle(c, "clustering")?.0;
        let n = c.n();
        if len < n || labels.is_null() {
            return Err(invalid(&format!("labels must hold {n} entries")));
        }
        let dst = slice::from_raw_parts_mut(labels, n);
        for (d, &a) in dst.iter_mut().zip(&c.assignment) {
            *d = a as u32;
        }
        Ok(())
    })
}

/// Clusters for every k in `[k_min, k_max]` and keeps the modularity maximizer.
#[no_mangle]
pub unsafe extern "C" fn collusion_sweep_k(
    g: *const CollusionGraph,
    k_min: usize,
    k_max: usize,
    seed: u64,
    out: *mut *mut CollusionSweep,
) -> CollusionStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let r = sweep_k(&handle(g, "graph")?.graph, k_min, k_max, seed)?;
        *out = Box::into_raw(Box::new(CollusionSweep(r)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn collusion_sweep_free(s: *mut CollusionSweep) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Selected cluster count, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn collusion_sweep_best_k(s: *const CollusionSweep) -> usize {
    s.as_ref().map_or(0, |s| s.0.best_k)
}

/// Number of evaluated cluster counts.
#[no_mangle]
pub unsafe extern "C" fn collusion_sweep_len(s: *const CollusionSweep) -> usize {
    s.as_ref().map_or(0, |s| s.0.entries.len())
}

/// Scores of the `index`-th evaluated cluster count.
#[no_mangle]
pub unsafe extern "C" fn collusion_sweep_entry(
    s: *const CollusionSweep,
    index: usize,
    k: *mut usize,
    q: *mut f64,
    minmaxcut: *mut f64,
) -> CollusionStatus {
    guard(|| {
        let s = &handle(s, "sweep")?.0;
        let e = s.entries.get(index).ok_or_else(|| invalid(&format!("index {index} out of range")))?;
        *out_ptr(k, "k")? = e.score.k;
        *out_ptr(q, "q")? = e.score.q;
        *out_ptr(minmaxcut, "minmaxcut")? = e.score.minmaxcut;
        Ok(())
    })
}

/// A copy of the clustering chosen by the sweep.
#[no_mangle]
pub unsafe extern "C" fn collusion_sweep_best(
    s: *const CollusionSweep,
    out: *mut *mut CollusionClustering,
) -> CollusionStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let c = handle(s, "sweep")?.0.best().clustering.clone();
        *out = Box::into_raw(Box::new(CollusionClustering(c)));
        Ok(())
    })
}

/// Modularity of the partition given by `labels` (one per vertex, using
/// every label in `0..k`).
#[no_mangle]
pub unsafe extern "C" fn collusion_modularity(
    g: *const CollusionGraph,
    labels: *const u32,
    len: usize,
    out: *mut f64,
) -> CollusionStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let p = Clustering::from_assignment(self::labels(array(labels, len, "labels")?))?;
        *out = modularity(&handle(g, "graph")?.graph, &p)?;
        Ok(())
    })
}

/// MinMaxCut of the partition given by `labels`; infinite when a cluster has
/// no internal weight.
#[no_mangle]
pub unsafe extern "C" fn collusion_minmaxcut(
    g: *const CollusionGraph,
    labels: *const u32,
    len: usize,
    out: *mut f64,
) -> CollusionStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let p = Clustering::from_assignment(self::labels(array(labels, len, "labels")?))?;
        *out = minmaxcut(&handle(g, "graph")?.graph, &p)?;
        Ok(())
    })
}

/// Best-match accuracy and adjusted Rand index of `predicted` against `truth`.
#[no_mangle]
pub unsafe extern "C" fn collusion_agreement(
    predicted: *const u32,
    truth: *const u32,
    len: usize,
    accuracy: *mut f64,
    ari: *mut f64,
) -> CollusionStatus {
    guard(|| {
        let a = agreement_labels(&labels(array(predicted, len, "predicted")?), &labels(array(truth, len, "truth")?))?;
        *out_ptr(accuracy, "accuracy")? = a.accuracy;
        *out_ptr(ari, "ari")? = a.ari;
        Ok(())
    })
}
