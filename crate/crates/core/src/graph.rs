//! Trader graph construction.
//!
//! Trades between a pair of traders are aggregated into [`PairStats`]
//! (count, volume, volume-weighted price). Each pair's closeness is the mean
//! of up to four terms, each in `[0, 1]`:
//!
//! * `T`: trade count, min-max normalized over the window's trading pairs
//! * `V`: total volume, normalized the same way
//! * `P`: VWAP, normalized the same way
//! * `C`: Jaccard overlap of the two traders' closed neighbor sets
//!
//! Traders who never traded directly but share a counterparty get a
//! two-hop edge whose `T`, `V` and `P` terms are zero, so it is carried by
//! commonality alone.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{BufRead, Read, Write};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::ingest::TradeRecord;
use crate::numfmt;

/// Aggregated trading between two traders, keyed with `i < j`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairStats {
    pub i: String,
    pub j: String,
    pub trades: u64,
    pub volume: u64,
    /// Sum of price times volume.
    pub notional: f64,
    pub min_price: f64,
    pub max_price: f64,
}

impl PairStats {
    /// Volume-weighted average price. Zero for a pair with no trades.
    pub fn vwap(&self) -> f64 {
        if self.volume == 0 {
            0.0
        } else {
            self.notional / self.volume as f64
        }
    }
}

fn pair_key(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

/// One record per unordered pair with at least one trade, sorted by `(i, j)`.
///
/// Fills are summed in a canonical order so the result does not depend on the
/// order of `trades`.
pub fn aggregate_pairs(trades: &[TradeRecord]) -> Vec<PairStats> {
    let mut fills: BTreeMap<(String, String), Vec<(f64, u64)>> = BTreeMap::new();
    for t in trades {
        fills.entry(pair_key(&t.buyer_id, &t.seller_id)).or_default().push((t.price, t.volume));
    }
    fills
        .into_iter()
        .map(|((i, j), mut fs)| {
            fs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let volume = fs.iter().map(|f| f.1).sum();
            let notional = fs.iter().map(|&(p, v)| p * v as f64).sum();
            PairStats {
                i,
                j,
                trades: fs.len() as u64,
                volume,
                notional,
                min_price: fs.first().map_or(0.0, |f| f.0),
                max_price: fs.last().map_or(0.0, |f| f.0),
            }
        })
        .collect()
}

pub type NeighborSets = BTreeMap<String, BTreeSet<String>>;

/// Closed neighborhoods from direct trades: `N_i = {i} ∪ {j : T_ij > 0}`.
pub fn direct_neighbor_sets(pairs: &[PairStats]) -> NeighborSets {
    let mut sets = NeighborSets::new();
    for p in pairs.iter().filter(|p| p.trades > 0) {
        for (a, b) in [(&p.i, &p.j), (&p.j, &p.i)] {
            let set = sets.entry(a.clone()).or_default();
            set.insert(a.clone());
            set.insert(b.clone());
        }
    }
    sets
}

pub fn jaccard_commonality(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Per-feature extrema over the trading pairs of one stock and window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureBounds {
    pub t_min: u64,
    pub t_max: u64,
    pub v_min: u64,
    pub v_max: u64,
    pub p_min: f64,
    pub p_max: f64,
}

pub fn feature_bounds(pairs: &[PairStats]) -> Result<FeatureBounds> {
    let mut traded = pairs.iter().filter(|p| p.trades > 0);
    let first = traded.next().ok_or_else(|| Error::Bounds("no trading pairs".into()))?;
    let mut b = FeatureBounds {
        t_min: first.trades,
        t_max: first.trades,
        v_min: first.volume,
        v_max: first.volume,
        p_min: first.vwap(),
        p_max: first.vwap(),
    };
    for p in traded {
        b.t_min = b.t_min.min(p.trades);
        b.t_max = b.t_max.max(p.trades);
        b.v_min = b.v_min.min(p.volume);
        b.v_max = b.v_max.max(p.volume);
        b.p_min = b.p_min.min(p.vwap());
        b.p_max = b.p_max.max(p.vwap());
    }
    Ok(b)
}

/// Min-max rescaling to `[0, 1]`. Degenerate bounds (`lo == hi`) map to 1.
pub fn normalize_feature(x: f64, lo: f64, hi: f64) -> Result<f64> {
    if lo > hi || lo.is_nan() || hi.is_nan() {
        return Err(Error::Bounds(format!("lower bound {lo} exceeds upper bound {hi}")));
    }
    if hi == lo {
        return Ok(1.0);
    }
    Ok(((x - lo) / (hi - lo)).clamp(0.0, 1.0))
}

/// A non-empty subset of the four closeness terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TermSet(u8);

impl TermSet {
    pub const T: TermSet = TermSet(0b0001);
    pub const V: TermSet = TermSet(0b0010);
    pub const P: TermSet = TermSet(0b0100);
    pub const C: TermSet = TermSet(0b1000);
    pub const ALL: TermSet = TermSet(0b1111);

    /// The full set followed by each single term, in reporting order.
    pub const ABLATION: [TermSet; 5] = [Self::ALL, Self::T, Self::V, Self::P, Self::C];

    pub fn union(self, other: TermSet) -> TermSet {
        TermSet(self.0 | other.0)
    }

    pub fn contains(self, other: TermSet) -> bool {
        self.0 & other.0 == other.0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for TermSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (flag, c) in [(Self::T, 'T'), (Self::V, 'V'), (Self::P, 'P'), (Self::C, 'C')] {
            if self.contains(flag) {
                write!(f, "{c}")?;
            }
        }
        Ok(())
    }
}

impl FromStr for TermSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut set = TermSet(0);
        for c in s.chars() {
            set = set.union(match c.to_ascii_uppercase() {
                'T' => Self::T,
                'V' => Self::V,
                'P' => Self::P,
                'C' => Self::C,
                _ => return Err(Error::Parameter(format!("unknown weight term {c:?} in {s:?}"))),
            });
        }
        if set.is_empty() {
            return Err(Error::Parameter("term set must not be empty".into()));
        }
        Ok(set)
    }
}

/// Symmetric, positively weighted simple graph over named vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    vertices: Vec<String>,
    index: HashMap<String, usize>,
    /// Per-vertex neighbor lists sorted by neighbor index.
    adj: Vec<Vec<(usize, f64)>>,
}

impl WeightedGraph {
    /// Builds a graph from vertex names and `(u, v, w)` index triples.
    ///
    /// Rejects duplicate vertices, self-loops, repeated edges and weights that
    /// are not finite and positive.
    pub fn from_edges<I>(vertices: Vec<String>, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut index = HashMap::with_capacity(vertices.len());
        for (i, v) in vertices.iter().enumerate() {
            if index.insert(v.clone(), i).is_some() {
                return Err(Error::Input(format!("duplicate vertex {v:?}")));
            }
        }
        let n = vertices.len();
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (u, v, w) in edges {
            if u >= n || v >= n {
                return Err(Error::Input(format!("edge ({u},{v}) out of range for {n} vertices")));
            }
            if u == v {
                return Err(Error::Input(format!("self-loop at {:?}", vertices[u])));
            }
            if !w.is_finite() || w <= 0.0 {
                return Err(Error::Input(format!(
                    "edge ({:?},{:?}) has non-positive weight {w}",
                    vertices[u], vertices[v]
                )));
            }
            adj[u].push((v, w));
            adj[v].push((u, w));
        }
        for (u, list) in adj.iter_mut().enumerate() {
            list.sort_by_key(|e| e.0);
            if let Some(pair) = list.windows(2).find(|p| p[0].0 == p[1].0) {
                return Err(Error::Input(format!("repeated edge ({:?},{:?})", vertices[u], vertices[pair[0].0])));
            }
        }
        Ok(WeightedGraph { vertices, index, adj })
    }

    pub fn n(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn vertex_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn neighbors(&self, u: usize) -> &[(usize, f64)] {
        &self.adj[u]
    }

    pub fn weight(&self, u: usize, v: usize) -> f64 {
        self.adj[u].binary_search_by_key(&v, |e| e.0).map_or(0.0, |pos| self.adj[u][pos].1)
    }

    pub fn degree(&self, u: usize) -> f64 {
        self.adj[u].iter().map(|e| e.1).sum()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Each undirected edge once, as `(u, v, w)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |e| e.0 > u).map(move |&(v, w)| (u, v, w)))
    }

    /// Dense row-major weight matrix with zero diagonal.
    pub fn dense(&self) -> Vec<f64> {
        let n = self.n();
        let mut m = vec![0.0; n * n];
        for (u, v, w) in self.edges() {
            m[u * n + v] = w;
            m[v * n + u] = w;
        }
        m
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::from_edges(self.vertices.clone(), self.edges().map(|(u, v, w)| (u, v, w * c)).collect::<Vec<_>>())
    }

    /// Induced subgraph on `keep` (indices into this graph), in that order.
    pub fn subgraph(&self, keep: &[usize]) -> Self {
        let mut remap = vec![usize::MAX; self.n()];
        for (new, &old) in keep.iter().enumerate() {
            remap[old] = new;
        }
        let vertices = keep.iter().map(|&u| self.vertices[u].clone()).collect();
        let edges: Vec<_> = self
            .edges()
            .filter(|&(u, v, _)| remap[u] != usize::MAX && remap[v] != usize::MAX)
            .map(|(u, v, w)| (remap[u], remap[v], w))
            .collect();
        Self::from_edges(vertices, edges).expect("subgraph of a valid graph is valid")
    }

    pub fn isolated(&self) -> Vec<usize> {
        (0..self.n()).filter(|&u| self.adj[u].is_empty()).collect()
    }

    /// Connected components, each sorted, ordered by smallest member index.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.n()];
        let mut out = Vec::new();
        for s in 0..self.n() {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut comp = vec![s];
            let mut stack = vec![s];
            while let Some(u) = stack.pop() {
                for &(v, _) in &self.adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        comp.push(v);
                        stack.push(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Writes the `i,j,weight` edge list with `i < j` lexicographically.
    pub fn write_edge_list<W: Write>(&self, writer: W) -> Result<()> {
        let mut rows: Vec<(&str, &str, f64)> = self
            .edges()
            .map(|(u, v, w)| {
                let (a, b) = (self.vertices[u].as_str(), self.vertices[v].as_str());
                if a < b {
                    (a, b, w)
                } else {
                    (b, a, w)
                }
            })
            .collect();
        rows.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["i", "j", "weight"])?;
        for (a, b, w) in rows {
            wtr.write_record([a, b, &numfmt::sig(w, 12)])?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Writes one `trader_id` per line, header first.
    pub fn write_vertex_list<W: Write>(&self, mut writer: W) -> Result<()> {
        writeln!(writer, "trader_id")?;
        for v in &self.vertices {
            writeln!(writer, "{v}")?;
        }
        Ok(())
    }

    /// Reads an edge list, optionally with a vertex list that fixes vertex
    /// order and carries isolated vertices. Without one, vertices are sorted.
    pub fn read_edge_list<R: Read>(edges: R, vertex_list: Option<&mut dyn BufRead>) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(edges);
        let mut raw = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() < 3 {
                return Err(Error::Input(format!("edge row {} has {} fields", row + 2, rec.len())));
            }
            let w: f64 = rec[2]
                .trim()
                .parse()
                .map_err(|_| Error::Input(format!("edge row {}: bad weight {:?}", row + 2, &rec[2])))?;
            raw.push((rec[0].trim().to_string(), rec[1].trim().to_string(), w));
        }
        let vertices: Vec<String> = match vertex_list {
            Some(list) => {
                let mut vs = Vec::new();
                for (n, line) in list.lines().enumerate() {
                    let line = line?;
                    let id = line.trim();
                    if n == 0 && id == "trader_id" || id.is_empty() {
                        continue;
                    }
                    vs.push(id.to_string());
                }
                vs
            }
            None => {
                let set: BTreeSet<&String> = raw.iter().flat_map(|(a, b, _)| [a, b]).collect();
                set.into_iter().cloned().collect()
            }
        };
        let index: HashMap<&str, usize> = vertices.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
        let mut edges = Vec::with_capacity(raw.len());
        for (a, b, w) in &raw {
            let (u, v) = match (index.get(a.as_str()), index.get(b.as_str())) {
                (Some(&u), Some(&v)) => (u, v),
                _ => return Err(Error::Input(format!("edge ({a},{b}) names a vertex not in the vertex list"))),
            };
            edges.push((u, v, *w));
        }
        Self::from_edges(vertices, edges)
    }
}

/// Builds the trader graph from aggregated pairs.
///
/// Vertices are all traders in `pairs`, sorted. Edges are the trading pairs
/// plus every two-hop pair (sharing a trading counterparty). The weight is the
/// mean of the selected terms; edges whose weight is zero are dropped.
pub fn build_graph(pairs: &[PairStats], bounds: &FeatureBounds, terms: TermSet) -> Result<WeightedGraph> {
    if terms.is_empty() {
        return Err(Error::Parameter("term set must not be empty".into()));
    }
    let traded: Vec<&PairStats> = pairs.iter().filter(|p| p.trades > 0).collect();
    if traded.is_empty() {
        return Err(Error::Bounds("no trading pairs".into()));
    }
    let neighbors = direct_neighbor_sets(pairs);
    let vertices: Vec<String> = neighbors.keys().cloned().collect();
    let index: HashMap<&str, usize> = vertices.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
    let count = terms.len() as f64;

    let mut weights: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let commonality = |a: &str, b: &str| jaccard_commonality(&neighbors[a], &neighbors[b]);

    for p in &traded {
        let mut sum = 0.0;
        if terms.contains(TermSet::T) {
            sum += normalize_feature(p.trades as f64, bounds.t_min as f64, bounds.t_max as f64)?;
        }
        if terms.contains(TermSet::V) {
            sum += normalize_feature(p.volume as f64, bounds.v_min as f64, bounds.v_max as f64)?;
        }
        if terms.contains(TermSet::P) {
            sum += normalize_feature(p.vwap(), bounds.p_min, bounds.p_max)?;
        }
        if terms.contains(TermSet::C) {
            sum += commonality(&p.i, &p.j);
        }
        let (u, v) = (index[p.i.as_str()], index[p.j.as_str()]);
        weights.insert((u.min(v), u.max(v)), sum / count);
    }

    if terms.contains(TermSet::C) {
        for (mid, set) in &neighbors {
            let others: Vec<usize> = set.iter().filter(|x| *x != mid).map(|x| index[x.as_str()]).collect();
            for (a_pos, &a) in others.iter().enumerate() {
                for &b in &others[a_pos + 1..] {
                    let key = (a.min(b), a.max(b));
                    weights.entry(key).or_insert_with(|| commonality(&vertices[key.0], &vertices[key.1]) / count);
                }
            }
        }
    }

    let edges: Vec<_> = weights.into_iter().filter(|&(_, w)| w > 0.0).map(|((u, v), w)| (u, v, w)).collect();
    WeightedGraph::from_edges(vertices, edges)
}
