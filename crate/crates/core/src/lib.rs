//! Detection of suspected colluding trader groups.
//!
//! Trades for one stock and time window become a weighted trader graph
//! ([`graph`]), which is clustered with normalized-Laplacian spectral
//! clustering ([`spectral`]); the number of groups is the modularity
//! maximizer over a range of `k` ([`quality`]). [`simulator`] generates
//! planted-partition graphs with known groups for validation.

pub mod cli;
pub mod error;
pub mod graph;
pub mod ingest;
pub mod numfmt;
pub mod pipeline;
pub mod quality;
pub mod report;
pub mod rng;
pub mod simulator;
pub mod spectral;

pub use error::{Error, Result, RowError};
pub use graph::{
    aggregate_pairs, build_graph, direct_neighbor_sets, feature_bounds, jaccard_commonality, normalize_feature,
    FeatureBounds, PairStats, TermSet, WeightedGraph,
};
pub use ingest::{filter_window, parse_trades, trader_id_from_order_id, Schema, TradeRecord, WindowSpec};
pub use pipeline::{detect, DetectOptions, Detection};
pub use quality::{ablation_sweep, minmaxcut, modularity, sweep_k, KSweepResult, PartitionScore};
pub use simulator::{agreement, generate, reorder_by_fiedler, Agreement, GroundTruth, SimConfig};
pub use spectral::{
    degree_and_laplacian, kmeans, row_normalize, smallest_eigenpairs, spectral_cluster, Clustering, Laplacian,
    SpectralEmbedding,
};
