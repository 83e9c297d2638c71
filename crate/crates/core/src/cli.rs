//! The `collusion` command line: `detect`, `simulate` and `ablate`.
//!
//! Every command computes all outputs in memory and writes them only on
//! success; `report.txt` is written in every case. Exit codes: 0 success,
//! 2 input or configuration error, 3 graph degeneracy, 4 numeric failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::graph::{aggregate_pairs, build_graph, feature_bounds, PairStats, TermSet, WeightedGraph};
use crate::ingest::{filter_window, parse_timestamp, parse_trades, IdMapping, Schema, WindowSpec};
use crate::numfmt::sig;
use crate::pipeline::{detect, DetectOptions, Detection, DEFAULT_K_MAX_CAP, DEFAULT_Q_THRESHOLD};
use crate::quality::{ablation_sweep_with, KSweepResult};
use crate::report::{InputDigest, RunReport};
use crate::simulator::{agreement_labels, generate, reorder_by_fiedler, SimConfig};
use crate::spectral::Spectrum;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::IsolatedVertex(_) | Error::Disconnected(_) => EXIT_DEGENERATE,
        Error::Numeric(_) => EXIT_NUMERIC,
        _ => EXIT_INPUT,
    }
}

#[derive(Debug, Parser)]
#[command(name = "collusion", version, about = "Detect suspected colluding trader groups with spectral clustering")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cluster the trader graph of one stock and window.
    Detect(DetectArgs),
    /// Generate a planted-partition graph and check recovery.
    Simulate(SimulateArgs),
    /// Compare modularity curves of the full weighting and each single term.
    Ablate(AblateArgs),
}

#[derive(Debug, Args)]
pub struct TradeInput {
    /// Trade CSV file.
    #[arg(long)]
    pub trades: Option<PathBuf>,
    /// Stock to analyze; optional when the file holds a single stock.
    #[arg(long)]
    pub stock: Option<String>,
    /// Window start (ISO-8601 or epoch seconds); defaults to the stock's first trade.
    #[arg(long)]
    pub start: Option<String>,
    /// Window length in days.
    #[arg(long)]
    pub days: Option<f64>,
    /// Column overrides, e.g. `buyer_id=buy,volume=qty`.
    #[arg(long)]
    pub schema: Option<String>,
    /// Buyer/seller columns hold 17-digit order ids; traders are their 6-digit prefixes.
    #[arg(long)]
    pub order_ids: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, default_value_t = 2)]
    pub k_min: usize,
    /// Defaults to min(20, n - 1).
    #[arg(long)]
    pub k_max: Option<usize>,
    /// Sweep k up to n.
    #[arg(long)]
    pub full_sweep: bool,
    /// Seed for all randomness; a random seed is chosen and printed when absent.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_Q_THRESHOLD)]
    pub q_threshold: f64,
    /// Cluster each connected component separately.
    #[arg(long)]
    pub per_component: bool,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[command(flatten)]
    pub input: TradeInput,
    /// Edge-list CSV (`i,j,weight`) to cluster instead of a trade file.
    #[arg(long, conflicts_with = "trades")]
    pub graph: Option<PathBuf>,
    /// Vertex list accompanying `--graph`.
    #[arg(long, requires = "graph")]
    pub vertices: Option<PathBuf>,
    /// Weight terms: any of t, v, p, c.
    #[arg(long, default_value = "tvpc")]
    pub terms: String,
    #[command(flatten)]
    pub sweep: SweepArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 335)]
    pub n: usize,
    #[arg(long, default_value_t = 0.1)]
    pub p: f64,
    #[arg(long, default_value_t = 50)]
    pub n1: usize,
    #[arg(long, default_value_t = 60)]
    pub n2: usize,
    #[arg(long, default_value_t = 0.7)]
    pub p1: f64,
    #[arg(long, default_value_t = 0.7)]
    pub p2: f64,
    #[arg(long, default_value_t = 0.4)]
    pub b: f64,
    #[command(flatten)]
    pub sweep: SweepArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TermsSource {
    Trades,
    Graph,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[command(flatten)]
    pub input: TradeInput,
    /// Edge-list input; rejected, since ablation needs pair statistics.
    #[arg(long, conflicts_with = "trades")]
    pub graph: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "trades")]
    pub terms_source: TermsSource,
    #[command(flatten)]
    pub sweep: SweepArgs,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let (name, out) = match &cli.command {
        Command::Detect(a) => ("detect", a.sweep.out.clone()),
        Command::Simulate(a) => ("simulate", a.sweep.out.clone()),
        Command::Ablate(a) => ("ablate", a.sweep.out.clone()),
    };
    let mut report = RunReport::new(name);
    let result = match &cli.command {
        Command::Detect(a) => cmd_detect(a, &mut report),
        Command::Simulate(a) => cmd_simulate(a, &mut report),
        Command::Ablate(a) => cmd_ablate(a, &mut report),
    };
    finish(report, result, &out)
}

/// Named output files, written together once a command succeeds.
#[derive(Default)]
pub struct Outputs(pub Vec<(String, String)>);

impl Outputs {
    fn add(&mut self, name: impl Into<String>, contents: String) {
        self.0.push((name.into(), contents));
    }
}

fn finish(mut report: RunReport, result: Result<Outputs>, out: &Path) -> i32 {
    let code = match result {
        Ok(outputs) => {
            let written = fs::create_dir_all(out).map_err(Error::from).and_then(|_| {
                for (name, contents) in &outputs.0 {
                    fs::write(out.join(name), contents)?;
                    report.outputs.push(name.clone());
                }
                Ok(())
            });
            match written {
                Ok(()) => {
                    report.outcome = Some("ok".into());
                    EXIT_OK
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    report.outcome = Some(format!("error: {e}"));
                    exit_code(&e)
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            report.outcome = Some(format!("error (exit {}): {e}", exit_code(&e)));
            exit_code(&e)
        }
    };
    if let Err(e) = report.write(out) {
        eprintln!("error: cannot write report: {e}");
    }
    code
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = rand::random::<u64>();
        eprintln!("seed: {s}");
        s
    })
}

fn detect_options(args: &SweepArgs, seed: u64, report: &mut RunReport) -> DetectOptions {
    let opts = DetectOptions {
        k_min: args.k_min,
        k_max: args.k_max,
        full_sweep: args.full_sweep,
        seed,
        q_threshold: args.q_threshold,
        per_component: args.per_component,
        ..Default::default()
    };
    report.set("seed", seed);
    report.set("k_min", opts.k_min);
    report.set(
        "k_max",
        match opts.k_max {
            Some(k) => k.to_string(),
            None if opts.full_sweep => "n".to_string(),
            None => format!("min({DEFAULT_K_MAX_CAP}, n-1)"),
        },
    );
    report.set("q_threshold", opts.q_threshold);
    report.set("per_component", opts.per_component);
    opts
}

/// Pair statistics for one stock and window of a trade file.
fn load_pairs(input: &TradeInput, report: &mut RunReport) -> Result<Vec<PairStats>> {
    let path = input.trades.as_ref().ok_or_else(|| Error::Input("--trades is required".into()))?;
    let days = input.days.ok_or_else(|| Error::Input("--days is required with --trades".into()))?;
    let mut schema = Schema {
        id_mapping: if input.order_ids { IdMapping::OrderIdPrefix } else { IdMapping::Identity },
        ..Schema::default()
    };
    if let Some(spec) = &input.schema {
        schema = schema.with_overrides(spec)?;
    }
    let bytes = fs::read(path).map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
    let parsed = parse_trades(&bytes[..], &schema)?;
    report.inputs.push(InputDigest::new(&path.display().to_string(), &bytes, parsed.rows));
    if !parsed.errors.is_empty() {
        report.warn(format!("{} rejected rows", parsed.errors.len()));
        for e in parsed.errors.iter().take(20) {
            report.warn(format!("  {e}"));
        }
    }

    let stock = match &input.stock {
        Some(s) => s.clone(),
        None => {
            let mut stocks: Vec<&str> = parsed.records.iter().map(|r| r.stock_id.as_str()).collect();
            stocks.sort_unstable();
            stocks.dedup();
            match stocks.as_slice() {
                [only] => only.to_string(),
                [] => return Err(Error::Input("no valid trades in input".into())),
                _ => return Err(Error::Input(format!("--stock is required: file holds {} stocks", stocks.len()))),
            }
        }
    };
    let start = match &input.start {
        Some(raw) => parse_timestamp(raw).ok_or_else(|| Error::Input(format!("bad --start {raw:?}")))?,
        None => parsed
            .records
            .iter()
            .filter(|r| r.stock_id == stock)
            .map(|r| r.timestamp)
            .min()
            .ok_or_else(|| Error::Input(format!("no trades for stock {stock:?}")))?,
    };
    let window = WindowSpec::from_days(stock.clone(), start, days)?;
    report.set("stock", &stock);
    report.set("window_start", crate::ingest::format_timestamp(window.start));
    report.set("window_days", days);
    let trades = filter_window(&parsed.records, &window);
    if trades.is_empty() {
        return Err(Error::Input(format!("no trades of {stock:?} in the window")));
    }
    report.note(format!("trades_in_window={}", trades.len()));
    Ok(aggregate_pairs(&trades))
}

fn read_graph(path: &Path, vertices: Option<&PathBuf>, report: &mut RunReport) -> Result<WeightedGraph> {
    let bytes = fs::read(path).map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
    let g = match vertices {
        Some(vp) => {
            let vbytes = fs::read(vp).map_err(|e| Error::Input(format!("cannot read {}: {e}", vp.display())))?;
            report.inputs.push(InputDigest::new(
                &vp.display().to_string(),
                &vbytes,
                vbytes.split(|b| *b == b'\n').count() as u64,
            ));
            WeightedGraph::read_edge_list(&bytes[..], Some(&mut &vbytes[..]))?
        }
        None => WeightedGraph::read_edge_list(&bytes[..], None)?,
    };
    report.inputs.push(InputDigest::new(&path.display().to_string(), &bytes, g.edge_count() as u64));
    Ok(g)
}

fn csv_line(fields: &[String]) -> String {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(fields).expect("in-memory write");
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

fn fmt_mmc(x: f64) -> String {
    if x.is_infinite() {
        "inf".into()
    } else {
        sig(x, 12)
    }
}

fn qsweep_csv(sweep: Option<&KSweepResult>) -> String {
    let mut s = String::from("k,Q,minmaxcut\n");
    for e in sweep.iter().flat_map(|r| &r.entries) {
        let _ = writeln!(s, "{},{},{}", e.score.k, sig(e.score.q, 12), fmt_mmc(e.score.minmaxcut));
    }
    s
}

fn eigenvalues_csv(spectrum: Option<&Spectrum>) -> String {
    let mut s = String::from("rank,eigenvalue\n");
    for (i, l) in spectrum.iter().flat_map(|sp| &sp.embedding.eigenvalues).enumerate() {
        let _ = writeln!(s, "{},{}", i + 1, sig(*l, 15));
    }
    s
}

fn embedding_csv(graph: &WeightedGraph, spectrum: Option<&Spectrum>, k: usize) -> Result<String> {
    let mut s = String::from("vertex_id");
    for r in 1..=k {
        let _ = write!(s, ",lambda_rank_{r}");
    }
    s.push('\n');
    if let Some(sp) = spectrum {
        let emb = sp.embedding.truncate(k)?;
        for (v, row) in emb.rows.row_iter().enumerate() {
            let mut fields = vec![graph.vertices()[v].clone()];
            fields.extend(row.iter().map(|x| sig(*x, 15)));
            s.push_str(&csv_line(&fields));
        }
    }
    Ok(s)
}

fn clusters_csv(g: &WeightedGraph, d: &Detection) -> String {
    let mut s = String::from("trader_id,cluster_id\n");
    for (v, c) in d.assignment.iter().enumerate() {
        let label = c.map_or_else(|| "unclustered".to_string(), |c| c.to_string());
        s.push_str(&csv_line(&[g.vertices()[v].clone(), label]));
    }
    s
}

/// Writes the clustering outputs of a detection and fills the report.
fn detection_outputs(
    g: &WeightedGraph,
    d: &Detection,
    opts: &DetectOptions,
    outputs: &mut Outputs,
    report: &mut RunReport,
) -> Result<()> {
    outputs.add("clusters.csv", clusters_csv(g, d));
    let single = d.components.len() == 1;
    for (i, c) in d.components.iter().enumerate() {
        let suffix = if single { String::new() } else { format!("_c{i}") };
        let emb_k = c.sweep.as_ref().map_or(1, |s| s.best_k);
        outputs.add(format!("qsweep{suffix}.csv"), qsweep_csv(c.sweep.as_ref()));
        outputs.add(format!("eigenvalues{suffix}.csv"), eigenvalues_csv(c.spectrum.as_ref()));
        outputs.add(format!("embedding{suffix}.csv"), embedding_csv(&c.graph, c.spectrum.as_ref(), emb_k)?);
        let prefix = if single { String::new() } else { format!("component {i}: ") };
        match &c.sweep {
            Some(s) if c.significant => report.note(format!(
                "{prefix}best_k={} Q={} vertices={}",
                s.best_k,
                sig(s.best_q(), 12),
                c.vertices.len()
            )),
            Some(s) => report.note(format!(
                "{prefix}no significant partition: max Q={} at k={} below q_threshold={}; one group of {} vertices",
                sig(s.best_q(), 12),
                s.best_k,
                opts.q_threshold,
                c.vertices.len()
            )),
            None => report.note(format!(
                "{prefix}no significant partition: {} vertices too few to sweep; one group",
                c.vertices.len()
            )),
        }
    }
    report.note(format!("clusters={} Q={}", d.cluster_count(), sig(d.q, 12)));
    if !d.isolated.is_empty() {
        report.note(format!("unclustered={}", d.isolated.len()));
    }
    for w in &d.warnings {
        report.warn(w.clone());
    }
    Ok(())
}

pub fn cmd_detect(args: &DetectArgs, report: &mut RunReport) -> Result<Outputs> {
    let seed = resolve_seed(args.sweep.seed);
    let opts = detect_options(&args.sweep, seed, report);
    let terms: TermSet = args.terms.parse()?;
    report.set("terms", terms);
    let g = match &args.graph {
        Some(path) => read_graph(path, args.vertices.as_ref(), report)?,
        None => {
            let pairs = load_pairs(&args.input, report)?;
            let bounds = feature_bounds(&pairs)?;
            report.note(format!("trading_pairs={}", pairs.len()));
            build_graph(&pairs, &bounds, terms)?
        }
    };
    report.note(format!("vertices={} edges={}", g.n(), g.edge_count()));
    let d = detect(&g, &opts)?;
    let mut outputs = Outputs::default();
    detection_outputs(&g, &d, &opts, &mut outputs, report)?;
    Ok(outputs)
}

pub fn cmd_simulate(args: &SimulateArgs, report: &mut RunReport) -> Result<Outputs> {
    let seed = resolve_seed(args.sweep.seed);
    let config =
        SimConfig { n: args.n, p: args.p, n1: args.n1, n2: args.n2, p1: args.p1, p2: args.p2, b: args.b, seed };
    for line in config.to_key_values().lines() {
        if let Some((k, v)) = line.split_once('=') {
            if k != "seed" {
                report.set(k, v);
            }
        }
    }
    let opts = detect_options(&args.sweep, seed, report);
    let (g, truth) = generate(&config)?;

    let mut outputs = Outputs::default();
    let mut buf = Vec::new();
    g.write_edge_list(&mut buf)?;
    outputs.add("graph.csv", String::from_utf8(buf).expect("utf-8"));
    let mut buf = Vec::new();
    g.write_vertex_list(&mut buf)?;
    outputs.add("vertices.csv", String::from_utf8(buf).expect("utf-8"));
    let mut truth_csv = String::from("vertex_id,class\n");
    for (v, c) in truth.membership.iter().enumerate() {
        let _ = writeln!(truth_csv, "{},{c}", g.vertices()[v]);
    }
    outputs.add("truth.csv", truth_csv);
    outputs.add("config.txt", config.to_key_values());
    report.note(format!("vertices={} edges={}", g.n(), g.edge_count()));

    let d = detect(&g, &opts)?;
    detection_outputs(&g, &d, &opts, &mut outputs, report)?;

    // Agreement over all vertices; unclustered vertices form one extra label.
    let truth_labels = truth.labels();
    let full_labels = |local: &[usize], vertices: &[usize], k: usize| {
        let mut labels = vec![k; g.n()];
        for (&v, &c) in vertices.iter().zip(local) {
            labels[v] = c;
        }
        labels
    };
    let mut agreement_csv = String::from("k,accuracy,ari\n");
    if let [c] = d.components.as_slice() {
        for e in c.sweep.iter().flat_map(|s| &s.entries) {
            let a =
                agreement_labels(&full_labels(&e.clustering.assignment, &c.vertices, e.clustering.k), &truth_labels)?;
            let _ = writeln!(agreement_csv, "{},{},{}", e.score.k, sig(a.accuracy, 12), sig(a.ari, 12));
        }
    }
    let final_labels: Vec<usize> = d.assignment.iter().map(|c| c.unwrap_or(d.cluster_count())).collect();
    let a = agreement_labels(&final_labels, &truth_labels)?;
    report.note(format!("selected accuracy={} ari={}", sig(a.accuracy, 12), sig(a.ari, 12)));
    outputs.add("agreement.csv", agreement_csv);

    if let [c] = d.components.as_slice() {
        let order = reorder_by_fiedler(&c.graph)?;
        let ids: Vec<String> = order.iter().map(|&v| c.graph.vertices()[v].clone()).collect();
        let mut header = vec!["vertex_id".to_string()];
        header.extend(ids.iter().cloned());
        let mut s = csv_line(&header);
        for &u in &order {
            let mut row = vec![c.graph.vertices()[u].clone()];
            row.extend(order.iter().map(|&v| sig(c.graph.weight(u, v), 12)));
            s.push_str(&csv_line(&row));
        }
        outputs.add("reordered_adjacency.csv", s);
    } else {
        report.warn("graph has several components; reordered adjacency skipped");
    }
    Ok(outputs)
}

pub fn cmd_ablate(args: &AblateArgs, report: &mut RunReport) -> Result<Outputs> {
    if args.graph.is_some() || args.terms_source == TermsSource::Graph {
        return Err(Error::Input("ablation requires pair statistics; use --trades, not a graph file".into()));
    }
    let seed = resolve_seed(args.sweep.seed);
    let opts = detect_options(&args.sweep, seed, report);
    let pairs = load_pairs(&args.input, report)?;
    let bounds = feature_bounds(&pairs)?;
    let n = build_graph(&pairs, &bounds, TermSet::ALL)?.n();
    let k_max = match (opts.k_max, opts.full_sweep) {
        (Some(k), _) => k,
        (None, true) => n,
        (None, false) => DEFAULT_K_MAX_CAP.min(n.saturating_sub(1)),
    };
    let curves = ablation_sweep_with(&pairs, &bounds, opts.k_min, k_max, seed, opts.per_component)?;
    let mut s = String::from("terms,k,Q\n");
    for curve in &curves {
        // k beyond this graph's order has no partition; Q is left empty
        for k in opts.k_min..=k_max {
            let q = curve.sweep.entry(k).map_or(String::new(), |e| sig(e.score.q, 12));
            let _ = writeln!(s, "{},{k},{q}", curve.terms);
        }
        report.note(format!(
            "terms={} vertices={} best_k={} Q={}",
            curve.terms,
            curve.graph.n(),
            curve.sweep.best_k,
            sig(curve.sweep.best_q(), 12)
        ));
        if !curve.isolated.is_empty() {
            report.warn(format!("terms={}: {} traders left out of the graph", curve.terms, curve.isolated.len()));
        }
    }
    let mut outputs = Outputs::default();
    outputs.add("ablation.csv", s);
    Ok(outputs)
}
