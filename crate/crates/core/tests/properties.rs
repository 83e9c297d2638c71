mod common;

use collusion_core::graph::{aggregate_pairs, build_graph, feature_bounds, TermSet};
use collusion_core::ingest::{filter_window, parse_trades, trader_id_from_order_id, write_trades, Schema, WindowSpec};
use collusion_core::simulator::{agreement_labels, generate, Class, SimConfig};
use collusion_core::spectral::degree_and_laplacian;
use collusion_core::{modularity, spectral_cluster, Clustering, TradeRecord, WeightedGraph};
use common::*;
use proptest::prelude::*;

fn trade_strategy() -> impl Strategy<Value = TradeRecord> {
    (
        "[A-Z][A-Z0-9]{0,5}",
        "[a-z][a-z0-9]{0,5}",
        prop::sample::select(vec!["XYZ", "ABC", "Q1"]),
        0i64..4_000_000_000,
        0.01f64..1e6,
        1u64..1_000_000,
    )
        .prop_map(|(buyer_id, seller_id, stock, timestamp, price, volume)| TradeRecord {
            buyer_id,
            seller_id,
            stock_id: stock.to_string(),
            timestamp,
            price,
            volume,
        })
}

fn trader_trades() -> impl Strategy<Value = Vec<TradeRecord>> {
    let trader = prop::sample::select(vec!["a", "b", "c", "d", "e", "f", "g"]);
    prop::collection::vec((trader.clone(), trader, 1.0f64..20.0, 1u64..50), 1..40).prop_map(|rows| {
        rows.into_iter()
            .filter(|(b, s, _, _)| b != s)
            .map(|(b, s, price, volume)| TradeRecord {
                buyer_id: b.into(),
                seller_id: s.into(),
                stock_id: "XYZ".into(),
                timestamp: 0,
                price,
                volume,
            })
            .collect()
    })
}

/// Weighted graphs on up to `max_n` vertices without isolated vertices.
fn weighted_graph(max_n: usize) -> impl Strategy<Value = WeightedGraph> {
    (3..=max_n).prop_flat_map(|n| {
        prop::collection::vec(prop::option::weighted(0.5, 0.01f64..1.0), n * (n - 1) / 2).prop_map(move |ws| {
            let mut edges = Vec::new();
            let mut it = ws.into_iter();
            for i in 0..n {
                for j in (i + 1)..n {
                    if let Some(w) = it.next().unwrap() {
                        edges.push((i, j, w));
                    }
                }
            }
            // a spanning path keeps every vertex attached
            for i in 0..n - 1 {
                if !edges.iter().any(|&(a, b, _)| (a, b) == (i, i + 1)) {
                    edges.push((i, i + 1, 0.05));
                }
            }
            graph(n, &edges)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parse_inverts_serialize(records in prop::collection::vec(trade_strategy(), 0..30)) {
        let records: Vec<_> = records.into_iter().filter(|r| r.buyer_id != r.seller_id).collect();
        let mut buf = Vec::new();
        write_trades(&mut buf, &records).unwrap();
        let parsed = parse_trades(buf.as_slice(), &Schema::default()).unwrap();
        prop_assert!(parsed.errors.is_empty());
        prop_assert_eq!(parsed.records, records);
    }

    #[test]
    fn window_filter_is_an_idempotent_subsequence(
        records in prop::collection::vec(trade_strategy(), 0..40),
        start in 0i64..4_000_000_000,
        len in 1i64..2_000_000_000,
    ) {
        let w = WindowSpec::new("XYZ", start, len).unwrap();
        let once = filter_window(&records, &w);
        let mut rest = records.iter();
        for r in &once {
            prop_assert!(rest.any(|x| x == r));
        }
        prop_assert_eq!(filter_window(&once, &w), once);
    }

    #[test]
    fn order_ids_sharing_a_prefix_share_a_trader(prefix in "[0-9]{6}", a in "[0-9]{11}", b in "[0-9]{11}") {
        let x = trader_id_from_order_id(&format!("{prefix}{a}")).unwrap();
        let y = trader_id_from_order_id(&format!("{prefix}{b}")).unwrap();
        prop_assert_eq!(&x, &prefix);
        prop_assert_eq!(x, y);
    }

    #[test]
    fn weights_lie_in_unit_interval(trades in trader_trades()) {
        prop_assume!(!trades.is_empty());
        let pairs = aggregate_pairs(&trades);
        let bounds = feature_bounds(&pairs).unwrap();
        for terms in TermSet::ABLATION {
            let g = build_graph(&pairs, &bounds, terms).unwrap();
            for (_, _, w) in g.edges() {
                prop_assert!((0.0..=1.0).contains(&w));
            }
        }
    }

    #[test]
    fn two_hop_edges_carry_commonality_share(trades in trader_trades()) {
        prop_assume!(!trades.is_empty());
        let pairs = aggregate_pairs(&trades);
        let bounds = feature_bounds(&pairs).unwrap();
        let direct: std::collections::HashSet<(String, String)> =
            pairs.iter().map(|p| (p.i.clone(), p.j.clone())).collect();
        let full = build_graph(&pairs, &bounds, TermSet::ALL).unwrap();
        let c = build_graph(&pairs, &bounds, TermSet::C).unwrap();
        let tv = build_graph(&pairs, &bounds, TermSet::T.union(TermSet::V)).unwrap();
        for (u, v, w) in full.edges() {
            let (a, b) = (&full.vertices()[u], &full.vertices()[v]);
            if !direct.contains(&(a.clone(), b.clone())) {
                let cw = c.weight(c.vertex_index(a).unwrap(), c.vertex_index(b).unwrap());
                prop_assert!((w - cw / 4.0).abs() < 1e-15);
                let missing = match (tv.vertex_index(a), tv.vertex_index(b)) {
                    (Some(x), Some(y)) => tv.weight(x, y) == 0.0,
                    _ => true,
                };
                prop_assert!(missing);
            }
        }
    }

    #[test]
    fn trade_order_does_not_matter(trades in trader_trades(), seed in any::<u64>()) {
        prop_assume!(!trades.is_empty());
        let mut shuffled = trades.clone();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        rand::seq::SliceRandom::shuffle(shuffled.as_mut_slice(), &mut rng);
        let render = |t: &[TradeRecord]| {
            let pairs = aggregate_pairs(t);
            let g = build_graph(&pairs, &feature_bounds(&pairs).unwrap(), TermSet::ALL).unwrap();
            let mut out = Vec::new();
            g.write_edge_list(&mut out).unwrap();
            out
        };
        prop_assert_eq!(render(&trades), render(&shuffled));
    }

    #[test]
    fn edge_list_round_trip_is_symmetric(g in weighted_graph(12)) {
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf).unwrap();
        let back = WeightedGraph::read_edge_list(buf.as_slice(), None).unwrap();
        let (a, b) = (dense(&g), dense(&back));
        for i in 0..g.n() {
            for j in 0..g.n() {
                prop_assert_eq!(b[i][j], b[j][i]);
                prop_assert!((a[i][j] - b[i][j]).abs() <= 1e-11 * a[i][j].max(1.0));
            }
        }
    }

    #[test]
    fn modularity_is_scale_invariant(g in weighted_graph(10), c in 0.001f64..1000.0, labels in prop::collection::vec(0usize..3, 10)) {
        let mut seen = Vec::new();
        let labels: Vec<usize> = labels[..g.n()]
            .iter()
            .map(|l| seen.iter().position(|x| x == l).unwrap_or_else(|| { seen.push(*l); seen.len() - 1 }))
            .collect();
        let p = Clustering::from_assignment(labels).unwrap();
        let q = modularity(&g, &p).unwrap();
        let qs = modularity(&g.scaled(c).unwrap(), &p).unwrap();
        prop_assert!((q - qs).abs() <= 1e-12);
    }

    #[test]
    fn laplacian_is_scale_invariant(g in weighted_graph(15), c in 0.001f64..1000.0) {
        let l = degree_and_laplacian(&g).unwrap().to_dense();
        let ls = degree_and_laplacian(&g.scaled(c).unwrap()).unwrap().to_dense();
        prop_assert!((l - ls).abs().max() <= 1e-12);
    }

    #[test]
    fn clustering_is_deterministic_and_scale_free(g in weighted_graph(15), seed in any::<u64>()) {
        let a = spectral_cluster(&g, 2, seed).unwrap();
        let b = spectral_cluster(&g, 2, seed).unwrap();
        prop_assert_eq!(&a.assignment, &b.assignment);
        let s = spectral_cluster(&g.scaled(7.5).unwrap(), 2, seed).unwrap();
        prop_assert!(same_partition(&a.assignment, &s.assignment));
    }

    #[test]
    fn agreement_ignores_label_names(
        pred in prop::collection::vec(0usize..4, 2..40),
        perm in Just(vec![0usize, 1, 2, 3]).prop_shuffle(),
        seed in any::<u64>(),
    ) {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        let truth: Vec<usize> = pred.iter().map(|_| rand::Rng::gen_range(&mut rng, 0..3)).collect();
        let relabeled: Vec<usize> = pred.iter().map(|&l| perm[l]).collect();
        let a = agreement_labels(&pred, &truth).unwrap();
        let b = agreement_labels(&relabeled, &truth).unwrap();
        prop_assert_eq!(a.accuracy, b.accuracy);
        prop_assert!((a.ari - b.ari).abs() < 1e-12 || (a.ari.is_nan() && b.ari.is_nan()));
    }
}

#[test]
fn simulated_edge_counts_concentrate() {
    let cfg = SimConfig::default();
    for seed in 0..50 {
        let (g, truth) = generate(&SimConfig { seed, ..cfg.clone() }).unwrap();
        let class = |u: usize| truth.membership[u];
        let mut counts = [0usize; 3];
        for (u, v, w) in g.edges() {
            assert!(w > 0.0 && w < 1.0);
            let slot = match (class(u), class(v)) {
                (Class::C1, Class::C1) => 0,
                (Class::C2, Class::C2) => 1,
                _ => {
                    assert!(w <= cfg.b);
                    2
                }
            };
            counts[slot] += 1;
        }
        let pairs = |m: usize| (m * (m - 1) / 2) as f64;
        let within = |m: usize, q: f64| {
            // planted pairs: background or planted draw
            let p = 1.0 - (1.0 - cfg.p) * (1.0 - q);
            (pairs(m) * p, (pairs(m) * p * (1.0 - p)).sqrt())
        };
        let cross_pairs = pairs(cfg.n) - pairs(cfg.n1) - pairs(cfg.n2);
        let expected = [
            within(cfg.n1, cfg.p1),
            within(cfg.n2, cfg.p2),
            (cross_pairs * cfg.p, (cross_pairs * cfg.p * (1.0 - cfg.p)).sqrt()),
        ];
        for (got, (mean, sd)) in counts.iter().zip(expected) {
            assert!((*got as f64 - mean).abs() <= 4.0 * sd, "seed {seed}: {got} vs {mean} +- {sd}");
        }
    }
}
