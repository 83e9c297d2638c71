//! Independent brute-force oracles shared by integration tests. Nothing here
//! calls into the scoring code it is used to check.

#![allow(dead_code)]

use collusion_core::WeightedGraph;

pub fn graph(n: usize, edges: &[(usize, usize, f64)]) -> WeightedGraph {
    WeightedGraph::from_edges((0..n).map(|i| format!("v{i:02}")).collect(), edges.iter().copied()).unwrap()
}

/// Dense symmetric weight matrix straight from the edge list.
pub fn dense(g: &WeightedGraph) -> Vec<Vec<f64>> {
    let n = g.n();
    let mut w = vec![vec![0.0; n]; n];
    for (u, v, x) in g.edges() {
        w[u][v] = x;
        w[v][u] = x;
    }
    w
}

/// Modularity by the defining double sums over ordered pairs.
pub fn brute_modularity(w: &[Vec<f64>], labels: &[usize]) -> f64 {
    let n = w.len();
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let total: f64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| w[i][j]).sum();
    let mut q = 0.0;
    for c in 0..k {
        let mut inside = 0.0;
        let mut touching = 0.0;
        for i in 0..n {
            for j in 0..n {
                if labels[j] == c {
                    touching += w[i][j];
                    if labels[i] == c {
                        inside += w[i][j];
                    }
                }
            }
        }
        q += inside / total - (touching / total).powi(2);
    }
    q
}

/// Generalized MinMaxCut by direct sums; W(A) counts each internal edge once.
pub fn brute_minmaxcut(w: &[Vec<f64>], labels: &[usize]) -> f64 {
    let n = w.len();
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut total = 0.0;
    for c in 0..k {
        let mut internal = 0.0;
        let mut cut = 0.0;
        for i in 0..n {
            for j in 0..n {
                if labels[i] != c {
                    continue;
                }
                if labels[j] == c && i < j {
                    internal += w[i][j];
                } else if labels[j] != c {
                    cut += w[i][j];
                }
            }
        }
        if internal == 0.0 {
            return f64::INFINITY;
        }
        total += cut / internal;
    }
    total
}

/// All set partitions of `0..n` as restricted growth strings.
pub fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    fn rec(i: usize, n: usize, cur: &mut Vec<usize>, max: usize, out: &mut Vec<Vec<usize>>) {
        if i == n {
            out.push(cur.clone());
            return;
        }
        for c in 0..=max + 1 {
            cur.push(c);
            rec(i + 1, n, cur, if c > max { c } else { max }, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        return vec![vec![]];
    }
    let mut cur = vec![0];
    rec(1, n, &mut cur, 0, &mut out);
    out
}

/// All two-block partitions of `0..n` with vertex 0 in block 0.
pub fn two_partitions(n: usize) -> Vec<Vec<usize>> {
    (1u32..(1 << (n - 1)))
        .map(|mask| (0..n).map(|i| if i > 0 && mask & (1 << (i - 1)) != 0 { 1 } else { 0 }).collect())
        .collect()
}

/// Adjusted Rand index by counting agreeing vertex pairs directly.
pub fn brute_ari(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len();
    let (mut both, mut only_a, mut only_b, mut pairs) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        for j in (i + 1)..n {
            let sa = a[i] == a[j];
            let sb = b[i] == b[j];
            pairs += 1.0;
            if sa && sb {
                both += 1.0;
            }
            if sa {
                only_a += 1.0;
            }
            if sb {
                only_b += 1.0;
            }
        }
    }
    let expected = only_a * only_b / pairs;
    let max = 0.5 * (only_a + only_b);
    (both - expected) / (max - expected)
}

/// Whether two labelings describe the same partition.
pub fn same_partition(a: &[usize], b: &[usize]) -> bool {
    a.len() == b.len() && (0..a.len()).all(|i| (0..a.len()).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
}
