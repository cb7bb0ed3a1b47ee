//! Independent reference implementations used as oracles.
//!
//! Everything here works on dense matrices or plain sets and shares no code
//! with the library beyond the `Graph` accessor used to read edges.

#![allow(dead_code)]

use std::collections::BTreeSet;

use linkmoe::graph::Graph;

pub fn adjacency(g: &Graph) -> Vec<Vec<f64>> {
    let n = g.node_count();
    let mut a = vec![vec![0.0; n]; n];
    for (u, v) in g.edges() {
        a[u][v] = 1.0;
        a[v][u] = 1.0;
    }
    a
}

pub fn neighbor_set(g: &Graph, v: usize) -> BTreeSet<usize> {
    g.neighbors(v).iter().copied().collect()
}

pub fn brute_cn(g: &Graph, i: usize, j: usize) -> usize {
    neighbor_set(g, i).intersection(&neighbor_set(g, j)).count()
}

pub fn brute_aa(g: &Graph, i: usize, j: usize) -> f64 {
    neighbor_set(g, i)
        .intersection(&neighbor_set(g, j))
        .map(|&w| g.neighbors(w).len())
        .filter(|&d| d >= 2)
        .map(|d| 1.0 / (d as f64).ln())
        .sum()
}

pub fn brute_ra(g: &Graph, i: usize, j: usize) -> f64 {
    neighbor_set(g, i)
        .intersection(&neighbor_set(g, j))
        .map(|&w| 1.0 / g.neighbors(w).len() as f64)
        .sum()
}

/// All-pairs hop distances; `usize::MAX` when unreachable.
pub fn floyd_warshall(g: &Graph) -> Vec<Vec<usize>> {
    let n = g.node_count();
    const INF: usize = usize::MAX / 4;
    let mut d = vec![vec![INF; n]; n];
    for (v, row) in d.iter_mut().enumerate() {
        row[v] = 0;
    }
    for (u, v) in g.edges() {
        d[u][v] = 1;
        d[v][u] = 1;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    for row in d.iter_mut() {
        for x in row.iter_mut() {
            if *x >= INF {
                *x = usize::MAX;
            }
        }
    }
    d
}

fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut c = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k] == 0.0 {
                continue;
            }
            for j in 0..n {
                c[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    c
}

/// `sum_{l=1..max_len} beta^l (A^l)_{ij}` from explicit matrix powers.
pub fn dense_katz_matrix(g: &Graph, beta: f64, max_len: usize) -> Vec<Vec<f64>> {
    let a = adjacency(g);
    let n = a.len();
    let mut power = a.clone();
    let mut out = vec![vec![0.0; n]; n];
    let mut scale = beta;
    for l in 1..=max_len {
        if l > 1 {
            power = matmul(&power, &a);
            scale *= beta;
        }
        for i in 0..n {
            for j in 0..n {
                out[i][j] += scale * power[i][j];
            }
        }
    }
    out
}

/// Personalized PageRank from `src` by power iteration on
/// `p = alpha e_src + (1 - alpha) p W`, where dangling nodes keep their
/// walker in place (a self-loop).
pub fn dense_ppr(g: &Graph, src: usize, alpha: f64, iters: usize) -> Vec<f64> {
    let n = g.node_count();
    let mut p = vec![0.0; n];
    p[src] = 1.0;
    for _ in 0..iters {
        let mut next = vec![0.0; n];
        next[src] += alpha;
        for v in 0..n {
            let nb = g.neighbors(v);
            let mass = (1.0 - alpha) * p[v];
            if nb.is_empty() {
                next[v] += mass;
            } else {
                let share = mass / nb.len() as f64;
                for &w in nb {
                    next[w] += share;
                }
            }
        }
        p = next;
    }
    p
}

/// Rank of `pos` by sorting the negatives together with it and locating
/// the block of equal scores.
pub fn sort_rank(pos: f64, negs: &[f64]) -> f64 {
    let mut all: Vec<(f64, bool)> = negs.iter().map(|&x| (x, false)).collect();
    all.push((pos, true));
    all.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let first = all.iter().position(|&(x, _)| x == pos).unwrap();
    let last = all.iter().rposition(|&(x, _)| x == pos).unwrap();
    // 1-based positions first+1 ..= last+1; average them
    (first + 1 + last + 1) as f64 / 2.0
}
