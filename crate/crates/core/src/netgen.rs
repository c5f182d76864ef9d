//! Finite random graph and tree generators for the simulation layer.
//!
//! All generators take an explicit seed and produce bit-identical output
//! for identical inputs. Graphs are simple and undirected; adjacency lists
//! are kept sorted.

use std::io::{BufRead, BufReader, Read, Write};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::dist::DegreeDist;
use crate::error::Error;
use crate::rng::substream;
use crate::Result;

/// Node cap for Galton-Watson tree generation.
pub const DEFAULT_TREE_NODE_CAP: usize = 10_000_000;

/// Simple undirected graph with sorted adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<u32>>,
}

impl Graph {
    /// Build from an edge list; rejects self-loops, deduplicates, sorts.
    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> Result<Self> {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u == v {
                return Err(Error::domain(format!("self-loop at node {u}")));
            }
            if u as usize >= n || v as usize >= n {
                return Err(Error::domain(format!(
                    "edge ({u},{v}) out of range for n={n}"
                )));
            }
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Graph { adj })
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|l| l.len()).sum::<usize>() / 2
    }

    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    /// Edges as sorted `(u, v)` pairs with `u < v`.
    pub fn edges(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (u, list) in self.adj.iter().enumerate() {
            for &v in list {
                if (u as u32) < v {
                    out.push((u as u32, v));
                }
            }
        }
        out
    }

    /// Check symmetry, simplicity and sortedness. Used by tests.
    pub fn validate(&self) -> Result<()> {
        for (u, list) in self.adj.iter().enumerate() {
            for w in list.windows(2) {
                if w[0] >= w[1] {
                    return Err(Error::domain(format!(
                        "adjacency of {u} not sorted/deduped"
                    )));
                }
            }
            for &v in list {
                if v as usize == u {
                    return Err(Error::domain(format!("self-loop at {u}")));
                }
                if self.adj[v as usize].binary_search(&(u as u32)).is_err() {
                    return Err(Error::domain(format!("edge ({u},{v}) not symmetric")));
                }
            }
        }
        Ok(())
    }

    /// Plain-text edge list: first line `n m`, then one `u v` pair per line,
    /// zero-indexed.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let edges = self.edges();
        writeln!(w, "{} {}", self.node_count(), edges.len())?;
        for (u, v) in edges {
            writeln!(w, "{u} {v}")?;
        }
        Ok(())
    }

    pub fn read_edge_list<R: Read>(r: R) -> Result<Self> {
        let reader = BufReader::new(r);
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::domain("empty edge-list file"))?
            .map_err(|e| Error::domain(format!("io error: {e}")))?;
        let mut it = header.split_whitespace();
        let n: usize = parse_field(it.next(), "node count")?;
        let m: usize = parse_field(it.next(), "edge count")?;
        let mut edges = Vec::with_capacity(m);
        for line in lines {
            let line = line.map_err(|e| Error::domain(format!("io error: {e}")))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let u: u32 = parse_field(it.next(), "edge endpoint")?;
            let v: u32 = parse_field(it.next(), "edge endpoint")?;
            edges.push((u, v));
        }
        if edges.len() != m {
            return Err(Error::domain(format!(
                "edge-list header promised {m} edges, found {}",
                edges.len()
            )));
        }
        Graph::from_edges(n, &edges)
    }
}

fn parse_field<T: std::str::FromStr>(field: Option<&str>, what: &str) -> Result<T> {
    field
        .ok_or_else(|| Error::domain(format!("missing {what}")))?
        .parse()
        .map_err(|_| Error::domain(format!("unparseable {what}")))
}

/// Erdos-Renyi G(n, lambda/n): every unordered pair is an edge independently
/// with probability `lambda/n` (capped at 1 when `lambda = n`).
///
/// Sampling walks the pair space with geometric gaps, so the cost is
/// proportional to the number of edges rather than n^2.
pub fn gen_er(n: usize, lambda: f64, seed: u64) -> Result<Graph> {
    if n == 0 {
        return Err(Error::domain("gen_er requires n >= 1"));
    }
    if !lambda.is_finite() || lambda < 0.0 || lambda > n as f64 {
        return Err(Error::domain(format!(
            "gen_er requires 0 <= lambda <= n, got lambda={lambda}, n={n}"
        )));
    }
    let p = (lambda / n as f64).min(1.0);
    let mut rng = substream(seed, &[0x45]);
    let mut edges = Vec::new();
    if p >= 1.0 {
        for u in 0..n as u32 {
            for v in (u + 1)..n as u32 {
                edges.push((u, v));
            }
        }
        return Graph::from_edges(n, &edges);
    }
    if p > 0.0 {
        let ln_q = (1.0 - p).ln();
        // cursor over pairs (u, v), u < v, lexicographic
        let mut u = 0usize;
        let mut v = 0usize; // v == u means "row exhausted, advance"
        let advance = |u: &mut usize, v: &mut usize, by: u64| {
            let mut rem = by;
            loop {
                let row_left = (n - 1 - *v) as u64;
                if rem <= row_left {
                    *v += rem as usize;
                    return true;
                }
                rem -= row_left;
                *u += 1;
                *v = *u;
                if *u + 1 >= n {
                    return false;
                }
            }
        };
        loop {
            let r: f64 = rng.random();
            let gap = if r <= 0.0 {
                0
            } else {
                (r.ln() / ln_q).floor() as u64
            };
            if !advance(&mut u, &mut v, gap + 1) {
                break;
            }
            edges.push((u as u32, v as u32));
        }
    }
    Graph::from_edges(n, &edges)
}

/// Configuration model with the given degree law, erased variant: stubs are
/// matched uniformly, then self-loops are dropped and multi-edges merged.
/// An odd stub total is fixed by resampling one node's degree (falling back
/// to dropping one stub when the law is deterministic).
pub fn gen_config(n: usize, degree: &DegreeDist, seed: u64) -> Result<Graph> {
    if n == 0 {
        return Err(Error::domain("gen_config requires n >= 1"));
    }
    if !degree.mean_degree().is_finite() {
        return Err(Error::domain(
            "gen_config requires a finite-mean degree law",
        ));
    }
    let mut rng = substream(seed, &[0xc0]);
    let mut degrees: Vec<usize> = (0..n).map(|_| degree.sample(&mut rng)).collect();
    let mut total: usize = degrees.iter().sum();
    if total % 2 == 1 {
        for _ in 0..100 {
            let i = rng.random_range(0..n);
            total -= degrees[i];
            degrees[i] = degree.sample(&mut rng);
            total += degrees[i];
            if total.is_multiple_of(2) {
                break;
            }
        }
        if total % 2 == 1 {
            // deterministic degree law: drop one stub instead
            if let Some(d) = degrees.iter_mut().find(|d| **d > 0) {
                *d -= 1;
            }
        }
    }
    let mut stubs: Vec<u32> = Vec::with_capacity(total);
    for (i, &d) in degrees.iter().enumerate() {
        stubs.extend(std::iter::repeat_n(i as u32, d));
    }
    stubs.shuffle(&mut rng);
    let mut edges = Vec::with_capacity(stubs.len() / 2);
    for pair in stubs.chunks_exact(2) {
        if pair[0] != pair[1] {
            edges.push((pair[0], pair[1]));
        }
    }
    Graph::from_edges(n, &edges) // from_edges dedups multi-edges
}

/// Rooted tree with parent links and children lists, truncated at a fixed
/// depth. Node 0 is the root; nodes are in breadth-first order, so children
/// always have larger ids than their parent.
#[derive(Debug, Clone)]
pub struct GwTree {
    pub parent: Vec<Option<u32>>,
    pub children: Vec<Vec<u32>>,
    pub depth_of: Vec<u32>,
    pub depth: u32,
}

impl GwTree {
    pub fn node_count(&self) -> usize {
        self.parent.len()
    }

    pub fn root(&self) -> u32 {
        0
    }
}

/// Galton-Watson tree: the root draws its child count from `root_degree`,
/// every deeper node from `offspring`, truncated at `depth` generations.
pub fn gen_gw_tree(
    root_degree: &DegreeDist,
    offspring: &DegreeDist,
    depth: u32,
    seed: u64,
) -> Result<GwTree> {
    gen_gw_tree_capped(root_degree, offspring, depth, seed, DEFAULT_TREE_NODE_CAP)
}

pub fn gen_gw_tree_capped(
    root_degree: &DegreeDist,
    offspring: &DegreeDist,
    depth: u32,
    seed: u64,
    node_cap: usize,
) -> Result<GwTree> {
    let mut rng = substream(seed, &[0x97]);
    let mut parent: Vec<Option<u32>> = vec![None];
    let mut children: Vec<Vec<u32>> = vec![Vec::new()];
    let mut depth_of: Vec<u32> = vec![0];
    let mut frontier = vec![0u32];
    for level in 0..depth {
        let mut next = Vec::new();
        for &node in &frontier {
            let law = if level == 0 { root_degree } else { offspring };
            let k = law.sample(&mut rng);
            for _ in 0..k {
                if parent.len() >= node_cap {
                    return Err(Error::budget(format!(
                        "Galton-Watson tree exceeded {node_cap} nodes; use a smaller depth or subcritical parameters"
                    )));
                }
                let id = parent.len() as u32;
                parent.push(Some(node));
                children.push(Vec::new());
                depth_of.push(level + 1);
                children[node as usize].push(id);
                next.push(id);
            }
        }
        frontier = next;
        if frontier.is_empty() {
            break;
        }
    }
    Ok(GwTree {
        parent,
        children,
        depth_of,
        depth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn er_probability_one_edge() {
        // lambda = n = 2 caps the pair probability at 1
        let g = gen_er(2, 2.0, 7).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.neighbors(0), &[1]);
    }

    #[test]
    fn er_rejects_lambda_above_n() {
        assert!(gen_er(10, 10.5, 1).is_err());
    }

    #[test]
    fn er_zero_lambda_is_empty() {
        let g = gen_er(50, 0.0, 3).unwrap();
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn er_mean_degree_within_three_standard_errors() {
        let n = 10_000;
        let lambda = 10.0;
        let g = gen_er(n, lambda, 42).unwrap();
        let mean = 2.0 * g.edge_count() as f64 / n as f64;
        // edge count ~ Binomial(n(n-1)/2, p), mean degree = 2 edges / n,
        // so SE(mean degree) = 2 sqrt(pairs p (1-p)) / n ~ sqrt(2 lambda / n)
        let p = lambda / n as f64;
        let pairs = (n * (n - 1) / 2) as f64;
        let se = 2.0 * (pairs * p * (1.0 - p)).sqrt() / n as f64;
        assert!(
            (mean - lambda).abs() < 3.0 * se,
            "mean {mean} vs {lambda}, se {se}"
        );
        g.validate().unwrap();
    }

    #[test]
    fn er_reproducible_per_seed() {
        let a = gen_er(500, 4.0, 9).unwrap();
        let b = gen_er(500, 4.0, 9).unwrap();
        let c = gen_er(500, 4.0, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn config_regular_two_max_degree_two() {
        let g = gen_config(6, &DegreeDist::regular(2), 5).unwrap();
        g.validate().unwrap();
        for v in 0..6 {
            assert!(g.degree(v) <= 2);
        }
    }

    #[test]
    fn config_regular_zero_is_empty() {
        let g = gen_config(8, &DegreeDist::regular(0), 5).unwrap();
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn config_odd_total_regular_three() {
        // Regular(3) on odd n: resampling cannot fix parity, one stub drops
        let g = gen_config(5, &DegreeDist::regular(3), 1).unwrap();
        g.validate().unwrap();
        let total: usize = (0..5).map(|v| g.degree(v)).sum();
        assert!(total.is_multiple_of(2));
    }

    #[test]
    fn gw_tree_depth_zero_is_single_root() {
        let t = gen_gw_tree(&DegreeDist::regular(5), &DegreeDist::regular(5), 0, 1).unwrap();
        assert_eq!(t.node_count(), 1);
        assert_eq!(t.children[0].len(), 0);
    }

    #[test]
    fn gw_tree_regular_two_is_complete_binary() {
        let t = gen_gw_tree(&DegreeDist::regular(2), &DegreeDist::regular(2), 3, 1).unwrap();
        assert_eq!(t.node_count(), 15); // 1 + 2 + 4 + 8
        for v in 0..t.node_count() {
            if t.depth_of[v] < 3 {
                assert_eq!(t.children[v].len(), 2);
            } else {
                assert_eq!(t.children[v].len(), 0);
            }
        }
    }

    #[test]
    fn gw_tree_node_cap_errors() {
        let r = gen_gw_tree_capped(
            &DegreeDist::regular(10),
            &DegreeDist::regular(10),
            8,
            1,
            100_000,
        );
        assert!(matches!(r, Err(Error::Budget(_))));
    }

    #[test]
    fn gw_tree_poisson_mean_size() {
        // depth 2, Poisson(10) root and offspring: E[nodes] = 1 + 10 + 100
        let trees = 1000;
        let sizes: Vec<f64> = (0..trees)
            .map(|s| {
                let d = DegreeDist::poisson(10.0).unwrap();
                gen_gw_tree(&d, &d, 2, s as u64).unwrap().node_count() as f64
            })
            .collect();
        let mean = sizes.iter().sum::<f64>() / trees as f64;
        let var = sizes.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (trees as f64 - 1.0);
        let se = (var / trees as f64).sqrt();
        assert!((mean - 111.0).abs() < 3.0 * se, "mean {mean}, se {se}");
    }

    #[test]
    fn edge_list_round_trip() {
        let g = gen_er(64, 3.0, 21).unwrap();
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf).unwrap();
        let h = Graph::read_edge_list(&buf[..]).unwrap();
        assert_eq!(g, h);
        let text = String::from_utf8(buf).unwrap();
        let first = text.lines().next().unwrap();
        assert_eq!(first, format!("{} {}", g.node_count(), g.edge_count()));
    }
}
