//! Uniform random walks over a graph index.
//!
//! A walk is a token sequence `node, relation, node, relation, ...`. Node
//! `i` is token `i`; relation `r` is token `node_count + r`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::index::GraphIndex;
use crate::exec::Execution;
use crate::kg::vocab::is_inverse;
use crate::rng::{domain, stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WalkConfig {
    pub walks_per_node: usize,
    /// Maximum number of hops per walk.
    pub depth: usize,
    /// Whether walks may follow asserted inverse (`-inv`) predicates.
    pub inverse_edges: bool,
    pub seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            walks_per_node: 10,
            depth: 3,
            inverse_edges: false,
            seed: 0,
        }
    }
}

/// Outgoing `(relation, object)` pairs per node.
fn adjacency(index: &GraphIndex, inverse_edges: bool) -> Vec<Vec<(usize, usize)>> {
    let keep: Vec<bool> = index
        .relations()
        .iter()
        .map(|r| inverse_edges || !is_inverse(r))
        .collect();
    let mut out = vec![Vec::new(); index.node_count()];
    for &(s, r, o) in index.edges() {
        if keep[r] {
            out[s].push((r, o));
        }
    }
    out
}

/// `walks_per_node` walks from every node, in node order. Inverse
/// predicates are skipped unless `cfg.inverse_edges` is set. Node `i` draws from
/// its own stream, so walks do not depend on the execution mode. A walk ends
/// early at a node without outgoing edges.
pub fn random_walks(index: &GraphIndex, cfg: &WalkConfig, exec: Execution) -> Vec<Vec<usize>> {
    let adj = adjacency(index, cfg.inverse_edges);
    let n = index.node_count();
    let per_node = exec.map(n, |start| {
        let mut rng = stream(cfg.seed, domain::WALKS, start as u64);
        (0..cfg.walks_per_node)
            .map(|_| {
                let mut walk = Vec::with_capacity(2 * cfg.depth + 1);
                walk.push(start);
                let mut at = start;
                for _ in 0..cfg.depth {
                    let out = &adj[at];
                    if out.is_empty() {
                        break;
                    }
                    let (r, o) = out[rng.random_range(0..out.len())];
                    walk.push(n + r);
                    walk.push(o);
                    at = o;
                }
                walk
            })
            .collect::<Vec<_>>()
    });
    per_node.into_iter().flatten().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::{Graph, Term};

    fn graph() -> Graph {
        let iri = |s: &str| Term::iri(format!("http://x.org/{s}")).unwrap();
        let mut g = Graph::new();
        g.add(&iri("a"), &iri("p"), &iri("b"));
        g.add(&iri("a"), &iri("p"), &iri("c"));
        g.add(&iri("b"), &iri("q"), &iri("a"));
        g
    }

    #[test]
    fn walks_follow_edges() {
        let idx = GraphIndex::new(&graph(), false);
        let n = idx.node_count();
        let cfg = WalkConfig {
            walks_per_node: 5,
            depth: 3,
            seed: 1,
            ..WalkConfig::default()
        };
        let walks = random_walks(&idx, &cfg, Execution::Sequential);
        assert_eq!(walks.len(), 15);
        for w in &walks {
            assert!(w.len() % 2 == 1 && w.len() <= 7);
            for k in (0..w.len() - 1).step_by(2) {
                let edge = (w[k], w[k + 1] - n, w[k + 2]);
                assert!(idx.edges().contains(&edge));
            }
        }
        // c has no outgoing edges
        let c = idx.node_by_iri("http://x.org/c").unwrap();
        assert!(walks.iter().filter(|w| w[0] == c).all(|w| w.len() == 1));
        assert_eq!(walks, random_walks(&idx, &cfg, Execution::Parallel));
    }

    fn iri(s: &str) -> Term {
        Term::iri(format!("http://x.org/{s}")).unwrap()
    }

    fn cfg(walks_per_node: usize, depth: usize) -> WalkConfig {
        WalkConfig {
            walks_per_node,
            depth,
            seed: 3,
            ..WalkConfig::default()
        }
    }

    #[test]
    fn isolated_node_walks_are_single_tokens() {
        let mut g = Graph::new();
        g.add(&iri("a"), &iri("p"), &iri("b"));
        // only a literal edge, which the index drops
        g.add(&iri("z"), &iri("v"), &Term::literal(crate::rdf::Literal::decimal(1.0)));
        let idx = GraphIndex::new(&g, false);
        let z = idx.node_by_iri("http://x.org/z").unwrap();
        let walks = random_walks(&idx, &cfg(10, 3), Execution::Sequential);
        let from_z: Vec<_> = walks.iter().filter(|w| w[0] == z).collect();
        assert_eq!(from_z.len(), 10);
        assert!(from_z.iter().all(|w| w.as_slice() == [z]));
    }

    #[test]
    fn single_edge_gives_one_walk_shape() {
        let mut g = Graph::new();
        g.add(&iri("a"), &iri("p"), &iri("b"));
        let idx = GraphIndex::new(&g, false);
        let (a, b) = (idx.node_by_iri("http://x.org/a").unwrap(), idx.node_by_iri("http://x.org/b").unwrap());
        let p = idx.node_count();
        let walks = random_walks(&idx, &cfg(10, 3), Execution::Sequential);
        for w in walks.iter().filter(|w| w[0] == a) {
            assert_eq!(w.as_slice(), [a, p, b]);
        }
    }

    #[test]
    fn two_branches_are_equally_likely() {
        let idx = GraphIndex::new(&graph(), false);
        let a = idx.node_by_iri("http://x.org/a").unwrap();
        let b = idx.node_by_iri("http://x.org/b").unwrap();
        let walks = random_walks(&idx, &cfg(4000, 1), Execution::Sequential);
        let from_a: Vec<_> = walks.iter().filter(|w| w[0] == a).collect();
        let to_b = from_a.iter().filter(|w| w[2] == b).count() as f64 / from_a.len() as f64;
        assert!((to_b - 0.5).abs() < 0.05, "{to_b}");
    }

    #[test]
    fn inverse_predicates_are_skipped_by_default() {
        let g = crate::kg::add_inverses(&graph());
        let idx = GraphIndex::new(&g, false);
        let n = idx.node_count();
        let inverse_token = |t: usize| t >= n && is_inverse(&idx.relations()[t - n]);
        let plain = random_walks(&idx, &cfg(20, 3), Execution::Sequential);
        assert!(plain.iter().flatten().all(|&t| !inverse_token(t)));
        let c = WalkConfig {
            inverse_edges: true,
            ..cfg(20, 3)
        };
        let both = random_walks(&idx, &c, Execution::Sequential);
        assert!(both.iter().flatten().any(|&t| inverse_token(t)));
    }
}
