use std::collections::HashMap;

use crate::rdf::{Graph, NodeRole, Term};

/// Contiguous integer view of a graph.
///
/// Nodes and relations are numbered in the sort order of their N-Triples
/// rendering, so the numbering (and everything trained on it) does not depend
/// on the order in which triples were inserted.
#[derive(Debug, Clone)]
pub struct GraphIndex {
    terms: Vec<Term>,
    roles: Vec<NodeRole>,
    relations: Vec<String>,
    /// `(subject, relation, object)`, sorted.
    edges: Vec<(usize, usize, usize)>,
    node_of: HashMap<Term, usize>,
}

impl GraphIndex {
    /// With `include_literals == false`, literal-object triples are dropped.
    pub fn new(graph: &Graph, include_literals: bool) -> Self {
        let mut node_ids: Vec<_> = graph
            .nodes()
            .into_iter()
            .filter(|&id| include_literals || graph.term(id).is_iri())
            .map(|id| (graph.term(id).to_string(), id))
            .collect();
        node_ids.sort();
        let terms: Vec<Term> = node_ids.iter().map(|(_, id)| graph.term(*id).clone()).collect();
        let roles = node_ids.iter().map(|(_, id)| graph.role(*id)).collect();
        let node_of: HashMap<Term, usize> = terms.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect();

        let mut rel_names: Vec<String> = graph
            .predicates()
            .into_iter()
            .map(|p| graph.term(p).as_iri().expect("predicate IRI").to_string())
            .collect();
        rel_names.sort();
        let rel_of: HashMap<&str, usize> = rel_names.iter().enumerate().map(|(i, r)| (r.as_str(), i)).collect();

        let mut edges = Vec::with_capacity(graph.len());
        for (s, p, o) in graph.iter() {
            if !include_literals && o.is_literal() {
                continue;
            }
            edges.push((node_of[s], rel_of[p.as_iri().expect("IRI")], node_of[o]));
        }
        edges.sort_unstable();
        // drop relations that only carried literal triples
        let mut used = vec![false; rel_names.len()];
        for e in &edges {
            used[e.1] = true;
        }
        let remap: Vec<Option<usize>> = {
            let mut next = 0;
            used.iter()
                .map(|&u| {
                    u.then(|| {
                        next += 1;
                        next - 1
                    })
                })
                .collect()
        };
        let relations = rel_names
            .into_iter()
            .zip(&used)
            .filter(|(_, u)| **u)
            .map(|(r, _)| r)
            .collect();
        for e in &mut edges {
            e.1 = remap[e.1].expect("used relation");
        }
        GraphIndex {
            terms,
            roles,
            relations,
            edges,
            node_of,
        }
    }

    pub fn node_count(&self) -> usize {
        self.terms.len()
    }

    pub fn relation_count(&self) -> usize {
        self.relations.len()
    }

    pub fn term(&self, node: usize) -> &Term {
        &self.terms[node]
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn role(&self, node: usize) -> NodeRole {
        self.roles[node]
    }

    pub fn relation(&self, r: usize) -> &str {
        &self.relations[r]
    }

    pub fn relations(&self) -> &[String] {
        &self.relations
    }

    pub fn edges(&self) -> &[(usize, usize, usize)] {
        &self.edges
    }

    pub fn node(&self, term: &Term) -> Option<usize> {
        self.node_of.get(term).copied()
    }

    pub fn node_by_iri(&self, iri: &str) -> Option<usize> {
        self.node(&Term::Iri(iri.to_string()))
    }

    pub fn is_literal(&self, node: usize) -> bool {
        self.terms[node].is_literal()
    }

    /// Value fed to the literal encoder: each literal-object triple's value is
    /// z-scored within its predicate, averaged over the node's incoming
    /// triples.
    pub fn literal_inputs(&self) -> Vec<Option<f64>> {
        let raw: Vec<Option<f64>> = self
            .terms
            .iter()
            .map(|t| t.as_literal().map(|l| l.as_f64().unwrap_or(0.0)))
            .collect();
        let mut stats: HashMap<usize, (f64, f64, f64)> = HashMap::new();
        for &(_, r, o) in &self.edges {
            if let Some(v) = raw[o] {
                let s = stats.entry(r).or_insert((0.0, 0.0, 0.0));
                s.0 += 1.0;
                s.1 += v;
                s.2 += v * v;
            }
        }
        let moments: HashMap<usize, (f64, f64)> = stats
            .into_iter()
            .map(|(r, (n, s, ss))| {
                let mean = s / n;
                let var = (ss / n - mean * mean).max(0.0);
                (r, (mean, var.sqrt()))
            })
            .collect();
        let mut acc = vec![(0.0, 0usize); self.terms.len()];
        for &(_, r, o) in &self.edges {
            if let Some(v) = raw[o] {
                let (mean, sd) = moments[&r];
                let z = if sd > 0.0 { (v - mean) / sd } else { 0.0 };
                acc[o].0 += z;
                acc[o].1 += 1;
            }
        }
        raw.iter()
            .zip(acc)
            .map(|(r, (sum, n))| r.map(|_| if n > 0 { sum / n as f64 } else { 0.0 }))
            .collect()
    }

    pub fn nodes_with_role(&self, role: NodeRole) -> Vec<usize> {
        (0..self.terms.len()).filter(|&i| self.roles[i] == role).collect()
    }
}
