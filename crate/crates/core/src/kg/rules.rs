use std::collections::{BTreeSet, HashMap, HashSet};

use super::vocab;
use super::KgError;
use crate::rdf::{Graph, TermId};

fn before_edges(g: &Graph) -> Vec<(TermId, TermId)> {
    g.with_predicate(&vocab::time_before())
        .into_iter()
        .map(|[s, _, o]| (s, o))
        .collect()
}

fn check_acyclic(g: &Graph, edges: &[(TermId, TermId)]) -> Result<(), KgError> {
    let mut succ: HashMap<TermId, Vec<TermId>> = HashMap::new();
    for &(a, b) in edges {
        succ.entry(a).or_default().push(b);
    }
    // iterative three-colour DFS
    let mut state: HashMap<TermId, u8> = HashMap::new();
    let mut roots: Vec<TermId> = succ.keys().copied().collect();
    roots.sort();
    for root in roots {
        if state.contains_key(&root) {
            continue;
        }
        let mut stack = vec![(root, 0usize)];
        state.insert(root, 1);
        while let Some((node, next)) = stack.pop() {
            let children = succ.get(&node).map(Vec::as_slice).unwrap_or(&[]);
            if next < children.len() {
                stack.push((node, next + 1));
                let c = children[next];
                match state.get(&c) {
                    Some(1) => return Err(KgError::CyclicTime(g.term(c).as_iri().unwrap_or("?").to_string())),
                    Some(_) => {}
                    None => {
                        state.insert(c, 1);
                        stack.push((c, 0));
                    }
                }
            } else {
                state.insert(node, 2);
            }
        }
    }
    Ok(())
}

/// One transitivity round: every composition `a→b→c` of edges present at the
/// start of the round adds `a→c`. Returns the number of new edges.
fn round(g: &mut Graph, before: TermId) -> usize {
    let edges = before_edges(g);
    let mut succ: HashMap<TermId, Vec<TermId>> = HashMap::new();
    for &(a, b) in &edges {
        succ.entry(a).or_default().push(b);
    }
    let existing: HashSet<(TermId, TermId)> = edges.iter().copied().collect();
    let mut new = BTreeSet::new();
    for &(a, b) in &edges {
        for &c in succ.get(&b).map(Vec::as_slice).unwrap_or(&[]) {
            if a != c && !existing.contains(&(a, c)) {
                new.insert((a, c));
            }
        }
    }
    for &(a, c) in &new {
        g.insert_ids(a, before, c);
    }
    new.len()
}

/// Applies the rule `before ∘ before ⊑ before` `k` times.
pub fn saturate(graph: &Graph, k: usize) -> Result<Graph, KgError> {
    let mut g = graph.clone();
    if k == 0 {
        return Ok(g);
    }
    let edges = before_edges(&g);
    if edges.is_empty() {
        return Ok(g);
    }
    check_acyclic(&g, &edges)?;
    let before = g.intern(&vocab::time_before());
    for _ in 0..k {
        if round(&mut g, before) == 0 {
            break;
        }
    }
    Ok(g)
}

/// Repeats the rule until no edge is added: the transitive closure of `time:before`.
pub fn saturate_to_fixpoint(graph: &Graph) -> Result<Graph, KgError> {
    saturate(graph, usize::MAX)
}

/// Adds `(o, p-inv, s)` for every IRI-object triple whose predicate is not an
/// inverse already. Literal triples are left alone.
pub fn add_inverses(graph: &Graph) -> Graph {
    let mut g = graph.clone();
    let mut inverse_of: HashMap<TermId, TermId> = HashMap::new();
    let triples = graph.triple_ids().to_vec();
    for [s, p, o] in triples {
        if graph.term(o).is_literal() {
            continue;
        }
        let pi = graph.term(p).as_iri().expect("predicate is an IRI");
        if vocab::is_inverse(pi) {
            continue;
        }
        let inv = *inverse_of.entry(p).or_insert_with(|| g.intern(&vocab::inverse(pi)));
        g.insert_ids(o, inv, s);
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::{Literal, Term};

    fn node(i: usize) -> Term {
        Term::iri(format!("http://x.org/e{i}")).unwrap()
    }

    fn chain(n: usize) -> Graph {
        let mut g = Graph::new();
        for i in 1..n {
            g.add(&node(i - 1), &vocab::time_before(), &node(i));
        }
        g
    }

    #[test]
    fn four_event_chain_counts() {
        let g = chain(4);
        let counts: Vec<usize> = (0..=2).map(|k| saturate(&g, k).unwrap().len()).collect();
        assert_eq!(counts, vec![3, 5, 6]);
        assert_eq!(saturate(&g, 0).unwrap(), g);
    }

    #[test]
    fn fixpoint_is_full_order() {
        for n in 1..=10 {
            assert_eq!(saturate_to_fixpoint(&chain(n)).unwrap().len(), n * (n - 1) / 2);
        }
    }

    #[test]
    fn cycles_are_rejected() {
        let mut g = chain(3);
        g.add(&node(2), &vocab::time_before(), &node(0));
        assert!(matches!(saturate(&g, 1), Err(KgError::CyclicTime(_))));
        assert!(saturate(&g, 0).is_ok());
    }

    #[test]
    fn inverses() {
        let p = Term::iri("http://x.org/p").unwrap();
        let mut g = Graph::new();
        g.add(&node(0), &p, &node(1));
        let inv = add_inverses(&g);
        assert_eq!(inv.len(), 2);
        assert_eq!(add_inverses(&inv), inv);
        let mut lit = Graph::new();
        lit.add(&node(0), &p, &Term::Literal(Literal::decimal(1.0)));
        assert_eq!(add_inverses(&lit), lit);
    }
}
