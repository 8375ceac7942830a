use std::collections::{BTreeSet, HashMap, HashSet};

use super::term::{Term, Triple};

/// Interned term handle, valid only for the graph that issued it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TermId(pub u32);

impl TermId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Structural role of a node, used by the embedding models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeRole {
    Patient,
    Event,
    Context,
    Observation,
    Concept,
    Class,
    Literal,
    Other,
}

/// Set of triples with interned terms and subject/predicate/object indexes.
///
/// Inserting a triple that is already present is a no-op, so the graph has set
/// semantics. Equality compares triple sets, not insertion order.
#[derive(Debug, Clone, Default)]
pub struct Graph {
    terms: Vec<Term>,
    lookup: HashMap<Term, TermId>,
    triples: Vec<[TermId; 3]>,
    present: HashSet<[TermId; 3]>,
    by_subject: HashMap<TermId, Vec<usize>>,
    by_predicate: HashMap<TermId, Vec<usize>>,
    by_object: HashMap<TermId, Vec<usize>>,
    roles: HashMap<TermId, NodeRole>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, term: &Term) -> TermId {
        if let Some(&id) = self.lookup.get(term) {
            return id;
        }
        let id = TermId(u32::try_from(self.terms.len()).expect("term table overflow"));
        self.terms.push(term.clone());
        self.lookup.insert(term.clone(), id);
        id
    }

    pub fn id_of(&self, term: &Term) -> Option<TermId> {
        self.lookup.get(term).copied()
    }

    pub fn term(&self, id: TermId) -> &Term {
        &self.terms[id.index()]
    }

    /// Number of interned terms, including ones no longer referenced.
    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// Returns `true` if the triple was not already present.
    pub fn insert(&mut self, triple: Triple) -> bool {
        let s = self.intern(&triple.subject);
        let p = self.intern(&triple.predicate);
        let o = self.intern(&triple.object);
        self.insert_ids(s, p, o)
    }

    pub fn add(&mut self, subject: &Term, predicate: &Term, object: &Term) -> bool {
        assert!(subject.is_iri() && predicate.is_iri(), "subject and predicate must be IRIs");
        let s = self.intern(subject);
        let p = self.intern(predicate);
        let o = self.intern(object);
        self.insert_ids(s, p, o)
    }

    pub fn insert_ids(&mut self, s: TermId, p: TermId, o: TermId) -> bool {
        let key = [s, p, o];
        if !self.present.insert(key) {
            return false;
        }
        let idx = self.triples.len();
        self.triples.push(key);
        self.by_subject.entry(s).or_default().push(idx);
        self.by_predicate.entry(p).or_default().push(idx);
        self.by_object.entry(o).or_default().push(idx);
        true
    }

    pub fn contains(&self, triple: &Triple) -> bool {
        match (
            self.id_of(&triple.subject),
            self.id_of(&triple.predicate),
            self.id_of(&triple.object),
        ) {
            (Some(s), Some(p), Some(o)) => self.present.contains(&[s, p, o]),
            _ => false,
        }
    }

    pub fn contains_ids(&self, s: TermId, p: TermId, o: TermId) -> bool {
        self.present.contains(&[s, p, o])
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    /// Triples as id arrays, in insertion order.
    pub fn triple_ids(&self) -> &[[TermId; 3]] {
        &self.triples
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Term, &Term, &Term)> + '_ {
        self.triples
            .iter()
            .map(|[s, p, o]| (self.term(*s), self.term(*p), self.term(*o)))
    }

    pub fn triples(&self) -> Vec<Triple> {
        self.iter()
            .map(|(s, p, o)| Triple::new(s.clone(), p.clone(), o.clone()))
            .collect()
    }

    pub fn triple_set(&self) -> BTreeSet<Triple> {
        self.triples().into_iter().collect()
    }

    fn select(&self, index: &HashMap<TermId, Vec<usize>>, term: &Term) -> Vec<[TermId; 3]> {
        self.id_of(term)
            .and_then(|id| index.get(&id))
            .map(|rows| rows.iter().map(|&i| self.triples[i]).collect())
            .unwrap_or_default()
    }

    pub fn with_subject(&self, term: &Term) -> Vec<[TermId; 3]> {
        self.select(&self.by_subject, term)
    }

    pub fn with_predicate(&self, term: &Term) -> Vec<[TermId; 3]> {
        self.select(&self.by_predicate, term)
    }

    pub fn with_object(&self, term: &Term) -> Vec<[TermId; 3]> {
        self.select(&self.by_object, term)
    }

    /// Objects `o` such that `(subject, predicate, o)` is in the graph.
    pub fn objects(&self, subject: &Term, predicate: &Term) -> Vec<&Term> {
        let Some(p) = self.id_of(predicate) else {
            return Vec::new();
        };
        self.with_subject(subject)
            .into_iter()
            .filter(|t| t[1] == p)
            .map(|t| self.term(t[2]))
            .collect()
    }

    /// Distinct terms used as subject or object, in first-seen order.
    pub fn nodes(&self) -> Vec<TermId> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for &[s, _, o] in &self.triples {
            for id in [s, o] {
                if seen.insert(id) {
                    out.push(id);
                }
            }
        }
        out
    }

    /// Distinct predicates in first-seen order.
    pub fn predicates(&self) -> Vec<TermId> {
        let mut seen = HashSet::new();
        self.triples
            .iter()
            .filter_map(|t| seen.insert(t[1]).then_some(t[1]))
            .collect()
    }

    pub fn set_role(&mut self, term: &Term, role: NodeRole) {
        let id = self.intern(term);
        self.roles.insert(id, role);
    }

    /// Explicit role if one was assigned, `Literal` for literals, else `Other`.
    pub fn role(&self, id: TermId) -> NodeRole {
        if let Some(&r) = self.roles.get(&id) {
            return r;
        }
        if self.term(id).is_literal() {
            NodeRole::Literal
        } else {
            NodeRole::Other
        }
    }

    pub fn role_of(&self, term: &Term) -> Option<NodeRole> {
        self.id_of(term).map(|id| self.role(id))
    }

    /// Adds every triple and role of `other`.
    pub fn extend_from(&mut self, other: &Graph) {
        let map: Vec<TermId> = other.terms.iter().map(|t| self.intern(t)).collect();
        for &[s, p, o] in &other.triples {
            self.insert_ids(map[s.index()], map[p.index()], map[o.index()]);
        }
        for (&id, &role) in &other.roles {
            self.roles.insert(map[id.index()], role);
        }
    }

    /// New graph with the triples accepted by `keep`; roles are carried over.
    pub fn filter(&self, mut keep: impl FnMut(&Term, &Term, &Term) -> bool) -> Graph {
        let mut out = Graph::new();
        for (s, p, o) in self.iter() {
            if keep(s, p, o) {
                out.add(s, p, o);
            }
        }
        for (&id, &role) in &self.roles {
            if let Some(new_id) = out.id_of(self.term(id)) {
                out.roles.insert(new_id, role);
            }
        }
        out
    }
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.len() == other.len() && self.iter().all(|(s, p, o)| {
            match (other.id_of(s), other.id_of(p), other.id_of(o)) {
                (Some(a), Some(b), Some(c)) => other.contains_ids(a, b, c),
                _ => false,
            }
        })
    }
}

impl Eq for Graph {}

impl FromIterator<Triple> for Graph {
    fn from_iter<I: IntoIterator<Item = Triple>>(iter: I) -> Self {
        let mut g = Graph::new();
        for t in iter {
            g.insert(t);
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::Literal;

    fn iri(s: &str) -> Term {
        Term::iri(format!("http://x.org/{s}")).unwrap()
    }

    #[test]
    fn insert_dedups_and_indexes() {
        let mut g = Graph::new();
        assert!(g.add(&iri("a"), &iri("p"), &iri("b")));
        assert!(!g.add(&iri("a"), &iri("p"), &iri("b")));
        g.add(&iri("a"), &iri("q"), &Term::Literal(Literal::decimal(1.5)));
        g.add(&iri("c"), &iri("p"), &iri("b"));
        assert_eq!(g.len(), 3);
        assert_eq!(g.with_subject(&iri("a")).len(), 2);
        assert_eq!(g.with_predicate(&iri("p")).len(), 2);
        assert_eq!(g.with_object(&iri("b")).len(), 2);
        assert_eq!(g.objects(&iri("a"), &iri("p")), vec![&iri("b")]);
        assert_eq!(g.nodes().len(), 4);
        assert_eq!(g.predicates().len(), 2);
    }

    #[test]
    fn equality_ignores_order() {
        let a: Graph = [
            Triple::new(iri("a"), iri("p"), iri("b")),
            Triple::new(iri("b"), iri("p"), iri("c")),
        ]
        .into_iter()
        .collect();
        let b: Graph = [
            Triple::new(iri("b"), iri("p"), iri("c")),
            Triple::new(iri("a"), iri("p"), iri("b")),
        ]
        .into_iter()
        .collect();
        assert_eq!(a, b);
        let c = a.filter(|s, _, _| s == &iri("a"));
        assert_ne!(a, c);
        assert_eq!(c.len(), 1);
    }

    #[test]
    fn roles_default_by_kind() {
        let mut g = Graph::new();
        let lit = Term::Literal(Literal::integer(3));
        g.add(&iri("a"), &iri("p"), &lit);
        g.set_role(&iri("a"), NodeRole::Patient);
        assert_eq!(g.role_of(&iri("a")), Some(NodeRole::Patient));
        assert_eq!(g.role_of(&lit), Some(NodeRole::Literal));
        assert_eq!(g.role_of(&iri("p")), Some(NodeRole::Other));
        let mut h = Graph::new();
        h.extend_from(&g);
        assert_eq!(h.role_of(&iri("a")), Some(NodeRole::Patient));
    }
}
