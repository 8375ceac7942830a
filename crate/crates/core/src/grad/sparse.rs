//! Constant sparse operators used by the tape: weighted row gathers and
//! per-relation neighbourhood aggregation.
//!
//! Both keep a forward (by output row) and a transposed (by input row)
//! layout so that forward and backward passes can each be computed row by
//! row, in a fixed order, regardless of the execution mode.

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Entry {
    pub(crate) index: usize,
    pub(crate) relation: usize,
    pub(crate) weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Csr {
    pub(crate) offsets: Vec<usize>,
    pub(crate) entries: Vec<Entry>,
}

impl Csr {
    fn build(n_rows: usize, mut items: Vec<(usize, Entry)>) -> Csr {
        items.sort_by(|a, b| {
            (a.0, a.1.relation, a.1.index)
                .cmp(&(b.0, b.1.relation, b.1.index))
                .then(a.1.weight.total_cmp(&b.1.weight))
        });
        let mut offsets = vec![0usize; n_rows + 1];
        for (r, _) in &items {
            offsets[r + 1] += 1;
        }
        for i in 0..n_rows {
            offsets[i + 1] += offsets[i];
        }
        Csr {
            offsets,
            entries: items.into_iter().map(|(_, e)| e).collect(),
        }
    }

    #[inline]
    pub(crate) fn row(&self, r: usize) -> &[Entry] {
        &self.entries[self.offsets[r]..self.offsets[r + 1]]
    }
}

/// A constant sparse matrix `A` (`rows × cols`) applied as `A · X`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRows {
    rows: usize,
    cols: usize,
    pub(crate) forward: Csr,
    pub(crate) backward: Csr,
}

impl SparseRows {
    /// Builds `A` from `(row, col, weight)` triplets. Repeated coordinates are
    /// kept as separate terms of the sum.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let fwd = triplets
            .iter()
            .map(|&(r, c, w)| {
                assert!(r < rows && c < cols, "sparse entry out of bounds");
                (
                    r,
                    Entry {
                        index: c,
                        relation: 0,
                        weight: w,
                    },
                )
            })
            .collect();
        let bwd = triplets
            .iter()
            .map(|&(r, c, w)| {
                (
                    c,
                    Entry {
                        index: r,
                        relation: 0,
                        weight: w,
                    },
                )
            })
            .collect();
        SparseRows {
            rows,
            cols,
            forward: Csr::build(rows, fwd),
            backward: Csr::build(cols, bwd),
        }
    }

    /// Row-averaging operator: output row `i` is the mean of input rows `groups[i]`.
    /// Empty groups give zero rows.
    pub fn mean_of_groups(cols: usize, groups: &[Vec<usize>]) -> Self {
        let mut trip = Vec::new();
        for (i, g) in groups.iter().enumerate() {
            let w = 1.0 / g.len().max(1) as f64;
            for &j in g {
                trip.push((i, j, w));
            }
        }
        SparseRows::from_triplets(groups.len(), cols, &trip)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.forward.entries.len()
    }
}

/// Typed neighbourhoods for relational message passing.
///
/// Each target row `i` receives, for every relation `r`, the mean of its
/// source rows under `r`: the weight of every edge is `1 / |N_i^r|`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationalAdjacency {
    targets: usize,
    sources: usize,
    relations: usize,
    pub(crate) forward: Csr,
    pub(crate) backward: Csr,
}

impl RelationalAdjacency {
    /// `edges` are `(target, relation, source)`; the target aggregates the source.
    pub fn new(
        targets: usize,
        sources: usize,
        relations: usize,
        edges: &[(usize, usize, usize)],
    ) -> Self {
        let mut counts = std::collections::HashMap::<(usize, usize), usize>::new();
        for &(t, r, s) in edges {
            assert!(t < targets && s < sources && r < relations, "edge out of bounds");
            *counts.entry((t, r)).or_insert(0) += 1;
        }
        let mut fwd = Vec::with_capacity(edges.len());
        let mut bwd = Vec::with_capacity(edges.len());
        for &(t, r, s) in edges {
            let w = 1.0 / counts[&(t, r)] as f64;
            fwd.push((
                t,
                Entry {
                    index: s,
                    relation: r,
                    weight: w,
                },
            ));
            bwd.push((
                s,
                Entry {
                    index: t,
                    relation: r,
                    weight: w,
                },
            ));
        }
        RelationalAdjacency {
            targets,
            sources,
            relations,
            forward: Csr::build(targets, fwd),
            backward: Csr::build(sources, bwd),
        }
    }

    pub fn targets(&self) -> usize {
        self.targets
    }

    pub fn sources(&self) -> usize {
        self.sources
    }

    pub fn relations(&self) -> usize {
        self.relations
    }

    pub fn edge_count(&self) -> usize {
        self.forward.entries.len()
    }

    /// `(relation, source, weight)` terms aggregated into `target`, in the
    /// deterministic order used by the kernels.
    pub fn incoming(&self, target: usize) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.forward
            .row(target)
            .iter()
            .map(|e| (e.relation, e.index, e.weight))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relational_weights_are_per_relation_means() {
        let adj = RelationalAdjacency::new(2, 3, 2, &[(0, 0, 1), (0, 0, 2), (0, 1, 2), (1, 1, 0)]);
        let terms: Vec<_> = adj.incoming(0).collect();
        assert_eq!(terms, vec![(0, 1, 0.5), (0, 2, 0.5), (1, 2, 1.0)]);
        assert_eq!(adj.incoming(1).collect::<Vec<_>>(), vec![(1, 0, 1.0)]);
    }

    #[test]
    fn edge_order_does_not_change_layout() {
        let e = vec![(0, 0, 1), (1, 1, 0), (0, 1, 2), (0, 0, 2)];
        let mut r = e.clone();
        r.reverse();
        assert_eq!(
            RelationalAdjacency::new(2, 3, 2, &e),
            RelationalAdjacency::new(2, 3, 2, &r)
        );
    }
}
