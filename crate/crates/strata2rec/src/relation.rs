//! Stratum terms and formal relation expressions.
//!
//! A term with *unassigned* markings stands for the sum of the assigned
//! classes over all `3!` ways of placing the marking labels; expanding
//! that sum and merging isomorphic results is `expand_unassigned`. The
//! bookkeeping convention matters: a graph fixed by some label
//! permutations picks up the corresponding multiplicity.

use crate::error::Error;
use crate::graph::{marking_inventory, DualGraph};
use crate::rational::Q;
use num_traits::Zero;
use std::collections::BTreeMap;

#[derive(Clone, Debug)]
pub struct StratumTerm {
    pub coefficient: Q,
    pub graph: DualGraph,
    pub assigned: bool,
}

#[derive(Clone, Debug)]
pub struct RelationExpr {
    pub terms: Vec<StratumTerm>,
    pub ambient_genus: u32,
    pub ambient_markings: u8,
}

impl RelationExpr {
    /// Validate stability, connectivity, total genus and marking coverage
    /// of every term against the ambient data.
    pub fn validate(&self) -> Result<(), Error> {
        for (i, t) in self.terms.iter().enumerate() {
            let g = &t.graph;
            if !g.is_connected() {
                return Err(Error::Semantic(format!("term {i}: graph is disconnected")));
            }
            g.check_stability().map_err(|e| prefix(i, e))?;
            if g.total_genus() != self.ambient_genus {
                return Err(Error::Semantic(format!(
                    "term {i}: total genus {} differs from ambient genus {}",
                    g.total_genus(),
                    self.ambient_genus
                )));
            }
            let (primaries, extras) = marking_inventory(g);
            let expected: Vec<u8> = (1..=self.ambient_markings).collect();
            if primaries.iter().copied().collect::<Vec<_>>() != expected {
                return Err(Error::Semantic(format!(
                    "term {i}: markings must be exactly 1..{}",
                    self.ambient_markings
                )));
            }
            let extras_list: Vec<u32> = extras.iter().copied().collect();
            let contiguous: Vec<u32> = (1..=extras_list.len() as u32).collect();
            if extras_list != contiguous {
                return Err(Error::Semantic(format!("term {i}: extra markings must be q1..qk")));
            }
        }
        Ok(())
    }

    /// Merge terms with isomorphic decorated graphs; drops zero terms.
    pub fn merged(&self) -> RelationExpr {
        let mut acc: BTreeMap<crate::graph::CanonicalKey, (DualGraph, Q, bool)> = BTreeMap::new();
        for t in &self.terms {
            let key = t.graph.canonical_key();
            match acc.get_mut(&key) {
                Some((_, c, _)) => *c += &t.coefficient,
                None => {
                    acc.insert(key, (t.graph.canonicalized(), t.coefficient.clone(), t.assigned));
                }
            }
        }
        let terms = acc
            .into_values()
            .filter(|(_, c, _)| !c.is_zero())
            .map(|(graph, coefficient, assigned)| StratumTerm { coefficient, graph, assigned })
            .collect();
        RelationExpr { terms, ..*self }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Expand an unassigned term into the sum over all `3!` marking
/// assignments. Isomorphic assigned graphs are merged, so the output
/// coefficients total six times the input coefficient.
pub fn expand_unassigned(term: &StratumTerm) -> Result<Vec<StratumTerm>, Error> {
    if term.assigned {
        return Err(Error::Contract("expand_unassigned called on an assigned term".into()));
    }
    let (primaries, extras) = marking_inventory(&term.graph);
    if primaries.iter().copied().collect::<Vec<_>>() != vec![1, 2, 3] || !extras.is_empty() {
        return Err(Error::Contract(
            "unassigned expansion requires markings exactly {1,2,3} and no extras".into(),
        ));
    }
    let mut buckets: BTreeMap<crate::graph::CanonicalKey, (DualGraph, u32)> = BTreeMap::new();
    for sigma in label_permutations() {
        let relabeled = term.graph.relabel_primaries(&|k| sigma[(k - 1) as usize]);
        let key = relabeled.canonical_key();
        match buckets.get_mut(&key) {
            Some((_, mult)) => *mult += 1,
            None => {
                buckets.insert(key, (relabeled.canonicalized(), 1));
            }
        }
    }
    Ok(buckets
        .into_values()
        .map(|(graph, mult)| StratumTerm {
            coefficient: &term.coefficient * crate::rational::qi(mult as i64),
            graph,
            assigned: true,
        })
        .collect())
}

/// The six permutations of labels {1,2,3}, as lookup tables.
pub fn label_permutations() -> Vec<[u8; 3]> {
    vec![
        [1, 2, 3],
        [1, 3, 2],
        [2, 1, 3],
        [2, 3, 1],
        [3, 1, 2],
        [3, 2, 1],
    ]
}

fn prefix(i: usize, e: Error) -> Error {
    match e {
        Error::Semantic(msg) => Error::Semantic(format!("term {i}: {msg}")),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{EdgeEnd, Marking};
    use crate::rational::{q, qi};

    fn p(k: u8) -> Marking {
        Marking::Primary(k)
    }

    fn end(v: usize) -> EdgeEnd {
        EdgeEnd { vertex: v, psi: 0 }
    }

    fn chain_term() -> StratumTerm {
        let mut g = DualGraph::new(vec![2, 0, 0]);
        g.add_marking(p(1), 1).unwrap();
        g.add_marking(p(2), 2).unwrap();
        g.add_marking(p(3), 2).unwrap();
        g.add_edge(end(0), end(1)).unwrap();
        g.add_edge(end(1), end(2)).unwrap();
        StratumTerm { coefficient: qi(-2), graph: g, assigned: false }
    }

    #[test]
    fn chain_expands_into_three_doubled_assignments() {
        let out = expand_unassigned(&chain_term()).unwrap();
        assert_eq!(out.len(), 3);
        for t in &out {
            assert_eq!(t.coefficient, qi(-4));
            assert!(t.assigned);
        }
        let total: Q = out.iter().map(|t| t.coefficient.clone()).sum();
        assert_eq!(total, qi(-12));
    }

    #[test]
    fn fully_symmetric_placement_expands_once_with_multiplicity_six() {
        let mut g = DualGraph::new(vec![2, 0]);
        for k in 1..=3 {
            g.add_marking(p(k), 1).unwrap();
        }
        g.add_edge(EdgeEnd { vertex: 0, psi: 1 }, end(1)).unwrap();
        let t = StratumTerm { coefficient: qi(2), graph: g, assigned: false };
        let out = expand_unassigned(&t).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].coefficient, qi(12));
    }

    #[test]
    fn split_markings_on_distinct_vertices_expand_three_ways() {
        // One marking on the elliptic loop vertex, two on the tail:
        // brute-force over all six permutations, three classes of two.
        let mut g = DualGraph::new(vec![1, 0]);
        g.add_marking(p(1), 0).unwrap();
        g.add_marking(p(2), 1).unwrap();
        g.add_marking(p(3), 1).unwrap();
        g.add_edge(end(0), end(0)).unwrap();
        g.add_edge(end(0), end(1)).unwrap();
        let t = StratumTerm { coefficient: q(-1, 10), graph: g, assigned: false };
        let out = expand_unassigned(&t).unwrap();
        assert_eq!(out.len(), 3);
        for term in &out {
            assert_eq!(term.coefficient, q(-1, 5));
        }
    }

    #[test]
    fn expanding_assigned_term_is_a_contract_violation() {
        let mut t = chain_term();
        t.assigned = true;
        assert!(matches!(expand_unassigned(&t), Err(Error::Contract(_))));
    }

    #[test]
    fn symmetrization_is_stable_under_label_permutation() {
        // Expanding, then permuting labels by any σ, then canonicalizing
        // must reproduce the same multiset of terms.
        let base = expand_unassigned(&chain_term()).unwrap();
        let reference: Vec<_> = base
            .iter()
            .map(|t| (t.graph.canonical_key(), t.coefficient.clone()))
            .collect();
        for sigma in label_permutations() {
            let mut permuted: Vec<_> = base
                .iter()
                .map(|t| {
                    (
                        t.graph
                            .relabel_primaries(&|k| sigma[(k - 1) as usize])
                            .canonical_key(),
                        t.coefficient.clone(),
                    )
                })
                .collect();
            permuted.sort();
            let mut sorted_ref = reference.clone();
            sorted_ref.sort();
            assert_eq!(permuted, sorted_ref);
        }
    }

    #[test]
    fn merge_adds_coefficients_of_isomorphic_terms() {
        let t = chain_term();
        let expr = RelationExpr {
            terms: vec![
                StratumTerm { coefficient: qi(1), graph: t.graph.clone(), assigned: true },
                StratumTerm { coefficient: qi(2), graph: t.graph.clone(), assigned: true },
            ],
            ambient_genus: 2,
            ambient_markings: 3,
        };
        let merged = expr.merged();
        assert_eq!(merged.len(), 1);
        assert_eq!(merged.terms[0].coefficient, qi(3));
    }
}
