//! The splitting formula: a fully marked stratum term plus an insertion
//! assignment becomes a rational combination of products of vertex
//! correlators.
//!
//! For every function from edge sides to basis classes (weighted by the
//! inverse pairing, one factor per edge) and every distribution of the
//! curve degree over the vertices, each vertex contributes one correlator:
//! its markings carry the assigned classes plus any cotangent exponent
//! from the graph, its edge sides carry the chosen diagonal classes plus
//! any edge-side cotangent exponent. The whole sum is divided by the
//! order of the automorphism group of the decorated graph.

use crate::correlator::{CorrelatorKey, Insertion};
use crate::error::Error;
use crate::graph::Marking;
use crate::model::TargetModel;
use crate::rational::{qi, Q};
use crate::relation::StratumTerm;
use num_traits::Zero;
use std::collections::BTreeMap;

/// One summand of the expanded splitting: a rational weight times a
/// product of one correlator per vertex.
pub type SplitSummand = (Q, Vec<CorrelatorKey>);

/// Expand the splitting formula for a term whose markings are all
/// assigned insertions. Zero-weight colorings are dropped.
pub fn split_term(
    term: &StratumTerm,
    assignment: &BTreeMap<Marking, Insertion>,
    degree: u32,
    model: &TargetModel,
) -> Result<Vec<SplitSummand>, Error> {
    let graph = &term.graph;
    for m in graph.markings().keys() {
        if !assignment.contains_key(m) {
            return Err(Error::Contract(format!("marking {m} has no assigned insertion")));
        }
    }
    let inverse = model.pairing_inverse()?;
    let rank = model.rank() as u8;
    let edge_count = graph.edges().len();
    let vertex_count = graph.vertex_count();
    let aut = qi(graph.automorphism_count() as i64);

    // Nonzero inverse-pairing entries, enumerated once.
    let mut pairs: Vec<(u8, u8, Q)> = Vec::new();
    for i in 0..rank {
        for j in 0..rank {
            let w = inverse[i as usize][j as usize].clone();
            if !w.is_zero() {
                pairs.push((i, j, w));
            }
        }
    }

    let mut out = Vec::new();
    let mut coloring = vec![0usize; edge_count];
    loop {
        // Weight of this coloring.
        let mut weight = Q::from_integer(1.into());
        for (e, &choice) in coloring.iter().enumerate() {
            let _ = e;
            weight *= &pairs[choice].2;
        }
        for split in degree_splits(degree, vertex_count) {
            let mut keys = Vec::with_capacity(vertex_count);
            for v in 0..vertex_count {
                let mut insertions: Vec<Insertion> = Vec::new();
                for m in graph.markings_at(v) {
                    let base = assignment[&m];
                    insertions.push(Insertion {
                        class: base.class,
                        psi: base.psi + graph.marking_psi(m),
                    });
                }
                for (e, edge) in graph.edges().iter().enumerate() {
                    let (ci, cj, _) = &pairs[coloring[e]];
                    if edge.0.vertex == v {
                        insertions.push(Insertion { class: *ci, psi: edge.0.psi });
                    }
                    if edge.1.vertex == v {
                        insertions.push(Insertion { class: *cj, psi: edge.1.psi });
                    }
                }
                keys.push(CorrelatorKey::new(graph.genus(v) as u8, split[v], insertions));
            }
            let w = &term.coefficient * &weight / &aut;
            out.push((w, keys));
        }
        // Odometer over colorings.
        let mut i = 0;
        loop {
            if i == edge_count {
                return Ok(out);
            }
            coloring[i] += 1;
            if coloring[i] < pairs.len() {
                break;
            }
            coloring[i] = 0;
            i += 1;
        }
    }
}

/// All ways to write `degree` as an ordered sum over `parts` slots
/// (zeros allowed).
pub fn degree_splits(degree: u32, parts: usize) -> Vec<Vec<u32>> {
    fn rec(remaining: u32, slots: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if slots == 1 {
            prefix.push(remaining);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for take in 0..=remaining {
            prefix.push(take);
            rec(remaining - take, slots - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if parts == 0 {
        return out;
    }
    let mut prefix = Vec::new();
    rec(degree, parts, &mut prefix, &mut out);
    out
}
