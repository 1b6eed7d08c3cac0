//! Pull-back of stratum terms along the map forgetting extra points.
//!
//! A pure boundary term pulls back to the sum over all placements of the
//! new points on the vertices. A term carrying one cotangent exponent
//! additionally acquires correction terms: the decorated point splits onto
//! a genus-0 bubble together with a nonempty set of new points, and the
//! cotangent exponent disappears. New points are labeled `q<k>` starting
//! after any extras already present, so pull-backs compose.

use crate::error::Error;
use crate::graph::{marking_inventory, DualGraph, EdgeEnd, Marking};
use crate::relation::{RelationExpr, StratumTerm};
use crate::rational::Q;

/// Where the single cotangent exponent of a term sits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PsiSite {
    Marking(Marking),
    /// Edge index plus end index (0 or 1).
    EdgeEnd(usize, usize),
}

/// Locate the cotangent decoration, requiring exponent exactly one in
/// total; `None` for pure boundary terms.
pub fn psi_site(graph: &DualGraph) -> Result<Option<PsiSite>, Error> {
    let mut sites = Vec::new();
    for (&m, &_v) in graph.markings() {
        match graph.marking_psi(m) {
            0 => {}
            1 => sites.push(PsiSite::Marking(m)),
            k => {
                return Err(Error::Unsupported(format!(
                    "cotangent exponent {k} at marking {m}: only exponent 1 is supported"
                )))
            }
        }
    }
    for (i, e) in graph.edges().iter().enumerate() {
        for (side, end) in [(0, e.0), (1, e.1)] {
            match end.psi {
                0 => {}
                1 => sites.push(PsiSite::EdgeEnd(i, side)),
                k => {
                    return Err(Error::Unsupported(format!(
                        "cotangent exponent {k} on an edge side: only exponent 1 is supported"
                    )))
                }
            }
        }
    }
    match sites.len() {
        0 => Ok(None),
        1 => Ok(Some(sites[0])),
        n => Err(Error::Unsupported(format!("{n} cotangent decorations on one term"))),
    }
}

/// Strip the cotangent exponent and split its attachment point onto a new
/// genus-0 vertex (returned index is the bubble).
pub fn bubble_off(graph: &DualGraph, site: PsiSite) -> (DualGraph, usize) {
    let n = graph.vertex_count();
    let bubble = n;
    let mut genus: Vec<u32> = (0..n).map(|v| graph.genus(v)).collect();
    genus.push(0);
    let mut out = DualGraph::new(genus);
    match site {
        PsiSite::Marking(moved) => {
            for (&m, &v) in graph.markings() {
                let target = if m == moved { bubble } else { v };
                out.add_marking(m, target).unwrap();
                let psi = graph.marking_psi(m);
                if m != moved && psi > 0 {
                    out.set_marking_psi(m, psi).unwrap();
                }
            }
            for e in graph.edges() {
                out.add_edge(e.0, e.1).unwrap();
            }
            let host = graph.markings()[&moved];
            out.add_edge(EdgeEnd { vertex: host, psi: 0 }, EdgeEnd { vertex: bubble, psi: 0 })
                .unwrap();
        }
        PsiSite::EdgeEnd(index, side) => {
            for (&m, &v) in graph.markings() {
                out.add_marking(m, v).unwrap();
                let psi = graph.marking_psi(m);
                if psi > 0 {
                    out.set_marking_psi(m, psi).unwrap();
                }
            }
            for (i, e) in graph.edges().iter().enumerate() {
                if i != index {
                    out.add_edge(e.0, e.1).unwrap();
                    continue;
                }
                let (host_end, far_end) = if side == 0 { (e.0, e.1) } else { (e.1, e.0) };
                out.add_edge(EdgeEnd { vertex: host_end.vertex, psi: 0 }, EdgeEnd { vertex: bubble, psi: 0 })
                    .unwrap();
                out.add_edge(EdgeEnd { vertex: bubble, psi: 0 }, far_end).unwrap();
            }
        }
    }
    (out, bubble)
}

fn next_extra_index(graph: &DualGraph) -> u32 {
    let (_, extras) = marking_inventory(graph);
    extras.into_iter().max().unwrap_or(0) + 1
}

/// All placements of `l` fresh extra points on the vertices of `graph`,
/// optionally requiring a minimum count on one distinguished vertex.
fn distributions(
    graph: &DualGraph,
    l: u32,
    require_at_least_one_on: Option<usize>,
) -> Vec<DualGraph> {
    let base = next_extra_index(graph);
    let v = graph.vertex_count();
    let mut out = Vec::new();
    let mut placement = vec![0usize; l as usize];
    loop {
        let ok = match require_at_least_one_on {
            Some(target) => placement.iter().any(|&p| p == target),
            None => true,
        };
        if ok {
            let mut g = graph.clone();
            for (i, &vertex) in placement.iter().enumerate() {
                g.add_marking(Marking::Extra(base + i as u32), vertex).unwrap();
            }
            out.push(g);
        }
        // Odometer over placements.
        let mut i = 0;
        loop {
            if i == placement.len() {
                return out;
            }
            placement[i] += 1;
            if placement[i] < v {
                break;
            }
            placement[i] = 0;
            i += 1;
        }
    }
}

/// Pull back a pure boundary term along the map forgetting `l` points:
/// one summand per placement, same coefficient each. Unmerged.
pub fn pullback_pure(term: &StratumTerm, l: u32) -> Result<Vec<StratumTerm>, Error> {
    if psi_site(&term.graph)?.is_some() {
        return Err(Error::Contract("pullback_pure on a cotangent-decorated term".into()));
    }
    Ok(distributions(&term.graph, l, None)
        .into_iter()
        .map(|graph| StratumTerm {
            coefficient: term.coefficient.clone(),
            graph,
            assigned: term.assigned,
        })
        .collect())
}

/// Pull back a term carrying exactly one cotangent exponent: the
/// placements that keep the exponent, minus the bubble corrections that
/// carry at least one new point. Unmerged.
pub fn pullback_psi(term: &StratumTerm, l: u32) -> Result<Vec<StratumTerm>, Error> {
    let site = psi_site(&term.graph)?
        .ok_or_else(|| Error::Contract("pullback_psi on a pure boundary term".into()))?;
    let mut out: Vec<StratumTerm> = distributions(&term.graph, l, None)
        .into_iter()
        .map(|graph| StratumTerm {
            coefficient: term.coefficient.clone(),
            graph,
            assigned: term.assigned,
        })
        .collect();
    let (corrected, bubble) = bubble_off(&term.graph, site);
    let negated: Q = -term.coefficient.clone();
    out.extend(distributions(&corrected, l, Some(bubble)).into_iter().map(|graph| {
        StratumTerm { coefficient: negated.clone(), graph, assigned: term.assigned }
    }));
    Ok(out)
}

/// Term-wise pull-back of a whole expression, canonically merged.
pub fn pullback_relation(expr: &RelationExpr, l: u32) -> Result<RelationExpr, Error> {
    let mut terms = Vec::new();
    for term in &expr.terms {
        let pulled = match psi_site(&term.graph)? {
            None => pullback_pure(term, l)?,
            Some(_) => pullback_psi(term, l)?,
        };
        terms.extend(pulled);
    }
    let out = RelationExpr {
        terms,
        ambient_genus: expr.ambient_genus,
        ambient_markings: expr.ambient_markings,
    };
    Ok(out.merged())
}
