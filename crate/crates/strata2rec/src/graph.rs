//! Decorated stable dual graphs.
//!
//! A `DualGraph` records the combinatorial type of a stable curve: vertices
//! with genus labels, labeled marked points, a multiset of edges (loops
//! allowed), and cotangent-line exponents attached either to a marking or to
//! one side of an edge.
//!
//! Isomorphism is taken in the pointed sense: automorphisms fix every
//! marking label, and cotangent exponents participate in the comparison.
//! Canonicalization is an exhaustive minimization over vertex orderings;
//! the graphs in this problem have at most a handful of vertices, so
//! nothing cleverer is warranted.

use crate::error::Error;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// A marked-point label: the ambient points `1..n`, or extra points
/// `q1, q2, …` introduced by forgetful pull-back.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug, Hash)]
pub enum Marking {
    Primary(u8),
    Extra(u32),
}

impl fmt::Display for Marking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Marking::Primary(k) => write!(f, "{k}"),
            Marking::Extra(k) => write!(f, "q{k}"),
        }
    }
}

/// One side of an edge: the vertex it attaches to plus the cotangent
/// exponent carried at that attachment point.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug, Hash)]
pub struct EdgeEnd {
    pub vertex: usize,
    pub psi: u32,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash)]
pub struct Edge(pub EdgeEnd, pub EdgeEnd);

impl Edge {
    pub fn is_loop(&self) -> bool {
        self.0.vertex == self.1.vertex
    }

    fn normalized(&self) -> (EdgeEnd, EdgeEnd) {
        if self.0 <= self.1 {
            (self.0, self.1)
        } else {
            (self.1, self.0)
        }
    }
}

/// Canonical encoding of a graph; equal keys mean isomorphic decorated
/// pointed graphs.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Hash)]
pub struct CanonicalKey {
    genus: Vec<u32>,
    markings: Vec<(Marking, usize, u32)>,
    edges: Vec<(EdgeEnd, EdgeEnd)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DualGraph {
    genus: Vec<u32>,
    markings: BTreeMap<Marking, usize>,
    marking_psi: BTreeMap<Marking, u32>,
    edges: Vec<Edge>,
}

impl DualGraph {
    pub fn new(genus: Vec<u32>) -> Self {
        DualGraph { genus, markings: BTreeMap::new(), marking_psi: BTreeMap::new(), edges: Vec::new() }
    }

    pub fn add_marking(&mut self, m: Marking, vertex: usize) -> Result<(), Error> {
        if vertex >= self.genus.len() {
            return Err(Error::Semantic(format!("marking {m} placed on missing vertex {vertex}")));
        }
        if self.markings.insert(m, vertex).is_some() {
            return Err(Error::Semantic(format!("marking {m} appears twice")));
        }
        Ok(())
    }

    pub fn set_marking_psi(&mut self, m: Marking, psi: u32) -> Result<(), Error> {
        if !self.markings.contains_key(&m) {
            return Err(Error::Semantic(format!("cotangent exponent on absent marking {m}")));
        }
        if psi > 0 {
            self.marking_psi.insert(m, psi);
        }
        Ok(())
    }

    pub fn add_edge(&mut self, a: EdgeEnd, b: EdgeEnd) -> Result<(), Error> {
        if a.vertex >= self.genus.len() || b.vertex >= self.genus.len() {
            return Err(Error::Semantic("edge attached to missing vertex".into()));
        }
        self.edges.push(Edge(a, b));
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.genus.len()
    }

    pub fn genus(&self, v: usize) -> u32 {
        self.genus[v]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn markings(&self) -> &BTreeMap<Marking, usize> {
        &self.markings
    }

    pub fn marking_psi(&self, m: Marking) -> u32 {
        self.marking_psi.get(&m).copied().unwrap_or(0)
    }

    pub fn markings_at(&self, v: usize) -> Vec<Marking> {
        self.markings.iter().filter(|&(_, &w)| w == v).map(|(&m, _)| m).collect()
    }

    /// Markings plus incident edge sides (a loop contributes two).
    pub fn valence(&self, v: usize) -> u32 {
        let marks = self.markings.values().filter(|&&w| w == v).count() as u32;
        let flags = self
            .edges
            .iter()
            .map(|e| (e.0.vertex == v) as u32 + (e.1.vertex == v) as u32)
            .sum::<u32>();
        marks + flags
    }

    /// First Betti number of the underlying graph (assumes connectivity).
    pub fn betti1(&self) -> u32 {
        (self.edges.len() + 1).saturating_sub(self.genus.len()) as u32
    }

    /// Sum of vertex genera plus the first Betti number.
    pub fn total_genus(&self) -> u32 {
        self.genus.iter().sum::<u32>() + self.betti1()
    }

    /// Number of edges plus total cotangent exponent: the codimension of
    /// the corresponding stratum class.
    pub fn codimension(&self) -> u32 {
        let psi_edges: u32 = self.edges.iter().map(|e| e.0.psi + e.1.psi).sum();
        let psi_marks: u32 = self.marking_psi.values().sum();
        self.edges.len() as u32 + psi_edges + psi_marks
    }

    pub fn total_psi(&self) -> u32 {
        self.edges.iter().map(|e| e.0.psi + e.1.psi).sum::<u32>()
            + self.marking_psi.values().sum::<u32>()
    }

    pub fn is_connected(&self) -> bool {
        let n = self.genus.len();
        if n == 0 {
            return false;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for e in &self.edges {
                for (a, b) in [(e.0.vertex, e.1.vertex), (e.1.vertex, e.0.vertex)] {
                    if a == v && !seen[b] {
                        seen[b] = true;
                        stack.push(b);
                    }
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Every vertex must satisfy `2g(v) - 2 + val(v) > 0`.
    pub fn check_stability(&self) -> Result<(), Error> {
        for v in 0..self.genus.len() {
            if 2 * self.genus[v] as i64 - 2 + self.valence(v) as i64 <= 0 {
                return Err(Error::Semantic(format!(
                    "unstable vertex {v}: genus {} with valence {}",
                    self.genus[v],
                    self.valence(v)
                )));
            }
        }
        Ok(())
    }

    fn encode_under(&self, perm: &[usize]) -> CanonicalKey {
        let n = self.genus.len();
        let mut genus = vec![0u32; n];
        for (old, &new) in perm.iter().enumerate() {
            genus[new] = self.genus[old];
        }
        let markings = self
            .markings
            .iter()
            .map(|(&m, &v)| (m, perm[v], self.marking_psi(m)))
            .collect();
        let mut edges: Vec<(EdgeEnd, EdgeEnd)> = self
            .edges
            .iter()
            .map(|e| {
                Edge(
                    EdgeEnd { vertex: perm[e.0.vertex], psi: e.0.psi },
                    EdgeEnd { vertex: perm[e.1.vertex], psi: e.1.psi },
                )
                .normalized()
            })
            .collect();
        edges.sort();
        CanonicalKey { genus, markings, edges }
    }

    /// Minimal encoding over all vertex orderings.
    pub fn canonical_key(&self) -> CanonicalKey {
        let n = self.genus.len();
        let mut best: Option<CanonicalKey> = None;
        for perm in permutations(n) {
            let key = self.encode_under(&perm);
            if best.as_ref().map_or(true, |b| key < *b) {
                best = Some(key);
            }
        }
        best.expect("graph has at least one vertex")
    }

    /// Rebuild the graph with vertices in canonical order.
    pub fn canonicalized(&self) -> DualGraph {
        let n = self.genus.len();
        let mut best: Option<(CanonicalKey, Vec<usize>)> = None;
        for perm in permutations(n) {
            let key = self.encode_under(&perm);
            if best.as_ref().map_or(true, |(b, _)| key < *b) {
                best = Some((key, perm));
            }
        }
        let (key, perm) = best.expect("graph has at least one vertex");
        let mut g = DualGraph::new(key.genus);
        for (&m, &v) in &self.markings {
            g.markings.insert(m, perm[v]);
        }
        g.marking_psi = self.marking_psi.clone();
        g.edges = key
            .edges
            .iter()
            .map(|&(a, b)| Edge(a, b))
            .collect();
        g
    }

    /// Order of the automorphism group of the decorated pointed graph,
    /// counting flag symmetries: vertex permutations that fix all data,
    /// times permutations of indistinguishable parallel edges, times a
    /// factor 2 for every loop with equal cotangent exponents on its two
    /// sides.
    pub fn automorphism_count(&self) -> u64 {
        let n = self.genus.len();
        let reference = self.encode_under(&identity(n));
        let vertex_autos = permutations(n)
            .into_iter()
            .filter(|perm| self.encode_under(perm) == reference)
            .count() as u64;
        let mut record_multiplicity: BTreeMap<(EdgeEnd, EdgeEnd), u64> = BTreeMap::new();
        for e in &self.edges {
            *record_multiplicity.entry(e.normalized()).or_insert(0) += 1;
        }
        let parallel: u64 = record_multiplicity.values().map(|&k| factorial(k)).product();
        let symmetric_loops = self
            .edges
            .iter()
            .filter(|e| e.is_loop() && e.0.psi == e.1.psi)
            .count() as u32;
        vertex_autos * parallel * (1u64 << symmetric_loops)
    }

    /// Apply a relabeling to the primary markings (extras untouched).
    pub fn relabel_primaries(&self, sigma: &dyn Fn(u8) -> u8) -> DualGraph {
        let map = |m: Marking| match m {
            Marking::Primary(k) => Marking::Primary(sigma(k)),
            other => other,
        };
        let mut g = DualGraph::new(self.genus.clone());
        for (&m, &v) in &self.markings {
            g.markings.insert(map(m), v);
        }
        for (&m, &p) in &self.marking_psi {
            g.marking_psi.insert(map(m), p);
        }
        g.edges = self.edges.clone();
        g
    }
}

fn identity(n: usize) -> Vec<usize> {
    (0..n).collect()
}

fn factorial(k: u64) -> u64 {
    (1..=k).product::<u64>().max(1)
}

/// All permutations of `0..n` as old-index → new-index tables.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = identity(n);
    heap_permute(&mut current, n, &mut out);
    out
}

fn heap_permute(arr: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k <= 1 {
        out.push(arr.clone());
        return;
    }
    for i in 0..k {
        heap_permute(arr, k - 1, out);
        if k % 2 == 0 {
            arr.swap(i, k - 1);
        } else {
            arr.swap(0, k - 1);
        }
    }
}

/// Collect the distinct marking labels present, split into primaries and extras.
pub fn marking_inventory(g: &DualGraph) -> (BTreeSet<u8>, BTreeSet<u32>) {
    let mut primaries = BTreeSet::new();
    let mut extras = BTreeSet::new();
    for m in g.markings().keys() {
        match m {
            Marking::Primary(k) => {
                primaries.insert(*k);
            }
            Marking::Extra(k) => {
                extras.insert(*k);
            }
        }
    }
    (primaries, extras)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(k: u8) -> Marking {
        Marking::Primary(k)
    }

    fn end(v: usize) -> EdgeEnd {
        EdgeEnd { vertex: v, psi: 0 }
    }

    /// Chain: genus-2 end, middle rational with one marking, end rational
    /// with two markings.
    fn three_component_chain() -> DualGraph {
        let mut g = DualGraph::new(vec![2, 0, 0]);
        g.add_marking(p(1), 1).unwrap();
        g.add_marking(p(2), 2).unwrap();
        g.add_marking(p(3), 2).unwrap();
        g.add_edge(end(0), end(1)).unwrap();
        g.add_edge(end(1), end(2)).unwrap();
        g
    }

    /// Two elliptic ends on a rational center carrying all three markings.
    fn symmetric_elliptic_pair() -> DualGraph {
        let mut g = DualGraph::new(vec![1, 0, 1]);
        for k in 1..=3 {
            g.add_marking(p(k), 1).unwrap();
        }
        g.add_edge(end(0), end(1)).unwrap();
        g.add_edge(end(1), end(2)).unwrap();
        g
    }

    #[test]
    fn stability_and_genus_bookkeeping() {
        let g = three_component_chain();
        assert!(g.check_stability().is_ok());
        assert!(g.is_connected());
        assert_eq!(g.total_genus(), 2);
        assert_eq!(g.codimension(), 2);
        assert_eq!(g.valence(1), 3);
    }

    #[test]
    fn unstable_vertex_detected() {
        // Rational vertex of valence 2: one marking, one edge.
        let mut g = DualGraph::new(vec![2, 0]);
        g.add_marking(p(1), 1).unwrap();
        g.add_marking(p(2), 0).unwrap();
        g.add_marking(p(3), 0).unwrap();
        g.add_edge(end(0), end(1)).unwrap();
        assert!(g.check_stability().is_err());
    }

    #[test]
    fn canonical_key_ignores_storage_order() {
        let g = three_component_chain();
        // Same graph entered with vertices shuffled.
        let mut h = DualGraph::new(vec![0, 0, 2]);
        h.add_marking(p(1), 0).unwrap();
        h.add_marking(p(2), 1).unwrap();
        h.add_marking(p(3), 1).unwrap();
        h.add_edge(end(2), end(0)).unwrap();
        h.add_edge(end(0), end(1)).unwrap();
        assert_eq!(g.canonical_key(), h.canonical_key());
        assert_eq!(g.canonicalized(), h.canonicalized());
    }

    #[test]
    fn psi_decorations_distinguish_graphs() {
        let mut a = DualGraph::new(vec![2, 0]);
        a.add_marking(p(1), 1).unwrap();
        a.add_marking(p(2), 1).unwrap();
        a.add_marking(p(3), 1).unwrap();
        a.add_edge(EdgeEnd { vertex: 0, psi: 1 }, end(1)).unwrap();
        let mut b = DualGraph::new(vec![2, 0]);
        b.add_marking(p(1), 1).unwrap();
        b.add_marking(p(2), 1).unwrap();
        b.add_marking(p(3), 1).unwrap();
        b.add_edge(end(0), EdgeEnd { vertex: 1, psi: 1 }).unwrap();
        assert_ne!(a.canonical_key(), b.canonical_key());
    }

    #[test]
    fn automorphisms_symmetric_two_edge_graph() {
        assert_eq!(symmetric_elliptic_pair().automorphism_count(), 2);
    }

    #[test]
    fn automorphisms_trivial_on_marked_chains() {
        assert_eq!(three_component_chain().automorphism_count(), 1);
        // Distinct genus labels on a chain: rigid even unmarked.
        let mut g = DualGraph::new(vec![1, 1, 0]);
        g.add_marking(p(1), 1).unwrap();
        g.add_marking(p(2), 2).unwrap();
        g.add_marking(p(3), 2).unwrap();
        g.add_edge(end(0), end(1)).unwrap();
        g.add_edge(end(1), end(2)).unwrap();
        assert_eq!(g.automorphism_count(), 1);
    }

    #[test]
    fn automorphisms_banana_and_loops() {
        // Elliptic vertex doubly joined to a rational vertex.
        let mut banana = DualGraph::new(vec![1, 0]);
        for k in 1..=3 {
            banana.add_marking(p(k), 1).unwrap();
        }
        banana.add_edge(end(0), end(1)).unwrap();
        banana.add_edge(end(0), end(1)).unwrap();
        assert_eq!(banana.automorphism_count(), 2);
        assert_eq!(banana.total_genus(), 2);

        // Loop on an elliptic vertex with a rational tail.
        let mut looped = DualGraph::new(vec![1, 0]);
        for k in 1..=3 {
            looped.add_marking(p(k), 1).unwrap();
        }
        looped.add_edge(end(0), end(0)).unwrap();
        looped.add_edge(end(0), end(1)).unwrap();
        assert_eq!(looped.automorphism_count(), 2);
        assert_eq!(looped.total_genus(), 2);
        assert_eq!(looped.valence(0), 3);
    }

    #[test]
    fn relabel_primaries_moves_psi_with_the_label() {
        let mut g = DualGraph::new(vec![2, 0]);
        g.add_marking(p(1), 0).unwrap();
        g.add_marking(p(2), 1).unwrap();
        g.add_marking(p(3), 1).unwrap();
        g.set_marking_psi(p(1), 1).unwrap();
        g.add_edge(end(0), end(1)).unwrap();
        let swapped = g.relabel_primaries(&|k| match k {
            1 => 2,
            2 => 1,
            other => other,
        });
        assert_eq!(swapped.marking_psi(p(2)), 1);
        assert_eq!(swapped.marking_psi(p(1)), 0);
        assert_eq!(*swapped.markings().get(&p(2)).unwrap(), 0);
    }
}
