//! Per-degree equation compiler and exact solver.
//!
//! For a marking assignment `(c1,c2,c3)` and a degree `d`, the relation is
//! paired against the degree-`d` class with point-class insertions at
//! `l = 3d + 2 - Σ codeg(ci)` extra points. Each relation term, expanded
//! over marking assignments, contributes through the splitting formula;
//! extra points all carry the point class, so only their per-vertex counts
//! matter and the count at each vertex is pinned by dimension selection.
//! The result is a bucketed polynomial in the basic symbols; substituting
//! known lower-degree values turns it into one linear equation in the
//! three degree-`d` unknowns.
//!
//! Every degree yields up to four equations. The solver takes the first
//! full-rank triple in a fixed order and verifies the surplus equations
//! to exact equality; a surplus violation is reported, not absorbed —
//! it is the correctness oracle for the input data and the relation
//! transcription.

use crate::correlator::{BasicForm, CorrelatorKey, Insertion, Reducer, Symbol};
use crate::error::Error;
use crate::graph::{DualGraph, Marking};
use crate::model::TargetModel;
use crate::pullback::{bubble_off, psi_site};
use crate::rational::{multinomial, q, qi, Q};
use crate::relation::{expand_unassigned, RelationExpr};
use crate::series::{Genus0, Genus1Data, Provenance, SeriesTable};
use crate::split::degree_splits;
use num_traits::Zero;
use std::collections::BTreeMap;

/// Marking assignment: basis class for each of the three labels.
pub type Assignment = [u8; 3];

pub const ASSIGNMENTS: [Assignment; 4] = [[1, 1, 1], [1, 1, 2], [1, 2, 2], [2, 2, 2]];

/// Fixed overall scale applied to every compiled equation. Relations are
/// projective, so any fixed nonzero scale is sound; this one makes the
/// all-divisor equation read with unknown side `-3·H2(d) + 3d·P2(d)`,
/// the conventional display.
fn normalization() -> Q {
    q(-1, 6)
}

/// Compiled equation as a polynomial in basic symbols: multiset of
/// non-constant symbols → coefficient. The empty key holds the constant.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Buckets(pub BTreeMap<Vec<Symbol>, Q>);

impl Buckets {
    pub fn add(&mut self, key: Vec<Symbol>, value: Q) {
        if value.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        // Exact cancellations are dropped eagerly so bucket maps compare
        // equal across compilation strategies.
        match self.0.entry(key) {
            Entry::Vacant(slot) => {
                slot.insert(value);
            }
            Entry::Occupied(mut slot) => {
                *slot.get_mut() += value;
                if slot.get().is_zero() {
                    slot.remove();
                }
            }
        }
    }

    /// Add `scalar · Π forms`, distributing symbol products.
    pub fn add_product(&mut self, forms: &[BasicForm], scalar: &Q) {
        if scalar.is_zero() || forms.iter().any(|f| f.is_zero()) {
            return;
        }
        let mut partial: Vec<(Vec<Symbol>, Q)> = vec![(Vec::new(), scalar.clone())];
        for form in forms {
            let mut next = Vec::with_capacity(partial.len() * 2);
            for (key, coeff) in &partial {
                for (sym, c) in form.iter() {
                    let mut k = key.clone();
                    if sym != Symbol::One {
                        k.push(sym);
                    }
                    next.push((k, coeff * c));
                }
            }
            partial = next;
        }
        for (mut k, c) in partial {
            k.sort();
            self.add(k, c);
        }
    }

    pub fn scale(&mut self, factor: &Q) {
        for v in self.0.values_mut() {
            *v *= factor;
        }
    }

    pub fn coefficient(&self, key: &[Symbol]) -> Q {
        self.0.get(key).cloned().unwrap_or_else(Q::zero)
    }
}

/// One linear equation in the degree-`d` unknowns:
/// `n2·N2(d) + h2·H2(d) + p2·P2(d) = constant`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeEquation {
    pub degree: u32,
    pub assignment: Assignment,
    pub n2: Q,
    pub h2: Q,
    pub p2: Q,
    pub constant: Q,
}

#[derive(Clone, Debug)]
pub struct CompiledEquation {
    pub degree: u32,
    pub assignment: Assignment,
    pub extra_points: u32,
    pub buckets: Buckets,
}

/// Per-parameter record of the staggered solve: which assignments were
/// feasible, how many equations arrived with no remaining unknowns (pure
/// consistency checks), and which series entries became determined.
#[derive(Clone, Debug)]
pub struct DegreeReport {
    pub parameter: u32,
    pub feasible: Vec<Assignment>,
    /// Equations that contained no unknowns and were verified exactly.
    pub consistency_checks: usize,
    /// Symbols pinned after processing this parameter.
    pub pinned: Vec<Symbol>,
    /// Residual rank of the pending pool after this parameter.
    pub pending_rows: usize,
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub table: SeriesTable,
    pub reports: Vec<DegreeReport>,
    /// Elliptic value one degree past the horizon, when the sweep had to
    /// determine it instead of loading it.
    pub derived_next_elliptic: Option<(u32, Q)>,
}

/// Anchor overrides for fault-injection tests; production use is all
/// `None`.
#[derive(Clone, Debug, Default)]
pub struct SolveOptions {
    pub n2_zero_override: Option<Q>,
    pub h2_zero_override: Option<Q>,
}

pub struct Engine {
    model: TargetModel,
    reducer: Reducer,
    /// Assigned expansion of the relation: coefficient (including the
    /// assignment multiplicity) and graph.
    expanded: Vec<(Q, DualGraph)>,
    genus0: Genus0,
    genus1: Genus1Data,
    threads: usize,
}

impl Engine {
    pub fn new(relation: &RelationExpr, genus1: Genus1Data, threads: usize) -> Result<Self, Error> {
        relation.validate()?;
        if relation.ambient_genus != 2 || relation.ambient_markings != 3 {
            return Err(Error::Unsupported(
                "the equation compiler expects a genus-2 relation with three markings".into(),
            ));
        }
        let model = TargetModel::plane();
        let reducer = Reducer::new(model.clone())?;
        let mut expanded = Vec::new();
        for term in &relation.terms {
            if term.assigned {
                expanded.push((term.coefficient.clone(), term.graph.clone()));
            } else {
                for t in expand_unassigned(term)? {
                    expanded.push((t.coefficient, t.graph));
                }
            }
        }
        Ok(Engine { model, reducer, expanded, genus0: Genus0::new(), genus1, threads: threads.max(1) })
    }

    pub fn model(&self) -> &TargetModel {
        &self.model
    }

    pub fn reducer(&self) -> &Reducer {
        &self.reducer
    }

    pub fn genus1(&self) -> &Genus1Data {
        &self.genus1
    }

    pub fn genus0_value(&self, d: u32) -> Result<Q, Error> {
        self.genus0.value(d)
    }

    pub fn extra_points(&self, assignment: Assignment, degree: u32) -> i64 {
        3 * degree as i64 + 2
            - assignment.iter().map(|&c| self.model.codegree(c) as i64).sum::<i64>()
    }

    /// Compile the bucketed equation for one assignment and degree.
    pub fn compile_buckets(&self, assignment: Assignment, degree: u32) -> Result<CompiledEquation, Error> {
        let l = self.extra_points(assignment, degree);
        if l < 0 {
            return Err(Error::InfeasibleAssignment {
                a: assignment[0],
                b: assignment[1],
                c: assignment[2],
                degree,
            });
        }
        let l = l as u32;
        let mut buckets = Buckets::default();
        for (coeff, graph) in &self.expanded {
            self.accumulate(graph, assignment, l, degree, coeff, &mut buckets)?;
            if let Some(site) = psi_site(graph)? {
                let (correction, _) = bubble_off(graph, site);
                let negated = -coeff.clone();
                self.accumulate(&correction, assignment, l, degree, &negated, &mut buckets)?;
            }
        }
        buckets.scale(&normalization());
        Ok(CompiledEquation { degree, assignment, extra_points: l, buckets })
    }

    /// Counted splitting: enumerate edge colorings and degree splits; the
    /// number of extra points on each vertex is pinned by dimension
    /// selection, so a single multinomial weight accounts for all labeled
    /// placements. Divided by the automorphism order of the base graph.
    fn accumulate(
        &self,
        graph: &DualGraph,
        assignment: Assignment,
        l: u32,
        degree: u32,
        scale: &Q,
        buckets: &mut Buckets,
    ) -> Result<(), Error> {
        let inverse = self.model.pairing_inverse()?;
        let rank = self.model.rank() as u8;
        let mut pairs: Vec<(u8, u8, Q)> = Vec::new();
        for i in 0..rank {
            for j in 0..rank {
                let w = inverse[i as usize][j as usize].clone();
                if !w.is_zero() {
                    pairs.push((i, j, w));
                }
            }
        }
        let vertex_count = graph.vertex_count();
        let edge_count = graph.edges().len();
        let aut = qi(graph.automorphism_count() as i64);
        let point_class = (self.model.rank() - 1) as u8;

        let mut coloring = vec![0usize; edge_count];
        loop {
            let mut pair_weight = Q::from_integer(1.into());
            for &choice in &coloring {
                pair_weight *= &pairs[choice].2;
            }
            'splits: for split in degree_splits(degree, vertex_count) {
                let mut counts: Vec<u64> = Vec::with_capacity(vertex_count);
                let mut keys: Vec<CorrelatorKey> = Vec::with_capacity(vertex_count);
                for v in 0..vertex_count {
                    let mut fixed: Vec<Insertion> = Vec::new();
                    for m in graph.markings_at(v) {
                        let class = match m {
                            Marking::Primary(k) => assignment[(k - 1) as usize],
                            Marking::Extra(_) => point_class,
                        };
                        fixed.push(Insertion { class, psi: graph.marking_psi(m) });
                    }
                    for (e, edge) in graph.edges().iter().enumerate() {
                        let (ci, cj, _) = &pairs[coloring[e]];
                        if edge.0.vertex == v {
                            fixed.push(Insertion { class: *ci, psi: edge.0.psi });
                        }
                        if edge.1.vertex == v {
                            fixed.push(Insertion { class: *cj, psi: edge.1.psi });
                        }
                    }
                    let fixed_codegree: i64 = fixed
                        .iter()
                        .map(|i| self.model.codegree(i.class) as i64 + i.psi as i64)
                        .sum();
                    let k_v = fixed.len() as u32;
                    let pinned = self.model.virtual_dimension(graph.genus(v), k_v, split[v])
                        - fixed_codegree;
                    if pinned < 0 {
                        continue 'splits;
                    }
                    let c_v = pinned as u32;
                    // Stability of the distributed vertex; this is what
                    // forces a nonempty point set on correction bubbles.
                    if 2 * graph.genus(v) as i64 - 2 + (k_v + c_v) as i64 <= 0 {
                        continue 'splits;
                    }
                    counts.push(c_v as u64);
                    let insertions = fixed
                        .into_iter()
                        .chain((0..c_v).map(|_| Insertion::plain(point_class)));
                    keys.push(CorrelatorKey::new(graph.genus(v) as u8, split[v], insertions));
                }
                if counts.iter().sum::<u64>() != l as u64 {
                    continue;
                }
                let mut forms: Vec<BasicForm> = Vec::with_capacity(keys.len());
                let mut dead = false;
                for key in &keys {
                    let form = self.reducer.reduce(key)?;
                    if form.is_zero() {
                        dead = true;
                        break;
                    }
                    forms.push(form);
                }
                if dead {
                    continue;
                }
                let weight = scale
                    * &pair_weight
                    * Q::from_integer(multinomial(l as u64, &counts))
                    / &aut;
                buckets.add_product(&forms, &weight);
            }
            let mut i = 0;
            loop {
                if i == edge_count {
                    return Ok(());
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

    /// Value of a symbol given the tables; degree-`target` genus-2 symbols
    /// are the unknowns.
    fn symbol_value(
        &self,
        sym: Symbol,
        target: u32,
        table: &SeriesTable,
    ) -> Result<SymbolValue, Error> {
        Ok(match sym {
            Symbol::One => SymbolValue::Known(qi(1)),
            Symbol::C1 => SymbolValue::Known(table.c1.clone()),
            Symbol::N0(k) => SymbolValue::Known(self.genus0.value(k)?),
            Symbol::N1(k) => SymbolValue::Known(self.genus1.value(k, target)?),
            Symbol::N2(k) if k == target => SymbolValue::UnknownN2,
            Symbol::H2(k) if k == target => SymbolValue::UnknownH2,
            Symbol::P2(k) if k == target => SymbolValue::UnknownP2,
            Symbol::N2(k) => SymbolValue::Known(lookup(&table.n2, k, "N2")?),
            Symbol::H2(k) => SymbolValue::Known(lookup(&table.h2, k, "H2")?),
            Symbol::P2(k) => SymbolValue::Known(lookup(&table.p2, k, "P2")?),
        })
    }

    /// Substitute known values, leaving one linear equation in the three
    /// degree-`d` unknowns.
    pub fn linearize(
        &self,
        compiled: &CompiledEquation,
        table: &SeriesTable,
    ) -> Result<DegreeEquation, Error> {
        let d = compiled.degree;
        let mut n2 = Q::zero();
        let mut h2 = Q::zero();
        let mut p2 = Q::zero();
        let mut known = Q::zero();
        for (syms, coeff) in &compiled.buckets.0 {
            let mut factor = coeff.clone();
            let mut unknown: Option<SymbolValue> = None;
            for &sym in syms {
                match self.symbol_value(sym, d, table)? {
                    SymbolValue::Known(v) => factor *= v,
                    u => {
                        if unknown.replace(u).is_some() {
                            return Err(Error::Semantic(format!(
                                "two degree-{d} unknowns in one product: {syms:?}"
                            )));
                        }
                    }
                }
            }
            match unknown {
                None => known += factor,
                Some(SymbolValue::UnknownN2) => n2 += factor,
                Some(SymbolValue::UnknownH2) => h2 += factor,
                Some(SymbolValue::UnknownP2) => p2 += factor,
                Some(SymbolValue::Known(_)) => unreachable!(),
            }
        }
        Ok(DegreeEquation {
            degree: d,
            assignment: compiled.assignment,
            n2,
            h2,
            p2,
            constant: -known,
        })
    }

    /// Compile every feasible assignment at one degree, in parallel when
    /// the engine was built with more than one thread. Output order is
    /// fixed regardless of scheduling.
    pub fn compile_feasible(&self, degree: u32) -> Result<Vec<CompiledEquation>, Error> {
        let feasible: Vec<Assignment> = ASSIGNMENTS
            .into_iter()
            .filter(|&a| self.extra_points(a, degree) >= 0)
            .collect();
        if self.threads <= 1 || feasible.len() <= 1 {
            return feasible.into_iter().map(|a| self.compile_buckets(a, degree)).collect();
        }
        let mut slots: Vec<Option<Result<CompiledEquation, Error>>> =
            (0..feasible.len()).map(|_| None).collect();
        std::thread::scope(|scope| {
            for (slot, &a) in slots.iter_mut().zip(feasible.iter()) {
                scope.spawn(move || {
                    *slot = Some(self.compile_buckets(a, degree));
                });
            }
        });
        slots.into_iter().map(|s| s.expect("thread filled its slot")).collect()
    }

    /// Solve the series through `horizon`.
    ///
    /// The equations are staggered: pairing the relation at parameter `p`
    /// yields rows whose genus-2 unknowns sit at degrees `p-1` and below,
    /// except for the single all-divisor combination `-3·H2(p) + 3p·P2(p)`.
    /// The sweep therefore runs parameters `1..=horizon+1`, pooling rows
    /// and eliminating symbols as they become determined. Every equation
    /// is ultimately either used as a pivot or verified to exact equality;
    /// a violated one aborts the run. At the final parameter the elliptic
    /// input one degree past the horizon may be absent from the data file;
    /// it is then carried as one more unknown of the (exactly determined)
    /// final block and reported.
    pub fn solve_up_to(&self, horizon: u32, options: &SolveOptions) -> Result<SolveResult, Error> {
        if self.genus1.max_degree() < horizon {
            return Err(Error::InsufficientGenus1 {
                missing: self.genus1.max_degree() + 1,
                horizon,
            });
        }
        let mut solved: BTreeMap<Symbol, Q> = BTreeMap::new();
        solved.insert(Symbol::N2(0), options.n2_zero_override.clone().unwrap_or_else(Q::zero));
        solved.insert(
            Symbol::H2(0),
            options.h2_zero_override.clone().unwrap_or_else(|| q(-1, 960)),
        );
        let mut pending: Vec<PoolEquation> = Vec::new();
        let mut reports = Vec::new();
        for parameter in 1..=horizon + 1 {
            let compiled = self.compile_feasible(parameter)?;
            let mut consistency_checks = 0;
            let feasible: Vec<Assignment> = compiled.iter().map(|c| c.assignment).collect();
            for c in &compiled {
                let eq = self.linearize_pool(c, &solved)?;
                if eq.coeffs.is_empty() {
                    if !eq.constant.is_zero() {
                        return Err(inconsistency(&eq));
                    }
                    consistency_checks += 1;
                } else {
                    pending.push(eq);
                }
            }
            let pinned = eliminate(&mut pending, &mut solved)?;
            reports.push(DegreeReport {
                parameter,
                feasible,
                consistency_checks,
                pinned,
                pending_rows: pending.len(),
            });
        }

        let mut table = SeriesTable::with_anchors(
            self.genus1.c1.clone(),
            options.n2_zero_override.clone(),
            options.h2_zero_override.clone(),
        );
        for d in 1..=horizon {
            table.n0.insert(d, (self.genus0.value(d)?, Provenance::Computed));
            table.n1.insert(d, (self.genus1.value(d, horizon)?, Provenance::Loaded));
        }
        for d in 1..=horizon {
            for (sym, map) in [
                (Symbol::N2(d), &mut table.n2),
                (Symbol::H2(d), &mut table.h2),
                (Symbol::P2(d), &mut table.p2),
            ] {
                let value = solved.get(&sym).cloned().ok_or(Error::Underdetermined {
                    degree: d,
                    rank: 0,
                })?;
                map.insert(d, (value, Provenance::Solved));
            }
        }
        let derived_next_elliptic =
            solved.get(&Symbol::N1(horizon + 1)).map(|v| (horizon + 1, v.clone()));
        Ok(SolveResult { table, reports, derived_next_elliptic })
    }

    /// Substitute data and already-solved symbols, keeping the rest as
    /// linear unknowns. At most one unknown may appear per product.
    fn linearize_pool(
        &self,
        compiled: &CompiledEquation,
        solved: &BTreeMap<Symbol, Q>,
    ) -> Result<PoolEquation, Error> {
        let mut coeffs: BTreeMap<Symbol, Q> = BTreeMap::new();
        let mut constant = Q::zero();
        for (syms, coeff) in &compiled.buckets.0 {
            let mut factor = coeff.clone();
            let mut unknown: Option<Symbol> = None;
            for &sym in syms {
                if let Some(v) = solved.get(&sym) {
                    factor *= v;
                    continue;
                }
                match sym {
                    Symbol::One => {}
                    Symbol::C1 => factor *= &self.genus1.c1,
                    Symbol::N0(k) => factor *= self.genus0.value(k)?,
                    Symbol::N1(k) if k <= self.genus1.max_degree() => {
                        factor *= self.genus1.value(k, k)?
                    }
                    pending_symbol => {
                        if unknown.replace(pending_symbol).is_some() {
                            return Err(Error::Semantic(format!(
                                "two unknown factors in one product: {syms:?}"
                            )));
                        }
                    }
                }
            }
            match unknown {
                None => constant += factor,
                Some(sym) => {
                    let entry = coeffs.entry(sym).or_insert_with(Q::zero);
                    *entry += factor;
                }
            }
        }
        coeffs.retain(|_, v| !v.is_zero());
        Ok(PoolEquation {
            parameter: compiled.degree,
            assignment: compiled.assignment,
            coeffs,
            constant,
        })
    }
}

/// One pooled linear row: `Σ coeffs·symbol + constant = 0`.
#[derive(Clone, Debug)]
pub struct PoolEquation {
    pub parameter: u32,
    pub assignment: Assignment,
    pub coeffs: BTreeMap<Symbol, Q>,
    pub constant: Q,
}

fn inconsistency(eq: &PoolEquation) -> Error {
    Error::Inconsistent {
        degree: eq.parameter,
        a: eq.assignment[0],
        b: eq.assignment[1],
        c: eq.assignment[2],
        discrepancy: crate::rational::format_rational(&eq.constant),
    }
}

fn substitute(eq: &mut PoolEquation, solved: &BTreeMap<Symbol, Q>) {
    let hits: Vec<Symbol> = eq.coeffs.keys().filter(|s| solved.contains_key(s)).copied().collect();
    for sym in hits {
        let coeff = eq.coeffs.remove(&sym).unwrap();
        eq.constant += coeff * &solved[&sym];
    }
    eq.coeffs.retain(|_, v| !v.is_zero());
}

/// Pin every symbol the pending pool determines. Exact Gaussian
/// elimination in a fixed symbol order keeps the outcome deterministic.
/// Contradictory rows abort with the row's provenance.
fn eliminate(
    pending: &mut Vec<PoolEquation>,
    solved: &mut BTreeMap<Symbol, Q>,
) -> Result<Vec<Symbol>, Error> {
    let mut pinned = Vec::new();
    loop {
        for eq in pending.iter_mut() {
            substitute(eq, solved);
        }
        for eq in pending.iter() {
            if eq.coeffs.is_empty() && !eq.constant.is_zero() {
                return Err(inconsistency(eq));
            }
        }
        pending.retain(|eq| !eq.coeffs.is_empty());

        if let Some(i) = pending.iter().position(|eq| eq.coeffs.len() == 1) {
            let eq = pending.remove(i);
            let (sym, coeff) = eq.coeffs.into_iter().next().unwrap();
            let value = -eq.constant / coeff;
            solved.insert(sym, value);
            pinned.push(sym);
            continue;
        }

        // No single-symbol row: one round of cross-row elimination may
        // surface one. Reduce against the smallest symbol of the first
        // row that shares it with another.
        let mut progressed = false;
        'outer: for i in 0..pending.len() {
            let Some((&sym, _)) = pending[i].coeffs.iter().next() else { continue };
            for j in 0..pending.len() {
                if i == j || !pending[j].coeffs.contains_key(&sym) {
                    continue;
                }
                let factor = &pending[j].coeffs[&sym] / &pending[i].coeffs[&sym];
                let src = pending[i].clone();
                let dst = &mut pending[j];
                for (s, c) in &src.coeffs {
                    let delta = c * &factor;
                    let entry = dst.coeffs.entry(*s).or_insert_with(Q::zero);
                    *entry -= delta;
                }
                dst.coeffs.retain(|_, v| !v.is_zero());
                dst.constant = &dst.constant - &src.constant * &factor;
                progressed = true;
                break 'outer;
            }
        }
        if !progressed {
            return Ok(pinned);
        }
    }
}

enum SymbolValue {
    Known(Q),
    UnknownN2,
    UnknownH2,
    UnknownP2,
}

fn lookup(map: &BTreeMap<u32, (Q, Provenance)>, k: u32, name: &str) -> Result<Q, Error> {
    map.get(&k)
        .map(|(v, _)| v.clone())
        .ok_or_else(|| Error::Semantic(format!("{name}({k}) required before it was solved")))
}

/// Monomial families of the 1-cotangent potential cut-off.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PotentialMonomial {
    /// `(t20)^{3d+1}/(3d+1)!`
    Bare,
    /// `t00·t11·(t20)^{3d+1}/(3d+1)!`
    T00T11,
    /// `t00·t21·(t20)^{3d}/(3d)!`
    T00T21,
    /// `t01·(t20)^{3d+1}/(3d+1)!`
    T01,
    /// `t11·(t20)^{3d}/(3d)!`
    T11,
    /// `t21·(t20)^{3d-1}/(3d-1)!`
    T21,
}

/// Exact coefficient of a displayed potential monomial at divisor-variable
/// order `(t10)^j/j!`, from solved values.
pub fn potential_coefficient(
    family: PotentialMonomial,
    d: u32,
    j: u32,
    table: &SeriesTable,
) -> Result<Q, Error> {
    let value = |map: &BTreeMap<u32, (Q, Provenance)>, name: &str| {
        map.get(&d)
            .map(|(v, _)| v.clone())
            .ok_or_else(|| Error::Data(format!("{name}({d}) not solved")))
    };
    let n2 = || value(&table.n2, "N2");
    let dq = qi(d as i64);
    let d_pow = |e: u32| {
        let mut acc = qi(1);
        for _ in 0..e {
            acc *= &dq;
        }
        acc
    };
    Ok(match family {
        PotentialMonomial::Bare => d_pow(j) * n2()?,
        PotentialMonomial::T00T11 => d_pow(j + 1) * n2()?,
        PotentialMonomial::T00T21 => d_pow(j) * n2()?,
        PotentialMonomial::T01 => qi(3 * d as i64 + 3 + j as i64) * d_pow(j) * n2()?,
        PotentialMonomial::T11 => {
            let h = value(&table.h2, "H2")?;
            let correction = if j == 0 {
                Q::zero()
            } else {
                qi(j as i64) * d_pow(j - 1) * n2()?
            };
            d_pow(j) * h + correction
        }
        PotentialMonomial::T21 => {
            if d == 0 {
                return Err(Error::Data(
                    "the point-descendent family starts in degree 1".into(),
                ));
            }
            d_pow(j) * value(&table.p2, "P2")?
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_relation;

    fn tiny_relation() -> RelationExpr {
        // A single-term relation: enough to exercise compilation plumbing.
        parse_relation(
            "term 2 unassigned\nvertex a g=2\nvertex b g=0 m={1,2,3}\nedge a-b psi@a=1\n",
        )
        .unwrap()
    }

    #[test]
    fn extra_point_counts_per_assignment() {
        let engine = Engine::new(&tiny_relation(), Genus1Data::shipped(), 1).unwrap();
        assert_eq!(engine.extra_points([1, 1, 1], 1), 2);
        assert_eq!(engine.extra_points([1, 1, 2], 1), 1);
        assert_eq!(engine.extra_points([1, 2, 2], 1), 0);
        assert_eq!(engine.extra_points([2, 2, 2], 1), -1);
        assert_eq!(engine.extra_points([1, 1, 1], 10), 29);
    }

    #[test]
    fn infeasible_assignment_is_flagged() {
        let engine = Engine::new(&tiny_relation(), Genus1Data::shipped(), 1).unwrap();
        assert!(matches!(
            engine.compile_buckets([2, 2, 2], 1),
            Err(Error::InfeasibleAssignment { degree: 1, .. })
        ));
    }

    #[test]
    fn compiled_buckets_are_thread_invariant() {
        let relation = tiny_relation();
        let single = Engine::new(&relation, Genus1Data::shipped(), 1).unwrap();
        let multi = Engine::new(&relation, Genus1Data::shipped(), 4).unwrap();
        for d in 1..=2 {
            let a = single.compile_feasible(d).unwrap();
            let b = multi.compile_feasible(d).unwrap();
            assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(b.iter()) {
                assert_eq!(x.assignment, y.assignment);
                assert_eq!(x.buckets, y.buckets);
            }
        }
    }

    #[test]
    fn staggered_solve_small_horizon() {
        let relation = parse_relation(crate::RELATION_EQ1).unwrap();
        let engine = Engine::new(&relation, Genus1Data::shipped(), 1).unwrap();
        let result = engine.solve_up_to(4, &SolveOptions::default()).unwrap();
        assert_eq!(result.table.n2[&4].0, qi(27));
        assert_eq!(result.table.h2[&4].0, qi(42));
        assert_eq!(result.table.p2[&4].0, q(25, 4));
        assert_eq!(result.table.n2[&3].0, qi(0));
        assert_eq!(result.table.h2[&3].0, q(-1, 4));
        // Two of the three degree-1 equations arrive without unknowns.
        assert_eq!(result.reports[0].parameter, 1);
        assert_eq!(result.reports[0].feasible.len(), 3);
        assert_eq!(result.reports[0].consistency_checks, 2);
        // Later parameters carry all four assignments.
        assert!(result.reports[1..].iter().all(|r| r.feasible.len() == 4));
    }

    #[test]
    fn insufficient_elliptic_data_is_reported_up_front() {
        let relation = parse_relation(crate::RELATION_EQ1).unwrap();
        let short = Genus1Data::parse("c1 -1/8\n1 0\n2 0\n3 1\n").unwrap();
        let engine = Engine::new(&relation, short, 1).unwrap();
        match engine.solve_up_to(5, &SolveOptions::default()) {
            Err(Error::InsufficientGenus1 { missing: 4, horizon: 5 }) => {}
            other => panic!("unexpected outcome: {other:?}"),
        }
    }

    #[test]
    fn degree_equation_view_of_the_all_divisor_row() {
        let relation = parse_relation(crate::RELATION_EQ1).unwrap();
        let engine = Engine::new(&relation, Genus1Data::shipped(), 1).unwrap();
        let result = engine.solve_up_to(3, &SolveOptions::default()).unwrap();
        let compiled = engine.compile_buckets([1, 1, 1], 3).unwrap();
        let eq = engine.linearize(&compiled, &result.table).unwrap();
        assert_eq!(eq.n2, Q::zero());
        assert_eq!(eq.h2, qi(-3));
        assert_eq!(eq.p2, qi(9));
        // Evaluated on the solved row the equation closes exactly.
        let lhs = &eq.h2 * &result.table.h2[&3].0 + &eq.p2 * &result.table.p2[&3].0;
        assert_eq!(lhs, eq.constant);
    }

    #[test]
    fn potential_families_match_reduction_identities() {
        // Fabricate a table with known entries and check the closed forms.
        let mut table = SeriesTable::with_anchors(q(-1, 8), None, None);
        table.n2.insert(3, (qi(7), Provenance::Solved));
        table.h2.insert(3, (qi(5), Provenance::Solved));
        table.p2.insert(3, (qi(11), Provenance::Solved));
        // j = 0 values.
        assert_eq!(potential_coefficient(PotentialMonomial::Bare, 3, 0, &table).unwrap(), qi(7));
        assert_eq!(potential_coefficient(PotentialMonomial::T01, 3, 0, &table).unwrap(), qi(12 * 7));
        assert_eq!(potential_coefficient(PotentialMonomial::T11, 3, 0, &table).unwrap(), qi(5));
        assert_eq!(potential_coefficient(PotentialMonomial::T21, 3, 0, &table).unwrap(), qi(11));
        // j = 1: divisor flow.
        assert_eq!(
            potential_coefficient(PotentialMonomial::T11, 3, 1, &table).unwrap(),
            qi(3 * 5 + 7)
        );
        assert_eq!(
            potential_coefficient(PotentialMonomial::T01, 3, 1, &table).unwrap(),
            qi(13 * 3 * 7)
        );
        // Degree-0 anchors flow through.
        assert_eq!(
            potential_coefficient(PotentialMonomial::T11, 0, 0, &table).unwrap(),
            q(-1, 960)
        );
        assert!(potential_coefficient(PotentialMonomial::T21, 0, 0, &table).is_err());
    }
}
