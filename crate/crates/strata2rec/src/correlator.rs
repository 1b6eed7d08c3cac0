//! Correlators and their rewriting into the basic series.
//!
//! A `CorrelatorKey` is one bracket: genus, curve degree, and a multiset
//! of insertions `(class, cotangent power)`. `Reducer::reduce` rewrites a
//! key into a `BasicForm`, a rational combination of the basic symbols
//!
//! * `N0(d)`, `N1(d)` — rational and elliptic point counts,
//! * `N2(d)`, `H2(d)`, `P2(d)` — the genus-2 series,
//! * `C1` — the one-point elliptic degree-0 constant,
//! * `One` — a plain number.
//!
//! Rewriting order: dimension selection first (a key off the virtual
//! dimension is zero and no rewrite may change that verdict), then the
//! unstable cutoff, then removal of fundamental-class, dilaton and divisor
//! insertions, then the base-case table. The removal steps commute; the
//! fixed priority below is only a determinism choice, and the test suite
//! checks confluence under random orders.
//!
//! The rules are specific to the plane model and refuse other targets.

use crate::error::Error;
use crate::model::TargetModel;
use crate::rational::{qi, Q};
use num_traits::Zero;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Mutex;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug, Hash)]
pub struct Insertion {
    pub class: u8,
    pub psi: u32,
}

impl Insertion {
    pub fn plain(class: u8) -> Self {
        Insertion { class, psi: 0 }
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Hash)]
pub struct CorrelatorKey {
    pub genus: u8,
    pub degree: u32,
    insertions: BTreeMap<Insertion, u32>,
}

impl CorrelatorKey {
    pub fn new(genus: u8, degree: u32, insertions: impl IntoIterator<Item = Insertion>) -> Self {
        let mut map = BTreeMap::new();
        for ins in insertions {
            *map.entry(ins).or_insert(0) += 1;
        }
        CorrelatorKey { genus, degree, insertions: map }
    }

    pub fn point_count(&self) -> u32 {
        self.insertions.values().sum()
    }

    pub fn insertions(&self) -> impl Iterator<Item = (Insertion, u32)> + '_ {
        self.insertions.iter().map(|(&i, &c)| (i, c))
    }

    fn count(&self, ins: Insertion) -> u32 {
        self.insertions.get(&ins).copied().unwrap_or(0)
    }

    fn without(&self, ins: Insertion) -> Self {
        let mut map = self.insertions.clone();
        match map.get_mut(&ins) {
            Some(c) if *c > 1 => *c -= 1,
            Some(_) => {
                map.remove(&ins);
            }
            None => panic!("removing absent insertion"),
        }
        CorrelatorKey { genus: self.genus, degree: self.degree, insertions: map }
    }

    fn with(&self, ins: Insertion) -> Self {
        let mut map = self.insertions.clone();
        *map.entry(ins).or_insert(0) += 1;
        CorrelatorKey { genus: self.genus, degree: self.degree, insertions: map }
    }
}

impl fmt::Display for CorrelatorKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<")?;
        let mut first = true;
        for (ins, count) in &self.insertions {
            if !first {
                write!(f, " ")?;
            }
            first = false;
            if ins.psi == 0 {
                write!(f, "T{}", ins.class)?;
            } else if ins.psi == 1 {
                write!(f, "(T{} psi)", ins.class)?;
            } else {
                write!(f, "(T{} psi^{})", ins.class, ins.psi)?;
            }
            if *count > 1 {
                write!(f, "^{count}")?;
            }
        }
        write!(f, ">_{{{},{}}}", self.genus, self.degree)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug, Hash)]
pub enum Symbol {
    One,
    C1,
    N0(u32),
    N1(u32),
    N2(u32),
    H2(u32),
    P2(u32),
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::One => write!(f, "1"),
            Symbol::C1 => write!(f, "C1"),
            Symbol::N0(d) => write!(f, "N0({d})"),
            Symbol::N1(d) => write!(f, "N1({d})"),
            Symbol::N2(d) => write!(f, "N2({d})"),
            Symbol::H2(d) => write!(f, "H2({d})"),
            Symbol::P2(d) => write!(f, "P2({d})"),
        }
    }
}

/// Finitely supported rational combination of basic symbols.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct BasicForm(BTreeMap<Symbol, Q>);

impl BasicForm {
    pub fn zero() -> Self {
        BasicForm(BTreeMap::new())
    }

    pub fn symbol(s: Symbol) -> Self {
        let mut m = BTreeMap::new();
        m.insert(s, qi(1));
        BasicForm(m)
    }

    pub fn constant(q: Q) -> Self {
        if q.is_zero() {
            return BasicForm::zero();
        }
        let mut m = BTreeMap::new();
        m.insert(Symbol::One, q);
        BasicForm(m)
    }

    pub fn add_scaled(&mut self, other: &BasicForm, scale: &Q) {
        if scale.is_zero() {
            return;
        }
        for (sym, coeff) in &other.0 {
            let entry = self.0.entry(*sym).or_insert_with(Q::zero);
            *entry += coeff * scale;
            if entry.is_zero() {
                self.0.remove(sym);
            }
        }
    }

    pub fn scaled(&self, scale: &Q) -> BasicForm {
        let mut out = BasicForm::zero();
        out.add_scaled(self, scale);
        out
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Symbol, &Q)> {
        self.0.iter().map(|(&s, q)| (s, q))
    }

    pub fn coefficient(&self, s: Symbol) -> Q {
        self.0.get(&s).cloned().unwrap_or_else(Q::zero)
    }
}

/// One applicable removal step.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum RewriteStep {
    /// Remove a plain fundamental-class insertion, lowering one cotangent
    /// power elsewhere.
    StringT0,
    /// Remove a `T0·psi` insertion against the factor `2g-2+n`.
    DilatonT0,
    /// Remove a plain divisor insertion: degree factor plus the cup-product
    /// correction on each cotangent insertion.
    DivisorT1,
}

pub struct Reducer {
    model: TargetModel,
    memo: Mutex<HashMap<CorrelatorKey, BasicForm>>,
}

impl Reducer {
    pub fn new(model: TargetModel) -> Result<Self, Error> {
        if !model.supports_plane_reduction() {
            return Err(Error::Unsupported(
                "correlator reduction is implemented for the plane model only".into(),
            ));
        }
        Ok(Reducer { model, memo: Mutex::new(HashMap::new()) })
    }

    pub fn model(&self) -> &TargetModel {
        &self.model
    }

    /// Rewrite a key into basic symbols. Memoized; deterministic.
    pub fn reduce(&self, key: &CorrelatorKey) -> Result<BasicForm, Error> {
        if let Some(hit) = self.memo.lock().unwrap().get(key) {
            return Ok(hit.clone());
        }
        let result = match self.gates(key)? {
            Some(form) => form,
            None => {
                let steps = self.available_steps(key);
                if steps.is_empty() {
                    self.evaluate_base(key)?
                } else {
                    let mut out = BasicForm::zero();
                    for (scale, next) in self.apply_step(key, steps[0])? {
                        let reduced = self.reduce(&next)?;
                        out.add_scaled(&reduced, &scale);
                    }
                    out
                }
            }
        };
        self.memo.lock().unwrap().insert(key.clone(), result.clone());
        Ok(result)
    }

    /// Rewrite with a caller-chosen order among applicable steps. Exposed
    /// so the test suite can check order-independence; `reduce` always
    /// takes the first applicable step.
    pub fn reduce_with(
        &self,
        key: &CorrelatorKey,
        pick: &dyn Fn(&[RewriteStep]) -> RewriteStep,
    ) -> Result<BasicForm, Error> {
        let gates = self.gates(key)?;
        if let Some(form) = gates {
            return Ok(form);
        }
        let steps = self.available_steps(key);
        if steps.is_empty() {
            return self.evaluate_base(key);
        }
        let step = pick(&steps);
        let mut out = BasicForm::zero();
        for (scale, next) in self.apply_step(key, step)? {
            let reduced = self.reduce_with(&next, pick)?;
            out.add_scaled(&reduced, &scale);
        }
        Ok(out)
    }

    /// Dimension selection and the unstable cutoff. `Some(form)` means the
    /// key is settled without rewriting.
    fn gates(&self, key: &CorrelatorKey) -> Result<Option<BasicForm>, Error> {
        if key.genus > 2 {
            return Err(Error::Unsupported(format!("genus {} correlator {key}", key.genus)));
        }
        let psi_instances: u32 = key.insertions().filter(|(i, _)| i.psi > 0).map(|(_, c)| c).sum();
        if key.genus < 2 && psi_instances > 0 {
            return Err(Error::IrreducibleCorrelator(format!(
                "{key}: cotangent insertions on genus {} are out of contract",
                key.genus
            )));
        }
        if key.genus == 2 && (psi_instances > 1 || key.insertions().any(|(i, _)| i.psi > 1)) {
            return Err(Error::Unsupported(format!("{key}: more than one cotangent line")));
        }

        let n = key.point_count();
        let total_codegree: i64 = key
            .insertions()
            .map(|(i, c)| (self.model.codegree(i.class) as i64 + i.psi as i64) * c as i64)
            .sum();
        if total_codegree != self.model.virtual_dimension(key.genus as u32, n, key.degree) {
            return Ok(Some(BasicForm::zero()));
        }

        if 2 * key.genus as i64 - 2 + n as i64 <= 0 {
            // The lone surviving unstable bracket: two point classes in
            // degree one.
            let two_points = key.genus == 0
                && key.degree == 1
                && n == 2
                && key.count(Insertion::plain(2)) == 2;
            return Ok(Some(if two_points {
                BasicForm::symbol(Symbol::N0(1))
            } else {
                BasicForm::zero()
            }));
        }
        Ok(None)
    }

    fn available_steps(&self, key: &CorrelatorKey) -> Vec<RewriteStep> {
        let mut steps = Vec::new();
        // String and divisor removals need the reduced space to exist:
        // positive degree, or a stable reduced curve.
        let removable = key.degree > 0 || 2 * key.genus as i64 - 2 + key.point_count() as i64 - 1 > 0;
        if key.count(Insertion::plain(0)) > 0 && removable {
            steps.push(RewriteStep::StringT0);
        }
        if key.count(Insertion { class: 0, psi: 1 }) > 0 {
            steps.push(RewriteStep::DilatonT0);
        }
        if key.count(Insertion::plain(1)) > 0 && removable {
            steps.push(RewriteStep::DivisorT1);
        }
        steps
    }

    /// Expand one removal step as a formal sum of smaller keys.
    fn apply_step(
        &self,
        key: &CorrelatorKey,
        step: RewriteStep,
    ) -> Result<Vec<(Q, CorrelatorKey)>, Error> {
        match step {
            RewriteStep::StringT0 => {
                let removed = key.without(Insertion::plain(0));
                let mut out = Vec::new();
                for (ins, count) in removed.insertions() {
                    if ins.psi >= 1 {
                        let lowered = removed
                            .without(ins)
                            .with(Insertion { class: ins.class, psi: ins.psi - 1 });
                        out.push((qi(count as i64), lowered));
                    }
                }
                Ok(out)
            }
            RewriteStep::DilatonT0 => {
                let removed = key.without(Insertion { class: 0, psi: 1 });
                let factor = qi(2 * key.genus as i64 - 2 + removed.point_count() as i64);
                Ok(vec![(factor, removed)])
            }
            RewriteStep::DivisorT1 => {
                let removed = key.without(Insertion::plain(1));
                let mut out = vec![(qi(key.degree as i64), removed.clone())];
                for (ins, count) in removed.insertions() {
                    if ins.psi >= 1 {
                        let cup_codegree = self.model.codegree(ins.class) + 1;
                        if cup_codegree > self.model.dimension() {
                            continue; // the cup product vanishes
                        }
                        let cup_class = ins.class + 1; // plane basis is one class per codegree
                        let corrected = removed
                            .without(ins)
                            .with(Insertion { class: cup_class, psi: ins.psi - 1 });
                        out.push((qi(count as i64), corrected));
                    }
                }
                Ok(out)
            }
        }
    }

    /// Keys with no removable insertions: classical triples and the basic
    /// series.
    fn evaluate_base(&self, key: &CorrelatorKey) -> Result<BasicForm, Error> {
        let n = key.point_count();
        if key.genus == 0 && key.degree == 0 && n == 3 {
            // In-dimension classical triple integral; on the plane the
            // value is 1 whenever the codegrees fill the dimension (the
            // dimension gate already ensured that).
            return Ok(BasicForm::constant(qi(1)));
        }
        let plain2 = key.count(Insertion::plain(2));
        let psi_ins: Vec<(Insertion, u32)> = key.insertions().filter(|(i, _)| i.psi > 0).collect();
        let only_points_and_psi = key
            .insertions()
            .all(|(i, _)| i.psi > 0 || i == Insertion::plain(2));

        match (key.genus, psi_ins.as_slice()) {
            (0, []) if only_points_and_psi => {
                debug_assert_eq!(plain2, 3 * key.degree - 1);
                Ok(BasicForm::symbol(Symbol::N0(key.degree)))
            }
            (1, []) if only_points_and_psi => {
                debug_assert_eq!(plain2, 3 * key.degree);
                Ok(BasicForm::symbol(Symbol::N1(key.degree)))
            }
            (1, []) if key.degree == 0 && n == 1 && key.count(Insertion::plain(1)) == 1 => {
                Ok(BasicForm::symbol(Symbol::C1))
            }
            (2, []) if only_points_and_psi => {
                debug_assert_eq!(plain2, 3 * key.degree + 1);
                Ok(BasicForm::symbol(Symbol::N2(key.degree)))
            }
            (2, [(ins, 1)]) if only_points_and_psi && *ins == (Insertion { class: 1, psi: 1 }) => {
                debug_assert_eq!(plain2, 3 * key.degree);
                Ok(BasicForm::symbol(Symbol::H2(key.degree)))
            }
            (2, [(ins, 1)]) if only_points_and_psi && *ins == (Insertion { class: 2, psi: 1 }) => {
                debug_assert!(key.degree >= 1);
                debug_assert_eq!(plain2, 3 * key.degree - 1);
                Ok(BasicForm::symbol(Symbol::P2(key.degree)))
            }
            _ => Err(Error::IrreducibleCorrelator(key.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reducer() -> Reducer {
        Reducer::new(TargetModel::plane()).unwrap()
    }

    fn key(genus: u8, degree: u32, ins: &[(u8, u32)]) -> CorrelatorKey {
        CorrelatorKey::new(
            genus,
            degree,
            ins.iter().map(|&(class, psi)| Insertion { class, psi }),
        )
    }

    fn points(k: u32) -> Vec<(u8, u32)> {
        vec![(2, 0); k as usize]
    }

    #[test]
    fn two_point_degree_one_bracket_is_one() {
        let r = reducer();
        let out = r.reduce(&key(0, 1, &[(2, 0), (2, 0)])).unwrap();
        assert_eq!(out, BasicForm::symbol(Symbol::N0(1)));
    }

    #[test]
    fn dilaton_counts_remaining_insertions() {
        let r = reducer();
        for d in 0..4u32 {
            let mut ins = points(3 * d + 1);
            ins.push((0, 1));
            let out = r.reduce(&key(2, d, &ins)).unwrap();
            let mut expect = BasicForm::zero();
            expect.add_scaled(&BasicForm::symbol(Symbol::N2(d)), &qi(3 * d as i64 + 3));
            assert_eq!(out, expect, "degree {d}");
        }
    }

    #[test]
    fn string_lowers_the_single_cotangent_power() {
        // <T0 (T1 psi) T2^{3d+1}> = d N2(d)
        let r = reducer();
        for d in 1..4u32 {
            let mut ins = points(3 * d + 1);
            ins.push((0, 0));
            ins.push((1, 1));
            let out = r.reduce(&key(2, d, &ins)).unwrap();
            assert_eq!(out, BasicForm::symbol(Symbol::N2(d)).scaled(&qi(d as i64)));
        }
    }

    #[test]
    fn fundamental_class_kills_positive_degree() {
        let r = reducer();
        // <T0 T2^{3d+2}>_{2,d}: in dimension, no cotangent anywhere.
        for d in 1..4u32 {
            let mut ins = points(3 * d + 2);
            ins.push((0, 0));
            let out = r.reduce(&key(2, d, &ins)).unwrap();
            assert!(out.is_zero(), "degree {d}");
        }
    }

    #[test]
    fn divisor_with_descendent_correction_h_pattern() {
        // <T1 (T1 psi) T2^{3d}>_{2,d} = d H2(d) + N2(d)
        let r = reducer();
        for d in 0..4u32 {
            let mut ins = points(3 * d);
            ins.push((1, 0));
            ins.push((1, 1));
            let out = r.reduce(&key(2, d, &ins)).unwrap();
            let mut expect = BasicForm::symbol(Symbol::N2(d));
            expect.add_scaled(&BasicForm::symbol(Symbol::H2(d)), &qi(d as i64));
            assert_eq!(out, expect, "degree {d}");
        }
    }

    #[test]
    fn divisor_with_point_descendent_has_no_correction() {
        // <T1 (T2 psi) T2^{3d-1}>_{2,d} = d P2(d): the cup product of the
        // divisor with the point class vanishes on a surface.
        let r = reducer();
        for d in 1..4u32 {
            let mut ins = points(3 * d - 1);
            ins.push((1, 0));
            ins.push((2, 1));
            let out = r.reduce(&key(2, d, &ins)).unwrap();
            assert_eq!(out, BasicForm::symbol(Symbol::P2(d)).scaled(&qi(d as i64)));
        }
    }

    #[test]
    fn degree_zero_bases() {
        let r = reducer();
        // <(T1 psi)>_{2,0} is the H-series anchor symbol.
        let out = r.reduce(&key(2, 0, &[(1, 1)])).unwrap();
        assert_eq!(out, BasicForm::symbol(Symbol::H2(0)));
        // <T2>_{2,0} is the N-series anchor symbol.
        let out = r.reduce(&key(2, 0, &[(2, 0)])).unwrap();
        assert_eq!(out, BasicForm::symbol(Symbol::N2(0)));
        // <(T2 psi)>_{2,0} is out of dimension.
        let out = r.reduce(&key(2, 0, &[(2, 1)])).unwrap();
        assert!(out.is_zero());
        // <T1>_{1,0} is the named elliptic constant.
        let out = r.reduce(&key(1, 0, &[(1, 0)])).unwrap();
        assert_eq!(out, BasicForm::symbol(Symbol::C1));
        // <T1 T1>_{1,0} falls to the divisor equation in degree zero.
        let out = r.reduce(&key(1, 0, &[(1, 0), (1, 0)])).unwrap();
        assert!(out.is_zero());
    }

    #[test]
    fn dimension_selection_is_decisive() {
        let r = reducer();
        // <T1 T2^{3d}>_{2,d}: codegree one short of the dimension.
        for d in 1..4u32 {
            let mut ins = points(3 * d);
            ins.push((1, 0));
            assert!(r.reduce(&key(2, d, &ins)).unwrap().is_zero());
        }
        // Classical triples in and out of dimension.
        assert_eq!(
            r.reduce(&key(0, 0, &[(0, 0), (0, 0), (2, 0)])).unwrap(),
            BasicForm::constant(qi(1))
        );
        assert_eq!(
            r.reduce(&key(0, 0, &[(0, 0), (1, 0), (1, 0)])).unwrap(),
            BasicForm::constant(qi(1))
        );
        assert!(r.reduce(&key(0, 0, &[(1, 0), (1, 0), (1, 0)])).unwrap().is_zero());
    }

    #[test]
    fn genus_zero_and_one_point_counts() {
        let r = reducer();
        // <T1^4 T2^{3d-1}>_{0,d} = d^4 N0(d)
        let d = 2u32;
        let mut ins = points(3 * d - 1);
        ins.extend([(1, 0); 4]);
        let out = r.reduce(&key(0, d, &ins)).unwrap();
        assert_eq!(out, BasicForm::symbol(Symbol::N0(d)).scaled(&qi((d as i64).pow(4))));
        // <T1 T1 T2^{3d}>_{1,d} = d^2 N1(d)
        let mut ins = points(3 * d);
        ins.extend([(1, 0); 2]);
        let out = r.reduce(&key(1, d, &ins)).unwrap();
        assert_eq!(out, BasicForm::symbol(Symbol::N1(d)).scaled(&qi((d as i64).pow(2))));
    }

    #[test]
    fn irreducible_keys_are_named() {
        let r = reducer();
        // A cotangent power on genus 0 is out of contract.
        let err = r.reduce(&key(0, 1, &[(2, 1), (2, 0)]));
        assert!(matches!(err, Err(Error::IrreducibleCorrelator(_))));
    }

    #[test]
    fn memoized_reduction_is_stable() {
        let r = reducer();
        let k = key(2, 3, &{
            let mut v = points(10);
            v.push((0, 1));
            v
        });
        let first = r.reduce(&k).unwrap();
        let second = r.reduce(&k).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn mixed_removals_agree_under_swapped_order() {
        // Both a string removal and a divisor removal apply; first-choice
        // and last-choice orders must agree.
        let r = reducer();
        let d = 2u32;
        let mut ins = points(3 * d + 1);
        ins.push((0, 0));
        ins.push((1, 0));
        ins.push((1, 1));
        let k = key(2, d, &ins);
        let first = r.reduce(&k).unwrap();
        let last = r.reduce_with(&k, &|steps| *steps.last().unwrap()).unwrap();
        assert_eq!(first, last);
    }

    #[test]
    fn confluence_on_random_small_keys() {
        use proptest::prelude::*;
        use proptest::strategy::{Strategy, ValueTree};
        use std::cell::Cell;
        let mut runner = proptest::test_runner::TestRunner::deterministic();
        let strategy = (
            0u8..3,
            0u32..4,
            proptest::collection::vec((0u8..3, 0u32..2), 1..9),
            proptest::collection::vec(any::<proptest::sample::Index>(), 12),
        );
        let r = reducer();
        let mut exercised = 0;
        for _ in 0..500 {
            let (genus, degree, ins, picks) = strategy.new_tree(&mut runner).unwrap().current();
            // Keep within contract: at most one cotangent insertion, and
            // only on genus 2.
            let mut seen_psi = false;
            let ins: Vec<(u8, u32)> = ins
                .into_iter()
                .map(|(c, p)| {
                    let p = if genus == 2 && p > 0 && !seen_psi {
                        seen_psi = true;
                        1
                    } else {
                        0
                    };
                    (c, p)
                })
                .collect();
            let k = key(genus, degree, &ins);
            let base = match r.reduce(&k) {
                Ok(v) => v,
                Err(_) => continue,
            };
            let counter = Cell::new(0usize);
            let random = r.reduce_with(&k, &|steps| {
                let i = counter.get();
                counter.set(i + 1);
                steps[picks[i % picks.len()].index(steps.len())]
            });
            let random = random.unwrap_or_else(|e| panic!("random order failed on {k}: {e}"));
            assert_eq!(base, random, "key {k}");
            exercised += 1;
        }
        assert!(exercised >= 300, "too few reducible samples: {exercised}");
    }
}
