//! Input series and the solved-value table.
//!
//! Rational plane curve counts are generated internally by the standard
//! quadratic recursion with base value 1 in degree 1. Elliptic counts are
//! inputs from the literature, shipped in a versioned TSV file together
//! with the one-point degree-0 constant `c1`; nothing in this crate
//! asserts them — the overdetermined per-degree systems downstream are
//! their warranty. Genus-2 values are solved.

use crate::error::Error;
use crate::rational::{binomial, parse_rational, q, qi, Q};
use num_traits::Zero;
use std::collections::BTreeMap;
use std::sync::Mutex;

/// Shipped elliptic input data.
pub const GENUS1_TABLE: &str = include_str!("../data/genus1_p2.tsv");

/// Where a table entry came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    Computed,
    Loaded,
    Solved,
    Anchor,
}

/// Memoized rational-curve counts via the quadratic recursion
///   N(d) = Σ N(a)N(b) [a²b² C(3d-4,3a-2) − a³b C(3d-4,3a-1)], N(1) = 1.
pub struct Genus0 {
    memo: Mutex<BTreeMap<u32, Q>>,
}

impl Genus0 {
    pub fn new() -> Self {
        Genus0 { memo: Mutex::new(BTreeMap::new()) }
    }

    pub fn value(&self, d: u32) -> Result<Q, Error> {
        if d == 0 {
            return Err(Error::Data("rational counts are defined for degree >= 1".into()));
        }
        if let Some(hit) = self.memo.lock().unwrap().get(&d) {
            return Ok(hit.clone());
        }
        let result = if d == 1 {
            qi(1)
        } else {
            let mut acc = Q::zero();
            for a in 1..d {
                let b = d - a;
                let na = self.value(a)?;
                let nb = self.value(b)?;
                let a64 = a as i64;
                let b64 = b as i64;
                let c1 = binomial(3 * d as u64 - 4, 3 * a as u64 - 2);
                let c2 = binomial(3 * d as u64 - 4, 3 * a as u64 - 1);
                let weight = qi(a64 * a64 * b64 * b64) * Q::from_integer(c1)
                    - qi(a64 * a64 * a64 * b64) * Q::from_integer(c2);
                acc += na * nb * weight;
            }
            acc
        };
        self.memo.lock().unwrap().insert(d, result.clone());
        Ok(result)
    }
}

impl Default for Genus0 {
    fn default() -> Self {
        Self::new()
    }
}

/// Elliptic input table: degree → value, plus the constant `c1`.
#[derive(Clone, Debug)]
pub struct Genus1Data {
    pub c1: Q,
    values: BTreeMap<u32, Q>,
}

impl Genus1Data {
    /// Parse the TSV format: `#` comments, a `c1 <value>` row, then
    /// `<degree> <value>` rows (tabs or spaces).
    pub fn parse(text: &str) -> Result<Self, Error> {
        let mut c1: Option<Q> = None;
        let mut values = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            };
            let mut fields = line.split_whitespace();
            let Some(first) = fields.next() else { continue };
            let value_text = fields.next().ok_or_else(|| {
                Error::Data(format!("genus-1 table line {line_no}: missing value field"))
            })?;
            if fields.next().is_some() {
                return Err(Error::Data(format!(
                    "genus-1 table line {line_no}: too many fields"
                )));
            }
            let value = parse_rational(value_text)
                .map_err(|m| Error::Data(format!("genus-1 table line {line_no}: {m}")))?;
            if first == "c1" {
                if c1.replace(value).is_some() {
                    return Err(Error::Data(format!(
                        "genus-1 table line {line_no}: duplicate c1 row"
                    )));
                }
            } else {
                let d: u32 = first.parse().map_err(|_| {
                    Error::Data(format!("genus-1 table line {line_no}: bad degree `{first}`"))
                })?;
                if values.insert(d, value).is_some() {
                    return Err(Error::Data(format!(
                        "genus-1 table line {line_no}: duplicate degree {d}"
                    )));
                }
            }
        }
        let c1 = c1.ok_or_else(|| Error::Data("genus-1 table: missing c1 row".into()))?;
        Ok(Genus1Data { c1, values })
    }

    pub fn shipped() -> Self {
        Genus1Data::parse(GENUS1_TABLE).expect("shipped genus-1 table parses")
    }

    pub fn value(&self, d: u32, horizon: u32) -> Result<Q, Error> {
        self.values
            .get(&d)
            .cloned()
            .ok_or(Error::InsufficientGenus1 { missing: d, horizon })
    }

    /// Largest contiguous degree available from 1.
    pub fn max_degree(&self) -> u32 {
        let mut d = 0;
        while self.values.contains_key(&(d + 1)) {
            d += 1;
        }
        d
    }
}

/// Values of the five series plus provenance, with the degree-0 anchors.
#[derive(Clone, Debug)]
pub struct SeriesTable {
    pub n0: BTreeMap<u32, (Q, Provenance)>,
    pub n1: BTreeMap<u32, (Q, Provenance)>,
    pub n2: BTreeMap<u32, (Q, Provenance)>,
    pub h2: BTreeMap<u32, (Q, Provenance)>,
    pub p2: BTreeMap<u32, (Q, Provenance)>,
    pub c1: Q,
}

impl SeriesTable {
    /// Fresh table holding only the degree-0 anchors and `c1`.
    /// The anchor arguments exist for fault-injection tests; production
    /// callers pass `None` to get the true values 0 and -1/960.
    pub fn with_anchors(c1: Q, n2_zero: Option<Q>, h2_zero: Option<Q>) -> Self {
        let mut n2 = BTreeMap::new();
        let mut h2 = BTreeMap::new();
        n2.insert(0, (n2_zero.unwrap_or_else(Q::zero), Provenance::Anchor));
        h2.insert(0, (h2_zero.unwrap_or_else(|| q(-1, 960)), Provenance::Anchor));
        SeriesTable {
            n0: BTreeMap::new(),
            n1: BTreeMap::new(),
            n2,
            h2,
            p2: BTreeMap::new(),
            c1,
        }
    }
}
