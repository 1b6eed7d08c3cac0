//! Exact rational scalars and small combinatorial helpers.
//!
//! Every quantity in this crate is a `BigRational`: arbitrary-precision,
//! always in lowest terms with positive denominator. No floating point
//! appears anywhere in the computation path.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Q = BigRational;

/// Integer as a rational.
pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// `n/d` as a normalized rational. Panics on zero denominator.
pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Parse `p/q` or a plain integer, with optional sign.
pub fn parse_rational(s: &str) -> Result<Q, String> {
    let s = s.trim();
    if s.is_empty() {
        return Err("empty rational literal".to_string());
    }
    s.parse::<Q>().map_err(|e| format!("bad rational `{s}`: {e}"))
}

/// Render without any decimal point: `p` or `p/q`.
pub fn format_rational(x: &Q) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Binomial coefficient as a big integer; zero outside the triangle.
pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Multinomial coefficient `n! / (parts[0]! … parts[m]!)`.
/// Requires the parts to sum to `n`.
pub fn multinomial(n: u64, parts: &[u64]) -> BigInt {
    debug_assert_eq!(parts.iter().sum::<u64>(), n);
    let mut acc = BigInt::one();
    let mut rest = n;
    for &p in parts {
        acc *= binomial(rest, p);
        rest -= p;
    }
    acc
}

/// True if `x` is an integer.
pub fn is_integer(x: &Q) -> bool {
    x.denom().is_one()
}

/// Exact sign as -1, 0, 1 (handy in tests).
pub fn sign(x: &Q) -> i32 {
    if x.is_zero() {
        0
    } else if x.is_positive() {
        1
    } else {
        -1
    }
}
