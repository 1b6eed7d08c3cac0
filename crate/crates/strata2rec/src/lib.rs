//! Exact-arithmetic engine that compiles a codimension-2 stratum-class
//! relation on the moduli of 3-pointed genus-2 curves into per-degree
//! linear recursions for the three basic one-cotangent descendent series
//! of the projective plane, solves them, and verifies the results against
//! closed-form displays — all over arbitrary-precision rationals.
//!
//! Pipeline: parse the relation ([`dsl`]) into decorated dual graphs
//! ([`graph`], [`relation`]), pull back along forgetful maps
//! ([`pullback`]), split boundary terms into products of correlators
//! ([`split`]), rewrite correlators into basic series symbols
//! ([`correlator`]), assemble and solve per-degree equations ([`engine`]),
//! and check every surplus equation and printed coefficient ([`verify`]).

pub mod cli;
pub mod correlator;
pub mod dsl;
pub mod engine;
pub mod error;
pub mod graph;
pub mod model;
pub mod pullback;
pub mod rational;
pub mod relation;
pub mod series;
pub mod split;
pub mod verify;

/// The shipped relation source.
pub const RELATION_EQ1: &str = include_str!("../data/relation_eq1.strata");

pub use error::Error;
pub use rational::Q;
